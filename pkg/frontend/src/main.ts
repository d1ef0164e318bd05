import { PoseApi } from "./api.js";
import { render } from "./render.js";
import { AnnotationSession } from "./session.js";
import type { AxisName, ExportedAnnotation, Point } from "./types.js";
import { AXIS_NAMES } from "./types.js";

type Tool = AxisName | "box";

const api = new PoseApi("");
const session = new AnnotationSession(api);

const canvas = document.getElementById("canvas") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const status = document.getElementById("status")!;
const solveButton = document.getElementById("solve") as HTMLButtonElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;

let image: HTMLImageElement | null = null;
let tool: Tool = "x";
let dragStart: Point | null = null;

function readCamera() {
  const value = (id: string) =>
    Number((document.getElementById(id) as HTMLInputElement).value);
  session.setCamera({ fx: value("fx"), fy: value("fy"), cx: value("cx"), cy: value("cy") });
  session.setDims({
    length: value("length"),
    width: value("width"),
    height: value("height"),
  });
}

function refresh() {
  readCamera();
  solveButton.disabled = !session.canSolve() || session.busy;
  exportButton.disabled = session.solved === null;
  if (session.error) {
    status.textContent = `error - ${session.error}`;
    status.className = "error";
  } else if (session.busy) {
    status.textContent = "solving...";
    status.className = "";
  } else if (session.solved) {
    const s = session.solved;
    status.textContent =
      `residual ${s.residual.toExponential(3)}, ` +
      `${s.converged ? "converged" : "not converged"}, ` +
      `t = [${s.pose.translation.map((v) => v.toFixed(4)).join(", ")}]`;
    status.className = "";
  } else {
    status.textContent = "draw the x, y, z axes and the 2D box, then solve";
    status.className = "";
  }
  render(ctx, session, image);
}

function canvasPoint(event: MouseEvent): Point {
  const rect = canvas.getBoundingClientRect();
  return [event.clientX - rect.left, event.clientY - rect.top];
}

canvas.addEventListener("mousedown", (event) => {
  dragStart = canvasPoint(event);
});

canvas.addEventListener("mouseup", (event) => {
  if (!dragStart) {
    return;
  }
  const end = canvasPoint(event);
  if (tool === "box") {
    session.setBox({
      l: Math.min(dragStart[0], end[0]),
      r: Math.max(dragStart[0], end[0]),
      t: Math.min(dragStart[1], end[1]),
      b: Math.max(dragStart[1], end[1]),
    });
  } else {
    // drawn from the object center outward: orientation feeds the solver
    session.setAxis(tool, { from: dragStart, to: end });
  }
  dragStart = null;
  refresh();
});

for (const name of [...AXIS_NAMES, "box"] as Tool[]) {
  document.getElementById(`tool-${name}`)!.addEventListener("click", () => {
    tool = name;
  });
}

(document.getElementById("image-input") as HTMLInputElement).addEventListener(
  "change",
  (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file) {
      return;
    }
    const img = new Image();
    img.onload = () => {
      image = img;
      canvas.width = img.width;
      canvas.height = img.height;
      session.setImage(img.width, img.height);
      refresh();
    };
    img.src = URL.createObjectURL(file); // image never leaves the browser
  },
);

solveButton.addEventListener("click", () => {
  readCamera();
  void session.solveAndOverlay().then(refresh);
  refresh();
});

exportButton.addEventListener("click", () => {
  const blob = new Blob([JSON.stringify(session.exportAnnotation(), null, 2)], {
    type: "application/json",
  });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = "annotation.json";
  link.click();
});

(document.getElementById("import-input") as HTMLInputElement).addEventListener(
  "change",
  async (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file) {
      return;
    }
    const data = JSON.parse(await file.text()) as ExportedAnnotation;
    await session.importAnnotation(data);
    refresh();
  },
);

for (const id of ["fx", "fy", "cx", "cy", "length", "width", "height"]) {
  document.getElementById(id)!.addEventListener("change", refresh);
}

refresh();
