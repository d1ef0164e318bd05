import type { AnnotationSession } from "./session.js";
import type { AxisName, Point, Segment } from "./types.js";
import { AXIS_COLORS, AXIS_NAMES } from "./types.js";

function drawArrow(ctx: CanvasRenderingContext2D, seg: Segment, color: string) {
  const [u0, v0] = seg.from;
  const [u1, v1] = seg.to;
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(u0, v0);
  ctx.lineTo(u1, v1);
  ctx.stroke();
  const angle = Math.atan2(v1 - v0, u1 - u0);
  const head = 9;
  ctx.beginPath();
  ctx.moveTo(u1, v1);
  ctx.lineTo(u1 - head * Math.cos(angle - 0.45), v1 - head * Math.sin(angle - 0.45));
  ctx.lineTo(u1 - head * Math.cos(angle + 0.45), v1 - head * Math.sin(angle + 0.45));
  ctx.closePath();
  ctx.fill();
}

/**
 * Redraw the whole annotation layer: drawn axes, the 2D box, and the
 * solved cube overlay (12 edges plus red/green/blue axis arrows).  All
 * overlay coordinates come from the service verbatim.
 */
export function render(
  ctx: CanvasRenderingContext2D,
  session: AnnotationSession,
  image: HTMLImageElement | null,
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  if (image) {
    ctx.drawImage(image, 0, 0);
  }

  if (session.box) {
    ctx.strokeStyle = "#ffb300";
    ctx.lineWidth = 1.5;
    ctx.strokeRect(
      session.box.l,
      session.box.t,
      session.box.r - session.box.l,
      session.box.b - session.box.t,
    );
  }

  for (const axis of AXIS_NAMES) {
    const seg = session.segments.get(axis);
    if (seg) {
      drawArrow(ctx, seg, AXIS_COLORS[axis]);
    }
  }

  const overlay = session.solved?.overlay;
  if (overlay) {
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = 1.5;
    for (const [i, j] of overlay.edges) {
      const p = overlay.corners[i] as Point;
      const q = overlay.corners[j] as Point;
      ctx.beginPath();
      ctx.moveTo(p[0], p[1]);
      ctx.lineTo(q[0], q[1]);
      ctx.stroke();
    }
    for (const axis of Object.keys(overlay.axes) as AxisName[]) {
      const [from, to] = overlay.axes[axis];
      drawArrow(ctx, { from, to }, AXIS_COLORS[axis]);
    }
  }
}
