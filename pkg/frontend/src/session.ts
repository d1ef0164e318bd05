import { ApiError, PoseApi } from "./api.js";
import { segmentToLine } from "./geometry.js";
import type {
  AxisName,
  Box2D,
  Camera,
  Dims,
  ExportedAnnotation,
  PoseJson,
  ProjectResult,
  Segment,
} from "./types.js";
import { AXIS_DIRS, AXIS_NAMES } from "./types.js";

export interface SolveOutcome {
  pose: PoseJson;
  overlay: ProjectResult;
  residual: number;
  converged: boolean;
  iterations: number;
}

/**
 * One annotation in progress: the image stays client-side, only drawn
 * coordinates ever reach the service.  Solving chains
 * /solve/rotation -> /solve/translation -> /project and stores the
 * responses verbatim as the overlay; a later solve cancels an earlier
 * in-flight one.
 */
export class AnnotationSession {
  camera: Camera | null = null;
  dims: Dims | null = null;
  image: { width: number; height: number } | null = null;
  readonly segments = new Map<AxisName, Segment>();
  box: Box2D | null = null;
  solved: SolveOutcome | null = null;
  error: string | null = null;
  busy = false;

  private inflight: AbortController | null = null;
  private generation = 0;

  constructor(private readonly api: PoseApi) {}

  setImage(width: number, height: number): void {
    this.image = { width, height };
  }

  setCamera(camera: Camera): void {
    this.camera = camera;
  }

  setDims(dims: Dims): void {
    this.dims = dims;
  }

  setAxis(axis: AxisName, segment: Segment): void {
    this.segments.set(axis, segment);
  }

  setBox(box: Box2D): void {
    if (box.l > box.r || box.t > box.b) {
      throw new Error("box edges out of order");
    }
    this.box = box;
  }

  /** Solve controls stay disabled until all three axes and the box exist. */
  canSolve(): boolean {
    return (
      this.camera !== null &&
      this.dims !== null &&
      this.box !== null &&
      AXIS_NAMES.every((axis) => this.segments.has(axis))
    );
  }

  annotationAxes(): { dir: [number, number, number]; line: ReturnType<typeof segmentToLine> }[] {
    return AXIS_NAMES.map((axis) => {
      const seg = this.segments.get(axis);
      if (!seg) {
        throw new Error(`axis ${axis} not drawn`);
      }
      return { dir: AXIS_DIRS[axis], line: segmentToLine(seg) };
    });
  }

  /**
   * Run the solve chain and replace the overlay.  Solver failures (422)
   * surface in ``error`` and leave every drawn annotation untouched;
   * superseded solves are dropped silently.
   */
  async solveAndOverlay(): Promise<void> {
    if (!this.canSolve()) {
      throw new Error("annotation incomplete: need three axes and a box");
    }
    const camera = this.camera!;
    const dims = this.dims!;
    const box = this.box!;

    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const generation = ++this.generation;
    this.busy = true;
    this.error = null;

    try {
      const rotation = await this.api.solveRotation(
        {
          camera,
          axes: this.annotationAxes(),
          ...(this.solved ? { init: this.solved.pose.rotation } : {}),
        },
        controller.signal,
      );
      const translation = await this.api.solveTranslation(
        {
          camera,
          rotation: rotation.rotation_matrix,
          box,
          dims,
        },
        controller.signal,
      );
      const pose: PoseJson = {
        rotation: rotation.rotation,
        translation: translation.translation,
      };
      const overlay = await this.api.project({ camera, pose, dims }, controller.signal);
      if (generation !== this.generation) {
        return; // a newer solve took over
      }
      this.solved = {
        pose,
        overlay,
        residual: rotation.residual,
        converged: rotation.converged && translation.converged,
        iterations: translation.iterations,
      };
    } catch (err) {
      if (generation !== this.generation) {
        return;
      }
      if (err instanceof ApiError) {
        this.error = `${err.code}: ${err.message}`;
      } else if ((err as Error).name === "AbortError") {
        return;
      } else {
        this.error = (err as Error).message;
      }
    } finally {
      if (generation === this.generation) {
        this.busy = false;
      }
    }
  }

  /** Annotation contract plus the solved pose; requires a solved pose. */
  exportAnnotation(): ExportedAnnotation {
    if (!this.solved || !this.canSolve()) {
      throw new Error("nothing to export: solve the annotation first");
    }
    const segments = {} as Record<AxisName, Segment>;
    for (const axis of AXIS_NAMES) {
      segments[axis] = this.segments.get(axis)!;
    }
    return {
      axes: this.annotationAxes(),
      box: this.box!,
      dims: this.dims!,
      camera: this.camera!,
      pose: this.solved.pose,
      segments,
      solve: {
        residual: this.solved.residual,
        converged: this.solved.converged,
      },
    };
  }

  /**
   * Restore an exported session and rebuild the overlay by re-projecting
   * the saved pose on the server.
   */
  async importAnnotation(data: ExportedAnnotation): Promise<void> {
    this.camera = data.camera;
    this.dims = data.dims;
    this.box = data.box;
    this.segments.clear();
    for (const axis of AXIS_NAMES) {
      this.segments.set(axis, data.segments[axis]);
    }
    const overlay = await this.api.project({
      camera: data.camera,
      pose: data.pose,
      dims: data.dims,
    });
    this.solved = {
      pose: data.pose,
      overlay,
      residual: data.solve.residual,
      converged: data.solve.converged,
      iterations: 0,
    };
    this.error = null;
  }
}
