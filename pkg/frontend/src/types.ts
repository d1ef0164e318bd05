export interface Camera {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
}

export interface Dims {
  length: number;
  width: number;
  height: number;
}

export type Point = [number, number];

export interface Segment {
  from: Point;
  to: Point;
}

/** Image line la*u + lb*v + lc = 0 with la^2 + lb^2 = 1. */
export interface ImageLine {
  la: number;
  lb: number;
  lc: number;
}

export type AxisName = "x" | "y" | "z";

export const AXIS_NAMES: readonly AxisName[] = ["x", "y", "z"];

export const AXIS_DIRS: Record<AxisName, [number, number, number]> = {
  x: [1, 0, 0],
  y: [0, 1, 0],
  z: [0, 0, 1],
};

/** Axis overlay colors: red/green/blue for x/y/z. */
export const AXIS_COLORS: Record<AxisName, string> = {
  x: "#e53935",
  y: "#43a047",
  z: "#1e88e5",
};

export interface Box2D {
  l: number;
  r: number;
  t: number;
  b: number;
}

export interface AbcRotation {
  a: number;
  b: number;
  c: number;
}

export interface PoseJson {
  rotation: AbcRotation;
  translation: [number, number, number];
}

export interface RotationSolveResult {
  rotation: AbcRotation;
  rotation_matrix: number[];
  residual: number;
  converged: boolean;
  multistart_used: boolean;
}

export interface TranslationSolveResult {
  translation: [number, number, number];
  iterations: number;
  converged: boolean;
  tangency: unknown[];
}

export interface ProjectResult {
  corners: Point[];
  edges: [number, number][];
  axes: Record<AxisName, [Point, Point]>;
}

/** The annotation contract shared with the solver, plus session extras. */
export interface ExportedAnnotation {
  axes: { dir: [number, number, number]; line: ImageLine }[];
  box: Box2D;
  dims: Dims;
  camera: Camera;
  pose: PoseJson;
  segments: Record<AxisName, Segment>;
  solve: { residual: number; converged: boolean };
}
