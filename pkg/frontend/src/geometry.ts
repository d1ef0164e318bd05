import type { ImageLine, Point, Segment } from "./types.js";

/**
 * Normalized image line through a drawn segment.
 *
 * The orientation matters: a segment pulled from the object center toward
 * the positive end of an axis maps to (la, lb) = (v0 - v1, u1 - u0), and
 * the solver uses that sign to pick the rotation that projects the axis
 * the way it was drawn.  This is the only geometry the UI computes; all
 * pose math happens on the server.
 */
export function segmentToLine(seg: Segment): ImageLine {
  const [u0, v0] = seg.from;
  const [u1, v1] = seg.to;
  const la = v0 - v1;
  const lb = u1 - u0;
  const lc = u0 * v1 - u1 * v0;
  const norm = Math.hypot(la, lb);
  if (norm < 1e-12) {
    throw new Error("axis segment has zero length");
  }
  return { la: la / norm, lb: lb / norm, lc: lc / norm };
}

export function segmentLength(seg: Segment): number {
  return Math.hypot(seg.to[0] - seg.from[0], seg.to[1] - seg.from[1]);
}

export function pointDistance(a: Point, b: Point): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1]);
}
