/**
 * Client-side transform math.
 *
 * This duplicates the server's cloud-to-plan mapping only so the overlay can
 * render without a round trip; the record stored on the server stays
 * authoritative. The probe-consistency test pins this duplication to the
 * server's geometry within one pixel.
 *
 * Conventions match the service: plan pixels have the origin at the top-left
 * corner, x right, y down; theta is counter-clockwise in that frame; a cloud
 * point is rectified (up becomes +y), flattened to (x, z), then mapped by
 * scale/rotation/translation.
 */

export interface Similarity {
  scale: number;
  theta: number;
  tx: number;
  ty: number;
}

export interface UiTransformState extends Similarity {
  dirty: boolean;
  serverVersion: number; // 0 = nothing stored yet
}

export interface RasterMeta {
  bounds: [number, number, number, number]; // min_x, min_z, max_x, max_z
  pixelsPerUnit: number;
  rectification: number[]; // row-major 3x3
}

export const MIN_SCALE = 1e-3;
export const MAX_SCALE = 1e3;

export function clampScale(scale: number): number {
  return Math.min(MAX_SCALE, Math.max(MIN_SCALE, scale));
}

export function normalizeAngle(theta: number): number {
  let t = theta % (2 * Math.PI);
  if (t <= -Math.PI) t += 2 * Math.PI;
  else if (t > Math.PI) t -= 2 * Math.PI;
  return t;
}

export function freshState(): UiTransformState {
  return { scale: 1, theta: 0, tx: 0, ty: 0, dirty: false, serverVersion: 0 };
}

export function applySimilarity(t: Similarity, p: [number, number]): [number, number] {
  const c = Math.cos(t.theta);
  const s = Math.sin(t.theta);
  return [
    t.scale * (c * p[0] - s * p[1]) + t.tx,
    t.scale * (s * p[0] + c * p[1]) + t.ty,
  ];
}

/** Rectify a cloud point, drop the up coordinate, apply the similarity. */
export function cloudToPlan(
  t: Similarity,
  rectification: number[],
  point: [number, number, number],
): [number, number] {
  const r = rectification;
  const x = r[0] * point[0] + r[1] * point[1] + r[2] * point[2];
  const z = r[6] * point[0] + r[7] * point[1] + r[8] * point[2];
  return applySimilarity(t, [x, z]);
}

/** Raster pixel of a cloud point, from the topdown endpoint's metadata. */
export function cloudToRasterPixel(
  meta: RasterMeta,
  point: [number, number, number],
): [number, number] {
  const r = meta.rectification;
  const x = r[0] * point[0] + r[1] * point[1] + r[2] * point[2];
  const z = r[6] * point[0] + r[7] * point[1] + r[8] * point[2];
  return [
    (x - meta.bounds[0]) * meta.pixelsPerUnit,
    (z - meta.bounds[1]) * meta.pixelsPerUnit,
  ];
}

/**
 * Canvas matrix (a, b, c, d, e, f) taking raster pixels to plan pixels under
 * the current transform: plan = (s/ppu) R raster + (s R bmin + t).
 */
export function rasterToPlanMatrix(t: Similarity, meta: RasterMeta):
    [number, number, number, number, number, number] {
  const k = t.scale / meta.pixelsPerUnit;
  const c = Math.cos(t.theta);
  const s = Math.sin(t.theta);
  const ox = t.scale * (c * meta.bounds[0] - s * meta.bounds[1]) + t.tx;
  const oy = t.scale * (s * meta.bounds[0] + c * meta.bounds[1]) + t.ty;
  return [k * c, k * s, -k * s, k * c, ox, oy];
}

export function applyMatrix(
  m: [number, number, number, number, number, number],
  p: [number, number],
): [number, number] {
  return [m[0] * p[0] + m[2] * p[1] + m[4], m[1] * p[0] + m[3] * p[1] + m[5]];
}

// ---------------------------------------------------------------- editing ops
// All three ops return a new state with the dirty flag raised. Scale and
// rotation pivot on the overlay centroid (in plan pixels), which costs a
// compensating translation so the centroid pixel stays put.

export function translateBy(state: UiTransformState, dx: number, dy: number): UiTransformState {
  return { ...state, tx: state.tx + dx, ty: state.ty + dy, dirty: true };
}

export function scaleAboutPivot(
  state: UiTransformState,
  factor: number,
  pivot: [number, number],
): UiTransformState {
  const target = clampScale(state.scale * factor);
  const applied = target / state.scale;
  return {
    ...state,
    scale: target,
    tx: pivot[0] + (state.tx - pivot[0]) * applied,
    ty: pivot[1] + (state.ty - pivot[1]) * applied,
    dirty: true,
  };
}

export function rotateAboutPivot(
  state: UiTransformState,
  delta: number,
  pivot: [number, number],
): UiTransformState {
  const c = Math.cos(delta);
  const s = Math.sin(delta);
  const dx = state.tx - pivot[0];
  const dy = state.ty - pivot[1];
  return {
    ...state,
    theta: normalizeAngle(state.theta + delta),
    tx: pivot[0] + c * dx - s * dy,
    ty: pivot[1] + s * dx + c * dy,
    dirty: true,
  };
}

/** Centroid of the overlay in plan pixels: the mapped cloud centroid. */
export function overlayCentroid(
  t: Similarity,
  meta: RasterMeta,
): [number, number] {
  const cx = (meta.bounds[0] + meta.bounds[2]) / 2;
  const cz = (meta.bounds[1] + meta.bounds[3]) / 2;
  return applySimilarity(t, [cx, cz]);
}
