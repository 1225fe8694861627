import { describe, expect, it } from 'vitest';

import {
  MAX_SCALE,
  MIN_SCALE,
  RasterMeta,
  applySimilarity,
  clampScale,
  cloudToPlan,
  freshState,
  normalizeAngle,
  overlayCentroid,
  rotateAboutPivot,
  scaleAboutPivot,
  translateBy,
} from '../src/transform.js';

const meta: RasterMeta = {
  bounds: [-2, -3, 4, 5],
  pixelsPerUnit: 25,
  rectification: [1, 0, 0, 0, 1, 0, 0, 0, 1],
};

describe('similarity application', () => {
  it('identity is a no-op', () => {
    expect(applySimilarity({ scale: 1, theta: 0, tx: 0, ty: 0 }, [3.7, -2]))
      .toEqual([3.7, -2]);
  });

  it('scale 2, quarter turn, shift x: (1,0) -> (1,2)', () => {
    const out = applySimilarity(
      { scale: 2, theta: Math.PI / 2, tx: 1, ty: 0 }, [1, 0]);
    expect(out[0]).toBeCloseTo(1, 12);
    expect(out[1]).toBeCloseTo(2, 12);
  });

  it('cloudToPlan drops the up coordinate', () => {
    const out = cloudToPlan(
      { scale: 10, theta: 0, tx: 50, ty: 50 },
      [1, 0, 0, 0, 1, 0, 0, 0, 1],
      [1, 7, 2],
    );
    expect(out[0]).toBeCloseTo(60, 12);
    expect(out[1]).toBeCloseTo(70, 12);
  });
});

describe('editing operations', () => {
  it('drag by (10, 5) adds to the translation', () => {
    const out = translateBy(freshState(), 10, 5);
    expect(out.tx).toBe(10);
    expect(out.ty).toBe(5);
    expect(out.dirty).toBe(true);
  });

  it('rotation by pi keeps the overlay centroid pixel fixed', () => {
    let state = { ...freshState(), scale: 3, theta: 0.4, tx: 120, ty: 80 };
    const before = overlayCentroid(state, meta);
    state = rotateAboutPivot(state, Math.PI, before);
    const after = overlayCentroid(state, meta);
    expect(after[0]).toBeCloseTo(before[0], 9);
    expect(after[1]).toBeCloseTo(before[1], 9);
    expect(state.theta).toBeCloseTo(normalizeAngle(0.4 + Math.PI), 12);
  });

  it('scaling about the centroid keeps the centroid pixel fixed', () => {
    let state = { ...freshState(), scale: 2, theta: -0.7, tx: -40, ty: 30 };
    const before = overlayCentroid(state, meta);
    state = scaleAboutPivot(state, 1.8, before);
    const after = overlayCentroid(state, meta);
    expect(state.scale).toBeCloseTo(3.6, 12);
    expect(after[0]).toBeCloseTo(before[0], 9);
    expect(after[1]).toBeCloseTo(before[1], 9);
  });

  it('scale clamps to [1e-3, 1e3]', () => {
    expect(clampScale(0)).toBe(MIN_SCALE);
    expect(clampScale(1e9)).toBe(MAX_SCALE);
    let state = { ...freshState(), scale: 900 };
    state = scaleAboutPivot(state, 10, [0, 0]);
    expect(state.scale).toBe(MAX_SCALE);
  });

  it('sequential edits compose like the chained maps', () => {
    let state = freshState();
    state = translateBy(state, 5, -3);
    const pivot = overlayCentroid(state, meta);
    state = rotateAboutPivot(state, 0.3, pivot);
    state = scaleAboutPivot(state, 2, overlayCentroid(state, meta));
    // the fiducial point the probes use stays finite and well-defined
    const out = applySimilarity(state, [1, 1]);
    expect(Number.isFinite(out[0]) && Number.isFinite(out[1])).toBe(true);
  });
});

describe('angle normalization', () => {
  it('wraps to (-pi, pi]', () => {
    expect(normalizeAngle(3 * Math.PI)).toBeCloseTo(Math.PI, 12);
    expect(normalizeAngle(-Math.PI)).toBeCloseTo(Math.PI, 12);
    expect(normalizeAngle(0.5)).toBe(0.5);
  });
});
