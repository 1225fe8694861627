import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import {
  RasterMeta,
  applyMatrix,
  cloudToPlan,
  cloudToRasterPixel,
  rasterToPlanMatrix,
} from '../src/transform.js';

interface Probe {
  scale: number;
  theta: number;
  tx: number;
  ty: number;
  expected_plan_xy: [number, number];
}

interface Fixture {
  fiducial: [number, number, number];
  rectification: number[];
  raster_meta: {
    bounds: [number, number, number, number];
    pixelsPerUnit: number;
    rasterSize: [number, number];
  };
  probes: Probe[];
}

const here = dirname(fileURLToPath(import.meta.url));
const fixture: Fixture = JSON.parse(
  readFileSync(join(here, 'fixtures', 'probe_consistency.json'), 'utf-8'),
);

// Expected values come from the service-side geometry (rectification,
// flattening, similarity); regenerate with `npm run fixtures`.
describe('screen-to-model consistency over the probe grid', () => {
  it('has the full 5x5 grid', () => {
    expect(fixture.probes.length).toBe(25);
  });

  it('client transform matches the service geometry within 1 px', () => {
    for (const probe of fixture.probes) {
      const got = cloudToPlan(probe, fixture.rectification, fixture.fiducial);
      const dx = got[0] - probe.expected_plan_xy[0];
      const dy = got[1] - probe.expected_plan_xy[1];
      expect(Math.hypot(dx, dy)).toBeLessThan(1.0);
    }
  });

  it('the rendered raster path lands on the same pixel within 1 px', () => {
    const meta: RasterMeta = {
      bounds: fixture.raster_meta.bounds,
      pixelsPerUnit: fixture.raster_meta.pixelsPerUnit,
      rectification: fixture.rectification,
    };
    const rasterPixel = cloudToRasterPixel(meta, fixture.fiducial);
    // the fiducial lies inside the raster canvas
    expect(rasterPixel[0]).toBeGreaterThanOrEqual(0);
    expect(rasterPixel[1]).toBeGreaterThanOrEqual(0);
    expect(rasterPixel[0]).toBeLessThan(fixture.raster_meta.rasterSize[0]);
    expect(rasterPixel[1]).toBeLessThan(fixture.raster_meta.rasterSize[1]);

    for (const probe of fixture.probes) {
      const rendered = applyMatrix(rasterToPlanMatrix(probe, meta), rasterPixel);
      const dx = rendered[0] - probe.expected_plan_xy[0];
      const dy = rendered[1] - probe.expected_plan_xy[1];
      // raster scale: probe.scale / ppu plan px per raster px; sub-pixel here
      expect(Math.hypot(dx, dy)).toBeLessThan(1.0);
    }
  });
});
