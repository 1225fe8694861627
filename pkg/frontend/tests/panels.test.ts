import { describe, expect, it } from 'vitest';

import { OrbitCamera } from '../src/orbit.js';
import { PHOTO_PAGE_SIZE, clampPage, pageCount } from '../src/photostrip.js';

describe('photo strip paging', () => {
  it('25 photos at page size 24 make 2 pages', () => {
    expect(PHOTO_PAGE_SIZE).toBe(24);
    expect(pageCount(25)).toBe(2);
    expect(pageCount(24)).toBe(1);
    expect(pageCount(0)).toBe(0);
  });

  it('page clamps to the valid range', () => {
    expect(clampPage(0, 25)).toBe(1);
    expect(clampPage(3, 25)).toBe(2);
    expect(clampPage(1, 0)).toBe(1);
  });
});

describe('orbit camera', () => {
  it('orbit clamps pitch', () => {
    const cam = new OrbitCamera();
    cam.orbit(0, 100);
    expect(cam.pitch).toBe(OrbitCamera.MAX_PITCH);
    cam.orbit(0, -100);
    expect(cam.pitch).toBe(OrbitCamera.MIN_PITCH);
  });

  it('zoom clamps distance', () => {
    const cam = new OrbitCamera();
    cam.zoom(1e-9);
    expect(cam.distance).toBe(OrbitCamera.MIN_DISTANCE);
    cam.zoom(1e12);
    expect(cam.distance).toBe(OrbitCamera.MAX_DISTANCE);
  });

  it('the view target projects to the canvas center', () => {
    const cam = new OrbitCamera();
    cam.target = [3, -1, 2];
    const xy = cam.project([3, -1, 2], 640, 480);
    expect(xy).not.toBeNull();
    expect(xy![0]).toBeCloseTo(320, 9);
    expect(xy![1]).toBeCloseTo(240, 9);
  });

  it('pan moves the target, not the orbit angles', () => {
    const cam = new OrbitCamera();
    const yaw = cam.yaw;
    const before = [...cam.target];
    cam.pan(0.1, -0.05);
    expect(cam.yaw).toBe(yaw);
    expect(cam.target).not.toEqual(before);
  });

  it('fit centers on the cloud and backs off far enough to see it', () => {
    const cam = new OrbitCamera();
    const pts: [number, number, number][] = [
      [0, 0, 0], [2, 0, 0], [0, 2, 0], [0, 0, 2],
    ];
    cam.fit(pts);
    expect(cam.target[0]).toBeCloseTo(0.5, 9);
    for (const p of pts) {
      expect(cam.project(p, 640, 480)).not.toBeNull();
    }
  });
});
