/**
 * The alignment canvas: floor plan underlay, semi-transparent top-down
 * point-cloud overlay, and the pointer interactions that edit the transform
 * (drag translates, wheel scales about the overlay centroid, the rotation
 * handle/slider rotates about it).
 */

import {
  RasterMeta,
  UiTransformState,
  overlayCentroid,
  rasterToPlanMatrix,
  rotateAboutPivot,
  scaleAboutPivot,
  translateBy,
} from './transform.js';

export type StateListener = (state: UiTransformState) => void;

export class OverlayView {
  state: UiTransformState = {
    scale: 1, theta: 0, tx: 0, ty: 0, dirty: false, serverVersion: 0,
  };
  meta: RasterMeta | null = null;
  editingEnabled = true;

  private plan: HTMLImageElement | null = null;
  private raster: HTMLImageElement | null = null;
  private view = 1; // plan pixels -> canvas pixels
  private dragging = false;
  private last: [number, number] = [0, 0];
  private listeners: StateListener[] = [];

  constructor(private canvas: HTMLCanvasElement) {
    canvas.addEventListener('pointerdown', (e) => {
      if (!this.editingEnabled) return;
      this.dragging = true;
      this.last = [e.clientX, e.clientY];
      canvas.setPointerCapture(e.pointerId);
    });
    canvas.addEventListener('pointermove', (e) => {
      if (!this.dragging || !this.editingEnabled) return;
      const dx = (e.clientX - this.last[0]) / this.view;
      const dy = (e.clientY - this.last[1]) / this.view;
      this.last = [e.clientX, e.clientY];
      this.setState(translateBy(this.state, dx, dy));
    });
    canvas.addEventListener('pointerup', () => { this.dragging = false; });
    canvas.addEventListener('wheel', (e) => {
      if (!this.editingEnabled || !this.meta) return;
      e.preventDefault();
      const factor = Math.exp(-e.deltaY * 0.001);
      this.setState(scaleAboutPivot(
        this.state, factor, overlayCentroid(this.state, this.meta)));
    }, { passive: false });
  }

  onChange(listener: StateListener): void {
    this.listeners.push(listener);
  }

  setState(state: UiTransformState): void {
    this.state = state;
    this.render();
    for (const listener of this.listeners) listener(state);
  }

  rotateBy(delta: number): void {
    if (!this.meta) return;
    this.setState(rotateAboutPivot(
      this.state, delta, overlayCentroid(this.state, this.meta)));
  }

  scaleBy(factor: number): void {
    if (!this.meta) return;
    this.setState(scaleAboutPivot(
      this.state, factor, overlayCentroid(this.state, this.meta)));
  }

  setPlanImage(img: HTMLImageElement | null): void {
    this.plan = img;
    this.fitView();
    this.render();
  }

  setOverlay(img: HTMLImageElement, meta: RasterMeta): void {
    this.raster = img;
    this.meta = meta;
    this.render();
  }

  private fitView(): void {
    if (!this.plan) { this.view = 1; return; }
    this.view = Math.min(
      this.canvas.width / this.plan.naturalWidth,
      this.canvas.height / this.plan.naturalHeight,
      1,
    );
  }

  render(): void {
    const ctx = this.canvas.getContext('2d');
    if (!ctx) return;
    ctx.setTransform(1, 0, 0, 1, 0, 0);
    ctx.fillStyle = '#1c2026';
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);

    ctx.setTransform(this.view, 0, 0, this.view, 0, 0);
    if (this.plan) {
      ctx.drawImage(this.plan, 0, 0);
    } else {
      // placeholder tile when the plan image is unavailable
      ctx.fillStyle = '#3a3f47';
      ctx.fillRect(0, 0, 320, 240);
      ctx.fillStyle = '#aab2bd';
      ctx.font = '16px sans-serif';
      ctx.fillText('plan image unavailable', 40, 120);
    }

    if (this.raster && this.meta) {
      const m = rasterToPlanMatrix(this.state, this.meta);
      ctx.transform(m[0], m[1], m[2], m[3], m[4], m[5]);
      ctx.globalAlpha = 0.55;
      ctx.drawImage(this.raster, 0, 0);
      ctx.globalAlpha = 1;
    }
    ctx.setTransform(1, 0, 0, 1, 0, 0);
  }
}
