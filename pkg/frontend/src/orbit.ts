/**
 * Minimal orbit/zoom/pan viewer over the sampled point cloud.
 *
 * Read-only by design: it helps the annotator build a mental model of the
 * geometry and never touches the alignment state. Pure math lives in
 * OrbitCamera so it tests without a DOM.
 */

export class OrbitCamera {
  yaw = 0.6;
  pitch = 0.4;
  distance = 4;
  target: [number, number, number] = [0, 0, 0];

  static readonly MIN_PITCH = -1.45;
  static readonly MAX_PITCH = 1.45;
  static readonly MIN_DISTANCE = 0.05;
  static readonly MAX_DISTANCE = 1e4;

  orbit(dx: number, dy: number): void {
    this.yaw += dx;
    this.pitch = Math.min(OrbitCamera.MAX_PITCH,
                          Math.max(OrbitCamera.MIN_PITCH, this.pitch + dy));
  }

  zoom(factor: number): void {
    this.distance = Math.min(OrbitCamera.MAX_DISTANCE,
                             Math.max(OrbitCamera.MIN_DISTANCE, this.distance * factor));
  }

  pan(dx: number, dy: number): void {
    // move the target in the camera's screen plane
    const cy = Math.cos(this.yaw);
    const sy = Math.sin(this.yaw);
    const right: [number, number, number] = [cy, 0, -sy];
    const cp = Math.cos(this.pitch);
    const sp = Math.sin(this.pitch);
    const up: [number, number, number] = [sy * sp, cp, cy * sp];
    const k = this.distance;
    this.target = [
      this.target[0] + (right[0] * dx + up[0] * dy) * k,
      this.target[1] + (right[1] * dx + up[1] * dy) * k,
      this.target[2] + (right[2] * dx + up[2] * dy) * k,
    ];
  }

  /** Perspective projection; returns null when the point is behind the eye. */
  project(p: [number, number, number], width: number, height: number):
      [number, number] | null {
    const cy = Math.cos(this.yaw);
    const sy = Math.sin(this.yaw);
    const cp = Math.cos(this.pitch);
    const sp = Math.sin(this.pitch);
    const x = p[0] - this.target[0];
    const y = p[1] - this.target[1];
    const z = p[2] - this.target[2];
    // yaw about +y, then pitch about the camera's x axis
    const x1 = cy * x - sy * z;
    const z1 = sy * x + cy * z;
    const y2 = cp * y - sp * z1;
    const z2 = sp * y + cp * z1;
    const depth = z2 + this.distance;
    if (depth <= 1e-6) return null;
    const f = 0.9 * Math.min(width, height);
    return [width / 2 + (f * x1) / depth, height / 2 - (f * y2) / depth];
  }

  fit(points: [number, number, number][]): void {
    if (!points.length) return;
    let cx = 0, cy = 0, cz = 0;
    for (const p of points) { cx += p[0]; cy += p[1]; cz += p[2]; }
    const n = points.length;
    this.target = [cx / n, cy / n, cz / n];
    let radius = 0;
    for (const p of points) {
      const d = Math.hypot(p[0] - this.target[0], p[1] - this.target[1],
                           p[2] - this.target[2]);
      if (d > radius) radius = d;
    }
    this.distance = Math.max(radius * 2.2, OrbitCamera.MIN_DISTANCE);
  }
}

export class OrbitView {
  readonly camera = new OrbitCamera();
  private points: [number, number, number][] = [];
  private colors: [number, number, number][] = [];
  private dragging: 'orbit' | 'pan' | null = null;
  private last: [number, number] = [0, 0];

  constructor(private canvas: HTMLCanvasElement) {
    canvas.addEventListener('pointerdown', (e) => {
      this.dragging = e.shiftKey || e.button === 2 ? 'pan' : 'orbit';
      this.last = [e.clientX, e.clientY];
      canvas.setPointerCapture(e.pointerId);
    });
    canvas.addEventListener('pointermove', (e) => {
      if (!this.dragging) return;
      const dx = e.clientX - this.last[0];
      const dy = e.clientY - this.last[1];
      this.last = [e.clientX, e.clientY];
      if (this.dragging === 'orbit') this.camera.orbit(dx * 0.01, dy * 0.01);
      else this.camera.pan(-dx / this.canvas.width, dy / this.canvas.height);
      this.render();
    });
    canvas.addEventListener('pointerup', () => { this.dragging = null; });
    canvas.addEventListener('wheel', (e) => {
      e.preventDefault();
      this.camera.zoom(Math.exp(e.deltaY * 0.001));
      this.render();
    }, { passive: false });
    canvas.addEventListener('contextmenu', (e) => e.preventDefault());
  }

  setPoints(points: [number, number, number][], colors: [number, number, number][]): void {
    this.points = points;
    this.colors = colors;
    this.camera.fit(points);
    this.render();
  }

  render(): void {
    const ctx = this.canvas.getContext('2d');
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = '#10141a';
    ctx.fillRect(0, 0, width, height);
    for (let i = 0; i < this.points.length; i++) {
      const xy = this.camera.project(this.points[i], width, height);
      if (!xy) continue;
      const c = this.colors[i] ?? [200, 200, 200];
      ctx.fillStyle = `rgb(${c[0]},${c[1]},${c[2]})`;
      ctx.fillRect(xy[0], xy[1], 2, 2);
    }
  }
}
