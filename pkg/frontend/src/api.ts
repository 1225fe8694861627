/** Typed client for the alignment service HTTP API. */

import { RasterMeta, Similarity } from './transform.js';

export interface SceneSummary {
  scene_id: string;
  name: string;
  n_plans: number;
  n_components: number;
}

export interface SceneDetail {
  scene_id: string;
  name: string;
  map_link: string;
  floor_plans: { plan_id: string; width: number; height: number }[];
  components: { component_id: string }[];
}

export interface AlignmentRecord {
  similarity: Similarity;
  rectification: number[] | null;
  annotator: string;
  version: number;
}

export interface PointsPayload {
  count: number;
  points: [number, number, number][];
  colors: [number, number, number][];
}

export interface Topdown {
  imageUrl: string;
  meta: RasterMeta;
}

export class VersionConflictError extends Error {
  constructor(public currentVersion: number) {
    super(`alignment changed on the server (version ${currentVersion})`);
  }
}

export class AlignClient {
  constructor(private base: string = '') {}

  private async json<T>(path: string): Promise<T> {
    const res = await fetch(this.base + path);
    if (!res.ok) throw new Error(`${path} -> ${res.status}`);
    return res.json() as Promise<T>;
  }

  async listScenes(): Promise<SceneSummary[]> {
    const out: SceneSummary[] = [];
    for (let page = 1; ; page++) {
      const body = await this.json<{ scenes: SceneSummary[]; total: number }>(
        `/scenes?page=${page}&page_size=200`,
      );
      out.push(...body.scenes);
      if (out.length >= body.total || body.scenes.length === 0) return out;
    }
  }

  getScene(sceneId: string): Promise<SceneDetail> {
    return this.json(`/scenes/${sceneId}`);
  }

  planImageUrl(sceneId: string, planId: string): string {
    return `${this.base}/scenes/${sceneId}/plans/${planId}/image`;
  }

  async getTopdown(sceneId: string, componentId: string, res = 512,
                   planId?: string): Promise<Topdown> {
    const plan = planId ? `&plan=${encodeURIComponent(planId)}` : '';
    const url = `${this.base}/scenes/${sceneId}/components/${componentId}/topdown?res=${res}${plan}`;
    const response = await fetch(url);
    if (!response.ok) throw new Error(`topdown -> ${response.status}`);
    const bounds = (response.headers.get('x-c3-bounds') ?? '').split(',').map(Number);
    const ppu = Number(response.headers.get('x-c3-pixels-per-unit'));
    const rect = (response.headers.get('x-c3-rectification') ?? '').split(',').map(Number);
    const blob = await response.blob();
    return {
      imageUrl: URL.createObjectURL(blob),
      meta: {
        bounds: bounds as [number, number, number, number],
        pixelsPerUnit: ppu,
        rectification: rect,
      },
    };
  }

  getPoints(sceneId: string, componentId: string, sample = 4000, seed = 0):
      Promise<PointsPayload> {
    return this.json(
      `/scenes/${sceneId}/components/${componentId}/points?sample=${sample}&seed=${seed}`,
    );
  }

  async listPhotos(sceneId: string, page: number, pageSize = 24):
      Promise<{ photos: string[]; total: number }> {
    return this.json(`/scenes/${sceneId}/photos?page=${page}&page_size=${pageSize}`);
  }

  photoUrl(sceneId: string, name: string): string {
    return `${this.base}/scenes/${sceneId}/photos/${encodeURIComponent(name)}`;
  }

  async getAlignment(sceneId: string, componentId: string, planId: string):
      Promise<AlignmentRecord | null> {
    const res = await fetch(
      `${this.base}/scenes/${sceneId}/alignments/${componentId}/${planId}`,
    );
    if (res.status === 404) return null;
    if (!res.ok) throw new Error(`alignment GET -> ${res.status}`);
    return res.json();
  }

  async putAlignment(
    sceneId: string,
    componentId: string,
    planId: string,
    similarity: Similarity,
    expectedVersion: number | null,
    annotator = '',
  ): Promise<number> {
    const res = await fetch(
      `${this.base}/scenes/${sceneId}/alignments/${componentId}/${planId}`,
      {
        method: 'PUT',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify({
          similarity: {
            scale: similarity.scale,
            theta: similarity.theta,
            tx: similarity.tx,
            ty: similarity.ty,
          },
          annotator,
          expected_version: expectedVersion,
        }),
      },
    );
    if (res.status === 409) {
      const body = await res.json();
      throw new VersionConflictError(body.detail?.current_version ?? -1);
    }
    if (!res.ok) throw new Error(`alignment PUT -> ${res.status}`);
    const body = await res.json();
    return body.version as number;
  }
}
