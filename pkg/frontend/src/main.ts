/** Page wiring: selectors, alignment canvas, side panels, save flow. */

import { AlignClient, SceneDetail, VersionConflictError } from './api.js';
import { OrbitView } from './orbit.js';
import { OverlayView } from './overlay.js';
import { PHOTO_PAGE_SIZE, clampPage, pageCount } from './photostrip.js';
import { UiTransformState, freshState, clampScale, normalizeAngle } from './transform.js';

const client = new AlignClient('');

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const sceneSelect = el<HTMLSelectElement>('scene-select');
const componentSelect = el<HTMLSelectElement>('component-select');
const planSelect = el<HTMLSelectElement>('plan-select');
const mapLink = el<HTMLAnchorElement>('map-link');
const scaleInput = el<HTMLInputElement>('scale-input');
const thetaInput = el<HTMLInputElement>('theta-input');
const txInput = el<HTMLInputElement>('tx-input');
const tyInput = el<HTMLInputElement>('ty-input');
const versionLabel = el<HTMLSpanElement>('version-label');
const dirtyLabel = el<HTMLSpanElement>('dirty-label');
const saveButton = el<HTMLButtonElement>('save-button');
const toastBox = el<HTMLDivElement>('toasts');
const photoStrip = el<HTMLDivElement>('photo-strip');
const photoPageLabel = el<HTMLSpanElement>('photo-page');

const overlay = new OverlayView(el<HTMLCanvasElement>('align-canvas'));
const orbit = new OrbitView(el<HTMLCanvasElement>('orbit-canvas'));

let scene: SceneDetail | null = null;
let photoPage = 1;
let photoTotal = 0;

function toast(message: string, retry?: () => void): void {
  const node = document.createElement('div');
  node.className = 'toast';
  node.textContent = message;
  if (retry) {
    const button = document.createElement('button');
    button.textContent = 'retry';
    button.onclick = () => { node.remove(); retry(); };
    node.appendChild(button);
  }
  toastBox.appendChild(node);
  setTimeout(() => node.remove(), 8000);
}

function readouts(state: UiTransformState): void {
  // numeric readouts mirror the internal state exactly
  scaleInput.value = String(state.scale);
  thetaInput.value = String(state.theta);
  txInput.value = String(state.tx);
  tyInput.value = String(state.ty);
  versionLabel.textContent = state.serverVersion
    ? `v${state.serverVersion}` : 'unsaved';
  dirtyLabel.textContent = state.dirty ? '*' : '';
}

overlay.onChange(readouts);

function numericEdit(): void {
  overlay.setState({
    ...overlay.state,
    scale: clampScale(Number(scaleInput.value) || overlay.state.scale),
    theta: normalizeAngle(Number(thetaInput.value) || 0),
    tx: Number(txInput.value) || 0,
    ty: Number(tyInput.value) || 0,
    dirty: true,
  });
}
for (const input of [scaleInput, thetaInput, txInput, tyInput]) {
  input.addEventListener('change', numericEdit);
}

el<HTMLButtonElement>('rotate-left').onclick = () => overlay.rotateBy(-Math.PI / 36);
el<HTMLButtonElement>('rotate-right').onclick = () => overlay.rotateBy(Math.PI / 36);
el<HTMLButtonElement>('scale-up').onclick = () => overlay.scaleBy(1.05);
el<HTMLButtonElement>('scale-down').onclick = () => overlay.scaleBy(1 / 1.05);

async function loadImage(url: string): Promise<HTMLImageElement> {
  const img = new Image();
  img.src = url;
  await img.decode();
  return img;
}

async function refreshAlignment(): Promise<void> {
  if (!scene) return;
  const componentId = componentSelect.value;
  const planId = planSelect.value;
  try {
    const record = await client.getAlignment(scene.scene_id, componentId, planId);
    if (record) {
      overlay.setState({ ...record.similarity, dirty: false,
                         serverVersion: record.version });
    } else {
      overlay.setState(freshState());
    }
  } catch (err) {
    toast(`could not load alignment: ${err}`, refreshAlignment);
  }
}

async function refreshPanels(): Promise<void> {
  if (!scene) return;
  const sceneId = scene.scene_id;
  const componentId = componentSelect.value;
  const planId = planSelect.value;

  try {
    const plan = await loadImage(client.planImageUrl(sceneId, planId));
    overlay.setPlanImage(plan);
    overlay.editingEnabled = true;
  } catch {
    overlay.setPlanImage(null);
    overlay.editingEnabled = false; // placeholder tile, no editing
    toast(`plan image missing for ${planId}`);
  }

  try {
    const topdown = await client.getTopdown(sceneId, componentId, 512, planId);
    overlay.setOverlay(await loadImage(topdown.imageUrl), topdown.meta);
  } catch (err) {
    toast(`top-down raster failed: ${err}`, refreshPanels);
  }

  try {
    const payload = await client.getPoints(sceneId, componentId);
    orbit.setPoints(payload.points, payload.colors);
  } catch (err) {
    toast(`point sample failed: ${err}`, refreshPanels);
  }

  await refreshPhotos();
  await refreshAlignment();
}

async function refreshPhotos(): Promise<void> {
  if (!scene) return;
  try {
    const body = await client.listPhotos(scene.scene_id, photoPage, PHOTO_PAGE_SIZE);
    photoTotal = body.total;
    photoPageLabel.textContent = `${photoPage}/${pageCount(photoTotal) || 1}`;
    photoStrip.textContent = '';
    for (const name of body.photos) {
      const img = document.createElement('img');
      img.src = client.photoUrl(scene.scene_id, name);
      img.title = name;
      img.alt = name;
      img.onerror = () => { img.classList.add('missing'); };
      photoStrip.appendChild(img);
    }
  } catch (err) {
    toast(`photo strip failed: ${err}`, refreshPhotos);
  }
}

el<HTMLButtonElement>('photo-prev').onclick = () => {
  photoPage = clampPage(photoPage - 1, photoTotal);
  void refreshPhotos();
};
el<HTMLButtonElement>('photo-next').onclick = () => {
  photoPage = clampPage(photoPage + 1, photoTotal);
  void refreshPhotos();
};

async function selectScene(sceneId: string): Promise<void> {
  scene = await client.getScene(sceneId);
  componentSelect.textContent = '';
  for (const component of scene.components) {
    componentSelect.add(new Option(component.component_id));
  }
  planSelect.textContent = '';
  for (const plan of scene.floor_plans) {
    planSelect.add(new Option(plan.plan_id));
  }
  mapLink.href = scene.map_link || '#';
  mapLink.style.display = scene.map_link ? 'inline' : 'none';
  photoPage = 1;
  await refreshPanels();
}

sceneSelect.addEventListener('change', () => void selectScene(sceneSelect.value));
componentSelect.addEventListener('change', () => void refreshPanels());
planSelect.addEventListener('change', () => void refreshPanels());

saveButton.onclick = async () => {
  if (!scene) return;
  const state = overlay.state;
  try {
    const version = await client.putAlignment(
      scene.scene_id, componentSelect.value, planSelect.value,
      state, state.serverVersion || null,
    );
    overlay.setState({ ...state, dirty: false, serverVersion: version });
    toast(`saved v${version}`);
  } catch (err) {
    if (err instanceof VersionConflictError) {
      toast(`someone else saved v${err.currentVersion}; reloading their state`,
            refreshAlignment);
    } else {
      toast(`save failed: ${err}`, () => saveButton.click());
    }
  }
};

async function boot(): Promise<void> {
  try {
    const scenes = await client.listScenes();
    sceneSelect.textContent = '';
    for (const summary of scenes) {
      sceneSelect.add(new Option(
        `${summary.scene_id} (${summary.n_plans} plans)`, summary.scene_id));
    }
    if (scenes.length) await selectScene(scenes[0].scene_id);
  } catch (err) {
    toast(`could not reach the alignment service: ${err}`, boot);
  }
}

void boot();
