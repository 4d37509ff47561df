/**
 * Editor state and keyframe operations. Invariants maintained here:
 * keyframes always include frames 0 and F-1, boxes stay inside the canvas,
 * and object identity (index + color) is stable across keyframes.
 */

import type { Box, Keyframe } from "./interpolate.js";
import { interpolateBoxes } from "./interpolate.js";
import type { GenerateResponse, SceneInfo } from "./api.js";

export interface EditorState {
  scene: SceneInfo | null;
  keyframes: Keyframe[];
  /** Playback / editing cursor, a frame index. */
  cursor: number;
  seed: number;
  lastResponse: GenerateResponse | null;
  compareMode: boolean;
  pending: boolean;
}

export function initialState(): EditorState {
  return {
    scene: null,
    keyframes: [],
    cursor: 0,
    seed: 0,
    lastResponse: null,
    compareMode: false,
    pending: false,
  };
}

function clampBox(box: Box, width: number, height: number): Box {
  const w = Math.min(box[2] - box[0], width);
  const h = Math.min(box[3] - box[1], height);
  let x0 = Math.max(0, Math.min(box[0], width - w));
  let y0 = Math.max(0, Math.min(box[1], height - h));
  return [x0, y0, x0 + w, y0 + h];
}

/** Reset keyframes to the scene's ground-truth first and last frame boxes. */
export function loadScene(state: EditorState, scene: SceneInfo): void {
  state.scene = scene;
  state.cursor = 0;
  state.lastResponse = null;
  const first = scene.initial_boxes[0].map((b) => [...b] as Box);
  const last = scene.initial_boxes[scene.num_frames - 1].map((b) => [...b] as Box);
  state.keyframes = [
    { frame: 0, boxes: first },
    { frame: scene.num_frames - 1, boxes: last },
  ];
}

/** The keyframe exactly at `frame`, if any. */
export function keyframeAt(state: EditorState, frame: number): Keyframe | undefined {
  return state.keyframes.find((kf) => kf.frame === frame);
}

/**
 * Add a keyframe at the cursor, seeded with the interpolated boxes so adding
 * a keyframe never changes the previewed trajectory by itself.
 */
export function addKeyframe(state: EditorState, frame: number): Keyframe {
  if (!state.scene) throw new Error("no scene loaded");
  const existing = keyframeAt(state, frame);
  if (existing) return existing;
  const boxes = interpolateBoxes(state.keyframes, state.scene.num_frames)[frame];
  const kf: Keyframe = { frame, boxes: boxes.map((b) => [...b] as Box) };
  state.keyframes.push(kf);
  state.keyframes.sort((a, b) => a.frame - b.frame);
  return kf;
}

/** Endpoint keyframes (0 and F-1) cannot be removed. */
export function removeKeyframe(state: EditorState, frame: number): boolean {
  if (!state.scene) return false;
  if (frame === 0 || frame === state.scene.num_frames - 1) return false;
  const before = state.keyframes.length;
  state.keyframes = state.keyframes.filter((kf) => kf.frame !== frame);
  return state.keyframes.length < before;
}

/** Move/resize a box on a keyframe, clamped to the canvas. */
export function setBox(state: EditorState, frame: number, objectIndex: number, box: Box): void {
  if (!state.scene) throw new Error("no scene loaded");
  const kf = keyframeAt(state, frame);
  if (!kf) throw new Error(`no keyframe at frame ${frame}`);
  if (objectIndex < 0 || objectIndex >= kf.boxes.length) {
    throw new Error(`object index ${objectIndex} out of range`);
  }
  kf.boxes[objectIndex] = clampBox(box, state.scene.width, state.scene.height);
}

/** Per-frame interpolated boxes for ghost overlays and request payloads. */
export function previewBoxes(state: EditorState): Box[][] {
  if (!state.scene) return [];
  return interpolateBoxes(state.keyframes, state.scene.num_frames);
}

/**
 * Scale every keyframe box about its own center by `factor` at the last
 * keyframe, ramping linearly from 1 at frame 0 (the zoom preset).
 */
export function applyZoomPreset(state: EditorState, factor: number): void {
  if (!state.scene) throw new Error("no scene loaded");
  const lastFrame = state.scene.num_frames - 1;
  for (const kf of state.keyframes) {
    const f = 1 + (factor - 1) * (kf.frame / lastFrame);
    kf.boxes = kf.boxes.map((b) => {
      const cx = (b[0] + b[2]) / 2;
      const cy = (b[1] + b[3]) / 2;
      const hw = ((b[2] - b[0]) / 2) * f;
      const hh = ((b[3] - b[1]) / 2) * f;
      return clampBox([cx - hw, cy - hh, cx + hw, cy + hh],
                      state.scene!.width, state.scene!.height);
    });
  }
}
