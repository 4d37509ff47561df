import { beforeEach, describe, expect, it } from "vitest";

import type { SceneInfo } from "../src/api.js";
import { interpolateBoxes } from "../src/interpolate.js";
import {
  addKeyframe, applyZoomPreset, initialState, keyframeAt, loadScene,
  previewBoxes, removeKeyframe, setBox, type EditorState,
} from "../src/state.js";

function scene(): SceneInfo {
  const boxes = Array.from({ length: 8 }, (_, f) => [
    [2 + f, 3, 10 + f, 11],
  ]);
  return {
    id: "test-scene",
    num_objects: 1,
    num_frames: 8,
    height: 32,
    width: 32,
    palette: [[1, 0, 0]],
    first_frame_png: "",
    initial_boxes: boxes,
  };
}

describe("editor state", () => {
  let state: EditorState;

  beforeEach(() => {
    state = initialState();
    loadScene(state, scene());
  });

  it("seeds keyframes at the first and last frame from the scene", () => {
    expect(state.keyframes.map((kf) => kf.frame)).toEqual([0, 7]);
    expect(state.keyframes[0].boxes).toEqual([[2, 3, 10, 11]]);
    expect(state.keyframes[1].boxes).toEqual([[9, 3, 17, 11]]);
  });

  it("adding a keyframe does not change the previewed trajectory", () => {
    const before = previewBoxes(state);
    addKeyframe(state, 4);
    expect(previewBoxes(state)).toEqual(before);
    expect(state.keyframes.map((kf) => kf.frame)).toEqual([0, 4, 7]);
  });

  it("keeps keyframes sorted and deduplicated", () => {
    addKeyframe(state, 5);
    addKeyframe(state, 2);
    const again = addKeyframe(state, 5);
    expect(state.keyframes.map((kf) => kf.frame)).toEqual([0, 2, 5, 7]);
    expect(again).toBe(keyframeAt(state, 5));
  });

  it("refuses to remove the endpoint keyframes", () => {
    expect(removeKeyframe(state, 0)).toBe(false);
    expect(removeKeyframe(state, 7)).toBe(false);
    addKeyframe(state, 3);
    expect(removeKeyframe(state, 3)).toBe(true);
    expect(state.keyframes.map((kf) => kf.frame)).toEqual([0, 7]);
  });

  it("clamps boxes to the canvas on move", () => {
    setBox(state, 0, 0, [-5, -5, 3, 3]);
    expect(keyframeAt(state, 0)!.boxes[0]).toEqual([0, 0, 8, 8]);
    setBox(state, 0, 0, [28, 30, 36, 38]);
    expect(keyframeAt(state, 0)!.boxes[0]).toEqual([24, 24, 32, 32]);
  });

  it("keeps object identity stable across keyframes", () => {
    addKeyframe(state, 4);
    for (const kf of state.keyframes) {
      expect(kf.boxes).toHaveLength(state.scene!.num_objects);
    }
  });

  it("zoom preset ramps box scale from 1 to the factor across the clip", () => {
    applyZoomPreset(state, 2);
    const first = state.keyframes[0].boxes[0];
    const last = state.keyframes[1].boxes[0];
    expect(first[2] - first[0]).toBeCloseTo(8, 9); // unchanged at frame 0
    expect(last[2] - last[0]).toBeCloseTo(16, 9); // doubled at frame F-1
  });

  it("preview equals direct interpolation of the keyframes", () => {
    addKeyframe(state, 3);
    setBox(state, 3, 0, [20, 20, 28, 28]);
    expect(previewBoxes(state)).toEqual(
      interpolateBoxes(state.keyframes, state.scene!.num_frames),
    );
  });
});
