/** Trajectory studio: draw -> generate -> inspect -> redraw. */

import { ApiClient, ApiError, type GenerateResponse, type SceneInfo } from "./api.js";
import { BoxEditor } from "./editor.js";
import { maxBoxDeviation } from "./interpolate.js";
import { FramePlayer } from "./playback.js";
import {
  addKeyframe, applyZoomPreset, initialState, keyframeAt, loadScene,
  previewBoxes, removeKeyframe,
} from "./state.js";

const PARITY_TOLERANCE_PX = 0.5;

// same origin by default; ?api=http://host:port targets a separate service
const apiBase = new URLSearchParams(window.location.search).get("api") ?? "";
const api = new ApiClient(apiBase);
const state = initialState();

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const sceneSelect = $<HTMLSelectElement>("scene-select");
const timeline = $<HTMLInputElement>("timeline");
const cursorLabel = $<HTMLSpanElement>("cursor-label");
const keyframeList = $<HTMLSpanElement>("keyframe-list");
const statusLine = $<HTMLDivElement>("status");
const parityBadge = $<HTMLSpanElement>("parity-badge");
const fastTime = $<HTMLSpanElement>("fast-time");
const slowTime = $<HTMLSpanElement>("slow-time");
const comparePane = $<HTMLDivElement>("compare-pane");

const editor = new BoxEditor($<HTMLCanvasElement>("editor-canvas"), state, refreshTimeline);
const fastPlayer = new FramePlayer($<HTMLCanvasElement>("fast-canvas"), (f) => {
  slowPlayer.seek(f);
});
const slowPlayer = new FramePlayer($<HTMLCanvasElement>("slow-canvas"));

let scenes: SceneInfo[] = [];

function setStatus(text: string, isError = false): void {
  statusLine.textContent = text;
  statusLine.className = isError ? "status error" : "status";
}

function refreshTimeline(): void {
  const frames = state.scene?.num_frames ?? 1;
  timeline.max = String(frames - 1);
  timeline.value = String(state.cursor);
  const atKey = keyframeAt(state, state.cursor) ? " (keyframe)" : "";
  cursorLabel.textContent = `frame ${state.cursor}/${frames - 1}${atKey}`;
  keyframeList.textContent = state.keyframes.map((kf) => kf.frame).join(", ");
}

function loadFirstFrame(scene: SceneInfo): void {
  const img = new Image();
  img.onload = () => editor.setBaseImage(img);
  img.src = `data:image/png;base64,${scene.first_frame_png}`;
}

function selectScene(id: string): void {
  const scene = scenes.find((s) => s.id === id);
  if (!scene) return;
  loadScene(state, scene);
  loadFirstFrame(scene);
  parityBadge.textContent = "";
  refreshTimeline();
  editor.render();
}

function checkParity(resp: GenerateResponse): void {
  const preview = previewBoxes(state);
  const deviation = maxBoxDeviation(preview, resp.per_frame_boxes);
  const ok = deviation <= PARITY_TOLERANCE_PX;
  parityBadge.textContent = ok
    ? `interpolation parity ok (max ${deviation.toFixed(3)} px)`
    : `interpolation mismatch: ${deviation.toFixed(3)} px`;
  parityBadge.className = ok ? "badge ok" : "badge bad";
}

async function runGenerate(generator: "fast" | "slow"): Promise<GenerateResponse> {
  if (!state.scene) throw new Error("no scene selected");
  return api.generate({
    scene_id: state.scene.id,
    keyframes: state.keyframes,
    seed: state.seed,
    generator,
  });
}

async function generate(): Promise<void> {
  if (!state.scene || state.pending) return;
  state.pending = true;
  setStatus(state.compareMode ? "generating fast + slow..." : "generating...");
  document.querySelectorAll("button").forEach((b) => (b.disabled = true));
  try {
    const fast = await runGenerate("fast");
    state.lastResponse = fast;
    checkParity(fast);
    await fastPlayer.load(fast.frames_png, fast.per_frame_boxes, state.scene.palette);
    fastTime.textContent = `fast (${fast.steps} steps): ${fast.wall_time_ms.toFixed(0)} ms`;
    if (state.compareMode) {
      const slow = await runGenerate("slow");
      await slowPlayer.load(slow.frames_png, slow.per_frame_boxes, state.scene.palette);
      slowTime.textContent = `slow (${slow.steps} steps): ${slow.wall_time_ms.toFixed(0)} ms`;
      setStatus(
        fast.wall_time_ms < slow.wall_time_ms
          ? `done; fast is ${(slow.wall_time_ms / fast.wall_time_ms).toFixed(1)}x quicker`
          : "done",
      );
    } else {
      setStatus(`done; self-check box IoU ${fast.self_check_box_iou?.toFixed(3) ?? "n/a"}`);
    }
    fastPlayer.play();
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      setStatus("server busy; retry in a moment", true);
    } else {
      setStatus(`generation failed: ${(err as Error).message}`, true);
    }
  } finally {
    state.pending = false;
    document.querySelectorAll("button").forEach((b) => (b.disabled = false));
  }
}

function wireControls(): void {
  sceneSelect.addEventListener("change", () => selectScene(sceneSelect.value));
  timeline.addEventListener("input", () => {
    state.cursor = Number(timeline.value);
    refreshTimeline();
    editor.render();
    fastPlayer.seek(state.cursor);
  });
  $("add-keyframe").addEventListener("click", () => {
    addKeyframe(state, state.cursor);
    refreshTimeline();
    editor.render();
  });
  $("remove-keyframe").addEventListener("click", () => {
    if (!removeKeyframe(state, state.cursor)) {
      setStatus("endpoint keyframes cannot be removed", true);
      return;
    }
    refreshTimeline();
    editor.render();
  });
  $("zoom-preset").addEventListener("click", () => {
    applyZoomPreset(state, 1.6);
    editor.render();
  });
  $<HTMLInputElement>("seed-input").addEventListener("change", (e) => {
    state.seed = Number((e.target as HTMLInputElement).value) || 0;
  });
  $<HTMLInputElement>("compare-toggle").addEventListener("change", (e) => {
    state.compareMode = (e.target as HTMLInputElement).checked;
    comparePane.style.display = state.compareMode ? "" : "none";
  });
  $("generate").addEventListener("click", () => void generate());
  $("play").addEventListener("click", () => fastPlayer.play());
  $("pause").addEventListener("click", () => fastPlayer.stop());
}

async function boot(): Promise<void> {
  wireControls();
  try {
    const health = await api.health();
    if (!health.ready) {
      setStatus("service is not ready", true);
      return;
    }
    const config = await api.config();
    $<HTMLInputElement>("compare-toggle").disabled = !config.has_slow;
    scenes = await api.scenes();
    sceneSelect.replaceChildren(
      ...scenes.map((s) => {
        const opt = document.createElement("option");
        opt.value = s.id;
        opt.textContent = `${s.id} (${s.num_objects} object${s.num_objects > 1 ? "s" : ""})`;
        return opt;
      }),
    );
    if (scenes.length > 0) selectScene(scenes[0].id);
    setStatus("ready");
  } catch (err) {
    setStatus(`cannot reach service: ${(err as Error).message}`, true);
  }
}

void boot();
