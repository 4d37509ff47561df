/**
 * Canvas keyframe editor: draws the scene's first frame, the editable boxes
 * of the keyframe under the cursor, and ghost overlays of the interpolated
 * boxes at the cursor position when it sits between keyframes.
 */

import type { Box } from "./interpolate.js";
import type { EditorState } from "./state.js";
import { keyframeAt, previewBoxes, setBox } from "./state.js";

const HANDLE = 6; // px, in canvas space

type DragMode = { kind: "move" } | { kind: "resize"; corner: number };

export class BoxEditor {
  private ctx: CanvasRenderingContext2D;
  private scale = 1;
  private baseImage: HTMLImageElement | null = null;
  private drag: { object: number; mode: DragMode; startX: number; startY: number; startBox: Box } | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private state: EditorState,
    private onChange: () => void,
  ) {
    this.ctx = canvas.getContext("2d")!;
    canvas.addEventListener("mousedown", (e) => this.onDown(e));
    canvas.addEventListener("mousemove", (e) => this.onMove(e));
    window.addEventListener("mouseup", () => this.onUp());
  }

  setBaseImage(img: HTMLImageElement): void {
    this.baseImage = img;
    this.render();
  }

  private toScene(e: MouseEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [
      ((e.clientX - rect.left) / rect.width) * (this.state.scene?.width ?? 1),
      ((e.clientY - rect.top) / rect.height) * (this.state.scene?.height ?? 1),
    ];
  }

  private hit(x: number, y: number): { object: number; mode: DragMode } | null {
    const kf = keyframeAt(this.state, this.state.cursor);
    if (!kf || !this.state.scene) return null;
    const tol = (HANDLE / this.canvas.width) * this.state.scene.width;
    for (let k = kf.boxes.length - 1; k >= 0; k--) {
      const b = kf.boxes[k];
      const corners: [number, number][] = [
        [b[0], b[1]], [b[2], b[1]], [b[2], b[3]], [b[0], b[3]],
      ];
      for (let c = 0; c < 4; c++) {
        if (Math.abs(x - corners[c][0]) <= tol && Math.abs(y - corners[c][1]) <= tol) {
          return { object: k, mode: { kind: "resize", corner: c } };
        }
      }
      if (x >= b[0] && x <= b[2] && y >= b[1] && y <= b[3]) {
        return { object: k, mode: { kind: "move" } };
      }
    }
    return null;
  }

  private onDown(e: MouseEvent): void {
    const [x, y] = this.toScene(e);
    const hit = this.hit(x, y);
    if (!hit) return;
    const kf = keyframeAt(this.state, this.state.cursor);
    if (!kf) return;
    this.drag = {
      object: hit.object,
      mode: hit.mode,
      startX: x,
      startY: y,
      startBox: [...kf.boxes[hit.object]] as Box,
    };
  }

  private onMove(e: MouseEvent): void {
    if (!this.drag || !this.state.scene) return;
    const [x, y] = this.toScene(e);
    const dx = x - this.drag.startX;
    const dy = y - this.drag.startY;
    const b = this.drag.startBox;
    let next: Box;
    if (this.drag.mode.kind === "move") {
      next = [b[0] + dx, b[1] + dy, b[2] + dx, b[3] + dy];
    } else {
      next = [...b] as Box;
      const corner = this.drag.mode.corner;
      if (corner === 0 || corner === 3) next[0] = Math.min(b[0] + dx, b[2] - 1);
      else next[2] = Math.max(b[2] + dx, b[0] + 1);
      if (corner === 0 || corner === 1) next[1] = Math.min(b[1] + dy, b[3] - 1);
      else next[3] = Math.max(b[3] + dy, b[1] + 1);
    }
    setBox(this.state, this.state.cursor, this.drag.object, next);
    this.onChange();
    this.render();
  }

  private onUp(): void {
    this.drag = null;
  }

  private color(k: number): string {
    const palette = this.state.scene?.palette;
    if (!palette || !palette[k]) return "#fff";
    const [r, g, b] = palette[k];
    return `rgb(${Math.round(r * 255)}, ${Math.round(g * 255)}, ${Math.round(b * 255)})`;
  }

  render(): void {
    const { canvas, ctx, state } = this;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (!state.scene) return;
    this.scale = canvas.width / state.scene.width;
    ctx.imageSmoothingEnabled = false;
    if (this.baseImage) {
      ctx.drawImage(this.baseImage, 0, 0, canvas.width, canvas.height);
    }
    const frames = previewBoxes(state);
    const kf = keyframeAt(state, state.cursor);
    const boxes = frames[state.cursor] ?? [];
    boxes.forEach((b, k) => {
      ctx.strokeStyle = this.color(k);
      ctx.setLineDash(kf ? [] : [4, 3]); // dashed ghost between keyframes
      ctx.lineWidth = 2;
      ctx.globalAlpha = kf ? 1 : 0.6;
      ctx.strokeRect(b[0] * this.scale, b[1] * this.scale,
                     (b[2] - b[0]) * this.scale, (b[3] - b[1]) * this.scale);
      if (kf) {
        ctx.fillStyle = this.color(k);
        for (const [cx, cy] of [
          [b[0], b[1]], [b[2], b[1]], [b[2], b[3]], [b[0], b[3]],
        ]) {
          ctx.fillRect(cx * this.scale - HANDLE / 2, cy * this.scale - HANDLE / 2,
                       HANDLE, HANDLE);
        }
      }
    });
    ctx.globalAlpha = 1;
    ctx.setLineDash([]);
  }
}
