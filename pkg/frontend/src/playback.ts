/**
 * Frame player for a generation response: renders the server-returned PNG
 * frames (the client never synthesizes pixels) with the requested-box
 * overlay, and supports play/pause plus external scrubbing.
 */

import type { Box } from "./interpolate.js";

export class FramePlayer {
  private ctx: CanvasRenderingContext2D;
  private images: HTMLImageElement[] = [];
  private boxes: Box[][] = [];
  private palette: number[][] = [];
  private timer: number | null = null;
  frame = 0;

  constructor(
    private canvas: HTMLCanvasElement,
    private onFrame: (frame: number) => void = () => {},
  ) {
    this.ctx = canvas.getContext("2d")!;
  }

  get length(): number {
    return this.images.length;
  }

  async load(framesPng: string[], boxes: Box[][], palette: number[][]): Promise<void> {
    this.stop();
    this.boxes = boxes;
    this.palette = palette;
    this.images = await Promise.all(
      framesPng.map(
        (b64) =>
          new Promise<HTMLImageElement>((resolve, reject) => {
            const img = new Image();
            img.onload = () => resolve(img);
            img.onerror = () => reject(new Error("bad frame image"));
            img.src = `data:image/png;base64,${b64}`;
          }),
      ),
    );
    this.seek(0);
  }

  seek(frame: number): void {
    if (this.images.length === 0) return;
    this.frame = Math.max(0, Math.min(frame, this.images.length - 1));
    this.render();
    this.onFrame(this.frame);
  }

  play(fps = 4): void {
    this.stop();
    this.timer = window.setInterval(() => {
      this.seek((this.frame + 1) % this.images.length);
    }, 1000 / fps);
  }

  stop(): void {
    if (this.timer !== null) {
      window.clearInterval(this.timer);
      this.timer = null;
    }
  }

  private render(): void {
    const img = this.images[this.frame];
    if (!img) return;
    const { canvas, ctx } = this;
    ctx.imageSmoothingEnabled = false;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.drawImage(img, 0, 0, canvas.width, canvas.height);
    const scale = canvas.width / img.width;
    const frameBoxes = this.boxes[this.frame] ?? [];
    frameBoxes.forEach((b, k) => {
      const col = this.palette[k] ?? [1, 1, 1];
      ctx.strokeStyle = `rgb(${Math.round(col[0] * 255)}, ${Math.round(col[1] * 255)}, ${Math.round(col[2] * 255)})`;
      ctx.lineWidth = 1.5;
      ctx.setLineDash([3, 2]);
      ctx.strokeRect(b[0] * scale, b[1] * scale,
                     (b[2] - b[0]) * scale, (b[3] - b[1]) * scale);
    });
    ctx.setLineDash([]);
  }
}
