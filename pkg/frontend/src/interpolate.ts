/**
 * Client-side keyframe box interpolation, the exact mirror of the server's
 * piecewise-linear interpolation. The parity contract (within 0.5 px of the
 * server's per_frame_boxes) is enforced by tests against server-generated
 * fixtures and, at runtime, by the consistency badge.
 */

/** A box as [xMin, yMin, xMax, yMax] in pixel coordinates (max exclusive). */
export type Box = [number, number, number, number];

export interface Keyframe {
  frame: number;
  /** One box per tracked object, in stable object order. */
  boxes: Box[];
}

export class KeyframeError extends Error {}

/** Validate a keyframe list for a clip of `numFrames` frames. */
export function validateKeyframes(keyframes: Keyframe[], numFrames: number): void {
  if (keyframes.length < 2) {
    throw new KeyframeError("need at least two keyframes");
  }
  if (keyframes[0].frame !== 0) {
    throw new KeyframeError("first keyframe must be at frame 0");
  }
  if (keyframes[keyframes.length - 1].frame !== numFrames - 1) {
    throw new KeyframeError(`last keyframe must be at frame ${numFrames - 1}`);
  }
  const count = keyframes[0].boxes.length;
  if (count === 0) {
    throw new KeyframeError("keyframes must contain at least one box");
  }
  let prev = -1;
  for (const kf of keyframes) {
    if (kf.frame <= prev) {
      throw new KeyframeError("keyframe frames must be strictly increasing");
    }
    prev = kf.frame;
    if (kf.boxes.length !== count) {
      throw new KeyframeError("every keyframe must carry the same number of boxes");
    }
    for (const b of kf.boxes) {
      if (b.length !== 4 || b[0] > b[2] || b[1] > b[3]) {
        throw new KeyframeError("boxes must be [xMin, yMin, xMax, yMax] with min <= max");
      }
    }
  }
}

/**
 * Piecewise-linear interpolation of boxes between keyframes.
 * Returns one box list per frame, shape [numFrames][numObjects][4].
 */
export function interpolateBoxes(keyframes: Keyframe[], numFrames: number): Box[][] {
  validateKeyframes(keyframes, numFrames);
  const numObjects = keyframes[0].boxes.length;
  const out: Box[][] = Array.from({ length: numFrames }, () =>
    Array.from({ length: numObjects }, () => [0, 0, 0, 0] as Box),
  );
  for (let seg = 0; seg < keyframes.length - 1; seg++) {
    const a = keyframes[seg];
    const b = keyframes[seg + 1];
    for (let frame = a.frame; frame <= b.frame; frame++) {
      const u = (frame - a.frame) / (b.frame - a.frame);
      for (let k = 0; k < numObjects; k++) {
        for (let c = 0; c < 4; c++) {
          out[frame][k][c] = a.boxes[k][c] + (b.boxes[k][c] - a.boxes[k][c]) * u;
        }
      }
    }
  }
  return out;
}

/** Largest per-coordinate deviation between two per-frame box grids. */
export function maxBoxDeviation(a: Box[][], b: Box[][]): number {
  let worst = 0;
  if (a.length !== b.length) return Infinity;
  for (let f = 0; f < a.length; f++) {
    if (a[f].length !== b[f].length) return Infinity;
    for (let k = 0; k < a[f].length; k++) {
      for (let c = 0; c < 4; c++) {
        worst = Math.max(worst, Math.abs(a[f][k][c] - b[f][k][c]));
      }
    }
  }
  return worst;
}
