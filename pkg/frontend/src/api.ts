/** Typed client for the generation service HTTP API. */

import type { Box, Keyframe } from "./interpolate.js";

export interface SceneInfo {
  id: string;
  num_objects: number;
  num_frames: number;
  height: number;
  width: number;
  palette: number[][];
  first_frame_png: string;
  initial_boxes: number[][][];
}

export interface ServiceConfig {
  checkpoint_hashes: Record<string, string>;
  default_steps: number;
  adapter_kind: string | null;
  scene_shape: { num_frames: number; height: number; width: number };
  has_slow: boolean;
}

export interface GenerateRequest {
  scene_id: string;
  keyframes: Keyframe[];
  steps?: number;
  seed: number;
  generator: "fast" | "slow";
  self_check?: boolean;
}

export interface GenerateResponse {
  frames_png: string[];
  per_frame_boxes: Box[][];
  wall_time_ms: number;
  steps: number;
  generator: "fast" | "slow";
  seed: number;
  self_check_box_iou?: number | null;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function parseError(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, detail);
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string; ready: boolean; queue_depth: number }> {
    return this.get("/api/health");
  }

  config(): Promise<ServiceConfig> {
    return this.get("/api/config");
  }

  async scenes(): Promise<SceneInfo[]> {
    const body = await this.get<{ scenes: SceneInfo[] }>("/api/scenes");
    return body.scenes;
  }

  async generate(req: GenerateRequest): Promise<GenerateResponse> {
    const resp = await fetch(this.baseUrl + "/api/generate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as GenerateResponse;
  }
}
