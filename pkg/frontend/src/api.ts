import type {
  AbcRotation,
  Box2D,
  Camera,
  Dims,
  ImageLine,
  Point,
  PoseJson,
  ProjectResult,
  RotationSolveResult,
  TranslationSolveResult,
} from "./types.js";

interface Envelope<T> {
  ok: boolean;
  result?: T;
  error?: { code: string; message: string };
}

/** A solver-side failure (HTTP 4xx with an error envelope). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (
  url: string,
  init: { method: string; headers: Record<string, string>; body: string; signal?: AbortSignal },
) => Promise<{ status: number; json(): Promise<unknown> }>;

/**
 * Thin JSON client for the pose service.  Every call posts a body and
 * unwraps the {ok, result|error} envelope; the UI never computes pose
 * quantities itself.
 */
export class PoseApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    const envelope = (await resp.json()) as Envelope<T>;
    if (!envelope.ok || envelope.result === undefined) {
      const err = envelope.error ?? { code: "unknown", message: "unknown service error" };
      throw new ApiError(resp.status, err.code, err.message);
    }
    return envelope.result;
  }

  solveRotation(
    body: {
      camera: Camera;
      axes: { dir: [number, number, number]; line: ImageLine }[];
      init?: AbcRotation;
    },
    signal?: AbortSignal,
  ): Promise<RotationSolveResult> {
    return this.post("/solve/rotation", body, signal);
  }

  solveTranslation(
    body: {
      camera: Camera;
      rotation: number[];
      box: Box2D;
      dims: Dims;
    },
    signal?: AbortSignal,
  ): Promise<TranslationSolveResult> {
    return this.post("/solve/translation", body, signal);
  }

  project(
    body: { camera: Camera; pose: PoseJson; dims: Dims },
    signal?: AbortSignal,
  ): Promise<ProjectResult> {
    return this.post("/project", body, signal);
  }
}

export type { Point };
