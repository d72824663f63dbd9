/** Thin typed client for the /v1 service API. Every call accepts an
 * AbortSignal so screens can cancel in-flight work on navigation. */

import type {
  CompareResponse,
  EncoderId,
  IdentifyResponse,
  QualityRecord,
  UploadResponse,
} from "./types";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly errorCode: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let code = "error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && typeof body === "object") {
      code = body.error_code ?? code;
      message = body.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the status text
  }
  throw new ServiceError(response.status, code, message);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async health(signal?: AbortSignal): Promise<{ status: string; version: string }> {
    const r = await fetch(this.url("/v1/health"), { signal });
    if (!r.ok) return parseError(r);
    return r.json();
  }

  async uploadImage(file: Blob, name: string, signal?: AbortSignal): Promise<UploadResponse> {
    const form = new FormData();
    form.append("file", file, name);
    const r = await fetch(this.url("/v1/images"), {
      method: "POST",
      body: form,
      signal,
    });
    if (!r.ok) return parseError(r);
    return r.json();
  }

  async compare(
    imageIdA: string,
    imageIdB: string,
    encoders: EncoderId[],
    signal?: AbortSignal,
  ): Promise<CompareResponse> {
    const r = await fetch(this.url("/v1/compare"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        image_id_a: imageIdA,
        image_id_b: imageIdB,
        encoders,
      }),
      signal,
    });
    if (!r.ok) return parseError(r);
    return r.json();
  }

  async identify(
    imageId: string,
    encoder: EncoderId,
    k: number,
    signal?: AbortSignal,
  ): Promise<IdentifyResponse> {
    const r = await fetch(this.url("/v1/identify"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ image_id: imageId, encoder, k }),
      signal,
    });
    if (!r.ok) return parseError(r);
    return r.json();
  }

  async quality(imageId: string, signal?: AbortSignal): Promise<QualityRecord> {
    const r = await fetch(this.url(`/v1/quality/${imageId}`), { signal });
    if (!r.ok) return parseError(r);
    return r.json();
  }

  /** URL of the rubber-sheet view of an uploaded image (PNG). */
  polarUrl(imageId: string): string {
    return this.url(`/v1/polar/${imageId}`);
  }

  /** Absolute URL for a heatmap path returned by /v1/compare. */
  heatmapUrl(path: string): string {
    return path.startsWith("http") ? path : this.url(path);
  }
}
