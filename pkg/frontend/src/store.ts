/** Per-encoder comparison cache.
 *
 * Each encoder's result is fetched with its own request so encoders stream
 * in independently; results are cached by (imageA, imageB, encoder) and
 * toggling an encoder back on never refetches a result we already hold.
 * All in-flight requests share one AbortController per store, cancelled on
 * navigation.
 */

import { ApiClient } from "./api";
import type { CompareResponse, EncoderId, EncoderResult, QualityRecord } from "./types";

export interface PairResult {
  encoder: EncoderId;
  result: EncoderResult;
  comparisonId: string;
}

type Listener = () => void;

export class CompareStore {
  private cache = new Map<string, PairResult>();
  private pending = new Map<string, Promise<PairResult>>();
  private controller = new AbortController();
  private listeners: Listener[] = [];
  qualityA: QualityRecord | null = null;
  qualityB: QualityRecord | null = null;
  requestCount = 0;

  constructor(private api: ApiClient) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  private key(a: string, b: string, encoder: EncoderId): string {
    return `${a}|${b}|${encoder}`;
  }

  cached(a: string, b: string, encoder: EncoderId): PairResult | undefined {
    return this.cache.get(this.key(a, b, encoder));
  }

  /** Fetch results for the requested encoders, skipping any already cached
   * or in flight. Resolves when every requested encoder has settled. */
  async ensure(a: string, b: string, encoders: EncoderId[]): Promise<PairResult[]> {
    const waits: Promise<PairResult>[] = [];
    for (const encoder of encoders) {
      const key = this.key(a, b, encoder);
      const hit = this.cache.get(key);
      if (hit) {
        waits.push(Promise.resolve(hit));
        continue;
      }
      const inFlight = this.pending.get(key);
      if (inFlight) {
        waits.push(inFlight);
        continue;
      }
      const request = this.fetchOne(a, b, encoder, key);
      this.pending.set(key, request);
      waits.push(request);
    }
    return Promise.all(waits);
  }

  private async fetchOne(
    a: string,
    b: string,
    encoder: EncoderId,
    key: string,
  ): Promise<PairResult> {
    this.requestCount += 1;
    try {
      const response: CompareResponse = await this.api.compare(
        a, b, [encoder], this.controller.signal);
      const entry: PairResult = {
        encoder,
        result: response.results[encoder]!,
        comparisonId: response.comparison_id,
      };
      this.cache.set(key, entry);
      this.qualityA = response.quality_a;
      this.qualityB = response.quality_b;
      this.notify();
      return entry;
    } finally {
      this.pending.delete(key);
    }
  }

  /** Cancel everything in flight (navigation away from the screen). */
  cancel(): void {
    this.controller.abort();
    this.controller = new AbortController();
    this.pending.clear();
  }
}
