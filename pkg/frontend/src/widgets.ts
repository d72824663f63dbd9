/** Small DOM builders shared by the screens. Values coming from the
 * service are rendered as-is (toFixed for display only). */

import type { EncoderResult, QualityRecord } from "./types";
import { QUALITY_KEYS, QUALITY_RANGES } from "./types";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function scoreCard(encoder: string, result: EncoderResult): HTMLElement {
  const card = el("div", "score-card");
  card.dataset.encoder = encoder;
  card.append(el("div", "encoder-name", encoder));
  if (result.ftm) {
    const badge = el("span", "badge badge-ftm", "FTM");
    badge.title = "failure to match: no usable template for this pair";
    card.append(badge);
  } else {
    const score = el("div", "score-value", result.score!.toFixed(3));
    score.dataset.score = String(result.score);
    card.append(score);
    card.append(el("div", "score-shift", `shift ${result.best_shift}`));
  }
  return card;
}

export function loadingCard(encoder: string): HTMLElement {
  const card = el("div", "score-card loading");
  card.dataset.encoder = encoder;
  card.append(el("div", "encoder-name", encoder));
  card.append(el("div", "score-value", "…"));
  return card;
}

/** The seven metrics with range bars; numbers are the raw payload values. */
export function qualityPanel(title: string, record: QualityRecord | null): HTMLElement {
  const panel = el("div", "quality-panel");
  panel.append(el("h3", undefined, title));
  if (!record) {
    panel.append(el("p", "muted", "quality unavailable for this image"));
    return panel;
  }
  const table = el("div", "quality-rows");
  for (const key of QUALITY_KEYS) {
    const value = record[key];
    const row = el("div", "quality-row");
    row.dataset.metric = key;
    row.append(el("span", "metric-name", key));
    const bar = el("div", "range-bar");
    const fill = el("div", "range-fill");
    if (value !== null) {
      const [lo, hi] = QUALITY_RANGES[key];
      const frac = Math.min(Math.max((value - lo) / (hi - lo), 0), 1);
      fill.style.width = `${(frac * 100).toFixed(1)}%`;
    } else {
      fill.classList.add("absent");
    }
    bar.append(fill);
    row.append(bar);
    const shown = value === null ? "n/a" : Number(value).toFixed(2);
    const cell = el("span", "metric-value", shown);
    cell.dataset.raw = value === null ? "" : String(value);
    row.append(cell);
    table.append(row);
  }
  panel.append(table);
  return panel;
}

export function errorBanner(message: string, onRetry?: () => void): HTMLElement {
  const banner = el("div", "error-banner");
  banner.append(el("span", undefined, message));
  if (onRetry) {
    const retry = el("button", "retry", "retry");
    retry.addEventListener("click", onRetry);
    banner.append(retry);
  }
  return banner;
}
