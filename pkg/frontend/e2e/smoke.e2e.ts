/** E2E smoke against a live service (spawned by e2e/run.mjs).
 *
 * Asserts the examiner workflow end to end: the identification screen ranks
 * the planted true mate first, drill-in lands on the pair-comparison screen,
 * all three encoder scores rendered there equal the service payload exactly,
 * and the heatmap overlay toggles.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";

import { JSDOM } from "jsdom";
import { beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { createApp } from "../src/main";
import { ENCODERS } from "../src/types";

const BASE = process.env.FORENSIRIS_E2E_BASE ?? "";
const DATA = process.env.FORENSIRIS_E2E_DATA ?? "";

function pngFile(name: string): File {
  const bytes = readFileSync(join(DATA, name));
  return new File([new Uint8Array(bytes)], name, { type: "image/png" });
}

let app: ReturnType<typeof createApp>;
let api: ApiClient;

beforeAll(() => {
  const dom = new JSDOM('<div id="app"></div>', { url: BASE });
  const g = globalThis as Record<string, unknown>;
  g.document = dom.window.document;
  g.window = dom.window;
  g.HTMLElement = dom.window.HTMLElement;
  g.Event = dom.window.Event;
  // Node's fetch/FormData/File stay in place (jsdom has no fetch); object
  // URLs are only used for local previews, so a stub suffices.
  (URL as unknown as Record<string, unknown>).createObjectURL = () => "blob:e2e";
  (URL as unknown as Record<string, unknown>).revokeObjectURL = () => undefined;

  api = new ApiClient(BASE);
  app = createApp(document.getElementById("app")!, api);
});

// full-pipeline calls against a real service need generous timeouts
const SLOW = 120_000;

describe("examiner workbench against the live service", () => {
  it("identification ranks the planted true mate at rank 1", { timeout: SLOW }, async () => {
    app.show("identify");
    await app.identify.setUploadedQuery(
      (await api.uploadImage(pngFile("S000-L-3.png"), "S000-L-3.png")).image_id);
    const rows = document.querySelectorAll<HTMLElement>(".candidate-row");
    expect(rows.length).toBeGreaterThan(0);
    // gallery holds captures 1 and 2 of each identity; the query is the
    // unenrolled capture 3 of identity S000
    expect(rows[0].dataset.sampleId).toMatch(/^S000-L-/);
    const topScore = Number(
      rows[0].querySelector<HTMLElement>(".candidate-score")!.dataset.raw);
    const nextForeign = Array.from(rows).find(
      (row) => !row.dataset.sampleId!.startsWith("S000"));
    expect(topScore).toBeLessThan(0.3);
    if (nextForeign) {
      const foreignScore = Number(
        nextForeign.querySelector<HTMLElement>(".candidate-score")!.dataset.raw);
      expect(topScore).toBeLessThan(foreignScore);
    }
  });

  it("drill-in shows all three encoder scores equal to the service payload", { timeout: SLOW }, async () => {
    const mate = document.querySelector<HTMLElement>(".candidate-row")!;
    const mateId = mate.dataset.sampleId!;
    mate.querySelector<HTMLButtonElement>("button.drill-in")!.click();
    await new Promise((resolve) => setTimeout(resolve, 50));
    expect(document.querySelector<HTMLElement>(".compare-screen")!.style.display)
      .toBe("");
    expect(document.querySelector("#slot-b h3")!.textContent).toContain(mateId);

    await app.compare.setSlotFile("b", pngFile(`${mateId}.png`));

    const cards = document.querySelectorAll<HTMLElement>(".score-card:not(.loading)");
    expect(cards.length).toBe(3);

    // cross-check every displayed score against a direct service call
    const idA = document.querySelector("#image-id-a")!.textContent!;
    const idB = document.querySelector("#image-id-b")!.textContent!;
    const direct = await api.compare(idA, idB, ENCODERS);
    for (const encoder of ENCODERS) {
      const card = document.querySelector<HTMLElement>(
        `.score-card[data-encoder="${encoder}"]`)!;
      const shown = card.querySelector<HTMLElement>(".score-value")!.dataset.score;
      expect(shown).toBe(String(direct.results[encoder]!.score));
    }
  });

  it("heatmap overlay toggles on and off", { timeout: SLOW }, async () => {
    const toggle = document.querySelector<HTMLInputElement>("#overlay-toggle")!;
    expect(document.querySelector("#polar-stack")).toBeNull();
    toggle.checked = true;
    toggle.dispatchEvent(new Event("change"));
    const stack = document.querySelector("#polar-stack")!;
    expect(stack).not.toBeNull();
    const heat = stack.querySelector<HTMLImageElement>(".polar-heat")!;
    expect(heat.src).toContain("/v1/heatmap/");
    const png = await fetch(heat.src);
    expect(png.status).toBe(200);
    expect((await png.arrayBuffer()).byteLength).toBeGreaterThan(8);
    toggle.checked = false;
    toggle.dispatchEvent(new Event("change"));
    expect(document.querySelector("#polar-stack")).toBeNull();
  });
});
