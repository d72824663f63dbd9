/** Identification screen contract tests against the mocked /v1 service. */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { IdentifyScreen } from "../src/identifyScreen";
import type { Candidate } from "../src/types";
import { IDENTIFY_RESPONSE } from "./fixtures";
import { installMockService, type MockService } from "./mockService";

let mock: MockService;
let screen: IdentifyScreen;
let drills: { imageId: string; candidate: Candidate }[];

beforeEach(() => {
  mock = installMockService();
  drills = [];
  document.body.innerHTML = "";
  screen = new IdentifyScreen(new ApiClient(""), (imageId, candidate) => {
    drills.push({ imageId, candidate });
  });
  document.body.append(screen.root);
});

afterEach(() => mock.restore());

describe("identification screen", () => {
  it("renders the ranked candidate table exactly as returned", async () => {
    await screen.setQuery(new File([new Uint8Array(4)], "query.png"));
    const rows = document.querySelectorAll<HTMLElement>(".candidate-row");
    expect(rows.length).toBe(IDENTIFY_RESPONSE.candidates.length);
    IDENTIFY_RESPONSE.candidates.forEach((candidate, index) => {
      const row = rows[index];
      expect(row.dataset.sampleId).toBe(candidate.sample_id);
      const score = row.querySelector<HTMLElement>(".candidate-score")!;
      expect(score.dataset.raw).toBe(String(candidate.score));
      // rank column is 1-based position, straight from response order
      expect(row.querySelector("td")!.textContent).toBe(String(index + 1));
    });
    expect(document.body.textContent).toContain("1 gallery entries skipped");
  });

  it("drills into the comparison screen with query id and candidate", async () => {
    await screen.setQuery(new File([new Uint8Array(4)], "query.png"));
    const button = document.querySelector<HTMLButtonElement>(
      '.candidate-row[data-sample-id="S001-L-2"] button.drill-in')!;
    button.click();
    expect(drills.length).toBe(1);
    expect(drills[0].candidate.sample_id).toBe("S001-L-2");
    expect(drills[0].imageId).toBe(IDENTIFY_RESPONSE.image_id);
  });

  it("re-queries when the encoder changes", async () => {
    await screen.setQuery(new File([new Uint8Array(4)], "query.png"));
    const before = mock.calls.identify;
    const select = document.querySelector<HTMLSelectElement>("#identify-encoder")!;
    select.value = "gabor2d";
    select.dispatchEvent(new Event("change"));
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(mock.calls.identify).toBe(before + 1);
  });

  it("shows an inline error with retry when the service fails", async () => {
    mock.restore();
    vi.stubGlobal("fetch", async () => {
      throw new TypeError("connection refused");
    });
    await screen.setQuery(new File([new Uint8Array(4)], "query.png"));
    const banner = document.querySelector(".error-banner")!;
    expect(banner).not.toBeNull();
    expect(banner.querySelector("button.retry")).not.toBeNull();
  });
});
