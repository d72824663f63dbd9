/** Identification screen: upload a query image, pick an encoder, get the
 * ranked candidate table; each row drills into the pair-comparison screen
 * with the query preloaded. */

import { ApiClient, ServiceError } from "./api";
import type { Candidate, EncoderId } from "./types";
import { ENCODERS } from "./types";
import { el, errorBanner } from "./widgets";

export class IdentifyScreen {
  readonly root: HTMLElement;
  private imageId: string | null = null;
  private controller = new AbortController();
  private errorHost = el("div");
  private tableHost = el("div", "candidate-host");
  private encoderSelect: HTMLSelectElement;
  private kInput: HTMLInputElement;

  constructor(
    private api: ApiClient,
    private onDrillIn: (queryImageId: string, candidate: Candidate) => void,
  ) {
    this.root = el("section", "screen identify-screen");

    const controls = el("div", "identify-controls");
    const input = el("input") as HTMLInputElement;
    input.type = "file";
    input.accept = "image/png,.pgm";
    input.id = "identify-file";
    input.addEventListener("change", () => {
      const file = input.files?.[0];
      if (file) void this.setQuery(file);
    });

    this.encoderSelect = el("select") as HTMLSelectElement;
    this.encoderSelect.id = "identify-encoder";
    for (const encoder of ENCODERS) {
      const opt = el("option", undefined, encoder) as HTMLOptionElement;
      opt.value = encoder;
      this.encoderSelect.append(opt);
    }
    this.encoderSelect.value = "bif";
    this.encoderSelect.addEventListener("change", () => void this.search());

    this.kInput = el("input") as HTMLInputElement;
    this.kInput.type = "number";
    this.kInput.min = "1";
    this.kInput.value = "10";
    this.kInput.id = "identify-k";
    this.kInput.addEventListener("change", () => void this.search());

    controls.append(input, this.encoderSelect, this.kInput);
    this.root.append(controls, this.errorHost, this.tableHost);
  }

  async setQuery(file: File): Promise<void> {
    try {
      const uploaded = await this.api.uploadImage(file, file.name,
                                                  this.controller.signal);
      this.imageId = uploaded.image_id;
      await this.search();
    } catch (err) {
      this.showError(err, () => void this.setQuery(file));
    }
  }

  async setUploadedQuery(imageId: string): Promise<void> {
    this.imageId = imageId;
    await this.search();
  }

  async search(): Promise<void> {
    if (!this.imageId) return;
    this.errorHost.replaceChildren();
    const encoder = this.encoderSelect.value as EncoderId;
    const k = Math.max(1, Number(this.kInput.value) || 10);
    try {
      const response = await this.api.identify(this.imageId, encoder, k,
                                               this.controller.signal);
      this.renderTable(response.candidates, response.ftm, response.skipped);
    } catch (err) {
      if ((err as Error).name === "AbortError") return;
      this.showError(err, () => void this.search());
    }
  }

  private renderTable(candidates: Candidate[], ftm: boolean, skipped: number): void {
    this.tableHost.replaceChildren();
    if (ftm) {
      this.tableHost.append(el("p", "badge badge-ftm", "FTM: query not usable"));
      return;
    }
    if (!candidates.length) {
      this.tableHost.append(el("p", "muted", "gallery returned no candidates"));
      return;
    }
    const table = el("table", "candidate-table");
    const head = el("tr");
    for (const col of ["rank", "score", "sample", "subject", "eye", ""]) {
      head.append(el("th", undefined, col));
    }
    table.append(head);
    candidates.forEach((candidate, index) => {
      const row = el("tr", "candidate-row");
      row.dataset.sampleId = candidate.sample_id;
      row.append(el("td", undefined, String(index + 1)));
      const scoreCell = el("td", "candidate-score", candidate.score.toFixed(3));
      scoreCell.dataset.raw = String(candidate.score);
      row.append(scoreCell);
      row.append(el("td", undefined, candidate.sample_id));
      row.append(el("td", undefined, candidate.subject_id));
      row.append(el("td", undefined, candidate.eye));
      const drillCell = el("td");
      const drill = el("button", "drill-in", "compare");
      drill.addEventListener("click", () => {
        if (this.imageId) this.onDrillIn(this.imageId, candidate);
      });
      drillCell.append(drill);
      row.append(drillCell);
      table.append(row);
    });
    if (skipped > 0) {
      this.tableHost.append(
        el("p", "muted", `${skipped} gallery entries skipped (incompatible or unscorable)`));
    }
    this.tableHost.append(table);
  }

  private showError(err: unknown, retry: () => void): void {
    const message = err instanceof ServiceError
      ? `${err.errorCode}: ${err.message}`
      : `service unreachable: ${(err as Error).message}`;
    this.errorHost.replaceChildren(errorBanner(message, retry));
  }

  leave(): void {
    this.controller.abort();
    this.controller = new AbortController();
  }
}
