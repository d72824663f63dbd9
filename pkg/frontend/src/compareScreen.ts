/** Pair-comparison screen: two image slots, per-encoder score cards with
 * FTM badges, and a toggleable similarity-heatmap overlay on the probe's
 * rubber-sheet view. Encoders can be toggled on and off; results already
 * fetched come from the cache. */

import { ApiClient, ServiceError } from "./api";
import { CompareStore } from "./store";
import type { EncoderId } from "./types";
import { ENCODERS } from "./types";
import { el, errorBanner, loadingCard, qualityPanel, scoreCard } from "./widgets";

interface Slot {
  imageId: string | null;
  objectUrl: string | null;
  label: string;
}

export class CompareScreen {
  readonly root: HTMLElement;
  private store: CompareStore;
  private slots: { a: Slot; b: Slot } = {
    a: { imageId: null, objectUrl: null, label: "probe" },
    b: { imageId: null, objectUrl: null, label: "candidate" },
  };
  private enabled = new Set<EncoderId>(ENCODERS);
  private overlayOn = false;
  private errorHost = el("div");
  private resultsHost = el("div", "score-row");
  private qualityHost = el("div", "quality-host");
  private overlayHost = el("div", "overlay-host");

  constructor(private api: ApiClient) {
    this.store = new CompareStore(api);
    this.root = el("section", "screen compare-screen");
    this.build();
  }

  private build(): void {
    const uploads = el("div", "upload-row");
    uploads.append(this.uploadBox("a"), this.uploadBox("b"));
    this.root.append(uploads);

    const toggles = el("div", "encoder-toggles");
    for (const encoder of ENCODERS) {
      const label = el("label", "encoder-toggle");
      const box = el("input") as HTMLInputElement;
      box.type = "checkbox";
      box.checked = true;
      box.dataset.encoder = encoder;
      box.addEventListener("change", () => {
        if (box.checked) this.enabled.add(encoder);
        else this.enabled.delete(encoder);
        void this.refresh();
      });
      label.append(box, document.createTextNode(encoder));
      toggles.append(label);
    }
    const overlayLabel = el("label", "overlay-toggle");
    const overlayBox = el("input") as HTMLInputElement;
    overlayBox.type = "checkbox";
    overlayBox.id = "overlay-toggle";
    overlayBox.addEventListener("change", () => {
      this.overlayOn = overlayBox.checked;
      this.renderOverlay();
    });
    overlayLabel.append(overlayBox, document.createTextNode("heatmap overlay"));
    toggles.append(overlayLabel);
    this.root.append(toggles);

    this.root.append(this.errorHost, this.resultsHost, this.overlayHost,
                     this.qualityHost);
  }

  private uploadBox(which: "a" | "b"): HTMLElement {
    const slot = this.slots[which];
    const box = el("div", "upload-box");
    box.id = `slot-${which}`;
    const title = el("h3", undefined, slot.label);
    const img = el("img", "slot-preview") as HTMLImageElement;
    img.id = `preview-${which}`;
    img.alt = `${slot.label} image`;
    const input = el("input") as HTMLInputElement;
    input.type = "file";
    input.accept = "image/png,.pgm";
    input.id = `file-${which}`;
    input.addEventListener("change", () => {
      const file = input.files?.[0];
      if (file) void this.setSlotFile(which, file);
    });
    const idLine = el("div", "image-id muted");
    idLine.id = `image-id-${which}`;
    box.append(title, img, input, idLine);
    return box;
  }

  async setSlotFile(which: "a" | "b", file: File): Promise<void> {
    const slot = this.slots[which];
    try {
      const uploaded = await this.api.uploadImage(file, file.name);
      slot.imageId = uploaded.image_id;
      if (slot.objectUrl) URL.revokeObjectURL(slot.objectUrl);
      slot.objectUrl = URL.createObjectURL(file);
      const preview = this.root.querySelector<HTMLImageElement>(`#preview-${which}`);
      if (preview) preview.src = slot.objectUrl;
      const idLine = this.root.querySelector(`#image-id-${which}`);
      if (idLine) idLine.textContent = uploaded.image_id;
      await this.refresh();
    } catch (err) {
      this.showError(err, () => void this.setSlotFile(which, file));
    }
  }

  /** Pre-label the candidate slot from the identification screen. */
  expectCandidate(sampleId: string): void {
    const title = this.root.querySelector("#slot-b h3");
    if (title) title.textContent = `candidate (${sampleId}: choose its image file)`;
  }

  async setUploadedProbe(imageId: string): Promise<void> {
    this.slots.a.imageId = imageId;
    const preview = this.root.querySelector<HTMLImageElement>("#preview-a");
    if (preview) preview.src = this.api.polarUrl(imageId);
    const idLine = this.root.querySelector("#image-id-a");
    if (idLine) idLine.textContent = imageId;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const { a, b } = this.slots;
    this.errorHost.replaceChildren();
    this.renderCards();
    if (!a.imageId || !b.imageId) return;
    const wanted = ENCODERS.filter((e) => this.enabled.has(e));
    try {
      await this.store.ensure(a.imageId, b.imageId, wanted);
    } catch (err) {
      if ((err as Error).name === "AbortError") return;
      this.showError(err, () => void this.refresh());
      return;
    }
    this.renderCards();
    this.renderOverlay();
    this.renderQuality();
  }

  private renderCards(): void {
    const { a, b } = this.slots;
    this.resultsHost.replaceChildren();
    if (!a.imageId || !b.imageId) return;
    for (const encoder of ENCODERS) {
      if (!this.enabled.has(encoder)) continue;
      const hit = this.store.cached(a.imageId, b.imageId, encoder);
      this.resultsHost.append(hit ? scoreCard(encoder, hit.result)
                                  : loadingCard(encoder));
    }
  }

  private renderOverlay(): void {
    const { a, b } = this.slots;
    this.overlayHost.replaceChildren();
    if (!this.overlayOn || !a.imageId || !b.imageId) return;
    const wrap = el("div", "polar-stack");
    wrap.id = "polar-stack";
    const base = el("img", "polar-base") as HTMLImageElement;
    base.src = this.api.polarUrl(a.imageId);
    base.alt = "probe, rubber-sheet view";
    wrap.append(base);
    for (const encoder of ENCODERS) {
      if (!this.enabled.has(encoder)) continue;
      const hit = this.store.cached(a.imageId, b.imageId, encoder);
      const url = hit?.result.heatmap_url;
      if (!url) continue;
      const layer = el("img", "polar-heat") as HTMLImageElement;
      layer.src = this.api.heatmapUrl(url);
      layer.dataset.encoder = encoder;
      layer.alt = `${encoder} similarity heatmap`;
      wrap.append(layer);
      break; // one overlay at a time: the first enabled encoder
    }
    this.overlayHost.append(wrap);
  }

  private renderQuality(): void {
    this.qualityHost.replaceChildren(
      qualityPanel("probe quality", this.store.qualityA),
      qualityPanel("candidate quality", this.store.qualityB),
    );
  }

  private showError(err: unknown, retry: () => void): void {
    const message = err instanceof ServiceError
      ? `${err.errorCode}: ${err.message}`
      : `service unreachable: ${(err as Error).message}`;
    this.errorHost.replaceChildren(errorBanner(message, retry));
  }

  leave(): void {
    this.store.cancel();
  }

  /** test/e2e hook */
  get networkRequests(): number {
    return this.store.requestCount;
  }
}
