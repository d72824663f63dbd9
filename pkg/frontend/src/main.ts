/** Application shell: tab navigation between the pair-comparison and
 * identification screens, sharing one API client. Navigating away from a
 * screen cancels its in-flight requests. */

import { ApiClient } from "./api";
import { CompareScreen } from "./compareScreen";
import { IdentifyScreen } from "./identifyScreen";
import "./style.css";

export function createApp(root: HTMLElement, api: ApiClient = new ApiClient()) {
  const header = document.createElement("header");
  header.innerHTML = `
    <h1>forensiris examiner workbench</h1>
    <nav>
      <button id="tab-compare" class="tab active">pair comparison</button>
      <button id="tab-identify" class="tab">identification</button>
    </nav>
    <span id="service-status" class="muted"></span>`;
  root.append(header);

  const compare = new CompareScreen(api);
  const identify = new IdentifyScreen(api, (queryImageId, candidate) => {
    void compare.setUploadedProbe(queryImageId);
    compare.expectCandidate(candidate.sample_id);
    show("compare");
  });
  root.append(compare.root, identify.root);

  const tabs = {
    compare: root.querySelector<HTMLButtonElement>("#tab-compare")!,
    identify: root.querySelector<HTMLButtonElement>("#tab-identify")!,
  };

  function show(which: "compare" | "identify"): void {
    const leaving = which === "compare" ? identify : compare;
    leaving.leave();
    compare.root.style.display = which === "compare" ? "" : "none";
    identify.root.style.display = which === "identify" ? "" : "none";
    tabs.compare.classList.toggle("active", which === "compare");
    tabs.identify.classList.toggle("active", which === "identify");
  }

  tabs.compare.addEventListener("click", () => show("compare"));
  tabs.identify.addEventListener("click", () => show("identify"));
  show("compare");

  const status = root.querySelector("#service-status")!;
  api.health()
    .then((h) => { status.textContent = `service ${h.version}`; })
    .catch(() => { status.textContent = "service unreachable"; });

  return { compare, identify, show };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  createApp(document.getElementById("app")!);
}
