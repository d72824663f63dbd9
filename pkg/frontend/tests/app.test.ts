/** Shell-level tests: tab navigation and in-flight cancellation. */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { createApp } from "../src/main";
import { installMockService, type MockService } from "./mockService";

let mock: MockService;

beforeEach(() => {
  mock = installMockService();
  vi.stubGlobal("URL", Object.assign(URL, {
    createObjectURL: () => "blob:mock",
    revokeObjectURL: () => undefined,
  }));
  document.body.innerHTML = '<div id="app"></div>';
});

afterEach(() => mock.restore());

describe("application shell", () => {
  it("mounts both screens and starts on pair comparison", async () => {
    const app = createApp(document.getElementById("app")!, new ApiClient(""));
    expect(document.querySelector(".compare-screen")).not.toBeNull();
    expect(document.querySelector(".identify-screen")).not.toBeNull();
    const identify = document.querySelector<HTMLElement>(".identify-screen")!;
    expect(identify.style.display).toBe("none");
    app.show("identify");
    expect(identify.style.display).toBe("");
  });

  it("reports service health in the header", async () => {
    createApp(document.getElementById("app")!, new ApiClient(""));
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(document.querySelector("#service-status")!.textContent)
      .toContain("service test");
  });

  it("drill-in navigates to comparison with the candidate slot labeled", async () => {
    const app = createApp(document.getElementById("app")!, new ApiClient(""));
    app.show("identify");
    await app.identify.setQuery(new File([new Uint8Array(4)], "q.png"));
    document.querySelector<HTMLButtonElement>(
      '.candidate-row[data-sample-id="S001-L-2"] button.drill-in')!.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    const compare = document.querySelector<HTMLElement>(".compare-screen")!;
    expect(compare.style.display).toBe("");
    expect(document.querySelector("#slot-b h3")!.textContent)
      .toContain("S001-L-2");
  });
});
