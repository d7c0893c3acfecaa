import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ServiceError, TryonClient, friendlyMessage } from "../src/api.js";
import { Store, compareMixesPersons } from "../src/state.js";
import { TryonApp } from "../src/ui.js";

const CATALOG = {
  persons: [
    { id: "toy-0", thumb: "aGk=" },
    { id: "toy-10", thumb: "aGk=" },
  ],
  garments: [
    { id: "toy-0", thumb: "aGk=" },
    { id: "toy-10", thumb: "aGk=" },
  ],
};

function tryonResult(personId: string, garmentId: string) {
  return {
    person_id: personId,
    garment_id: garmentId,
    result_png: "aGk=",
    seg_png: "aGk=",
    warped_png: "aGk=",
    timing_ms: 42.0,
  };
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app")!;
});

afterEach(() => {
  vi.restoreAllMocks();
});

function makeApp(): TryonApp {
  return new TryonApp(root, new TryonClient(""));
}

describe("catalog", () => {
  it("renders person and garment thumbnails", async () => {
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(jsonResponse(CATALOG)));
    const app = makeApp();
    await app.loadCatalog();
    expect(root.querySelectorAll(".grid-person .thumb")).toHaveLength(2);
    expect(root.querySelectorAll(".grid-garment .thumb")).toHaveLength(2);
  });

  it("shows an error banner with retry when the catalog fails, then recovers", async () => {
    const fetchMock = vi
      .fn()
      .mockRejectedValueOnce(new Error("network down"))
      .mockResolvedValueOnce(jsonResponse(CATALOG));
    vi.stubGlobal("fetch", fetchMock);
    const app = makeApp();
    await app.loadCatalog();
    const banner = root.querySelector(".error-banner");
    expect(banner?.textContent).toContain("network down");
    (root.querySelector(".retry-button") as HTMLButtonElement).click();
    await vi.waitFor(() =>
      expect(root.querySelectorAll(".thumb").length).toBeGreaterThan(0),
    );
  });
});

describe("try-on submission", () => {
  it("appends each successful result to the history", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValueOnce(jsonResponse(CATALOG))
      .mockResolvedValueOnce(jsonResponse(tryonResult("toy-0", "toy-10")))
      .mockResolvedValueOnce(jsonResponse(tryonResult("toy-0", "toy-0")));
    vi.stubGlobal("fetch", fetchMock);
    const app = makeApp();
    await app.loadCatalog();
    app.getStore().update({ selectedPerson: "toy-0", selectedGarment: "toy-10" });
    await app.submitTryon();
    app.getStore().update({ selectedGarment: "toy-0" });
    await app.submitTryon();
    expect(app.getStore().get().history).toHaveLength(2);
    expect(root.querySelectorAll(".result-card")).toHaveLength(2);
  });

  it("translates a 422 empty-region error into readable text", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValueOnce(jsonResponse(CATALOG))
      .mockResolvedValueOnce(
        jsonResponse(
          { detail: { code: "empty_target_region", message: "no pixels" } },
          422,
        ),
      );
    vi.stubGlobal("fetch", fetchMock);
    const app = makeApp();
    await app.loadCatalog();
    app.getStore().update({ selectedPerson: "toy-0", selectedGarment: "toy-10" });
    await app.submitTryon();
    const banner = root.querySelector(".controls .error-banner");
    expect(banner?.textContent).toMatch(/no transferable clothing region/i);
    expect(banner?.textContent).not.toContain("422");
    expect(app.getStore().get().history).toHaveLength(0);
  });

  it("allows only one request in flight", async () => {
    let release: (r: Response) => void = () => {};
    const pending = new Promise<Response>((resolve) => (release = resolve));
    const fetchMock = vi
      .fn()
      .mockResolvedValueOnce(jsonResponse(CATALOG))
      .mockReturnValueOnce(pending);
    vi.stubGlobal("fetch", fetchMock);
    const app = makeApp();
    await app.loadCatalog();
    app.getStore().update({ selectedPerson: "toy-0", selectedGarment: "toy-10" });
    const first = app.submitTryon();
    await app.submitTryon(); // ignored while the first is pending
    expect(fetchMock).toHaveBeenCalledTimes(2); // catalog + one tryon
    const button = root.querySelector(".tryon-button") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    release(jsonResponse(tryonResult("toy-0", "toy-10")));
    await first;
    expect(app.getStore().get().history).toHaveLength(1);
  });

  it("toggles debug views of the intermediates", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValueOnce(jsonResponse(CATALOG))
      .mockResolvedValueOnce(jsonResponse(tryonResult("toy-0", "toy-10")));
    vi.stubGlobal("fetch", fetchMock);
    const app = makeApp();
    await app.loadCatalog();
    app.getStore().update({ selectedPerson: "toy-0", selectedGarment: "toy-10" });
    await app.submitTryon();
    expect(root.querySelector(".debug-views")).toBeNull();
    app.getStore().update({ showDebug: true });
    expect(root.querySelectorAll(".debug-views img")).toHaveLength(2);
  });
});

describe("compare view", () => {
  it("flags comparisons that mix persons", () => {
    const store = new Store();
    store.appendHistory(tryonResult("toy-0", "toy-10"));
    store.appendHistory(tryonResult("toy-10", "toy-20"));
    expect(compareMixesPersons(store.get().history)).toBe(true);
  });

  it("shows the warning badge in the DOM", async () => {
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(jsonResponse(CATALOG)));
    const app = makeApp();
    await app.loadCatalog();
    app.getStore().appendHistory(tryonResult("toy-0", "toy-10"));
    expect(root.querySelector(".warning-badge")).toBeNull();
    app.getStore().appendHistory(tryonResult("toy-10", "toy-20"));
    expect(root.querySelector(".warning-badge")?.textContent).toMatch(
      /different persons/i,
    );
  });
});

describe("error mapping", () => {
  it("keeps unknown codes visible", () => {
    const err = new ServiceError("weird_code", "something odd", 500);
    expect(friendlyMessage(err)).toContain("weird_code");
  });
});
