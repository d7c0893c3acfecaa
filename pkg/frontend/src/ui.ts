import { TryonClient, friendlyMessage } from "./api.js";
import { SessionState, Store, compareMixesPersons } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function pngImg(b64: string, alt: string): HTMLImageElement {
  const img = el("img");
  img.src = `data:image/png;base64,${b64}`;
  img.alt = alt;
  return img;
}

/** Wires the store, the API client, and the DOM under `root` together. */
export class TryonApp {
  constructor(
    private root: HTMLElement,
    private client: TryonClient,
    private store: Store = new Store(),
  ) {
    this.store.subscribe(() => this.render());
  }

  getStore(): Store {
    return this.store;
  }

  async loadCatalog(): Promise<void> {
    this.store.update({ catalogError: null });
    try {
      const catalog = await this.client.getCatalog();
      this.store.update({ catalog });
    } catch (err) {
      this.store.update({ catalog: null, catalogError: friendlyMessage(err) });
    }
  }

  async submitTryon(): Promise<void> {
    const s = this.store.get();
    // one request at a time; the button is disabled but guard anyway
    if (s.inFlight || !s.selectedPerson || !s.selectedGarment) return;
    this.store.update({ inFlight: true, tryonError: null });
    try {
      const result = await this.client.tryon(s.selectedPerson, s.selectedGarment);
      this.store.appendHistory(result);
    } catch (err) {
      this.store.update({ tryonError: friendlyMessage(err) });
    } finally {
      this.store.update({ inFlight: false });
    }
  }

  render(): void {
    const s = this.store.get();
    this.root.innerHTML = "";
    this.root.append(
      this.renderCatalogPane(s),
      this.renderControls(s),
      this.renderResults(s),
    );
  }

  private renderCatalogPane(s: SessionState): HTMLElement {
    const pane = el("div", "catalog-pane");
    if (s.catalogError !== null) {
      const banner = el("div", "error-banner", s.catalogError);
      const retry = el("button", "retry-button", "Retry");
      retry.addEventListener("click", () => void this.loadCatalog());
      banner.append(retry);
      pane.append(banner);
      return pane;
    }
    if (s.catalog === null) {
      pane.append(el("div", "loading", "Loading catalog..."));
      return pane;
    }
    pane.append(
      this.renderGrid("Person", s.catalog.persons, s.selectedPerson, (id) =>
        this.store.update({ selectedPerson: id }),
      ),
      this.renderGrid("Garment", s.catalog.garments, s.selectedGarment, (id) =>
        this.store.update({ selectedGarment: id }),
      ),
    );
    return pane;
  }

  private renderGrid(
    title: string,
    entries: { id: string; thumb: string }[],
    selected: string | null,
    onPick: (id: string) => void,
  ): HTMLElement {
    const box = el("div", `grid grid-${title.toLowerCase()}`);
    box.append(el("h2", undefined, title));
    for (const entry of entries) {
      const cell = el("button", "thumb" + (entry.id === selected ? " selected" : ""));
      cell.dataset.id = entry.id;
      cell.append(pngImg(entry.thumb, `${title} ${entry.id}`));
      cell.addEventListener("click", () => onPick(entry.id));
      box.append(cell);
    }
    return box;
  }

  private renderControls(s: SessionState): HTMLElement {
    const bar = el("div", "controls");
    const submit = el("button", "tryon-button", s.inFlight ? "Working..." : "Try on");
    submit.disabled = s.inFlight || !s.selectedPerson || !s.selectedGarment;
    submit.addEventListener("click", () => void this.submitTryon());
    bar.append(submit);
    if (s.inFlight) bar.append(el("span", "spinner", "⏳"));
    if (s.tryonError !== null) bar.append(el("div", "error-banner", s.tryonError));
    const debug = el("label", "debug-toggle");
    const box = el("input");
    box.type = "checkbox";
    box.checked = s.showDebug;
    box.addEventListener("change", () =>
      this.store.update({ showDebug: box.checked }),
    );
    debug.append(box, document.createTextNode(" show intermediates"));
    bar.append(debug);
    return bar;
  }

  private renderResults(s: SessionState): HTMLElement {
    const pane = el("div", "results");
    if (s.history.length === 0) return pane;
    if (compareMixesPersons(s.history)) {
      pane.append(
        el("div", "warning-badge", "Comparing results for different persons"),
      );
    }
    // newest first; the top two form the compare view
    for (const entry of [...s.history].reverse()) {
      const card = el("div", "result-card");
      card.append(
        el("div", "result-title",
          `${entry.result.person_id} + ${entry.result.garment_id} ` +
          `(${entry.result.timing_ms.toFixed(0)} ms)`),
        pngImg(entry.result.result_png, "try-on result"),
      );
      if (s.showDebug) {
        const dbg = el("div", "debug-views");
        dbg.append(
          pngImg(entry.result.seg_png, "predicted segmentation"),
          pngImg(entry.result.warped_png, "warped garment"),
        );
        card.append(dbg);
      }
      pane.append(card);
    }
    return pane;
  }
}
