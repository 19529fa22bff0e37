/** Application wiring: load records, render, and drive the analyst loop of
 * brushing regions, comparing statistics, and drilling into outliers. */

import { ApiClient, buildQueryParams } from "./api.js";
import { pointInPolygon, rectToPolygon } from "./geometry.js";
import {
  outlierRows, regionPanelModel, renderDetail, renderOutlierPanel,
  renderRegionPanel,
} from "./panels.js";
import { Scatter, staticFallback } from "./scatter.js";
import {
  addRegion, defaultState, deserializeState, serializeState, ViewState,
} from "./state.js";
import type { ColorField, EmbeddingRecord, Vertex } from "./types.js";

const COLOR_FIELDS: ColorField[] = [
  "class", "signalized", "speed", "volume", "ha_freq", "hd_freq",
];

class App {
  state: ViewState;
  scatter: Scatter | null = null;
  highlighted: Set<number> | null = null;
  records: EmbeddingRecord[] = [];

  constructor(private api: ApiClient, private root: HTMLElement) {
    this.state = deserializeState(location.hash.slice(1)) ?? defaultState();
  }

  async start() {
    this.records = await this.api.fetchAllRecords();
    const canvas = this.root.querySelector<HTMLCanvasElement>("#scatter")!;
    if (this.records.length === 0) {
      const hint = document.createElement("p");
      hint.className = "empty";
      hint.textContent = "embedding is empty: run the pipeline first";
      this.root.appendChild(hint);
    }
    try {
      this.scatter = new Scatter(canvas, this.records);
    } catch {
      // no canvas: keep panels and filters alive in text-only mode
      this.scatter = null;
      staticFallback(this.root);
    }
    this.buildControls();
    if (this.scatter) this.bindCanvas(canvas);
    await this.applyFilters(false);
    for (const region of this.state.regions) {
      await this.refreshRegionPanel(region.label, region.polygon);
    }
    this.redraw();
  }

  redraw() {
    this.scatter?.draw(this.state, this.highlighted);
    location.hash = serializeState(this.state);
  }

  private buildControls() {
    const select = this.root.querySelector<HTMLSelectElement>("#color-by")!;
    for (const field of COLOR_FIELDS) {
      const opt = document.createElement("option");
      opt.value = field;
      opt.textContent = field;
      select.appendChild(opt);
    }
    select.value = this.state.colorBy;
    select.addEventListener("change", () => {
      this.state.colorBy = select.value as ColorField;
      this.redraw();
    });

    const legend = this.root.querySelector<HTMLElement>("#legend")!;
    const classes = [...new Set(this.records.map((r) => r.class))].sort();
    for (const cls of classes) {
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.value = cls;
      box.checked =
        this.state.filters.classes.length === 0 ||
        this.state.filters.classes.includes(cls);
      box.addEventListener("change", () => this.onFilterChange());
      label.appendChild(box);
      label.append(` ${cls}`);
      legend.appendChild(label);
    }

    const signal = this.root.querySelector<HTMLSelectElement>("#signalized")!;
    signal.value =
      this.state.filters.signalized === null
        ? "any"
        : String(this.state.filters.signalized);
    signal.addEventListener("change", () => this.onFilterChange());

    const minVol = this.root.querySelector<HTMLInputElement>("#min-volume")!;
    minVol.value = this.state.filters.minVolume?.toString() ?? "";
    minVol.addEventListener("change", () => this.onFilterChange());

    const factor = this.root.querySelector<HTMLInputElement>("#factor")!;
    factor.value = String(this.state.outlierFactor);
    factor.addEventListener("change", async () => {
      this.state.outlierFactor = Number(factor.value) || 8;
      const region = this.state.regions[this.state.regions.length - 1];
      if (region) await this.refreshOutliers(region.polygon);
      this.redraw();
    });

    this.root.querySelector("#clear-regions")!.addEventListener("click", () => {
      this.state.regions = [];
      this.root.querySelector("#panels")!.replaceChildren();
      this.redraw();
    });
    this.root.querySelector("#fit")!.addEventListener("click", () => {
      this.scatter?.fit(this.state);
      this.redraw();
    });
  }

  private async onFilterChange() {
    const legend = this.root.querySelector<HTMLElement>("#legend")!;
    const checked = [...legend.querySelectorAll<HTMLInputElement>("input:checked")]
      .map((b) => b.value);
    const all = legend.querySelectorAll("input").length;
    this.state.filters.classes = checked.length === all ? [] : checked;
    const signal = this.root.querySelector<HTMLSelectElement>("#signalized")!.value;
    this.state.filters.signalized = signal === "any" ? null : signal === "true";
    const minVolRaw = this.root.querySelector<HTMLInputElement>("#min-volume")!.value;
    this.state.filters.minVolume = minVolRaw ? Number(minVolRaw) : null;
    await this.applyFilters(true);
  }

  /** Highlighted ids come from the API, optionally intersected with the
   * most recent region's membership (set algebra, no client recompute). */
  async applyFilters(redraw: boolean) {
    const f = this.state.filters;
    const inactive =
      f.classes.length === 0 && f.signalized === null && f.minVolume === null;
    if (inactive) {
      this.highlighted = null;
    } else {
      const params = buildQueryParams(f.classes, f.signalized, f.minVolume);
      const matches = await this.api.query(params);
      let ids = new Set(matches.map((r) => r.id));
      const region = this.state.regions[this.state.regions.length - 1];
      if (region) {
        const inRegion = new Set(
          this.records
            .filter((r) => pointInPolygon(r.x, r.y, region.polygon))
            .map((r) => r.id),
        );
        ids = new Set([...ids].filter((id) => inRegion.has(id)));
      }
      this.highlighted = ids;
    }
    const badge = this.root.querySelector<HTMLElement>("#match-count")!;
    badge.textContent = this.highlighted === null
      ? ""
      : `${this.highlighted.size} matched`;
    if (redraw) this.redraw();
  }

  private bindCanvas(canvas: HTMLCanvasElement) {
    let dragStart: [number, number] | null = null;
    let brushStart: [number, number] | null = null;

    canvas.addEventListener("mousedown", (ev) => {
      const pos: [number, number] = [ev.offsetX, ev.offsetY];
      if (ev.shiftKey) brushStart = pos;
      else dragStart = pos;
    });
    canvas.addEventListener("mousemove", (ev) => {
      if (dragStart) {
        const dx = ev.offsetX - dragStart[0];
        const dy = ev.offsetY - dragStart[1];
        this.state.cx -= dx / this.state.scale;
        this.state.cy += dy / this.state.scale;
        dragStart = [ev.offsetX, ev.offsetY];
        this.scatter!.draw(this.state, this.highlighted);
      }
    });
    canvas.addEventListener("mouseup", async (ev) => {
      if (brushStart) {
        const [sx0, sy0] = brushStart;
        brushStart = null;
        if (Math.abs(ev.offsetX - sx0) < 3 && Math.abs(ev.offsetY - sy0) < 3) {
          return; // degenerate gesture
        }
        const [x0, y0] = this.scatter!.toData(this.state, sx0, sy0);
        const [x1, y1] = this.scatter!.toData(this.state, ev.offsetX, ev.offsetY);
        await this.brushRegion(rectToPolygon(x0, y0, x1, y1));
        return;
      }
      if (dragStart) {
        dragStart = null;
        const hit = this.scatter!.hitTest(this.state, ev.offsetX, ev.offsetY);
        if (hit) {
          this.state.selectedId = hit.id;
          await this.showDetail(hit.id);
        }
        this.redraw();
      }
    });
    canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
      this.state.scale *= factor;
      this.redraw();
    });
  }

  async brushRegion(polygon: Vertex[]) {
    const region = addRegion(this.state, polygon);
    if (!region) return;
    await this.refreshRegionPanel(region.label, polygon);
    await this.refreshOutliers(polygon);
    await this.applyFilters(false);
    this.redraw();
  }

  async refreshRegionPanel(label: string, polygon: Vertex[]) {
    try {
      const payload = await this.api.regionStats(polygon);
      const panel = renderRegionPanel(regionPanelModel(label, payload));
      this.root.querySelector("#panels")!.appendChild(panel);
    } catch (err) {
      if ((err as Error).name !== "AbortError") this.showError(err as Error);
    }
  }

  async refreshOutliers(polygon: Vertex[]) {
    const host = this.root.querySelector<HTMLElement>("#outliers")!;
    try {
      const payload = await this.api.regionOutliers(polygon, this.state.outlierFactor);
      const rows = outlierRows(payload, (id) => this.api.imageUrl(id));
      host.replaceChildren(
        renderOutlierPanel(rows, (id) => void this.showDetail(id)),
      );
    } catch (err) {
      if ((err as Error).name === "AbortError") return;
      const retry = document.createElement("button");
      retry.textContent = "retry";
      retry.addEventListener("click", () => void this.refreshOutliers(polygon));
      const msg = document.createElement("p");
      msg.className = "error";
      msg.textContent = (err as Error).message;
      host.replaceChildren(msg, retry);
    }
  }

  async showDetail(id: number) {
    const record = await this.api.intersection(id);
    const host = this.root.querySelector<HTMLElement>("#detail")!;
    host.replaceChildren(renderDetail(record, this.api.imageUrl(id)));
    this.state.selectedId = id;
  }

  private showError(err: Error) {
    const msg = document.createElement("p");
    msg.className = "error";
    msg.textContent = err.message;
    this.root.querySelector("#panels")!.appendChild(msg);
  }
}

export async function boot(root: HTMLElement, base = "") {
  const app = new App(new ApiClient(base), root);
  await app.start();
  return app;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot(document.getElementById("app")!);
}
