/** Canvas 2D scatter renderer with pan/zoom, region overlays, highlight and
 * selection marks. Falls back to a static message when canvas is missing. */

import { colorFor, fieldValue, makeQuantileRamp, QuantileRamp } from "./color.js";
import type { ColorField, EmbeddingRecord, Region } from "./types.js";
import type { ViewState } from "./state.js";

export class Scatter {
  private ctx: CanvasRenderingContext2D;
  private ramp: QuantileRamp | null = null;
  private rampField: ColorField | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private records: EmbeddingRecord[],
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  /** Scale/center so all points fit with a margin. */
  fit(state: ViewState) {
    if (this.records.length === 0) {
      state.scale = 1;
      return;
    }
    const xs = this.records.map((r) => r.x);
    const ys = this.records.map((r) => r.y);
    const spanX = Math.max(...xs) - Math.min(...xs) || 1;
    const spanY = Math.max(...ys) - Math.min(...ys) || 1;
    state.cx = (Math.max(...xs) + Math.min(...xs)) / 2;
    state.cy = (Math.max(...ys) + Math.min(...ys)) / 2;
    state.scale = 0.9 * Math.min(this.canvas.width / spanX, this.canvas.height / spanY);
  }

  toScreen(state: ViewState, x: number, y: number): [number, number] {
    return [
      this.canvas.width / 2 + (x - state.cx) * state.scale,
      this.canvas.height / 2 - (y - state.cy) * state.scale,
    ];
  }

  toData(state: ViewState, sx: number, sy: number): [number, number] {
    return [
      state.cx + (sx - this.canvas.width / 2) / state.scale,
      state.cy - (sy - this.canvas.height / 2) / state.scale,
    ];
  }

  private ensureRamp(field: ColorField) {
    if (field === "class" || field === "signalized") {
      this.ramp = null;
      this.rampField = null;
      return;
    }
    if (this.rampField !== field) {
      const values = this.records
        .map((r) => fieldValue(r, field))
        .filter((v): v is number => v !== null);
      this.ramp = makeQuantileRamp(values);
      this.rampField = field;
    }
  }

  draw(state: ViewState, highlighted: Set<number> | null) {
    const { ctx, canvas } = this;
    if (state.scale === 0) this.fit(state);
    ctx.fillStyle = "#ffffff";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    this.ensureRamp(state.colorBy);

    const dim = highlighted !== null;
    for (const r of this.records) {
      const [sx, sy] = this.toScreen(state, r.x, r.y);
      if (sx < -4 || sy < -4 || sx > canvas.width + 4 || sy > canvas.height + 4) {
        continue;
      }
      const active = !dim || highlighted!.has(r.id);
      ctx.globalAlpha = active ? 0.9 : 0.12;
      ctx.fillStyle = colorFor(r, state.colorBy, this.ramp);
      ctx.beginPath();
      ctx.arc(sx, sy, active && dim ? 4 : 3, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.globalAlpha = 1.0;

    for (const region of state.regions) {
      this.drawRegion(state, region);
    }
    if (state.selectedId !== null) {
      const r = this.records.find((rec) => rec.id === state.selectedId);
      if (r) {
        const [sx, sy] = this.toScreen(state, r.x, r.y);
        ctx.strokeStyle = "#000000";
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.arc(sx, sy, 7, 0, 2 * Math.PI);
        ctx.stroke();
      }
    }
  }

  private drawRegion(state: ViewState, region: Region) {
    const { ctx } = this;
    ctx.strokeStyle = region.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    region.polygon.forEach(([x, y], i) => {
      const [sx, sy] = this.toScreen(state, x, y);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.closePath();
    ctx.stroke();
    const [lx, ly] = this.toScreen(state, region.polygon[0][0], region.polygon[0][1]);
    ctx.fillStyle = region.color;
    ctx.font = "13px sans-serif";
    ctx.fillText(region.label, lx + 4, ly - 4);
  }

  /** Nearest record within a pixel radius of a screen position. */
  hitTest(state: ViewState, sx: number, sy: number, radiusPx = 8): EmbeddingRecord | null {
    let best: EmbeddingRecord | null = null;
    let bestD = radiusPx * radiusPx;
    for (const r of this.records) {
      const [px, py] = this.toScreen(state, r.x, r.y);
      const d = (px - sx) ** 2 + (py - sy) ** 2;
      if (d < bestD) {
        bestD = d;
        best = r;
      }
    }
    return best;
  }
}

export function staticFallback(container: HTMLElement) {
  const banner = document.createElement("div");
  banner.className = "fallback-banner";
  banner.textContent =
    "Canvas rendering is unavailable in this browser; showing data as text only.";
  container.appendChild(banner);
}
