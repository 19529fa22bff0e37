/** Color scales: categorical palette for class/signalized, quantile ramp for
 * continuous fields with the top 0.1% winsorized for display only. */

import type { ColorField, EmbeddingRecord } from "./types.js";

export const CLASS_PALETTE: Record<string, string> = {
  O: "#4c72b0",
  T: "#dd8452",
  X: "#55a868",
  "#": "#c44e52",
};

export const SIGNAL_PALETTE: Record<string, string> = {
  true: "#c44e52",
  false: "#8c8c8c",
};

const RAMP = ["#2b83ba", "#abdda4", "#ffffbf", "#fdae61", "#d7191c"];

export const REGION_COLORS = [
  "#e41a1c", "#377eb8", "#4daf4a", "#984ea3",
  "#ff7f00", "#a65628", "#f781bf", "#999999",
];

function hexToRgb(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [(v >> 16) & 255, (v >> 8) & 255, v & 255];
}

function lerpHex(a: string, b: string, t: number): string {
  const ca = hexToRgb(a);
  const cb = hexToRgb(b);
  const c = ca.map((v, i) => Math.round(v + (cb[i] - v) * t));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

export function rampColor(t: number): string {
  const clamped = Math.min(1, Math.max(0, t));
  const pos = clamped * (RAMP.length - 1);
  const i = Math.min(RAMP.length - 2, Math.floor(pos));
  return lerpHex(RAMP[i], RAMP[i + 1], pos - i);
}

export function fieldValue(r: EmbeddingRecord, field: ColorField): number | null {
  switch (field) {
    case "speed": return r.mean_speed;
    case "volume": return r.volume;
    case "ha_freq": return r.ha_freq;
    case "hd_freq": return r.hd_freq;
    default: return null;
  }
}

export interface QuantileRamp {
  /** winsorization ceiling: values at or above map to t = 1 */
  ceiling: number;
  floor: number;
  color(value: number | null): string;
  t(value: number): number;
}

/** Quantile-normalized ramp; the top 0.1% of values are clamped to the
 * 99.9th percentile so one extreme cannot saturate the whole scale. */
export function makeQuantileRamp(values: number[]): QuantileRamp {
  const sorted = values.filter((v) => Number.isFinite(v)).sort((a, b) => a - b);
  if (sorted.length === 0) {
    return { ceiling: 1, floor: 0, color: () => "#cccccc", t: () => 0 };
  }
  const quantile = (q: number) => {
    const pos = q * (sorted.length - 1);
    const i = Math.floor(pos);
    const j = Math.min(sorted.length - 1, i + 1);
    return sorted[i] + (sorted[j] - sorted[i]) * (pos - i);
  };
  const floor = sorted[0];
  const ceiling = Math.max(quantile(0.999), floor);
  const t = (value: number) => {
    const v = Math.min(value, ceiling);
    // rank-based normalization for perceptual spread
    let lo = 0;
    let hi = sorted.length;
    while (lo < hi) {
      const mid = (lo + hi) >> 1;
      if (sorted[mid] <= v) lo = mid + 1;
      else hi = mid;
    }
    return sorted.length > 1 ? lo / sorted.length : 0.5;
  };
  return {
    ceiling,
    floor,
    t,
    color: (value) => (value === null ? "#cccccc" : rampColor(t(value))),
  };
}

export function colorFor(
  r: EmbeddingRecord, field: ColorField, ramp: QuantileRamp | null,
): string {
  if (field === "class") return CLASS_PALETTE[r.class] ?? "#333333";
  if (field === "signalized") return SIGNAL_PALETTE[String(r.signalized)];
  const v = fieldValue(r, field);
  return ramp ? ramp.color(v) : "#cccccc";
}
