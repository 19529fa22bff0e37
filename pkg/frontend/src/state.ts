/** View state: viewport transform, color-by field, active regions, filters,
 * and selection, all serializable into a URL fragment for permalinks. */

import type { ColorField, Region, Vertex } from "./types.js";
import { REGION_COLORS } from "./color.js";

export const MAX_REGIONS = 8;

export interface Filters {
  classes: string[];        // empty means all
  signalized: boolean | null;
  minVolume: number | null;
}

export interface ViewState {
  scale: number;            // pixels per embedding unit
  cx: number;               // embedding coords at canvas center
  cy: number;
  colorBy: ColorField;
  regions: Region[];
  selectedId: number | null;
  filters: Filters;
  outlierFactor: number;
}

export function defaultState(): ViewState {
  return {
    scale: 0,               // 0 means fit-to-data on first render
    cx: 0,
    cy: 0,
    colorBy: "class",
    regions: [],
    selectedId: null,
    filters: { classes: [], signalized: null, minVolume: null },
    outlierFactor: 8,
  };
}

export function nextRegionLabel(regions: Region[]): string {
  const used = new Set(regions.map((r) => r.label));
  for (let i = 0; i < 26; i++) {
    const label = String.fromCharCode(65 + i);
    if (!used.has(label)) return label;
  }
  return `R${regions.length}`;
}

export function addRegion(state: ViewState, polygon: Vertex[]): Region | null {
  if (state.regions.length >= MAX_REGIONS) return null;
  const label = nextRegionLabel(state.regions);
  const region: Region = {
    label,
    color: REGION_COLORS[state.regions.length % REGION_COLORS.length],
    polygon,
  };
  state.regions.push(region);
  return region;
}

const NUM = (v: number) => Number(v.toPrecision(9));

/** Compact JSON-in-fragment encoding; stable across reloads. */
export function serializeState(state: ViewState): string {
  const payload = {
    v: 1,
    s: NUM(state.scale),
    cx: NUM(state.cx),
    cy: NUM(state.cy),
    c: state.colorBy,
    r: state.regions.map((r) => ({
      l: r.label,
      p: r.polygon.map(([x, y]) => [NUM(x), NUM(y)]),
    })),
    sel: state.selectedId,
    f: {
      c: state.filters.classes,
      s: state.filters.signalized,
      v: state.filters.minVolume,
    },
    of: state.outlierFactor,
  };
  return encodeURIComponent(JSON.stringify(payload));
}

export function deserializeState(fragment: string): ViewState | null {
  if (!fragment) return null;
  try {
    const payload = JSON.parse(decodeURIComponent(fragment));
    if (payload.v !== 1) return null;
    const state = defaultState();
    state.scale = payload.s;
    state.cx = payload.cx;
    state.cy = payload.cy;
    state.colorBy = payload.c;
    state.regions = (payload.r ?? []).slice(0, MAX_REGIONS).map(
      (r: { l: string; p: Vertex[] }, i: number) => ({
        label: r.l,
        color: REGION_COLORS[i % REGION_COLORS.length],
        polygon: r.p,
      }),
    );
    state.selectedId = payload.sel ?? null;
    state.filters = {
      classes: payload.f?.c ?? [],
      signalized: payload.f?.s ?? null,
      minVolume: payload.f?.v ?? null,
    };
    state.outlierFactor = payload.of ?? 8;
    return state;
  } catch {
    return null;
  }
}
