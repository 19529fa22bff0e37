/** Stats and outlier panels. Every number shown is taken verbatim from the
 * API response JSON (re-serialized with JSON.stringify, never recomputed or
 * rounded client-side) so panel values stay byte-equal to the service. */

import type {
  ComparisonEntry, EmbeddingRecord, OutliersPayload, RegionStatsPayload,
} from "./types.js";

/** Literal JSON text for one value, exactly as JSON.stringify renders it. */
export function jsonNumber(value: number | null): string {
  return JSON.stringify(value);
}

export interface RegionPanelModel {
  label: string;
  rows: [string, string][];     // metric name -> literal JSON value
  comparison: [string, string, string][]; // measure, anova p, games-howell p
}

export function regionPanelModel(
  label: string, payload: RegionStatsPayload,
): RegionPanelModel {
  const region = payload.region;
  const rows: [string, string][] = [
    ["count", jsonNumber(region.count)],
    ["speed", jsonNumber(region.speed)],
    ["ha_freq", jsonNumber(region.ha_freq)],
    ["hd_freq", jsonNumber(region.hd_freq)],
  ];
  const comparison: [string, string, string][] = [];
  for (const measure of ["speed", "ha_freq", "hd_freq"]) {
    const entry = payload.comparison[measure];
    if (entry && typeof entry !== "string" && "anova" in entry) {
      const c = entry as ComparisonEntry;
      comparison.push([
        measure, jsonNumber(c.anova.p), jsonNumber(c.games_howell.p),
      ]);
    }
  }
  return { label, rows, comparison };
}

export function renderRegionPanel(model: RegionPanelModel): HTMLElement {
  const box = document.createElement("div");
  box.className = "region-panel";
  box.dataset.label = model.label;
  const head = document.createElement("h3");
  head.textContent = `Region ${model.label}`;
  box.appendChild(head);
  const table = document.createElement("table");
  for (const [name, value] of model.rows) {
    const tr = document.createElement("tr");
    const td0 = document.createElement("td");
    td0.textContent = name;
    const td1 = document.createElement("td");
    td1.className = "value";
    td1.textContent = value;
    tr.append(td0, td1);
    table.appendChild(tr);
  }
  box.appendChild(table);
  if (model.comparison.length) {
    const sub = document.createElement("h4");
    sub.textContent = "vs complement (p-values)";
    box.appendChild(sub);
    const ct = document.createElement("table");
    for (const [measure, anovaP, ghP] of model.comparison) {
      const tr = document.createElement("tr");
      for (const text of [measure, anovaP, ghP]) {
        const td = document.createElement("td");
        td.textContent = text;
        tr.appendChild(td);
      }
      ct.appendChild(tr);
    }
    box.appendChild(ct);
  }
  return box;
}

export interface OutlierRow {
  id: number;
  imageUrl: string;
}

/** Rows in exactly the API's order; the service already sorts by ratio. */
export function outlierRows(
  payload: OutliersPayload, imageUrl: (id: number) => string,
): OutlierRow[] {
  return payload.outliers.map((id) => ({ id, imageUrl: imageUrl(id) }));
}

export function renderOutlierPanel(
  rows: OutlierRow[],
  onSelect: (id: number) => void,
): HTMLElement {
  const box = document.createElement("div");
  box.className = "outlier-panel";
  if (rows.length === 0) {
    const p = document.createElement("p");
    p.className = "empty";
    p.textContent = "no outliers at this factor";
    box.appendChild(p);
    return box;
  }
  const list = document.createElement("ol");
  for (const row of rows) {
    const li = document.createElement("li");
    li.dataset.id = String(row.id);
    const img = document.createElement("img");
    img.src = row.imageUrl;
    img.width = 48;
    img.height = 48;
    img.alt = `intersection ${row.id}`;
    const label = document.createElement("span");
    label.textContent = `#${row.id}`;
    li.append(img, label);
    li.addEventListener("click", () => onSelect(row.id));
    list.appendChild(li);
  }
  box.appendChild(list);
  return box;
}

export function renderDetail(record: EmbeddingRecord, imageUrl: string): HTMLElement {
  const box = document.createElement("div");
  box.className = "detail";
  const img = document.createElement("img");
  img.src = imageUrl;
  img.alt = `abstraction ${record.id}`;
  img.width = 128;
  img.height = 128;
  box.appendChild(img);
  const table = document.createElement("table");
  for (const key of ["id", "class", "signalized", "volume", "mean_speed",
                     "ha_freq", "hd_freq", "qualified"] as const) {
    const tr = document.createElement("tr");
    const td0 = document.createElement("td");
    td0.textContent = key;
    const td1 = document.createElement("td");
    td1.className = "value";
    td1.textContent = JSON.stringify(record[key]);
    tr.append(td0, td1);
    table.appendChild(tr);
  }
  box.appendChild(table);
  return box;
}
