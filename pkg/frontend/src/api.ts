/** Read-only client for the service API. Superseded in-flight requests are
 * cancelled so a fast brush gesture cannot interleave stale responses. */

import type {
  EmbeddingRecord, OutliersPayload, RegionStatsPayload, Vertex,
} from "./types.js";

export class ApiClient {
  private controllers = new Map<string, AbortController>();

  constructor(private base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.base + path);
    if (!res.ok) throw new Error(`${path}: HTTP ${res.status}`);
    return res.json() as Promise<T>;
  }

  /** POST with cancellation keyed by endpoint: a new call aborts the
   * previous one still in flight. */
  private async post<T>(key: string, path: string, body: unknown): Promise<T> {
    this.controllers.get(key)?.abort();
    const controller = new AbortController();
    this.controllers.set(key, controller);
    const res = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal: controller.signal,
    });
    if (!res.ok) {
      const detail = await res.text();
      throw new Error(`${path}: HTTP ${res.status} ${detail}`);
    }
    return res.json() as Promise<T>;
  }

  async fetchAllRecords(pageSize = 2000): Promise<EmbeddingRecord[]> {
    const out: EmbeddingRecord[] = [];
    for (let offset = 0; ; offset += pageSize) {
      const page = await this.get<EmbeddingRecord[]>(
        `/api/embedding?offset=${offset}&limit=${pageSize}`,
      );
      out.push(...page);
      if (page.length < pageSize) break;
    }
    return out;
  }

  regionStats(polygon: Vertex[]): Promise<RegionStatsPayload> {
    return this.post("region-stats", "/api/region/stats", { polygon });
  }

  regionOutliers(polygon: Vertex[], factor: number): Promise<OutliersPayload> {
    return this.post(
      "region-outliers", `/api/region/outliers?factor=${factor}`, { polygon },
    );
  }

  async query(params: URLSearchParams): Promise<EmbeddingRecord[]> {
    return this.get<EmbeddingRecord[]>(`/api/query?${params.toString()}`);
  }

  intersection(id: number): Promise<EmbeddingRecord> {
    return this.get<EmbeddingRecord>(`/api/intersections/${id}`);
  }

  imageUrl(id: number): string {
    return `${this.base}/api/intersections/${id}/image`;
  }
}

export function buildQueryParams(
  classes: string[], signalized: boolean | null, minVolume: number | null,
): URLSearchParams {
  const params = new URLSearchParams();
  for (const c of classes) params.append("class", c);
  if (signalized !== null) params.set("signalized", String(signalized));
  if (minVolume !== null) params.set("min_volume", String(minVolume));
  return params;
}
