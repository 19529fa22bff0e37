/** Shared record and payload shapes mirroring the service API. */

export interface EmbeddingRecord {
  id: number;
  x: number;
  y: number;
  class: string;
  signalized: boolean;
  volume: number;
  mean_speed: number | null;
  ha_freq: number | null;
  hd_freq: number | null;
  qualified: boolean;
  image: string | null;
}

export interface RegionStatsPayload {
  region: {
    count: number;
    speed: number | null;
    ha_freq: number | null;
    hd_freq: number | null;
    member_ids: number[];
    total_in_region: number;
    degenerate: boolean;
  };
  comparison: Record<string, ComparisonEntry | string>;
}

export interface ComparisonEntry {
  anova: TestResultPayload;
  games_howell: TestResultPayload;
}

export interface TestResultPayload {
  statistic: number;
  df: number[];
  p: number;
  method: string;
  degenerate: boolean;
}

export interface OutliersPayload {
  factor: number;
  outliers: number[];
  degenerate_mean: boolean;
}

export type ColorField =
  | "class"
  | "signalized"
  | "speed"
  | "volume"
  | "ha_freq"
  | "hd_freq";

export type Vertex = [number, number];

export interface Region {
  label: string;
  color: string;
  polygon: Vertex[];
}
