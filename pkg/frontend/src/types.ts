/** Wire types for the model service JSON API. */

export interface TermSummary {
  id: string;
  type: "1d" | "2d";
  features: string[];
  n_bins: number | [number, number];
  edited_bins: number;
  max_abs_score: number;
}

/** One-feature term: K edges define K+1 right-closed bins. */
export interface Term1D {
  id: string;
  type: "1d";
  feature: string;
  edges: number[];
  scores: number[];
  /** Per-bin spread; null entries mark bins whose uncertainty is unknown
   *  (every edited bin), or null overall when the model has no bars. */
  error_bars: (number | null)[] | null;
  edited_mask: boolean[];
}

export interface Term2D {
  id: string;
  type: "2d";
  feature_x: string;
  feature_y: string;
  edges_x: number[];
  edges_y: number[];
  scores: number[][];
  edited_mask: boolean[][];
}

export type Term = Term1D | Term2D;

export interface SceneSummary {
  scene_id: string;
  rows: number;
  cols: number;
  channels: string[];
  has_labels: boolean;
}

export interface GridData {
  name: string;
  rows: number;
  cols: number;
  resolution_km: number;
  units: string;
  values: number[][];
}

/** An interval endpoint pair; null means unbounded on that side. */
export type Interval = [number | null, number | null];

export interface EditOpWire {
  kind: "flatten_range" | "scale" | "shift" | "set_value";
  term: string;
  range: Interval | [Interval, Interval] | null;
  factor?: number;
  delta?: number;
  value?: number | "min_in_range";
  author?: string;
  note?: string;
}

export interface DiffEntry {
  term: string;
  bins_changed: number;
  max_abs_delta: number;
}

export interface EditResponse {
  version: number;
  diff: DiffEntry[];
}

export interface ConfusionBlock {
  counts: {
    hits: number;
    correct_rejections: number;
    false_alarms: number;
    misses: number;
  };
  scores: Record<string, number | null>;
}

export interface PredictResponse {
  version: number;
  scene_id: string;
  threshold: number;
  probability: GridData;
  binary: GridData;
  confusion?: ConfusionBlock;
}

export interface ImportanceResponse {
  version: number;
  scene_id: string;
  term: string;
  grid: GridData;
}
