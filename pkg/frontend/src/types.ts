// Payload shapes for the /v1 session service. The lab renders these verbatim;
// it never recomputes a number the server already provides.

export type Stype = "numerical" | "categorical";
export type Task = "classifier" | "regressor";
export type SplitName = "train" | "valid" | "holdout";

export interface LatticeConfigInfo {
  width: number;
  depth: number;
  islands: number;
  alpha: number;
  seed: number;
}

export interface SessionCreated {
  session_id: string;
  lattice: LatticeConfigInfo;
}

export interface SessionList {
  sessions: string[];
}

export interface SplitSpecInfo {
  fractions: number[];
  stratify_by: string | null;
  seed: number;
}

export interface DatasetManifest {
  columns: [string, Stype][];
  rows: number;
  digest: string;
}

export interface DatasetSummary {
  label: string;
  manifest: DatasetManifest;
  split: SplitSpecInfo;
  sizes: Record<string, number>;
}

export type FilterSpec =
  | { type: "contains"; feature: string }
  | { type: "excludes"; feature: string }
  | { type: "max_depth"; depth: number }
  | { type: "functions"; kinds: string[] };

export interface GraphSpecInfo {
  inputs: [string, Stype][];
  output: string;
  task: Task;
  max_depth: number;
  allowed_kinds: string[];
}

export interface PoolInfo {
  dataset: string;
  spec: GraphSpecInfo;
  filters: FilterSpec[];
  capacity: number;
  generation: number;
  size: number;
  sort_criterion: string;
}

export interface SessionOverview {
  id: string;
  created: string;
  holdout_unlocked: boolean;
  datasets: Record<string, DatasetSummary>;
  pools: Record<string, PoolInfo>;
  history_length: number;
}

export interface HistoryEvent {
  seq: number;
  at: string;
  event: string;
  [key: string]: unknown;
}

export interface HistoryResponse {
  events: HistoryEvent[];
}

export interface QuestionRequest {
  inputs: (string | [string, Stype])[];
  output: string;
  task: Task;
  max_depth?: number;
  capacity?: number;
  filters?: FilterSpec[];
  criterion?: string;
  dataset?: string;
}

export interface QuestionResponse {
  pool_id: string;
  capacity: number;
  sort_criterion: string;
  spec: GraphSpecInfo;
}

export interface FitRequest {
  rounds?: number;
  workers?: number;
  auto_update?: boolean;
}

export interface FitRound {
  round: number;
  best_id: number;
  best_loss: number;
  best_hash: string;
}

export interface FitResponse {
  pool_id: string;
  rounds: FitRound[];
}

export interface UpdateRequest {
  graph_ids: number[];
  pool_id?: string;
}

export interface UpdateResponse {
  updated: number;
}

// One node of a serialized graph structure. Registers carry feature/stype,
// interactions carry kind/cell; params are display-only here.
export interface StructureNode {
  id: string;
  role: "input-register" | "interaction" | "output-register";
  incoming: string[];
  feature?: string;
  stype?: Stype;
  kind?: string;
  cell?: number[];
  params?: Record<string, unknown>;
}

export interface GraphStructure {
  task: Task;
  nodes: StructureNode[];
  train_loss?: number;
  unusable?: boolean;
}

export interface GraphRow {
  id: number;
  fitted: boolean;
  value: number | null;
  train_loss: number | null;
  depth: number;
  param_count: number;
  structure_hash: string;
  structure: GraphStructure;
}

export interface GraphsResponse {
  pool_id: string;
  graphs: GraphRow[];
}

export type ExprTree =
  | { type: "const"; value: number }
  | { type: "var"; name: string }
  | { type: "cat"; feature: string; weights: Record<string, number>; bias: number }
  | { type: "scale"; child: ExprTree; lo: number; hi: number; w: number; b: number }
  | { type: "affine"; child: ExprTree; w: number; b: number }
  | { type: "unary"; op: string; child: ExprTree }
  | { type: "binary"; op: string; left: ExprTree; right: ExprTree }
  | { type: "logistic"; child: ExprTree };

export interface WeightTable {
  bias: number;
  weights: Record<string, number>;
}

export interface EquationResponse {
  graph_id: number;
  signif: number;
  format: string;
  equation: string;
  weight_tables: Record<string, WeightTable>;
  tree: ExprTree;
}

export interface RocPayload {
  thresholds: (number | null)[];
  fpr: number[];
  tpr: number[];
  auc: number;
}

export interface ProbabilityScoresPayload {
  edges: number[];
  counts0: number[];
  counts1: number[];
}

export interface ScatterPoint {
  x: number;
  y: number;
  label: number | null;
}

export interface Partial2dPayload {
  // x_edges/y_edges are sample points (length == resolution), not bin edges
  x_edges: number[];
  y_edges: number[];
  grid: number[][];
  scatter: ScatterPoint[];
}

export interface SegmentedLossNumericPayload {
  edges: number[];
  counts: number[];
  mean_loss: (number | null)[];
}

export interface SegmentedLossCategoricalPayload {
  categories: string[];
  counts: number[];
  mean_loss: (number | null)[];
}

export type SegmentedLossPayload =
  | SegmentedLossNumericPayload
  | SegmentedLossCategoricalPayload;

export interface PlotMeta {
  dataset: string;
  split: string;
  graph_id: number;
  structure_hash: string;
  fx?: string;
  fy?: string;
  fixed?: Record<string, unknown>;
  by?: string;
  task?: Task;
}

export type PlotKind = "roc" | "probability_scores" | "partial2d" | "segmented_loss";

export interface PlotResponse {
  kind: PlotKind;
  payload: RocPayload | ProbabilityScoresPayload | Partial2dPayload | SegmentedLossPayload;
  meta: PlotMeta;
}

export interface UnlockResponse {
  holdout_unlocked: boolean;
  already_unlocked: boolean;
}

export interface DataRequest {
  csv: string;
  split?: Partial<SplitSpecInfo>;
  label?: string;
  stype_overrides?: Record<string, Stype>;
}

export interface ErrorEnvelope {
  error: string;
  type: string;
  [key: string]: unknown;
}
