// Client-side view state for one lab session.
//
// Everything here derives from API responses; the view never models or
// recomputes results. The three guards that matter: hypothesis order always
// mirrors the server's sorted pool, at most one fit request is in flight per
// pool, and holdout reads stay disabled until the typed confirm-unlock.

import type {
  FilterSpec,
  FitRound,
  GraphsResponse,
  QuestionRequest,
  QuestionResponse,
  SessionOverview,
  SplitName,
  Task,
  UpdateRequest,
} from "./types.js";
import type { RawJson } from "./api.js";
import { buildCards, type HypothesisCard } from "./cards.js";

export const HOLDOUT_WARNING =
  "The holdout split is evaluated once, after hypotheses are final. " +
  "Looking at it earlier contaminates every later decision, and unlocking " +
  "cannot be undone.";

/** Exact phrase the user must type to arm the unlock button. */
export const CONFIRM_PHRASE = "spend the holdout";

export interface QuestionDraft {
  inputs: string[];
  output: string | null;
  task: Task;
  maxDepth: number;
  capacity: number;
  filters: FilterSpec[];
}

export interface ActivePool {
  id: string;
  capacity: number;
  sortCriterion: string;
  inputs: string[];
  output: string;
  task: Task;
}

export interface SessionView {
  sessionId: string | null;
  overview: SessionOverview | null;
  datasetLabel: string | null;
  draft: QuestionDraft;
  pool: ActivePool | null;
  cards: HypothesisCard[];
  selected: Set<number>;
  rounds: FitRound[];
  fitInFlight: boolean;
  split: SplitName;
  holdoutUnlocked: boolean;
  unlockTyped: string;
  lastError: string | null;
}

export function createView(): SessionView {
  return {
    sessionId: null,
    overview: null,
    datasetLabel: null,
    draft: {
      inputs: [],
      output: null,
      task: "classifier",
      maxDepth: 2,
      capacity: 200,
      filters: [],
    },
    pool: null,
    cards: [],
    selected: new Set(),
    rounds: [],
    fitInFlight: false,
    split: "train",
    holdoutUnlocked: false,
    unlockTyped: "",
    lastError: null,
  };
}

export function applyOverview(view: SessionView, overview: SessionOverview): void {
  view.sessionId = overview.id;
  view.overview = overview;
  view.holdoutUnlocked = overview.holdout_unlocked;
  const labels = Object.keys(overview.datasets);
  if (view.datasetLabel === null && labels.length) view.datasetLabel = labels[0] ?? null;
}

/** Empty input selection disables submit; a target and dataset are required. */
export function questionReady(view: SessionView): boolean {
  return (
    view.datasetLabel !== null &&
    view.draft.inputs.length > 0 &&
    view.draft.output !== null &&
    !view.fitInFlight
  );
}

export function questionRequest(view: SessionView): QuestionRequest {
  if (!questionReady(view)) throw new Error("question draft is incomplete");
  const draft = view.draft;
  const req: QuestionRequest = {
    inputs: [...draft.inputs],
    output: draft.output as string,
    task: draft.task,
    max_depth: draft.maxDepth,
    capacity: draft.capacity,
  };
  if (draft.filters.length) req.filters = [...draft.filters];
  if (view.datasetLabel) req.dataset = view.datasetLabel;
  return req;
}

export function applyQuestion(view: SessionView, resp: QuestionResponse): void {
  view.pool = {
    id: resp.pool_id,
    capacity: resp.capacity,
    sortCriterion: resp.sort_criterion,
    inputs: resp.spec.inputs.map(([name]) => name),
    output: resp.spec.output,
    task: resp.spec.task,
  };
  view.cards = [];
  view.selected = new Set();
  view.rounds = [];
}

/** One in-flight fit per pool: returns false when a round is already running. */
export function beginFit(view: SessionView): boolean {
  if (view.fitInFlight || !view.pool) return false;
  view.fitInFlight = true;
  return true;
}

export function finishFit(view: SessionView, rounds: FitRound[]): void {
  view.fitInFlight = false;
  view.rounds.push(...rounds);
}

export function failFit(view: SessionView, message: string): void {
  view.fitInFlight = false;
  view.lastError = message;
}

/** Gallery refresh: replaces cards in server order, drops stale selections. */
export function applyGraphs(view: SessionView, graphs: RawJson<GraphsResponse>): void {
  view.cards = buildCards(graphs);
  const ids = new Set(view.cards.map((c) => c.id));
  view.selected = new Set([...view.selected].filter((id) => ids.has(id)));
}

export function toggleSelected(view: SessionView, id: number): void {
  if (view.selected.has(id)) view.selected.delete(id);
  else view.selected.add(id);
}

/** Reinforce request for exactly the checked cards, in gallery order. */
export function updateRequest(view: SessionView): UpdateRequest {
  if (!view.pool) throw new Error("no active pool");
  const ids = view.cards.map((c) => c.id).filter((id) => view.selected.has(id));
  if (!ids.length) throw new Error("select at least one hypothesis first");
  return { graph_ids: ids, pool_id: view.pool.id };
}

/** Best-loss series for the sparkline, straight from fit-round responses. */
export function sparklineSeries(view: SessionView): number[] {
  return view.rounds.map((r) => r.best_loss);
}

export interface SplitChange {
  allowed: boolean;
  reason: string | null;
}

/** Holdout stays disabled until the unlock flow completes. */
export function requestSplit(view: SessionView, split: SplitName): SplitChange {
  if (split === "holdout" && !view.holdoutUnlocked) {
    return { allowed: false, reason: HOLDOUT_WARNING };
  }
  view.split = split;
  return { allowed: true, reason: null };
}

/** The unlock button arms only on the exact typed phrase. */
export function canConfirmUnlock(view: SessionView): boolean {
  return view.unlockTyped.trim() === CONFIRM_PHRASE;
}

export function applyUnlock(view: SessionView): void {
  view.holdoutUnlocked = true;
  view.unlockTyped = "";
}
