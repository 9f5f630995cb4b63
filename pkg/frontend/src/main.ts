// Browser entry point: owns the DOM, delegates everything else.
//
// One session per tab, its id kept in the URL query for resumability. All
// state transitions live in state.ts; all markup in views.ts; this file only
// wires events to API calls and re-renders.

import { ApiError, LabApi } from "./api.js";
import { attachEquation } from "./cards.js";
import { plotSvg } from "./plots.js";
import { rawNumberLiteral } from "./raw.js";
import {
  applyGraphs,
  applyOverview,
  applyQuestion,
  applyUnlock,
  beginFit,
  canConfirmUnlock,
  createView,
  failFit,
  finishFit,
  questionReady,
  questionRequest,
  requestSplit,
  toggleSelected,
  updateRequest,
  type SessionView,
} from "./state.js";
import type { PlotKind, SplitName, Stype, Task } from "./types.js";
import {
  analysisView,
  fitSteerView,
  questionBuilderView,
  unlockDialogHtml,
} from "./views.js";

type Tab = "question" | "fit" | "analysis";

const api = new LabApi("");
const view: SessionView = createView();
let tab: Tab = "question";
let dialogOpen = false;
let signif = 6;
let roundsToRun = 1;
let autoUpdate = false;
let focusedGraph: number | null = null;
let panels: Partial<Record<PlotKind, string>> = {};
let equationText: string | null = null;

function app(): HTMLElement {
  const el = document.getElementById("app");
  if (!el) throw new Error("missing #app mount point");
  return el;
}

function columns(): [string, Stype][] {
  const label = view.datasetLabel;
  if (!label || !view.overview) return [];
  return view.overview.datasets[label]?.manifest.columns ?? [];
}

function render(): void {
  const tabs = (["question", "fit", "analysis"] as Tab[])
    .map(
      (t) =>
        `<button class="tab${t === tab ? " active" : ""}" data-action="tab" data-tab="${t}">${t}</button>`,
    )
    .join("");
  const body =
    view.overview === null || !Object.keys(view.overview.datasets).length
      ? dataLoaderHtml()
      : tab === "question"
        ? questionBuilderView(view, columns())
        : tab === "fit"
          ? fitSteerView(view)
          : analysisView(view, panels, equationText, signif);
  app().innerHTML = `<header class="topbar"><h1>symlattice lab</h1>
<span class="session">${view.sessionId ?? ""}</span><nav>${tabs}</nav></header>
${body}
${dialogOpen ? unlockDialogHtml(view) : ""}`;
}

function dataLoaderHtml(): string {
  return `<section class="view data-loader">
<h2>Load a dataset</h2>
<p>Pick a CSV file; a train/valid/holdout split is drawn on load.</p>
<input type="file" accept=".csv,text/csv" data-action="pick-csv"/>
<label>Stratify by <input type="text" data-action="stratify" placeholder="column (optional)"/></label>
${view.lastError ? `<p class="error" role="alert">${view.lastError}</p>` : ""}
</section>`;
}

function showError(err: unknown): void {
  view.lastError = err instanceof Error ? err.message : String(err);
  render();
}

async function refreshOverview(): Promise<void> {
  if (!view.sessionId) return;
  const ov = await api.overview(view.sessionId);
  applyOverview(view, ov.data);
}

async function refreshGallery(): Promise<void> {
  if (!view.sessionId || !view.pool) return;
  const graphs = await api.graphs(view.sessionId, view.pool.id);
  applyGraphs(view, graphs);
  const top = view.cards[0];
  if (top) {
    const eq = await api.equation(view.sessionId, view.pool.id, top.id, signif);
    attachEquation(view.cards, eq.data);
  }
}

async function submitQuestion(): Promise<void> {
  if (!view.sessionId || !questionReady(view)) return;
  const resp = await api.poseQuestion(view.sessionId, questionRequest(view));
  applyQuestion(view, resp.data);
  tab = "fit";
}

async function runFit(): Promise<void> {
  if (!view.sessionId || !view.pool || !beginFit(view)) return;
  render();
  try {
    // one request in flight at a time; the gallery refreshes every round
    for (let i = 0; i < roundsToRun; i++) {
      const resp = await api.fit(view.sessionId, view.pool.id, {
        rounds: 1,
        auto_update: autoUpdate,
      });
      view.rounds.push(...resp.data.rounds);
      await refreshGallery();
      render();
    }
    finishFit(view, []);
  } catch (err) {
    failFit(view, err instanceof Error ? err.message : String(err));
  }
  render();
}

async function reinforce(): Promise<void> {
  if (!view.sessionId) return;
  await api.update(view.sessionId, updateRequest(view));
  view.selected = new Set();
}

async function renderPlots(): Promise<void> {
  if (!view.sessionId || !view.pool) return;
  const gid = focusedGraph ?? view.cards[0]?.id;
  if (gid === undefined) return;
  const sid = view.sessionId;
  const pid = view.pool.id;
  const dataset: SplitName = view.split;
  panels = {};
  const kinds: PlotKind[] = ["roc", "probability_scores", "partial2d", "segmented_loss"];
  for (const kind of kinds) {
    if (view.pool.task !== "classifier" && kind !== "segmented_loss" && kind !== "partial2d") continue;
    try {
      const resp = await api.plot(sid, pid, gid, kind, { dataset });
      const aucText = rawNumberLiteral(resp.raw, "auc") ?? undefined;
      panels[kind] = plotSvg(resp.data, { aucText });
    } catch (err) {
      if (err instanceof ApiError) {
        panels[kind] = `<p class="error">${err.type}: ${err.message}</p>`;
      } else {
        throw err;
      }
    }
  }
  const eq = await api.equation(sid, pid, gid, signif);
  equationText = eq.data.equation;
}

async function loadCsvFile(file: File, stratifyBy: string): Promise<void> {
  if (!view.sessionId) return;
  const text = await file.text();
  const split = stratifyBy
    ? { fractions: [0.6, 0.2, 0.2], stratify_by: stratifyBy, seed: 1 }
    : { fractions: [0.6, 0.2, 0.2], seed: 1 };
  await api.loadData(view.sessionId, { csv: text, split, label: file.name });
  await refreshOverview();
}

function onAction(target: HTMLElement): void {
  const action = target.dataset.action ?? target.dataset.tab;
  const run = (p: Promise<void>) => p.then(render).catch(showError);
  switch (target.dataset.action) {
    case "tab":
      tab = (target.dataset.tab as Tab) ?? "question";
      if (tab === "analysis") run(renderPlots());
      else render();
      break;
    case "toggle-input": {
      const name = target.dataset.name ?? "";
      const at = view.draft.inputs.indexOf(name);
      if (at >= 0) view.draft.inputs.splice(at, 1);
      else view.draft.inputs.push(name);
      render();
      break;
    }
    case "set-output":
      view.draft.output = (target as HTMLSelectElement).value || null;
      render();
      break;
    case "set-task":
      view.draft.task = (target as HTMLInputElement).value as Task;
      render();
      break;
    case "set-depth":
      view.draft.maxDepth = Number((target as HTMLInputElement).value) || 1;
      break;
    case "set-capacity":
      view.draft.capacity = Number((target as HTMLInputElement).value) || 1;
      break;
    case "add-contains": {
      const feature = (target as HTMLSelectElement).value;
      if (feature) view.draft.filters.push({ type: "contains", feature });
      render();
      break;
    }
    case "add-excludes": {
      const feature = (target as HTMLSelectElement).value;
      if (feature) view.draft.filters.push({ type: "excludes", feature });
      render();
      break;
    }
    case "toggle-kind": {
      const kind = target.dataset.name ?? "";
      const existing = view.draft.filters.find((f) => f.type === "functions");
      if (existing && existing.type === "functions") {
        const at = existing.kinds.indexOf(kind);
        if (at >= 0) existing.kinds.splice(at, 1);
        else existing.kinds.push(kind);
        if (!existing.kinds.length) {
          view.draft.filters = view.draft.filters.filter((f) => f.type !== "functions");
        }
      } else {
        view.draft.filters.push({ type: "functions", kinds: [kind] });
      }
      render();
      break;
    }
    case "drop-filter":
      view.draft.filters.splice(Number(target.dataset.index), 1);
      render();
      break;
    case "submit-question":
      run(submitQuestion());
      break;
    case "set-rounds":
      roundsToRun = Math.max(1, Number((target as HTMLInputElement).value) || 1);
      break;
    case "toggle-auto-update":
      autoUpdate = (target as HTMLInputElement).checked;
      break;
    case "run-fit":
    case "retry-fit":
      void runFit();
      break;
    case "reinforce":
      run(reinforce().then(refreshOverview));
      break;
    case "toggle-card":
      toggleSelected(view, Number(target.dataset.id));
      render();
      break;
    case "set-split": {
      const change = requestSplit(view, (target as HTMLSelectElement).value as SplitName);
      if (!change.allowed) {
        dialogOpen = true;
        render();
      } else {
        run(renderPlots());
      }
      break;
    }
    case "set-signif":
      signif = Math.min(17, Math.max(1, Number((target as HTMLInputElement).value) || 6));
      run(renderPlots());
      break;
    case "open-unlock":
      dialogOpen = true;
      render();
      break;
    case "unlock-typed":
      view.unlockTyped = (target as HTMLInputElement).value;
      render();
      break;
    case "cancel-unlock":
      dialogOpen = false;
      view.unlockTyped = "";
      render();
      break;
    case "confirm-unlock":
      if (!canConfirmUnlock(view) || !view.sessionId) break;
      run(
        api.unlockHoldout(view.sessionId).then(() => {
          applyUnlock(view);
          dialogOpen = false;
        }),
      );
      break;
    case "pick-csv": {
      const input = target as HTMLInputElement;
      const file = input.files?.[0];
      const stratify =
        (document.querySelector('[data-action="stratify"]') as HTMLInputElement | null)?.value ?? "";
      if (file) run(loadCsvFile(file, stratify.trim()));
      break;
    }
    default:
      if (action === undefined) return;
  }
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const sid = params.get("session");
  if (sid) {
    view.sessionId = sid;
    await refreshOverview();
  } else {
    const created = await api.createSession();
    view.sessionId = created.data.session_id;
    params.set("session", view.sessionId);
    window.history.replaceState(null, "", `?${params.toString()}`);
  }
  render();
}

document.addEventListener("click", (ev) => {
  const el = (ev.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (el && el.dataset.action !== "unlock-typed") onAction(el);
});
document.addEventListener("change", (ev) => {
  const el = ev.target as HTMLElement;
  if (el.dataset.action) onAction(el);
});
document.addEventListener("input", (ev) => {
  const el = ev.target as HTMLElement;
  if (el.dataset.action === "unlock-typed") onAction(el);
});

boot().catch((err) => {
  app().innerHTML = `<p class="error">${err instanceof Error ? err.message : String(err)}</p>`;
});
