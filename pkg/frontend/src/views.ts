// HTML builders for the three lab views.
//
// Pure string functions of the view state plus prerendered SVG panels, so the
// markup is testable without a DOM. main.ts owns event wiring via data-action
// attributes.

import type { PlotKind, Stype } from "./types.js";
import type { HypothesisCard } from "./cards.js";
import {
  CONFIRM_PHRASE,
  HOLDOUT_WARNING,
  canConfirmUnlock,
  questionReady,
  sparklineSeries,
  type SessionView,
} from "./state.js";
import { esc } from "./plots.js";

const TASKS = ["classifier", "regressor"] as const;
const KINDS = [
  "add",
  "multiply",
  "squared",
  "linear",
  "tanh",
  "gaussian1",
  "gaussian2",
  "exp",
  "log",
  "inverse",
];

function checkbox(action: string, name: string, checked: boolean, label: string): string {
  return (
    `<label class="check"><input type="checkbox" data-action="${action}" ` +
    `data-name="${esc(name)}"${checked ? " checked" : ""}/> ${esc(label)}</label>`
  );
}

export function questionBuilderView(view: SessionView, columns: [string, Stype][]): string {
  const draft = view.draft;
  const inputBoxes = columns
    .filter(([name]) => name !== draft.output)
    .map(([name, stype]) =>
      checkbox("toggle-input", name, draft.inputs.includes(name), `${name} (${stype})`),
    )
    .join("");
  const targetOptions = columns
    .map(
      ([name]) =>
        `<option value="${esc(name)}"${name === draft.output ? " selected" : ""}>${esc(name)}</option>`,
    )
    .join("");
  const taskRadios = TASKS.map(
    (t) =>
      `<label><input type="radio" name="task" data-action="set-task" value="${t}"` +
      `${draft.task === t ? " checked" : ""}/> ${t}</label>`,
  ).join(" ");
  const kindBoxes = KINDS.map((k) => {
    const active = draft.filters.some(
      (f) => f.type === "functions" && f.kinds.includes(k),
    );
    return checkbox("toggle-kind", k, active, k);
  }).join("");
  const chips = draft.filters
    .map((f, i) => {
      const text =
        f.type === "contains"
          ? `contains ${f.feature}`
          : f.type === "excludes"
            ? `excludes ${f.feature}`
            : f.type === "max_depth"
              ? `max depth ${f.depth}`
              : `functions: ${f.kinds.join(", ")}`;
      return `<span class="chip">${esc(text)}<button data-action="drop-filter" data-index="${i}">x</button></span>`;
    })
    .join("");
  const ready = questionReady(view);
  return `<section class="view question-builder">
<h2>Ask a question</h2>
<div class="field"><h3>Inputs</h3><div class="columns">${inputBoxes}</div></div>
<div class="field"><label>Target
<select data-action="set-output"><option value=""></option>${targetOptions}</select></label></div>
<div class="field"><h3>Task</h3>${taskRadios}</div>
<div class="field"><label>Max depth
<input type="number" min="1" max="6" value="${draft.maxDepth}" data-action="set-depth"/></label>
<label>Capacity
<input type="number" min="1" max="1000" value="${draft.capacity}" data-action="set-capacity"/></label></div>
<div class="field"><h3>Must contain</h3>
<select data-action="add-contains"><option value=""></option>${targetOptions}</select>
<h3>Must exclude</h3>
<select data-action="add-excludes"><option value=""></option>${targetOptions}</select></div>
<div class="field"><h3>Allowed interactions</h3><div class="columns">${kindBoxes}</div></div>
<div class="chips">${chips}</div>
<button class="primary" data-action="submit-question"${ready ? "" : " disabled"}>Sample hypotheses</button>
</section>`;
}

/** Tiny loss-per-round polyline; geometry only, no numeric labels. */
export function sparklineSvg(view: SessionView): string {
  const series = sparklineSeries(view);
  if (series.length < 2) return `<svg class="sparkline" viewBox="0 0 120 28"></svg>`;
  const lo = Math.min(...series);
  const hi = Math.max(...series);
  const span = hi - lo || 1;
  const step = 112 / (series.length - 1);
  const pts = series
    .map((v, i) => `${(4 + i * step).toFixed(1)},${(24 - ((v - lo) / span) * 20).toFixed(1)}`)
    .join(" ");
  return (
    `<svg class="sparkline" viewBox="0 0 120 28">` +
    `<polyline points="${pts}" fill="none" stroke="#2a6fb0" stroke-width="1.5"/></svg>`
  );
}

export function cardHtml(card: HypothesisCard, selected: boolean): string {
  const eq = card.equationPreview
    ? `<code class="equation-preview">${esc(card.equationPreview)}</code>`
    : "";
  return `<article class="card" data-graph-id="${card.id}">
<header><label><input type="checkbox" data-action="toggle-card" data-id="${card.id}"${selected ? " checked" : ""}/> #${card.id}</label>
<span class="loss" title="loss">${esc(card.lossText)}</span></header>
${card.sketch}
<footer><span>depth ${card.depth}</span><span>k=${card.paramCount}</span><code>${esc(card.structureHash.slice(0, 10))}</code></footer>
${eq}
</article>`;
}

export function galleryHtml(view: SessionView): string {
  if (!view.cards.length) return `<p class="empty">No hypotheses fitted yet.</p>`;
  return `<div class="gallery">${view.cards
    .map((c) => cardHtml(c, view.selected.has(c.id)))
    .join("")}</div>`;
}

export function fitSteerView(view: SessionView): string {
  const running = view.fitInFlight;
  const hasSelection = view.selected.size > 0;
  return `<section class="view fit-steer">
<h2>Fit and steer</h2>
<div class="controls">
<label>Rounds <input type="number" min="1" max="50" value="1" data-action="set-rounds"/></label>
<label><input type="checkbox" data-action="toggle-auto-update"/> auto-update lattice</label>
<button class="primary" data-action="run-fit"${running || !view.pool ? " disabled" : ""}>${running ? "Running…" : "Run rounds"}</button>
${sparklineSvg(view)}
<button data-action="reinforce"${hasSelection && !running ? "" : " disabled"}>Reinforce (${view.selected.size})</button>
</div>
${view.lastError ? `<p class="error" role="alert">${esc(view.lastError)} <button data-action="retry-fit">retry</button></p>` : ""}
${galleryHtml(view)}
</section>`;
}

export function splitSelectorHtml(view: SessionView): string {
  const options = (["train", "valid", "holdout"] as const)
    .map((s) => {
      const locked = s === "holdout" && !view.holdoutUnlocked;
      return (
        `<option value="${s}"${s === view.split ? " selected" : ""}` +
        `${locked ? " disabled" : ""}>${s}${locked ? " (locked)" : ""}</option>`
      );
    })
    .join("");
  const note = view.holdoutUnlocked
    ? ""
    : `<p class="note">Holdout is locked: ${esc(HOLDOUT_WARNING)}</p>`;
  return `<label>Dataset <select data-action="set-split">${options}</select></label>
${view.holdoutUnlocked ? "" : `<button data-action="open-unlock">Unlock holdout…</button>`}${note}`;
}

export function unlockDialogHtml(view: SessionView): string {
  return `<dialog class="unlock" open>
<h3>Spend the holdout?</h3>
<blockquote>${esc(HOLDOUT_WARNING)}</blockquote>
<p>Type <strong>${esc(CONFIRM_PHRASE)}</strong> to confirm. This cannot be undone.</p>
<input type="text" data-action="unlock-typed" value="${esc(view.unlockTyped)}" placeholder="${esc(CONFIRM_PHRASE)}"/>
<button class="danger" data-action="confirm-unlock"${canConfirmUnlock(view) ? "" : " disabled"}>Unlock</button>
<button data-action="cancel-unlock">Cancel</button>
</dialog>`;
}

export function analysisView(
  view: SessionView,
  panels: Partial<Record<PlotKind, string>>,
  equation: string | null,
  signif: number,
): string {
  const panel = (kind: PlotKind, title: string) =>
    `<figure class="panel" data-kind="${kind}"><figcaption>${esc(title)}</figcaption>${panels[kind] ?? '<p class="empty">not rendered</p>'}</figure>`;
  return `<section class="view analysis">
<h2>Analysis</h2>
<div class="controls">${splitSelectorHtml(view)}
<label>signif <input type="number" min="1" max="17" value="${signif}" data-action="set-signif"/></label></div>
${panel("roc", "ROC")}
${panel("probability_scores", "Probability scores")}
${panel("partial2d", "Partial dependence")}
${panel("segmented_loss", "Segmented loss")}
<div class="equation-box"><h3>Equation</h3>${equation ? `<code class="equation">${esc(equation)}</code>` : '<p class="empty">pick a hypothesis</p>'}</div>
</section>`;
}
