// SVG renderers for the four diagnostic payloads.
//
// Each builder is a pure function of one PlotData JSON payload: same payload,
// same markup. The only arithmetic here is axis scaling; displayed statistics
// (the AUC in the ROC title) are passed in as raw payload literals, never
// reformatted.

import type {
  Partial2dPayload,
  PlotMeta,
  PlotResponse,
  ProbabilityScoresPayload,
  RocPayload,
  SegmentedLossNumericPayload,
  SegmentedLossPayload,
} from "./types.js";

export const PLOT_WIDTH = 640;
export const PLOT_HEIGHT = 440;

const MARGIN = { left: 64, right: 20, top: 36, bottom: 48 };
const AREA_W = PLOT_WIDTH - MARGIN.left - MARGIN.right;
const AREA_H = PLOT_HEIGHT - MARGIN.top - MARGIN.bottom;

const CLASS0_COLOR = "#2a6fb0";
const CLASS1_COLOR = "#d62728";
const NEUTRAL_COLOR = "#888888";
const BAR_COLOR = "#b8c4cf";
const LOSS_COLOR = "#c0392b";
const HEAT_LOW: [number, number, number] = [26, 35, 126];
const HEAT_HIGH: [number, number, number] = [249, 231, 76];

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function px(v: number): string {
  // fixed decimals keep snapshots byte-stable
  return v.toFixed(2);
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(2);
  return String(Number(v.toPrecision(4)));
}

interface Scale {
  (v: number): number;
  lo: number;
  hi: number;
}

function linear(lo: number, hi: number, rlo: number, rhi: number): Scale {
  const span = hi - lo || 1;
  const f = ((v: number) => rlo + ((v - lo) / span) * (rhi - rlo)) as Scale;
  f.lo = lo;
  f.hi = hi;
  return f;
}

function tickValues(lo: number, hi: number, want = 5): number[] {
  const span = hi - lo;
  if (!(span > 0)) return [lo];
  const rough = span / want;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (mag * m >= rough) {
      step = mag * m;
      break;
    }
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

function frame(
  title: string,
  xs: Scale,
  ys: Scale,
  xLabel: string,
  yLabel: string,
  body: string,
  opts: { xTickLabels?: [number, string][] } = {},
): string {
  const left = MARGIN.left;
  const top = MARGIN.top;
  const bottom = top + AREA_H;
  const right = left + AREA_W;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${PLOT_WIDTH} ${PLOT_HEIGHT}" ` +
      `font-family="system-ui, sans-serif" font-size="12">`,
  );
  parts.push(`<rect x="0" y="0" width="${PLOT_WIDTH}" height="${PLOT_HEIGHT}" fill="none"/>`);
  parts.push(
    `<text x="${px(left + AREA_W / 2)}" y="20" text-anchor="middle" font-size="14">${esc(title)}</text>`,
  );
  // axes
  parts.push(
    `<line x1="${left}" y1="${bottom}" x2="${right}" y2="${bottom}" stroke="currentColor" stroke-width="1"/>`,
  );
  parts.push(
    `<line x1="${left}" y1="${top}" x2="${left}" y2="${bottom}" stroke="currentColor" stroke-width="1"/>`,
  );
  if (opts.xTickLabels) {
    for (const [v, label] of opts.xTickLabels) {
      const x = xs(v);
      parts.push(`<line x1="${px(x)}" y1="${bottom}" x2="${px(x)}" y2="${bottom + 4}" stroke="currentColor"/>`);
      parts.push(
        `<text x="${px(x)}" y="${bottom + 18}" text-anchor="middle" class="tick">${esc(label)}</text>`,
      );
    }
  } else {
    for (const v of tickValues(xs.lo, xs.hi)) {
      const x = xs(v);
      parts.push(`<line x1="${px(x)}" y1="${bottom}" x2="${px(x)}" y2="${bottom + 4}" stroke="currentColor"/>`);
      parts.push(
        `<text x="${px(x)}" y="${bottom + 18}" text-anchor="middle" class="tick">${esc(fmtTick(v))}</text>`,
      );
    }
  }
  for (const v of tickValues(ys.lo, ys.hi)) {
    const y = ys(v);
    parts.push(`<line x1="${left - 4}" y1="${px(y)}" x2="${left}" y2="${px(y)}" stroke="currentColor"/>`);
    parts.push(
      `<text x="${left - 8}" y="${px(y + 4)}" text-anchor="end" class="tick">${esc(fmtTick(v))}</text>`,
    );
  }
  parts.push(
    `<text x="${px(left + AREA_W / 2)}" y="${PLOT_HEIGHT - 10}" text-anchor="middle">${esc(xLabel)}</text>`,
  );
  parts.push(
    `<text x="16" y="${px(top + AREA_H / 2)}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${px(top + AREA_H / 2)})">${esc(yLabel)}</text>`,
  );
  parts.push(body);
  parts.push("</svg>");
  return parts.join("");
}

function polyline(points: [number, number][], attrs: string): string {
  const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
  return `<polyline points="${pts}" fill="none" ${attrs}/>`;
}

/** ROC curve with the raw payload AUC literal in the title. */
export function rocSvg(payload: RocPayload, aucText: string): string {
  const xs = linear(0, 1, MARGIN.left, MARGIN.left + AREA_W);
  const ys = linear(0, 1, MARGIN.top + AREA_H, MARGIN.top);
  const body: string[] = [];
  body.push(
    polyline(
      [
        [xs(0), ys(0)],
        [xs(1), ys(1)],
      ],
      `stroke="${NEUTRAL_COLOR}" stroke-dasharray="5 4" class="chance"`,
    ),
  );
  const pts: [number, number][] = payload.fpr.map((f, i) => [xs(f), ys(payload.tpr[i] ?? 0)]);
  body.push(polyline(pts, `stroke="${CLASS0_COLOR}" stroke-width="2" class="curve"`));
  return frame(
    `ROC curve (AUC = ${aucText})`,
    xs,
    ys,
    "false positive rate",
    "true positive rate",
    body.join(""),
  );
}

/** Per-class score histograms over shared [0, 1] bins. */
export function probabilityScoresSvg(payload: ProbabilityScoresPayload): string {
  const edges = payload.edges;
  const peak = Math.max(1, ...payload.counts0, ...payload.counts1);
  const xs = linear(edges[0] ?? 0, edges[edges.length - 1] ?? 1, MARGIN.left, MARGIN.left + AREA_W);
  const ys = linear(0, peak, MARGIN.top + AREA_H, MARGIN.top);
  const body: string[] = [];
  const bars = (counts: number[], color: string, cls: string) => {
    for (let i = 0; i < counts.length; i++) {
      const count = counts[i] ?? 0;
      if (count === 0) continue;
      const x0 = xs(edges[i] ?? 0);
      const x1 = xs(edges[i + 1] ?? 1);
      const y = ys(count);
      body.push(
        `<rect class="${cls}" x="${px(x0)}" y="${px(y)}" width="${px(x1 - x0)}" ` +
          `height="${px(ys(0) - y)}" fill="${color}" fill-opacity="0.55"/>`,
      );
    }
  };
  bars(payload.counts0, CLASS0_COLOR, "bar0");
  bars(payload.counts1, CLASS1_COLOR, "bar1");
  // legend
  const lx = MARGIN.left + AREA_W - 110;
  body.push(`<rect x="${lx}" y="${MARGIN.top + 6}" width="12" height="12" fill="${CLASS0_COLOR}" class="swatch"/>`);
  body.push(`<text x="${lx + 18}" y="${MARGIN.top + 16}">class 0</text>`);
  body.push(`<rect x="${lx}" y="${MARGIN.top + 24}" width="12" height="12" fill="${CLASS1_COLOR}" class="swatch"/>`);
  body.push(`<text x="${lx + 18}" y="${MARGIN.top + 34}">class 1</text>`);
  return frame("probability scores", xs, ys, "score", "count", body.join(""));
}

/** Cell bounds around sample points: halfway to each neighbor. */
export function cellBounds(centers: number[]): number[] {
  if (centers.length === 1) {
    const c = centers[0] ?? 0;
    return [c - 0.5, c + 0.5];
  }
  const mids: number[] = [];
  for (let i = 0; i + 1 < centers.length; i++) {
    mids.push(((centers[i] ?? 0) + (centers[i + 1] ?? 0)) / 2);
  }
  const first = 2 * (centers[0] ?? 0) - (mids[0] ?? 0);
  const last = 2 * (centers[centers.length - 1] ?? 0) - (mids[mids.length - 1] ?? 0);
  return [first, ...mids, last];
}

function heatColor(t: number): string {
  const clamped = Math.max(0, Math.min(1, t));
  const ch = (i: number) =>
    Math.round((HEAT_LOW[i] ?? 0) + clamped * ((HEAT_HIGH[i] ?? 0) - (HEAT_LOW[i] ?? 0)));
  return `rgb(${ch(0)},${ch(1)},${ch(2)})`;
}

function scatterColor(label: number | null): string {
  if (label === null) return NEUTRAL_COLOR;
  if (label === 0) return CLASS0_COLOR;
  if (label === 1) return CLASS1_COLOR;
  return "#7a52a3";
}

/** Prediction heatmap over two features with the actual samples on top. */
export function partial2dSvg(payload: Partial2dPayload, meta: Pick<PlotMeta, "fx" | "fy">): string {
  const xb = cellBounds(payload.x_edges);
  const yb = cellBounds(payload.y_edges);
  const xs = linear(xb[0] ?? 0, xb[xb.length - 1] ?? 1, MARGIN.left, MARGIN.left + AREA_W);
  const ys = linear(yb[0] ?? 0, yb[yb.length - 1] ?? 1, MARGIN.top + AREA_H, MARGIN.top);
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of payload.grid) {
    for (const v of row) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!Number.isFinite(lo)) {
    lo = 0;
    hi = 1;
  }
  const span = hi - lo || 1;
  const body: string[] = [];
  for (let iy = 0; iy < payload.grid.length; iy++) {
    const row = payload.grid[iy] ?? [];
    for (let ix = 0; ix < row.length; ix++) {
      const x0 = xs(xb[ix] ?? 0);
      const x1 = xs(xb[ix + 1] ?? 0);
      const y0 = ys(yb[iy + 1] ?? 0);
      const y1 = ys(yb[iy] ?? 0);
      body.push(
        `<rect class="cell" x="${px(x0)}" y="${px(y0)}" width="${px(x1 - x0)}" ` +
          `height="${px(y1 - y0)}" fill="${heatColor(((row[ix] ?? 0) - lo) / span)}"/>`,
      );
    }
  }
  for (const p of payload.scatter) {
    body.push(
      `<circle class="dot" cx="${px(xs(p.x))}" cy="${px(ys(p.y))}" r="3" ` +
        `fill="${scatterColor(p.label)}" stroke="white" stroke-width="0.6"/>`,
    );
  }
  return frame("partial dependence", xs, ys, meta.fx ?? "x", meta.fy ?? "y", body.join(""));
}

function isNumericSegments(p: SegmentedLossPayload): p is SegmentedLossNumericPayload {
  return (p as SegmentedLossNumericPayload).edges !== undefined;
}

/** Count histogram with the mean-loss curve overlaid on its own scale. */
export function segmentedLossSvg(payload: SegmentedLossPayload, meta: Pick<PlotMeta, "by">): string {
  const counts = payload.counts;
  const meanLoss = payload.mean_loss;
  const peakCount = Math.max(1, ...counts);
  const losses = meanLoss.filter((v): v is number => v !== null);
  const peakLoss = losses.length ? Math.max(...losses) : 1;
  const lossSpan = peakLoss || 1;

  let xs: Scale;
  let bounds: number[];
  let xTickLabels: [number, string][] | undefined;
  if (isNumericSegments(payload)) {
    bounds = payload.edges;
    xs = linear(bounds[0] ?? 0, bounds[bounds.length - 1] ?? 1, MARGIN.left, MARGIN.left + AREA_W);
  } else {
    bounds = [];
    for (let i = 0; i <= counts.length; i++) bounds.push(i);
    xs = linear(0, Math.max(1, counts.length), MARGIN.left, MARGIN.left + AREA_W);
    xTickLabels = payload.categories.map((name, i) => [i + 0.5, name]);
  }
  const ys = linear(0, peakCount, MARGIN.top + AREA_H, MARGIN.top);
  const lossY = (v: number) => MARGIN.top + AREA_H - (v / lossSpan) * AREA_H;

  const body: string[] = [];
  for (let i = 0; i < counts.length; i++) {
    const count = counts[i] ?? 0;
    if (count === 0) continue;
    const x0 = xs(bounds[i] ?? 0);
    const x1 = xs(bounds[i + 1] ?? 0);
    const y = ys(count);
    body.push(
      `<rect class="seg" x="${px(x0)}" y="${px(y)}" width="${px(x1 - x0)}" ` +
        `height="${px(ys(0) - y)}" fill="${BAR_COLOR}"/>`,
    );
  }
  // mean-loss curve, broken at empty bins; lone points become dots
  let run: [number, number][] = [];
  const flush = () => {
    if (run.length >= 2) {
      body.push(polyline(run, `stroke="${LOSS_COLOR}" stroke-width="2" class="loss"`));
    }
    run = [];
  };
  for (let i = 0; i < meanLoss.length; i++) {
    const v = meanLoss[i];
    if (v === null || v === undefined) {
      flush();
      continue;
    }
    const cx = (xs(bounds[i] ?? 0) + xs(bounds[i + 1] ?? 0)) / 2;
    run.push([cx, lossY(v)]);
    body.push(`<circle class="lossdot" cx="${px(cx)}" cy="${px(lossY(v))}" r="3" fill="${LOSS_COLOR}"/>`);
  }
  flush();
  body.push(
    `<text x="${MARGIN.left + AREA_W}" y="${MARGIN.top + 14}" text-anchor="end" ` +
      `fill="${LOSS_COLOR}">mean loss (peak ${esc(fmtTick(peakLoss))})</text>`,
  );
  return frame(`loss by ${meta.by ?? "feature"}`, xs, ys, meta.by ?? "segment", "count", body.join(""), {
    xTickLabels,
  });
}

export interface PlotOptions {
  /** Raw "auc" literal from the response text; required to title a ROC plot. */
  aucText?: string;
}

/** Render any plot response; dispatches on kind. */
export function plotSvg(plot: PlotResponse, opts: PlotOptions = {}): string {
  switch (plot.kind) {
    case "roc": {
      const payload = plot.payload as RocPayload;
      return rocSvg(payload, opts.aucText ?? String(payload.auc));
    }
    case "probability_scores":
      return probabilityScoresSvg(plot.payload as ProbabilityScoresPayload);
    case "partial2d":
      return partial2dSvg(plot.payload as Partial2dPayload, plot.meta);
    case "segmented_loss":
      return segmentedLossSvg(plot.payload as SegmentedLossPayload, plot.meta);
    default:
      throw new Error(`unknown plot kind: ${(plot as PlotResponse).kind}`);
  }
}
