// Full lab loop against a live service process: create a session, load the
// tumor table, pose the two-feature question, run five rounds, verify the
// gallery shows payload bytes verbatim, render every plot kind, and walk the
// holdout unlock gate front to back.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { createServer } from "node:net";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, LabApi, type RawJson } from "../src/api.js";
import { attachEquation } from "../src/cards.js";
import { plotSvg } from "../src/plots.js";
import { rawNumberLiteral } from "../src/raw.js";
import {
  CONFIRM_PHRASE,
  applyGraphs,
  applyOverview,
  applyQuestion,
  applyUnlock,
  beginFit,
  canConfirmUnlock,
  createView,
  finishFit,
  questionReady,
  questionRequest,
  requestSplit,
  sparklineSeries,
  toggleSelected,
  updateRequest,
} from "../src/state.js";
import type { GraphsResponse, PlotResponse } from "../src/types.js";
import { cardHtml, sparklineSvg } from "../src/views.js";
import { fixture } from "./helpers/fixtures.js";

const HERE = dirname(fileURLToPath(import.meta.url));

let server: ChildProcess | undefined;
let serverLog = "";
let api: LabApi;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

async function waitReady(url: string, deadlineMs: number): Promise<void> {
  const until = Date.now() + deadlineMs;
  let lastErr: unknown = null;
  while (Date.now() < until) {
    try {
      const res = await fetch(url);
      if (res.ok) return;
      lastErr = new Error(`status ${res.status}`);
    } catch (err) {
      lastErr = err;
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error(`service not ready: ${lastErr}\n${serverLog}`);
}

beforeAll(async () => {
  const port = await freePort();
  server = spawn("symlattice", ["serve", "--host", "127.0.0.1", "--port", String(port)], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  server.stdout?.on("data", (d: Buffer) => {
    serverLog += d.toString();
  });
  server.stderr?.on("data", (d: Buffer) => {
    serverLog += d.toString();
  });
  await waitReady(`http://127.0.0.1:${port}/v1/sessions`, 30_000);
  api = new LabApi(`http://127.0.0.1:${port}`);
}, 60_000);

afterAll(async () => {
  if (server && server.exitCode === null) {
    const gone = new Promise((r) => server!.once("exit", r));
    server.kill("SIGTERM");
    await gone;
  }
});

function tumorCsv(): string {
  return execFileSync("python3", [join(HERE, "helpers", "bc_csv.py")], {
    maxBuffer: 16 * 1024 * 1024,
  }).toString();
}

// deterministic normals for the product-recovery table
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function regressionCsv(seed: number, n: number): string {
  const rand = mulberry32(seed);
  const normal = () => {
    const u = Math.max(rand(), 1e-12);
    const v = rand();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  };
  const lines = ["x0,x1,x2,x3,x4,y"];
  for (let i = 0; i < n; i++) {
    const row = [normal(), normal(), normal(), normal(), normal()];
    const y = row[0]! * row[1]! + 0.01 * normal();
    lines.push([...row, y].map((v) => v.toPrecision(17)).join(","));
  }
  return lines.join("\n") + "\n";
}

describe("live lab session", () => {
  it(
    "runs the question-fit-analyze loop with byte-faithful display",
    async () => {
      const view = createView();

      // boot: fresh session, id adopted into the view
      const created = await api.createSession({ seed: 13 });
      view.sessionId = created.data.session_id;
      expect(created.data.lattice.width).toBe(8);

      // load the tumor table with a stratified three-way split
      const loaded = await api.loadData(view.sessionId, {
        csv: tumorCsv(),
        split: { fractions: [0.6, 0.2, 0.2], stratify_by: "target", seed: 1 },
        label: "tumors",
      });
      expect(loaded.data.sizes).toEqual({ train: 341, valid: 114, holdout: 114 });
      const ov = await api.overview(view.sessionId);
      applyOverview(view, ov.data);
      expect(view.datasetLabel).toBe("tumors");

      // question builder: submit disabled until inputs are picked
      expect(questionReady(view)).toBe(false);
      view.draft.inputs = ["mean area", "mean concave points"];
      view.draft.output = "target";
      view.draft.maxDepth = 1;
      view.draft.capacity = 50;
      expect(questionReady(view)).toBe(true);
      const posed = await api.poseQuestion(view.sessionId, questionRequest(view));
      applyQuestion(view, posed.data);
      expect(view.pool!.task).toBe("classifier");

      // five rounds; one request in flight at a time; gallery refreshes each round
      let gallery: RawJson<GraphsResponse> | undefined;
      for (let round = 0; round < 5; round++) {
        expect(beginFit(view)).toBe(true);
        expect(beginFit(view)).toBe(false); // guard: no concurrent fit
        const fit = await api.fit(view.sessionId, view.pool!.id, { rounds: 1 });
        finishFit(view, fit.data.rounds);
        gallery = await api.graphs(view.sessionId, view.pool!.id, 8);
        applyGraphs(view, gallery);
        expect(view.cards.length).toBeGreaterThan(0);
        expect(view.cards.map((c) => c.id)).toEqual(gallery.data.graphs.map((g) => g.id));
      }
      expect(view.rounds.length).toBe(5);
      expect(sparklineSeries(view).length).toBe(5);

      // the top hypothesis card shows the wire bytes, not a reformatted double
      const top = view.cards[0]!;
      expect(top.fitted).toBe(true);
      expect(gallery!.raw).toContain(`"id":${top.id},"fitted":true,"value":${top.lossText},`);
      const eq = await api.equation(view.sessionId, view.pool!.id, top.id, 6);
      attachEquation(view.cards, eq.data);
      expect(top.equationPreview).toBe(eq.data.equation);
      expect(eq.raw).toContain(`"equation":"${top.equationPreview}"`);
      const markup = cardHtml(top, false);
      expect(markup).toContain(top.lossText);
      expect(top.equationPreview!.startsWith("logistic(")).toBe(true);

      // reinforce exactly the checked card
      toggleSelected(view, top.id);
      const updated = await api.update(view.sessionId, updateRequest(view));
      expect(updated.data.updated).toBe(1);

      // all four plot kinds render from the recorded fixtures
      const marks: Record<string, string> = {
        "plot_roc.json": 'class="curve"',
        "plot_probability_scores.json": 'class="bar1"',
        "plot_partial2d.json": 'class="cell"',
        "plot_segmented_loss.json": 'class="seg"',
      };
      for (const [name, mark] of Object.entries(marks)) {
        const fx = fixture<PlotResponse>(name);
        const svg = plotSvg(fx.data, {
          aucText: rawNumberLiteral(fx.raw, "auc") ?? undefined,
        });
        expect(svg.startsWith("<svg")).toBe(true);
        expect(svg).toContain(mark);
      }

      // live ROC on valid: the AUC shown is the payload literal itself
      const roc = await api.plot(view.sessionId, view.pool!.id, top.id, "roc", {
        dataset: "valid",
      });
      const aucText = rawNumberLiteral(roc.raw, "auc")!;
      expect(roc.raw).toContain(`"auc":${aucText}`);
      expect(plotSvg(roc.data, { aucText })).toContain(`ROC curve (AUC = ${aucText})`);

      // holdout is refused at the view and over the wire until unlocked
      expect(requestSplit(view, "holdout").allowed).toBe(false);
      const denied = await api
        .plot(view.sessionId, view.pool!.id, top.id, "roc", { dataset: "holdout" })
        .catch((e: unknown) => e);
      expect(denied).toBeInstanceOf(ApiError);
      expect((denied as ApiError).status).toBe(409);
      expect((denied as ApiError).type).toBe("HoldoutLockedError");

      // the confirm flow demands the exact typed phrase
      view.unlockTyped = "unlock";
      expect(canConfirmUnlock(view)).toBe(false);
      view.unlockTyped = CONFIRM_PHRASE;
      expect(canConfirmUnlock(view)).toBe(true);
      const unlocked = await api.unlockHoldout(view.sessionId);
      expect(unlocked.data.holdout_unlocked).toBe(true);
      expect(unlocked.data.already_unlocked).toBe(false);
      applyUnlock(view);
      expect(requestSplit(view, "holdout").allowed).toBe(true);

      const held = await api.plot(view.sessionId, view.pool!.id, top.id, "roc", {
        dataset: "holdout",
      });
      expect(held.data.meta.split).toBe("holdout");
      const heldAuc = rawNumberLiteral(held.raw, "auc")!;
      expect(plotSvg(held.data, { aucText: heldAuc })).toContain(heldAuc);
    },
    120_000,
  );

  it(
    "best loss descends across auto-update rounds on the product-recovery table",
    async () => {
      const view = createView();
      const created = await api.createSession({ seed: 6 });
      view.sessionId = created.data.session_id;
      await api.loadData(view.sessionId, {
        csv: regressionCsv(6, 400),
        split: { fractions: [0.8, 0.2, 0.0], seed: 6 },
        label: "product",
      });
      const ov = await api.overview(view.sessionId);
      applyOverview(view, ov.data);
      view.draft.inputs = ["x0", "x1", "x2", "x3", "x4"];
      view.draft.output = "y";
      view.draft.task = "regressor";
      view.draft.maxDepth = 1;
      const posed = await api.poseQuestion(view.sessionId, questionRequest(view));
      applyQuestion(view, posed.data);

      for (let round = 0; round < 10; round++) {
        expect(beginFit(view)).toBe(true);
        const fit = await api.fit(view.sessionId, view.pool!.id, {
          rounds: 1,
          auto_update: true,
        });
        finishFit(view, fit.data.rounds);
      }
      const series = sparklineSeries(view);
      expect(series.length).toBe(10);
      // non-increasing up to optimizer convergence jitter: each step may rise
      // by at most 1e-3 absolute, three orders below the total descent
      for (let i = 0; i + 1 < series.length; i++) {
        expect(series[i + 1]!).toBeLessThanOrEqual(series[i]! + 1e-3);
      }
      expect(series[series.length - 1]!).toBeLessThan(0.05);
      expect(series[series.length - 1]!).toBeLessThan(series[0]! / 4);
      const svg = sparklineSvg(view);
      expect(svg.match(/points="([^"]+)"/)![1]!.split(" ").length).toBe(10);
    },
    120_000,
  );
});
