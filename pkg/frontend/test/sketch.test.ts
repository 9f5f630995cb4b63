import { describe, expect, it } from "vitest";

import { columnOf, sketchSvg } from "../src/sketch.js";
import type { GraphsResponse, GraphStructure } from "../src/types.js";
import { fixture } from "./helpers/fixtures.js";

const graphs = fixture<GraphsResponse>("graphs.json").data.graphs;
const best = graphs[0]!.structure;

function rects(svg: string, role: string): number {
  return (svg.match(new RegExp(`data-role="${role}"`, "g")) ?? []).length;
}

describe("column layout", () => {
  it("puts registers first, interactions by distance, output last", () => {
    const cols = columnOf(best);
    for (const node of best.nodes) {
      const c = cols.get(node.id)!;
      if (node.role === "input-register") expect(c).toBe(0);
      if (node.role === "interaction") expect(c).toBeGreaterThan(0);
    }
    const outCol = best.nodes
      .filter((n) => n.role === "output-register")
      .map((n) => cols.get(n.id)!)[0]!;
    const deepestOther = Math.max(
      ...best.nodes.filter((n) => n.role !== "output-register").map((n) => cols.get(n.id)!),
    );
    expect(outCol).toBe(deepestOther + 1);
  });

  it("layers a two-level chain left to right", () => {
    const structure: GraphStructure = {
      task: "regressor",
      nodes: [
        { id: "in:a", role: "input-register", incoming: [], feature: "a" },
        { id: "in:b", role: "input-register", incoming: [], feature: "b" },
        { id: "n1", role: "interaction", incoming: ["in:a", "in:b"], kind: "multiply" },
        { id: "n2", role: "interaction", incoming: ["n1"], kind: "tanh" },
        { id: "out:y", role: "output-register", incoming: ["n2"], feature: "y" },
      ],
    };
    const cols = columnOf(structure);
    expect(cols.get("in:a")).toBe(0);
    expect(cols.get("n1")).toBe(1);
    expect(cols.get("n2")).toBe(2);
    expect(cols.get("out:y")).toBe(3);
  });

  it("does not hang on a malformed cyclic structure", () => {
    const structure: GraphStructure = {
      task: "regressor",
      nodes: [
        { id: "n1", role: "interaction", incoming: ["n2"], kind: "add" },
        { id: "n2", role: "interaction", incoming: ["n1"], kind: "add" },
        { id: "out:y", role: "output-register", incoming: ["n2"], feature: "y" },
      ],
    };
    expect(() => columnOf(structure)).not.toThrow();
  });
});

describe("sketch svg", () => {
  it("draws every node and every edge", () => {
    const svg = sketchSvg(best);
    const nodeCount = best.nodes.length;
    const edgeCount = best.nodes.reduce((acc, n) => acc + n.incoming.length, 0);
    expect((svg.match(/<rect /g) ?? []).length).toBe(nodeCount);
    expect((svg.match(/<line /g) ?? []).length).toBe(edgeCount);
  });

  it("marks roles so registers and interactions style differently", () => {
    const svg = sketchSvg(best);
    const inputs = best.nodes.filter((n) => n.role === "input-register").length;
    expect(rects(svg, "input-register")).toBe(inputs);
    expect(rects(svg, "output-register")).toBe(1);
    expect(rects(svg, "interaction")).toBe(
      best.nodes.filter((n) => n.role === "interaction").length,
    );
  });

  it("labels interactions by kind and registers by feature", () => {
    const structure: GraphStructure = {
      task: "classifier",
      nodes: [
        { id: "in:x", role: "input-register", incoming: [], feature: "short" },
        { id: "n1", role: "interaction", incoming: ["in:x"], kind: "gaussian1" },
        { id: "out:y", role: "output-register", incoming: ["n1"], feature: "a very long feature name" },
      ],
    };
    const svg = sketchSvg(structure);
    expect(svg).toContain(">short<");
    expect(svg).toContain(">gaussian1<");
    // long names are trimmed with an ellipsis
    expect(svg).toContain("a very lon…");
  });

  it("escapes markup in feature names", () => {
    const structure: GraphStructure = {
      task: "classifier",
      nodes: [
        { id: "in:x", role: "input-register", incoming: [], feature: 'a<b&"c"' },
        { id: "out:y", role: "output-register", incoming: ["in:x"], feature: "y" },
      ],
    };
    const svg = sketchSvg(structure);
    expect(svg).toContain("a&lt;b&amp;");
    expect(svg).not.toContain('a<b&"c"');
  });

  it("matches its golden rendering", () => {
    expect(sketchSvg(best)).toMatchSnapshot();
  });
});
