// Compact left-to-right sketch of one graph structure.
//
// Input registers sit in the first column, interactions are layered by their
// distance from the inputs, and the output register takes the final column.
// Pure function of the structure JSON, so card sketches are snapshot-testable.

import type { GraphStructure, StructureNode } from "./types.js";
import { esc } from "./plots.js";

const NODE_W = 72;
const NODE_H = 24;
const H_GAP = 26;
const V_GAP = 10;
const PAD = 8;

const ROLE_STYLE: Record<StructureNode["role"], { fill: string; stroke: string }> = {
  "input-register": { fill: "#eef3f8", stroke: "#2a6fb0" },
  interaction: { fill: "#ffffff", stroke: "#556068" },
  "output-register": { fill: "#fdf2f0", stroke: "#d62728" },
};

function trim(label: string, max = 11): string {
  return label.length <= max ? label : `${label.slice(0, max - 1)}…`;
}

function nodeLabel(node: StructureNode): string {
  if (node.role === "interaction") return node.kind ?? "?";
  return node.feature ?? node.id;
}

/** Column index per node id: inputs at 0, everything else after its sources. */
export function columnOf(structure: GraphStructure): Map<string, number> {
  const byId = new Map(structure.nodes.map((n) => [n.id, n]));
  const cols = new Map<string, number>();
  const visit = (id: string, trail: Set<string>): number => {
    const seen = cols.get(id);
    if (seen !== undefined) return seen;
    if (trail.has(id)) return 0; // defensive: structures are acyclic
    trail.add(id);
    const node = byId.get(id);
    let col = 0;
    if (node && node.role !== "input-register" && node.incoming.length) {
      col = 1 + Math.max(...node.incoming.map((src) => visit(src, trail)));
    }
    cols.set(id, col);
    return col;
  };
  for (const node of structure.nodes) visit(node.id, new Set());
  // the output register closes the sketch on its own final column
  let deepest = 0;
  for (const node of structure.nodes) {
    if (node.role !== "output-register") deepest = Math.max(deepest, cols.get(node.id) ?? 0);
  }
  for (const node of structure.nodes) {
    if (node.role === "output-register") cols.set(node.id, deepest + 1);
  }
  return cols;
}

/** Render the structure as a small standalone SVG string. */
export function sketchSvg(structure: GraphStructure): string {
  const cols = columnOf(structure);
  const byColumn = new Map<number, StructureNode[]>();
  for (const node of structure.nodes) {
    const c = cols.get(node.id) ?? 0;
    const bucket = byColumn.get(c);
    if (bucket) bucket.push(node);
    else byColumn.set(c, [node]);
  }
  const nCols = Math.max(...byColumn.keys()) + 1;
  const nRows = Math.max(...[...byColumn.values()].map((b) => b.length));
  const width = PAD * 2 + nCols * NODE_W + (nCols - 1) * H_GAP;
  const height = PAD * 2 + nRows * NODE_H + (nRows - 1) * V_GAP;

  const pos = new Map<string, { x: number; y: number }>();
  for (const [c, bucket] of byColumn) {
    const columnH = bucket.length * NODE_H + (bucket.length - 1) * V_GAP;
    const y0 = (height - columnH) / 2;
    bucket.forEach((node, i) => {
      pos.set(node.id, {
        x: PAD + c * (NODE_W + H_GAP),
        y: y0 + i * (NODE_H + V_GAP),
      });
    });
  }

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
      `class="sketch" font-family="system-ui, sans-serif" font-size="10">`,
  );
  for (const node of structure.nodes) {
    const to = pos.get(node.id);
    if (!to) continue;
    for (const src of node.incoming) {
      const from = pos.get(src);
      if (!from) continue;
      parts.push(
        `<line x1="${from.x + NODE_W}" y1="${from.y + NODE_H / 2}" ` +
          `x2="${to.x}" y2="${to.y + NODE_H / 2}" stroke="#9aa4ab" stroke-width="1"/>`,
      );
    }
  }
  for (const node of structure.nodes) {
    const p = pos.get(node.id);
    if (!p) continue;
    const style = ROLE_STYLE[node.role];
    const rx = node.role === "interaction" ? 3 : 11;
    parts.push(
      `<rect x="${p.x}" y="${p.y}" width="${NODE_W}" height="${NODE_H}" rx="${rx}" ` +
        `fill="${style.fill}" stroke="${style.stroke}" data-role="${node.role}"/>`,
    );
    parts.push(
      `<text x="${p.x + NODE_W / 2}" y="${p.y + NODE_H / 2 + 3.5}" ` +
        `text-anchor="middle">${esc(trim(nodeLabel(node)))}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
