// Hypothesis cards for the gallery.
//
// Card order mirrors the server's sorted pool exactly, and the loss shown on
// a card is the raw byte literal from the response, not a reformatted double.

import type { EquationResponse, GraphsResponse } from "./types.js";
import type { RawJson } from "./api.js";
import { memberLiteral } from "./raw.js";
import { sketchSvg } from "./sketch.js";

export interface HypothesisCard {
  id: number;
  fitted: boolean;
  /** Raw "value" literal from the response body ("null" while unfitted). */
  lossText: string;
  depth: number;
  paramCount: number;
  structureHash: string;
  sketch: string;
  equationPreview: string | null;
}

export function buildCards(graphs: RawJson<GraphsResponse>): HypothesisCard[] {
  return graphs.data.graphs.map((row) => ({
    id: row.id,
    fitted: row.fitted,
    lossText: memberLiteral(graphs.raw, row.id, "value") ?? "null",
    depth: row.depth,
    paramCount: row.param_count,
    structureHash: row.structure_hash,
    sketch: sketchSvg(row.structure),
    equationPreview: null,
  }));
}

/** Attach a fetched equation string to its card; the text is shown verbatim. */
export function attachEquation(cards: HypothesisCard[], eq: EquationResponse): void {
  for (const card of cards) {
    if (card.id === eq.graph_id) {
      card.equationPreview = eq.equation;
      return;
    }
  }
}
