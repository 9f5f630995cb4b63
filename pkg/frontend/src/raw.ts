// Byte-literal extraction from raw JSON response text.
//
// Displayed numbers must be byte-equal to the payload field they came from.
// Re-rendering a parsed double can change the spelling (exponent form, digit
// count), so the lab keeps each response's raw text and lifts the original
// literal out of it for display.

const NUMBER_OR_NULL = /-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|null/y;

function literalAt(raw: string, start: number): string | null {
  NUMBER_OR_NULL.lastIndex = start;
  const m = NUMBER_OR_NULL.exec(raw);
  return m ? m[0] : null;
}

/** Exact literal for the first `"key":<number|null>` occurrence, or null. */
export function rawNumberLiteral(raw: string, key: string): string | null {
  const anchor = `"${key}":`;
  const at = raw.indexOf(anchor);
  if (at < 0) return null;
  return literalAt(raw, at + anchor.length);
}

/**
 * Exact literal for one field of one member row in a graphs response.
 *
 * Rows are serialized with a fixed key order (id, fitted, value, train_loss,
 * ...), so anchoring on the id pins the right row before reading the field.
 */
export function memberLiteral(
  raw: string,
  id: number,
  key: "value" | "train_loss",
): string | null {
  const anchor = `"id":${id},"fitted":`;
  const at = raw.indexOf(anchor);
  if (at < 0) return null;
  const field = `"${key}":`;
  const fieldAt = raw.indexOf(field, at);
  if (fieldAt < 0) return null;
  return literalAt(raw, fieldAt + field.length);
}
