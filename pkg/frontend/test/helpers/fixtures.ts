import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { RawJson } from "../../src/api.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

export function fixtureRaw(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf-8");
}

/** Wrap a recorded response exactly the way LabApi would have returned it. */
export function fixture<T>(name: string): RawJson<T> {
  const raw = fixtureRaw(name);
  return { data: JSON.parse(raw) as T, raw, status: 200 };
}
