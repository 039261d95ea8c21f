/** Drafting and client-side validation of edit operations.
 *
 * A draft collects pending ops against a specific model version. Validation
 * here is a convenience so typos fail before the network round trip; the
 * server remains the authority and revalidates everything.
 */

import type { EditOpWire, Interval, Term } from "./types.js";

export type EditKind = EditOpWire["kind"];

export const EDIT_KINDS: EditKind[] = [
  "flatten_range",
  "scale",
  "shift",
  "set_value",
];

export interface DraftParams {
  factor?: string;
  delta?: string;
  value?: string; // numeric text or "min_in_range"
}

export interface EditDraft {
  targetVersion: number;
  ops: EditOpWire[];
}

/** Parse a required numeric field, rejecting blanks and non-numbers. */
function parseNumber(text: string | undefined, field: string): number {
  if (text === undefined || text.trim() === "") {
    throw new DraftError(`${field} is required`);
  }
  const v = Number(text);
  if (!Number.isFinite(v)) {
    throw new DraftError(`${field} must be a finite number, got "${text}"`);
  }
  return v;
}

export class DraftError extends Error {}

/** Build one wire op from UI state. Throws DraftError on bad params. */
export function buildOp(
  term: Term,
  kind: EditKind,
  range: Interval | [Interval, Interval] | null,
  params: DraftParams,
  author: string,
  note: string,
): EditOpWire {
  if (range !== null) {
    validateRangeShape(term, range);
  }
  const op: EditOpWire = { kind, term: term.id, range };
  switch (kind) {
    case "scale":
      op.factor = parseNumber(params.factor, "factor");
      break;
    case "shift":
      op.delta = parseNumber(params.delta, "delta");
      break;
    case "flatten_range":
      if (params.value === "min_in_range") {
        op.value = "min_in_range";
      } else {
        op.value = parseNumber(params.value, "value");
      }
      break;
    case "set_value":
      op.value = parseNumber(params.value, "value");
      break;
  }
  if (author) op.author = author;
  if (note) op.note = note;
  return op;
}

function isInterval(r: unknown): r is Interval {
  return (
    Array.isArray(r) &&
    r.length === 2 &&
    r.every((v) => v === null || typeof v === "number")
  );
}

function validateRangeShape(
  term: Term,
  range: Interval | [Interval, Interval],
): void {
  if (term.type === "1d") {
    if (!isInterval(range)) {
      throw new DraftError("a one-feature term takes a [lo, hi] range");
    }
    checkOrdered(range);
  } else {
    if (
      !Array.isArray(range) ||
      range.length !== 2 ||
      !isInterval(range[0]) ||
      !isInterval(range[1])
    ) {
      throw new DraftError("a pair term takes an [[loX, hiX], [loY, hiY]] range");
    }
    checkOrdered(range[0]);
    checkOrdered(range[1]);
  }
}

function checkOrdered(iv: Interval): void {
  const [lo, hi] = iv;
  if (lo !== null && hi !== null && lo > hi) {
    throw new DraftError(`empty interval [${lo}, ${hi}]`);
  }
}

/** True when the draft has something submittable. */
export function draftReady(draft: EditDraft): boolean {
  return draft.ops.length > 0;
}
