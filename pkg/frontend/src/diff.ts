/** Review state for the human-vs-AI diff: one verdict per disagreeing field,
 * and Finalize stays disabled until every disagreement has one. */

import type { DiffRow } from "./types.js";

export type VerdictChoice = "accept-human" | "accept-ai" | "edit";

export interface Verdict {
  choice: VerdictChoice;
  value?: string;
}

export interface ReviewState {
  rows: DiffRow[];
  verdicts: Record<string, Verdict>;
}

export function initReview(rows: DiffRow[]): ReviewState {
  return { rows, verdicts: {} };
}

export function setVerdict(
  state: ReviewState,
  field: string,
  choice: VerdictChoice,
  value?: string,
): ReviewState {
  if (!state.rows.some((row) => row.field === field)) {
    throw new Error(`no disagreement on field ${field}`);
  }
  if (choice === "edit" && value === undefined) {
    throw new Error("edit verdict requires a value");
  }
  const verdict: Verdict = choice === "edit" ? { choice, value } : { choice };
  return { rows: state.rows, verdicts: { ...state.verdicts, [field]: verdict } };
}

/** Finalize is enabled only when every disagreeing field has a verdict. */
export function canFinalize(state: ReviewState): boolean {
  return state.rows.every((row) => row.field in state.verdicts);
}

export function pendingFields(state: ReviewState): string[] {
  return state.rows.filter((row) => !(row.field in state.verdicts)).map((row) => row.field);
}

/** Shape the verdicts for POST /curation/{id}/advance {action: finalize}. */
export function verdictsPayload(state: ReviewState): Record<string, Verdict> {
  if (!canFinalize(state)) {
    throw new Error(`verdicts missing for: ${pendingFields(state).join(", ")}`);
  }
  return state.verdicts;
}

/** What the merged record will hold for a field under the current verdict. */
export function resolvedValue(state: ReviewState, field: string): string | null | undefined {
  const row = state.rows.find((r) => r.field === field);
  const verdict = state.verdicts[field];
  if (!row || !verdict) return undefined;
  if (verdict.choice === "accept-human") return row.human;
  if (verdict.choice === "accept-ai") return row.ai;
  return verdict.value ?? null;
}
