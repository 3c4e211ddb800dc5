/** Annotation form model: ten slots pre-filled from the AI pre-annotation,
 * machine-suggested values marked until a human touches them, and explicit
 * absent semantics (clearing a field sends null, never ""). */

import { SLOTS, type RecordPayload, type Slot, emptyRecord } from "./types.js";

export interface FieldState {
  slot: Slot;
  value: string;
  /** true while the value is the untouched AI suggestion */
  machineSuggested: boolean;
}

export interface FormState {
  fields: FieldState[];
  dirty: boolean;
}

export function initForm(preannotation: RecordPayload | null): FormState {
  const fields = SLOTS.map((slot) => ({
    slot,
    value: preannotation?.[slot] ?? "",
    machineSuggested: preannotation?.[slot] != null,
  }));
  return { fields, dirty: false };
}

export function editField(state: FormState, slot: Slot, value: string): FormState {
  const fields = state.fields.map((field) =>
    field.slot === slot ? { slot, value, machineSuggested: false } : field,
  );
  return { fields, dirty: true };
}

/** Serialize for the draft endpoint: blank fields become explicit nulls. */
export function toRecordPayload(state: FormState): RecordPayload {
  const record = emptyRecord();
  for (const field of state.fields) {
    const trimmed = field.value.trim();
    record[field.slot] = trimmed === "" ? null : trimmed;
  }
  return record;
}

export function clearedFields(state: FormState, preannotation: RecordPayload | null): Slot[] {
  if (!preannotation) return [];
  return state.fields
    .filter((field) => preannotation[field.slot] != null && field.value.trim() === "")
    .map((field) => field.slot);
}
