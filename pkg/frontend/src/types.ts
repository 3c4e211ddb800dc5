/** Shared shapes mirroring the server's /v1 payloads. */

export const SLOTS = [
  "metal_precursor_name",
  "metal_precursor_amount",
  "organic_linker_name",
  "organic_linker_amount",
  "solvent_name",
  "solvent_amount",
  "modulator_name",
  "modulator_amount",
  "reaction_duration",
  "reaction_temperature",
] as const;

export type Slot = (typeof SLOTS)[number];

/** Absence is explicit null, mirroring the server's record semantics. */
export type RecordPayload = Record<Slot, string | null>;

export interface AgreementResult {
  field_jaccard: Record<string, number>;
  field_valid: Record<string, boolean>;
  gold_bearing_fields: string[];
  overlap_rate: number | null;
  paper_valid: boolean;
  invalid_fields: string[];
}

export type CurationStateName =
  | "PreExtracted"
  | "HumanAnnotated"
  | "FewShotChecked"
  | "Finalized";

export interface DiffRow {
  field: string;
  human: string | null;
  ai: string | null;
}

export interface TaskPayload {
  task_id: string;
  paragraph_id: string;
  paragraph_text: string;
  annotators: string[];
  state: CurationStateName;
  ai_preannotation: RecordPayload | null;
  drafts: Record<string, RecordPayload>;
  agreement: AgreementResult | null;
  human_record: RecordPayload | null;
  fewshot_record: RecordPayload | null;
  fewshot_diff: DiffRow[];
  fewshot_diagnostics: string[];
  final_record: RecordPayload | null;
}

export interface PoolEntry {
  id: string;
  paragraph: string;
  gold: RecordPayload;
  curation_state: string;
}

export interface PoolPayload {
  entries: PoolEntry[];
  n: number;
}

export interface StatsPayload {
  documents: number;
  paragraphs: number;
  records: number;
  pool_size: number;
  tasks: number;
  fill_rates: Record<string, number>;
  frequency_tables: Record<string, { name: string; count: number }[]>;
}

export interface MetricSummary {
  acc: number | null;
  precision: number | null;
  recall: number | null;
  f1: number | null;
}

export interface ExperimentReportPayload {
  config: Record<string, unknown>;
  trials: MetricSummary[];
  mean: Record<string, number | null>;
  ci_half_width: Record<string, number | null>;
}

export interface SearchHitPayload {
  record_id: string;
  matched_fields: string[];
  snippets: Record<string, [number, number]>;
  record: RecordPayload;
  doi: string;
  title: string;
  paragraph: string;
}

export function emptyRecord(): RecordPayload {
  const record = {} as RecordPayload;
  for (const slot of SLOTS) record[slot] = null;
  return record;
}
