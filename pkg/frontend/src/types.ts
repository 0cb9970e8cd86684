/** JSON shapes served by the review service. */

export interface TokenSpan {
  text: string;
  char_start: number;
  char_end: number;
  trailing_space: boolean;
}

export interface TokenPayload {
  token: TokenSpan;
  upos: string;
  xpos: string;
  lemma: string | null;
  dep: string | null;
  ent_iob: string;
  ent_type: string;
}

export interface SentenceData {
  id: string;
  text: string;
  language: string;
  period: string;
  tokens: TokenPayload[];
}

export interface Inventories {
  upos: string[];
  xpos: string[];
  ner: string[];
}

export interface SentencePayload {
  sentence: SentenceData;
  language: string;
  fields: string[];
  inventories: Inventories;
  status: "pending" | "adjudicated";
  adjudication: unknown | null;
}

export interface SampleItem {
  sentence_id: string;
  stratum: string;
  status: "pending" | "adjudicated";
}

export interface StratumProgress {
  total: number;
  adjudicated: number;
}

export interface SessionStatus {
  id: string;
  language: string;
  per_stratum: number;
  sample: SampleItem[];
  progress: Record<string, StratumProgress>;
  adjudicated: number;
  total: number;
}

export interface VerdictPayload {
  token_index: number;
  field: string;
  verdict: "correct" | "error";
  correction?: string;
}

export interface Submission {
  sentence_id: string;
  reviewer: string;
  verdicts: VerdictPayload[];
}

export interface ExportSummary {
  rows: Record<string, { tokens: number; errors: Record<string, number>; accuracy: Record<string, number | null> }>;
  overall: { tokens: number; errors: Record<string, number>; accuracy: Record<string, number | null> };
  fields: string[];
  pending: string[];
  total_errors: number;
}
