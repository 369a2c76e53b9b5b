/** JSON shapes served under /api/v1/ (schema_version 1). */

export type Classification = "PVE" | "MANUAL_REVIEW" | "BENIGN";

export type SpanKind = "replace" | "delete" | "insert";

/**
 * One differing region of the server-side alignment. `aStart:aEnd` indexes
 * the baseline text, `bStart:bEnd` the mutated text; both half-open, in
 * characters of the decoded body.
 */
export interface DiffSpan {
  kind: SpanKind;
  a_start: number;
  a_end: number;
  b_start: number;
  b_end: number;
}

export interface VerdictRecord {
  verdict: "CONFIRMED_VULN" | "FPPVE";
  cwe_tags: number[];
  notes: string;
  decided_at: string;
}

export interface FlagSummary {
  flag_id: number;
  run_id: number;
  classification: Classification;
  dissimilarity: number;
  regex_hit_names: string[];
  code_leak: boolean;
  reason: string;
  iam_name: string;
  modification: string;
  method: string;
  url: string;
  status: number | null;
  verdict: VerdictRecord | null;
}

export interface FlagPage {
  schema_version: number;
  total: number;
  flags: FlagSummary[];
}

export interface ExchangeView {
  request_id: number;
  method: string;
  url: string;
  headers: [string, string][];
  body_text: string;
  status: number | null;
  transport_error: string;
  content_type: string;
  elapsed_ms: number | null;
  body_preview: string;
  body_total_chars: number;
}

export interface FlagDetail extends FlagSummary {
  schema_version: number;
  regex_hits: [string, string][];
  baseline: ExchangeView | null;
  mutated: ExchangeView | null;
  diff_spans: DiffSpan[];
  verdict_history: VerdictRecord[];
}

export interface BodyWindow {
  schema_version: number;
  which: "baseline" | "mutated";
  offset: number;
  total_chars: number;
  text: string;
}

export interface VerdictIn {
  verdict: "CONFIRMED_VULN" | "FPPVE";
  cwe_tags: number[];
  notes: string;
}

export interface ReplayEdits {
  method?: string;
  url?: string;
  headers?: [string, string][];
  body_text?: string;
}

export interface ReplayResult {
  schema_version: number;
  flag_id: number;
  replayed_request_id: number;
  request: {
    method: string;
    url: string;
    headers: [string, string][];
    body_text: string;
  };
  response: {
    status: number;
    transport_error: string;
    content_type: string;
    body_preview: string;
    elapsed_ms: number | null;
  };
  classification: Classification;
  dissimilarity: number;
  regex_hit_names: string[];
}

export interface IamStatsRow {
  iam_name: string;
  sent: number;
  dissimilar_count: number;
  pve_count: number;
  manual_review_count: number;
  [extra: string]: unknown;
}

export interface StatsReport {
  schema_version: number;
  report_version: number;
  run: Record<string, unknown>;
  iam_stats: IamStatsRow[];
  code_leak_histogram: Record<string, number>;
  flags: Array<Record<string, unknown>>;
  triage: {
    pve_total: number;
    confirmed: number;
    fppve: number;
    untriaged: number;
    confirmed_ratio: number;
    fppve_ratio: number;
    [extra: string]: unknown;
  };
}

export interface RunRow {
  run_id: number;
  started_at: string;
  ended_at: string | null;
  counts: Record<string, number>;
}

export interface RunsPage {
  schema_version: number;
  runs: RunRow[];
}

/** CWE tags the verdict endpoint accepts alongside CONFIRMED_VULN. */
export const ALLOWED_CWES: ReadonlyArray<{ id: number; label: string }> = [
  { id: 200, label: "Exposure of sensitive information" },
  { id: 201, label: "Insertion of sensitive data into sent data" },
  { id: 285, label: "Improper authorization" },
  { id: 359, label: "Exposure of private personal information" },
  { id: 538, label: "Insertion of sensitive information into externally accessible file" },
  { id: 540, label: "Inclusion of sensitive information in source code" },
  { id: 862, label: "Missing authorization" },
];
