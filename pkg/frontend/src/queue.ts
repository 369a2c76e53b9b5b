/** Flag-queue state: filters, pagination, and presentation ordering. */

import type { FlagQuery } from "./api.js";
import type { FlagSummary } from "./types.js";

export const PAGE_SIZE = 25;

export interface QueueFilters {
  classification: string;
  iam: string;
  verdict_status: "" | "untriaged" | "triaged" | "confirmed" | "fppve";
}

export const EMPTY_FILTERS: QueueFilters = {
  classification: "",
  iam: "",
  verdict_status: "",
};

export interface QueueState {
  filters: QueueFilters;
  offset: number;
  total: number;
  flags: FlagSummary[];
}

export function initialQueueState(): QueueState {
  return { filters: { ...EMPTY_FILTERS }, offset: 0, total: 0, flags: [] };
}

/** Translate UI filter state into API query parameters. */
export function toQuery(state: Pick<QueueState, "filters" | "offset">): FlagQuery {
  const query: FlagQuery = { limit: PAGE_SIZE, offset: state.offset };
  const { classification, iam, verdict_status } = state.filters;
  if (classification) query.classification = classification;
  if (iam) query.iam = iam;
  if (verdict_status) query.verdict_status = verdict_status;
  return query;
}

export interface PageInfo {
  page: number;
  pages: number;
  hasPrev: boolean;
  hasNext: boolean;
}

export function pageInfo(state: Pick<QueueState, "offset" | "total">): PageInfo {
  const pages = Math.max(1, Math.ceil(state.total / PAGE_SIZE));
  const page = Math.min(pages, Math.floor(state.offset / PAGE_SIZE) + 1);
  return {
    page,
    pages,
    hasPrev: state.offset > 0,
    hasNext: state.offset + PAGE_SIZE < state.total,
  };
}

/** Offset for the previous/next page, clamped to valid range. */
export function stepOffset(
  state: Pick<QueueState, "offset" | "total">,
  direction: -1 | 1,
): number {
  const next = state.offset + direction * PAGE_SIZE;
  if (next < 0) return 0;
  if (next >= state.total) return state.offset;
  return next;
}

/**
 * Order flags by dissimilarity descending for presentation. Ties keep the
 * order the service returned them in (stable), so repeated renders never
 * shuffle rows.
 */
export function sortByDissimilarity(flags: FlagSummary[]): FlagSummary[] {
  return flags
    .map((flag, index) => ({ flag, index }))
    .sort((lhs, rhs) =>
      rhs.flag.dissimilarity !== lhs.flag.dissimilarity
        ? rhs.flag.dissimilarity - lhs.flag.dissimilarity
        : lhs.index - rhs.index,
    )
    .map(({ flag }) => flag);
}

/** Replace one flag in place after a verdict, preserving row positions. */
export function updateFlag(flags: FlagSummary[], updated: FlagSummary): FlagSummary[] {
  return flags.map((flag) => (flag.flag_id === updated.flag_id ? updated : flag));
}

export function verdictStatusLabel(flag: FlagSummary): string {
  if (!flag.verdict) return "untriaged";
  return flag.verdict.verdict === "CONFIRMED_VULN"
    ? `confirmed (CWE ${flag.verdict.cwe_tags.join(", ")})`
    : "false positive";
}
