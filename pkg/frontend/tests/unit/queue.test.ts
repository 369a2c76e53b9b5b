import { describe, expect, it } from "vitest";

import {
  EMPTY_FILTERS,
  PAGE_SIZE,
  initialQueueState,
  pageInfo,
  sortByDissimilarity,
  stepOffset,
  toQuery,
  updateFlag,
  verdictStatusLabel,
} from "../../src/queue.js";
import type { FlagSummary } from "../../src/types.js";

function flag(overrides: Partial<FlagSummary>): FlagSummary {
  return {
    flag_id: 1,
    run_id: 1,
    classification: "PVE",
    dissimilarity: 0.9,
    regex_hit_names: ["ssn"],
    code_leak: false,
    reason: "r",
    iam_name: "iterate_identifiers",
    modification: "m",
    method: "GET",
    url: "http://t/x",
    status: 200,
    verdict: null,
    ...overrides,
  };
}

describe("toQuery", () => {
  it("always carries pagination and drops empty filters", () => {
    expect(toQuery({ filters: { ...EMPTY_FILTERS }, offset: 50 })).toEqual({
      limit: PAGE_SIZE,
      offset: 50,
    });
  });

  it("passes set filters through under API names", () => {
    const query = toQuery({
      filters: { classification: "PVE", iam: "strip_headers", verdict_status: "confirmed" },
      offset: 0,
    });
    expect(query).toEqual({
      limit: PAGE_SIZE,
      offset: 0,
      classification: "PVE",
      iam: "strip_headers",
      verdict_status: "confirmed",
    });
  });
});

describe("pagination", () => {
  it("computes page counts including a partial last page", () => {
    expect(pageInfo({ offset: 0, total: 0 })).toEqual({
      page: 1,
      pages: 1,
      hasPrev: false,
      hasNext: false,
    });
    expect(pageInfo({ offset: 0, total: PAGE_SIZE * 2 + 1 }).pages).toBe(3);
    expect(pageInfo({ offset: PAGE_SIZE * 2, total: PAGE_SIZE * 2 + 1 })).toEqual({
      page: 3,
      pages: 3,
      hasPrev: true,
      hasNext: false,
    });
  });

  it("steps offsets within bounds", () => {
    expect(stepOffset({ offset: 0, total: 100 }, 1)).toBe(PAGE_SIZE);
    expect(stepOffset({ offset: PAGE_SIZE, total: 100 }, -1)).toBe(0);
    expect(stepOffset({ offset: 0, total: 100 }, -1)).toBe(0);
    expect(stepOffset({ offset: 75, total: 100 }, 1)).toBe(75);
  });
});

describe("sortByDissimilarity", () => {
  it("orders descending and keeps service order on exact ties", () => {
    const flags = [
      flag({ flag_id: 1, dissimilarity: 0.91 }),
      flag({ flag_id: 2, dissimilarity: 0.95 }),
      flag({ flag_id: 3, dissimilarity: 0.91 }),
      flag({ flag_id: 4, dissimilarity: 0.91 }),
      flag({ flag_id: 5, dissimilarity: 1.0 }),
    ];
    const sorted = sortByDissimilarity(flags);
    expect(sorted.map((f) => f.flag_id)).toEqual([5, 2, 1, 3, 4]);
  });

  it("does not mutate its input", () => {
    const flags = [flag({ flag_id: 1, dissimilarity: 0.5 }), flag({ flag_id: 2 })];
    const before = flags.map((f) => f.flag_id);
    sortByDissimilarity(flags);
    expect(flags.map((f) => f.flag_id)).toEqual(before);
  });

  it("is idempotent, so repeated renders never shuffle rows", () => {
    const flags = Array.from({ length: 20 }, (_, k) =>
      flag({ flag_id: k + 1, dissimilarity: 0.9 + (k % 3) / 100 }),
    );
    const once = sortByDissimilarity(flags);
    const twice = sortByDissimilarity(once);
    expect(twice.map((f) => f.flag_id)).toEqual(once.map((f) => f.flag_id));
  });
});

describe("updateFlag", () => {
  it("replaces only the matching flag, in place", () => {
    const flags = [flag({ flag_id: 1 }), flag({ flag_id: 2 }), flag({ flag_id: 3 })];
    const updated = updateFlag(
      flags,
      flag({
        flag_id: 2,
        verdict: { verdict: "CONFIRMED_VULN", cwe_tags: [359], notes: "", decided_at: "t" },
      }),
    );
    expect(updated.map((f) => f.flag_id)).toEqual([1, 2, 3]);
    expect(updated[1]?.verdict?.verdict).toBe("CONFIRMED_VULN");
    expect(updated[0]?.verdict).toBeNull();
    expect(flags[1]?.verdict).toBeNull();
  });
});

describe("verdictStatusLabel", () => {
  it("renders the three states", () => {
    expect(verdictStatusLabel(flag({}))).toBe("untriaged");
    expect(
      verdictStatusLabel(
        flag({
          verdict: { verdict: "CONFIRMED_VULN", cwe_tags: [359, 862], notes: "", decided_at: "t" },
        }),
      ),
    ).toBe("confirmed (CWE 359, 862)");
    expect(
      verdictStatusLabel(
        flag({ verdict: { verdict: "FPPVE", cwe_tags: [], notes: "", decided_at: "t" } }),
      ),
    ).toBe("false positive");
  });
});

describe("initialQueueState", () => {
  it("starts unfiltered at the first page", () => {
    const state = initialQueueState();
    expect(state.offset).toBe(0);
    expect(state.total).toBe(0);
    expect(state.filters).toEqual(EMPTY_FILTERS);
    expect(state.filters).not.toBe(EMPTY_FILTERS);
  });
});
