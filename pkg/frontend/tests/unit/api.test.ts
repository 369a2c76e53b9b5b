import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, ServiceUnreachable, buildQuery } from "../../src/api.js";

function jsonResponse(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("buildQuery", () => {
  it("encodes set parameters and skips unset ones", () => {
    expect(buildQuery({ classification: "PVE", iam: undefined, offset: 0 })).toBe(
      "?classification=PVE&offset=0",
    );
    expect(buildQuery({})).toBe("");
    expect(buildQuery({ iam: "" })).toBe("");
    expect(buildQuery({ q: "a b&c" })).toBe("?q=a%20b%26c");
  });
});

describe("ApiClient request plumbing", () => {
  it("hits the expected flag-list URL and returns the payload", async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse(200, { schema_version: 1, total: 0, flags: [] }),
    );
    vi.stubGlobal("fetch", fetchMock);
    const page = await new ApiClient("http://svc").listFlags({
      classification: "PVE",
      limit: 25,
      offset: 50,
    });
    expect(page.total).toBe(0);
    expect(fetchMock).toHaveBeenCalledWith(
      "http://svc/api/v1/flags?classification=PVE&limit=25&offset=50",
      undefined,
    );
  });

  it("POSTs verdicts as JSON", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(200, { flag_id: 7, verdict: {} }));
    vi.stubGlobal("fetch", fetchMock);
    await new ApiClient().postVerdict(7, {
      verdict: "CONFIRMED_VULN",
      cwe_tags: [359],
      notes: "n",
    });
    const [url, init] = fetchMock.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/api/v1/flags/7/verdict");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string)).toEqual({
      verdict: "CONFIRMED_VULN",
      cwe_tags: [359],
      notes: "n",
    });
  });

  it("surfaces the service's error message verbatim on 4xx", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(jsonResponse(403, { error: "replay outside scan scope" })),
    );
    const err = await new ApiClient().postReplay(1, { url: "http://elsewhere/" }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(403);
    expect(err.message).toBe("replay outside scan scope");
  });

  it("falls back to the status line when the error body is not JSON", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(new Response("boom", { status: 502, statusText: "Bad Gateway" })),
    );
    const err = await new ApiClient().getFlag(1).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.message).toBe("502 Bad Gateway");
  });

  it("maps fetch rejection to ServiceUnreachable for the retry state", async () => {
    vi.stubGlobal("fetch", vi.fn().mockRejectedValue(new TypeError("fetch failed")));
    const err = await new ApiClient().listFlags().catch((e) => e);
    expect(err).toBeInstanceOf(ServiceUnreachable);
    expect(err.message).toMatch(/unreachable/);
  });

  it("builds body-window URLs with which/offset/limit", async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse(200, { which: "mutated", offset: 10, total_chars: 20, text: "x" }),
    );
    vi.stubGlobal("fetch", fetchMock);
    await new ApiClient().getBody(3, "mutated", 10, 500);
    expect(fetchMock).toHaveBeenCalledWith(
      "/api/v1/flags/3/body?which=mutated&offset=10&limit=500",
      undefined,
    );
  });
});
