/** Typed client for the /api/v1/ surface. All UI state flows through here. */

import type {
  BodyWindow,
  FlagDetail,
  FlagPage,
  ReplayEdits,
  ReplayResult,
  RunsPage,
  StatsReport,
  VerdictIn,
  VerdictRecord,
} from "./types.js";

/** The service answered with an error status and (usually) a message body. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service could not be reached at all (connection refused, DNS, CORS). */
export class ServiceUnreachable extends Error {
  constructor(cause: unknown) {
    super("triage service unreachable");
    this.name = "ServiceUnreachable";
    this.cause = cause;
  }
}

export interface FlagQuery {
  classification?: string;
  iam?: string;
  verdict_status?: "untriaged" | "triaged" | "confirmed" | "fppve";
  run?: number;
  limit?: number;
  offset?: number;
}

/** Render a query object as a ?-string, skipping unset keys. */
export function buildQuery(params: Record<string, string | number | undefined>): string {
  const parts: string[] = [];
  for (const [key, value] of Object.entries(params)) {
    if (value === undefined || value === "") continue;
    parts.push(`${encodeURIComponent(key)}=${encodeURIComponent(String(value))}`);
  }
  return parts.length ? `?${parts.join("&")}` : "";
}

async function parseError(response: Response): Promise<ApiError> {
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (typeof body?.error === "string") message = body.error;
    else if (body?.detail !== undefined) message = JSON.stringify(body.detail);
  } catch {
    /* non-JSON error body; keep the status line */
  }
  return new ApiError(response.status, message);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, init);
    } catch (err) {
      throw new ServiceUnreachable(err);
    }
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  listFlags(query: FlagQuery = {}): Promise<FlagPage> {
    return this.request<FlagPage>(`/api/v1/flags${buildQuery({ ...query })}`);
  }

  getFlag(flagId: number): Promise<FlagDetail> {
    return this.request<FlagDetail>(`/api/v1/flags/${flagId}`);
  }

  getBody(
    flagId: number,
    which: "baseline" | "mutated",
    offset: number,
    limit?: number,
  ): Promise<BodyWindow> {
    const query = buildQuery({ which, offset, limit });
    return this.request<BodyWindow>(`/api/v1/flags/${flagId}/body${query}`);
  }

  postVerdict(
    flagId: number,
    verdict: VerdictIn,
  ): Promise<{ flag_id: number; verdict: VerdictRecord }> {
    return this.post(`/api/v1/flags/${flagId}/verdict`, verdict);
  }

  postReplay(flagId: number, edits: ReplayEdits): Promise<ReplayResult> {
    return this.post(`/api/v1/flags/${flagId}/replay`, edits);
  }

  getStats(run?: number): Promise<StatsReport> {
    return this.request<StatsReport>(`/api/v1/stats${buildQuery({ run })}`);
  }

  getRuns(): Promise<RunsPage> {
    return this.request<RunsPage>("/api/v1/runs");
  }
}
