/**
 * Application shell: hash routing plus the fetch-and-render loop gluing the
 * API client to the views. Routes:
 *
 *   #/queue                 flag queue (default)
 *   #/flags/{id}            diff detail + verdict
 *   #/flags/{id}/replay     edit-and-replay editor
 */

import { ApiClient, ApiError, ServiceUnreachable } from "./api.js";
import { initialQueueState, toQuery, updateFlag } from "./queue.js";
import type { QueueState } from "./queue.js";
import { buildReplayEdits, headersToText, ReplayHistory } from "./replay.js";
import type { ReplayForm } from "./replay.js";
import {
  renderDetailView,
  renderQueueView,
  renderReplayView,
} from "./render.js";
import type { DetailViewModel, QueueViewModel, ReplayViewModel } from "./render.js";
import type { FlagDetail } from "./types.js";

export type Route =
  | { name: "queue" }
  | { name: "detail"; flagId: number }
  | { name: "replay"; flagId: number };

export function parseRoute(hash: string): Route {
  const clean = hash.replace(/^#\/?/, "").replace(/\/+$/, "");
  const parts = clean.split("/").filter(Boolean);
  if (parts[0] === "flags" && parts.length >= 2) {
    const flagId = Number(parts[1]);
    if (Number.isInteger(flagId) && flagId > 0) {
      return parts[2] === "replay" ? { name: "replay", flagId } : { name: "detail", flagId };
    }
  }
  return { name: "queue" };
}

export function routeHash(route: Route): string {
  switch (route.name) {
    case "queue":
      return "#/queue";
    case "detail":
      return `#/flags/${route.flagId}`;
    case "replay":
      return `#/flags/${route.flagId}/replay`;
  }
}

function errorText(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  if (err instanceof ServiceUnreachable) return err.message;
  return err instanceof Error ? err.message : String(err);
}

export class App {
  private queue: QueueState = initialQueueState();
  private queueStatus: QueueViewModel["status"] = "loading";
  private queueError = "";
  private iamNames: string[] = [];
  private histories = new Map<number, ReplayHistory>();

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  start(): void {
    window.addEventListener("hashchange", () => void this.render());
    void this.render();
  }

  private navigate(route: Route): void {
    window.location.hash = routeHash(route);
  }

  async render(): Promise<void> {
    const route = parseRoute(window.location.hash);
    if (route.name === "queue") await this.showQueue();
    else if (route.name === "detail") await this.showDetail(route.flagId);
    else await this.showReplay(route.flagId);
  }

  // -- queue ---------------------------------------------------------------

  private async showQueue(): Promise<void> {
    this.queueStatus = "loading";
    this.paintQueue();
    try {
      const page = await this.api.listFlags(toQuery(this.queue));
      this.queue = { ...this.queue, total: page.total, flags: page.flags };
      if (!this.iamNames.length) {
        this.iamNames = [...new Set(page.flags.map((f) => f.iam_name))].sort();
      }
      this.queueStatus = "ready";
    } catch (err) {
      this.queueStatus = "error";
      this.queueError = errorText(err);
    }
    this.paintQueue();
  }

  private paintQueue(): void {
    const vm: QueueViewModel = {
      state: this.queue,
      status: this.queueStatus,
      error: this.queueError,
      iamNames: this.iamNames,
    };
    renderQueueView(this.root, vm, {
      onFilterChange: (filters) => {
        this.queue = { ...this.queue, filters, offset: 0 };
        void this.showQueue();
      },
      onPage: (direction) => {
        const offset = Math.max(0, this.queue.offset + direction * 25);
        this.queue = { ...this.queue, offset };
        void this.showQueue();
      },
      onOpen: (flagId) => this.navigate({ name: "detail", flagId }),
      onRetry: () => void this.showQueue(),
    });
  }

  // -- detail --------------------------------------------------------------

  private async showDetail(flagId: number): Promise<void> {
    let detail: FlagDetail;
    try {
      detail = await this.api.getFlag(flagId);
    } catch (err) {
      this.renderLoadError(`Flag ${flagId}: ${errorText(err)}`);
      return;
    }
    const vm: DetailViewModel = {
      detail,
      extra: { baseline: "", mutated: "" },
      verdictNote: "",
    };
    const paint = () =>
      renderDetailView(this.root, vm, {
        onBack: () => this.navigate({ name: "queue" }),
        onOpenReplay: () => this.navigate({ name: "replay", flagId }),
        onVerdict: async (verdict) => {
          try {
            const recorded = await this.api.postVerdict(flagId, verdict);
            vm.detail = {
              ...vm.detail,
              verdict: recorded.verdict,
              verdict_history: [...vm.detail.verdict_history, recorded.verdict],
            };
            this.queue = {
              ...this.queue,
              flags: updateFlag(this.queue.flags, { ...vm.detail }),
            };
          } catch (err) {
            vm.verdictNote = verdict.notes;
            this.renderInlineError(errorText(err));
            return;
          }
          paint();
        },
        onLoadMore: async (which) => {
          const exchange = which === "baseline" ? vm.detail.baseline : vm.detail.mutated;
          if (!exchange) return;
          const offset = exchange.body_preview.length + vm.extra[which].length;
          try {
            const window = await this.api.getBody(flagId, which, offset);
            vm.extra[which] += window.text;
          } catch (err) {
            this.renderInlineError(errorText(err));
            return;
          }
          paint();
        },
      });
    paint();
  }

  // -- replay --------------------------------------------------------------

  private async showReplay(flagId: number): Promise<void> {
    let detail: FlagDetail;
    try {
      detail = await this.api.getFlag(flagId);
    } catch (err) {
      this.renderLoadError(`Flag ${flagId}: ${errorText(err)}`);
      return;
    }
    const request = detail.mutated;
    const history = this.histories.get(flagId) ?? new ReplayHistory();
    this.histories.set(flagId, history);
    const vm: ReplayViewModel = {
      detail,
      form: {
        method: request?.method ?? "GET",
        url: request?.url ?? "",
        headersText: headersToText(request?.headers ?? []),
        bodyText: request?.body_text ?? "",
      },
      errors: {},
      sending: false,
      result: null,
      sendError: null,
      history: history.list(),
    };
    const paint = () =>
      renderReplayView(this.root, vm, {
        onBack: () => this.navigate({ name: "detail", flagId }),
        onSend: async (form: ReplayForm) => {
          vm.form = form;
          const built = buildReplayEdits(form);
          if ("errors" in built) {
            vm.errors = built.errors;
            paint();
            return;
          }
          vm.errors = {};
          vm.sending = true;
          vm.sendError = null;
          paint();
          try {
            vm.result = await this.api.postReplay(flagId, built.edits);
            history.push({ edits: built.edits, result: vm.result, error: null });
          } catch (err) {
            vm.sendError = errorText(err);
            history.push({ edits: built.edits, result: null, error: vm.sendError });
          }
          vm.sending = false;
          vm.history = history.list();
          paint();
        },
      });
    paint();
  }

  // -- shared error surfaces ------------------------------------------------

  private renderLoadError(message: string): void {
    this.root.replaceChildren();
    const back = document.createElement("button");
    back.className = "back";
    back.textContent = "← queue";
    back.addEventListener("click", () => this.navigate({ name: "queue" }));
    const p = document.createElement("p");
    p.className = "state-error";
    p.textContent = message;
    this.root.append(back, p);
  }

  private renderInlineError(message: string): void {
    const note = document.createElement("p");
    note.className = "state-error inline-error";
    note.textContent = message;
    this.root.prepend(note);
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  new App(new ApiClient(""), root).start();
}
