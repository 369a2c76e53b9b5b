/**
 * DOM builders for the three views: flag queue, diff detail, replay editor.
 *
 * Every function rebuilds its container from data handed to it; no view
 * keeps hidden state. All body content goes through textContent, never
 * markup injection, because response bodies are untrusted by definition.
 */

import { changedChars, clipSegments, segmentText } from "./diff.js";
import { classBadge, fmtChars, fmtDissimilarity, fmtStatus, oneLine } from "./format.js";
import { pageInfo, sortByDissimilarity, verdictStatusLabel } from "./queue.js";
import type { QueueFilters, QueueState } from "./queue.js";
import type { HistoryEntry, ReplayForm } from "./replay.js";
import { ALLOWED_CWES } from "./types.js";
import type { DiffSpan, FlagDetail, FlagSummary, ReplayResult, VerdictIn } from "./types.js";

type Child = Node | string | null;

/** createElement shorthand: h("td", {class: "x", onclick: fn}, ...children). */
export function h(
  tag: string,
  props: Record<string, string | boolean | EventListener> = {},
  ...children: Child[]
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(props)) {
    if (key.startsWith("on") && typeof value === "function") {
      node.addEventListener(key.slice(2), value);
    } else if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
    } else {
      node.setAttribute(key, value as string);
    }
  }
  for (const child of children) {
    if (child === null) continue;
    node.append(child);
  }
  return node;
}

function badge(text: string, cls: string): HTMLElement {
  return h("span", { class: `badge ${cls}` }, text);
}

// ---------------------------------------------------------------------------
// Queue view
// ---------------------------------------------------------------------------

export interface QueueHandlers {
  onFilterChange(filters: QueueFilters): void;
  onPage(direction: -1 | 1): void;
  onOpen(flagId: number): void;
  onRetry(): void;
}

export interface QueueViewModel {
  state: QueueState;
  status: "loading" | "error" | "ready";
  error: string;
  iamNames: string[];
}

const CLASSIFICATIONS = ["", "PVE", "MANUAL_REVIEW", "BENIGN"];
const VERDICT_STATUSES = ["", "untriaged", "triaged", "confirmed", "fppve"];

function filterSelect(
  name: string,
  options: string[],
  current: string,
  onChange: (value: string) => void,
): HTMLElement {
  const select = h("select", { "data-filter": name }) as HTMLSelectElement;
  for (const option of options) {
    const label = option === "" ? `all ${name}` : option;
    select.append(h("option", { value: option, selected: option === current }, label));
  }
  select.addEventListener("change", () => onChange(select.value));
  return h("label", { class: "filter" }, `${name} `, select);
}

export function renderQueueView(
  container: HTMLElement,
  vm: QueueViewModel,
  handlers: QueueHandlers,
): void {
  container.replaceChildren();
  const { state } = vm;
  const filters = state.filters;

  const bar = h(
    "div",
    { class: "filter-bar" },
    filterSelect("classification", CLASSIFICATIONS, filters.classification, (value) =>
      handlers.onFilterChange({ ...filters, classification: value }),
    ),
    filterSelect("iam", ["", ...vm.iamNames], filters.iam, (value) =>
      handlers.onFilterChange({ ...filters, iam: value }),
    ),
    filterSelect("verdict", VERDICT_STATUSES, filters.verdict_status, (value) =>
      handlers.onFilterChange({
        ...filters,
        verdict_status: value as QueueFilters["verdict_status"],
      }),
    ),
  );
  container.append(h("h2", {}, "Flag queue"), bar);

  if (vm.status === "loading") {
    container.append(h("p", { class: "state-loading" }, "loading flags…"));
    return;
  }
  if (vm.status === "error") {
    container.append(
      h(
        "div",
        { class: "state-error" },
        h("p", {}, `Could not load flags: ${vm.error}`),
        h("button", { class: "retry", onclick: () => handlers.onRetry() }, "Retry"),
      ),
    );
    return;
  }
  if (state.total === 0) {
    container.append(
      h("p", { class: "state-empty" }, "No flags match. Run a scan or relax the filters."),
    );
    return;
  }

  const head = h(
    "tr",
    {},
    ...["id", "class", "dissim", "method", "url", "hits", "verdict"].map((c) => h("th", {}, c)),
  );
  const rows = sortByDissimilarity(state.flags).map((flag) => queueRow(flag, handlers));
  container.append(
    h("table", { class: "queue" }, h("thead", {}, head), h("tbody", {}, ...rows)),
    paginationBar(state, handlers),
  );
}

function queueRow(flag: FlagSummary, handlers: QueueHandlers): HTMLElement {
  const row = h(
    "tr",
    { class: "flag-row", "data-flag-id": String(flag.flag_id), tabindex: "0" },
    h("td", {}, String(flag.flag_id)),
    h("td", {}, badge(flag.classification, classBadge(flag.classification))),
    h("td", { class: "num" }, fmtDissimilarity(flag.dissimilarity)),
    h("td", {}, `${flag.method}`),
    h("td", { class: "url", title: flag.url }, oneLine(`${flag.url}`, 60)),
    h("td", {}, flag.regex_hit_names.join(", ") || "–"),
    h("td", { class: "verdict-cell" }, verdictStatusLabel(flag)),
  );
  row.addEventListener("click", () => handlers.onOpen(flag.flag_id));
  return row;
}

function paginationBar(state: QueueState, handlers: QueueHandlers): HTMLElement {
  const info = pageInfo(state);
  return h(
    "div",
    { class: "pagination" },
    h(
      "button",
      { class: "page-prev", disabled: !info.hasPrev, onclick: () => handlers.onPage(-1) },
      "← prev",
    ),
    h("span", {}, `page ${info.page} of ${info.pages} (${state.total} flags)`),
    h(
      "button",
      { class: "page-next", disabled: !info.hasNext, onclick: () => handlers.onPage(1) },
      "next →",
    ),
  );
}

// ---------------------------------------------------------------------------
// Detail view
// ---------------------------------------------------------------------------

export interface DetailHandlers {
  onVerdict(verdict: VerdictIn): void;
  onLoadMore(which: "baseline" | "mutated"): void;
  onOpenReplay(): void;
  onBack(): void;
}

export interface DetailViewModel {
  detail: FlagDetail;
  /** Body text fetched beyond the preview, per side. */
  extra: { baseline: string; mutated: string };
  verdictNote: string;
}

export function renderDetailView(
  container: HTMLElement,
  vm: DetailViewModel,
  handlers: DetailHandlers,
): void {
  const { detail } = vm;
  container.replaceChildren(
    h(
      "div",
      { class: "detail-head" },
      h("button", { class: "back", onclick: () => handlers.onBack() }, "← queue"),
      h("h2", {}, `Flag ${detail.flag_id}`),
      badge(detail.classification, classBadge(detail.classification)),
      detail.code_leak ? badge("code leak", "badge-leak") : null,
      h("span", { class: "dissim" }, `dissimilarity ${fmtDissimilarity(detail.dissimilarity)}`),
      h(
        "button",
        { class: "open-replay", onclick: () => handlers.onOpenReplay() },
        "Edit and replay",
      ),
    ),
    h(
      "p",
      { class: "detail-meta" },
      `${detail.method} ${detail.url}`,
      h("br", {}),
      `${detail.iam_name}: ${detail.modification}`,
      h("br", {}),
      detail.reason,
    ),
    regexBadges(detail),
    verdictPanel(vm, handlers),
    diffPanel(vm, handlers),
  );
}

function regexBadges(detail: FlagDetail): HTMLElement {
  const items = detail.regex_hits.map(([name, excerpt]) =>
    h(
      "span",
      { class: "badge badge-hit", title: excerpt },
      `${name}: `,
      h("code", {}, oneLine(excerpt, 40)),
    ),
  );
  return h(
    "div",
    { class: "hit-badges" },
    items.length ? "Sensitive content: " : "No sensitive-content matches.",
    ...items,
  );
}

function verdictPanel(vm: DetailViewModel, handlers: DetailHandlers): HTMLElement {
  const { detail } = vm;
  const confirmRadio = h("input", {
    type: "radio",
    name: "verdict-kind",
    value: "CONFIRMED_VULN",
    id: "verdict-confirm",
  }) as HTMLInputElement;
  const fppveRadio = h("input", {
    type: "radio",
    name: "verdict-kind",
    value: "FPPVE",
    id: "verdict-fppve",
  }) as HTMLInputElement;

  const cweBoxes = ALLOWED_CWES.map(({ id, label }) => {
    const box = h("input", {
      type: "checkbox",
      value: String(id),
      "data-cwe": String(id),
    }) as HTMLInputElement;
    return h("label", { class: "cwe-option", title: label }, box, ` CWE-${id}`);
  });

  const notes = h("textarea", {
    class: "verdict-notes",
    rows: "2",
    placeholder: "notes (optional)",
  }) as HTMLTextAreaElement;
  notes.value = vm.verdictNote;

  const error = h("p", { class: "verdict-error", hidden: true });
  const submit = h("button", { class: "verdict-submit" }, "Record verdict");
  submit.addEventListener("click", () => {
    const kind = confirmRadio.checked ? "CONFIRMED_VULN" : fppveRadio.checked ? "FPPVE" : null;
    if (!kind) {
      error.textContent = "pick a verdict first";
      error.hidden = false;
      return;
    }
    const tags = cweBoxes
      .map((label) => label.querySelector("input") as HTMLInputElement)
      .filter((box) => box.checked)
      .map((box) => Number(box.value));
    if (kind === "CONFIRMED_VULN" && tags.length === 0) {
      error.textContent = "a confirmed vulnerability needs at least one CWE tag";
      error.hidden = false;
      return;
    }
    error.hidden = true;
    handlers.onVerdict({ verdict: kind, cwe_tags: kind === "CONFIRMED_VULN" ? tags : [], notes: notes.value });
  });

  const history = detail.verdict_history.map((v) =>
    h(
      "li",
      {},
      `${v.verdict}${v.cwe_tags.length ? ` (CWE ${v.cwe_tags.join(", ")})` : ""}` +
        `${v.notes ? ` — ${v.notes}` : ""} at ${v.decided_at}`,
    ),
  );

  return h(
    "section",
    { class: "verdict-panel" },
    h("h3", {}, "Verdict"),
    h(
      "p",
      { class: "verdict-current" },
      detail.verdict
        ? `current: ${verdictStatusLabel(detail)}`
        : "not triaged yet",
    ),
    h(
      "div",
      { class: "verdict-form" },
      h("label", { for: "verdict-confirm" }, confirmRadio, " confirmed vulnerability"),
      h("span", { class: "cwe-set" }, ...cweBoxes),
      h("label", { for: "verdict-fppve" }, fppveRadio, " false positive"),
      notes,
      submit,
      error,
    ),
    history.length ? h("ul", { class: "verdict-history" }, ...history) : null,
  );
}

function diffPanel(vm: DetailViewModel, handlers: DetailHandlers): HTMLElement {
  const { detail } = vm;
  const spans = detail.diff_spans;
  return h(
    "section",
    { class: "diff-panel" },
    h("h3", {}, "Response comparison"),
    h(
      "p",
      { class: "diff-summary" },
      `${spans.length} differing region(s); ` +
        `${changedChars(spans, "baseline")} baseline / ` +
        `${changedChars(spans, "mutated")} mutated chars affected`,
    ),
    h(
      "div",
      { class: "diff-columns" },
      diffColumn("baseline", vm, handlers),
      diffColumn("mutated", vm, handlers),
    ),
  );
}

function diffColumn(
  side: "baseline" | "mutated",
  vm: DetailViewModel,
  handlers: DetailHandlers,
): HTMLElement {
  const exchange = side === "baseline" ? vm.detail.baseline : vm.detail.mutated;
  const preview = exchange?.body_preview ?? "";
  const total = exchange?.body_total_chars ?? 0;
  const extra = vm.extra[side];
  const spans = vm.detail.diff_spans;

  const pre = h("pre", { class: `diff-body diff-${side}` });
  const segments = clipSegments(segmentText(preview, spans, side), preview.length);
  for (const segment of segments) {
    if (segment.kind === "same") {
      pre.append(segment.text);
    } else {
      const mark = h("mark", { class: `diff-${segment.kind}` }, segment.text);
      if (!segment.text) mark.classList.add("diff-anchor");
      pre.append(mark);
    }
  }
  if (extra) pre.append(h("span", { class: "diff-extra" }, extra));

  const loaded = preview.length + extra.length;
  const remaining = total - loaded;
  const children: Child[] = [
    h(
      "h4",
      {},
      `${side} `,
      h(
        "small",
        {},
        `${fmtStatus(exchange?.status ?? null, exchange?.transport_error ?? "")}, ${fmtChars(total)}`,
      ),
    ),
    pre,
  ];
  if (remaining > 0) {
    children.push(
      h(
        "button",
        { class: `load-more load-more-${side}`, onclick: () => handlers.onLoadMore(side) },
        `Load more (${fmtChars(remaining)} remaining)`,
      ),
    );
  }
  return h("div", { class: "diff-column" }, ...children);
}

// ---------------------------------------------------------------------------
// Replay view
// ---------------------------------------------------------------------------

export interface ReplayHandlers {
  onSend(form: ReplayForm): void;
  onBack(): void;
}

export interface ReplayViewModel {
  detail: FlagDetail;
  form: ReplayForm;
  errors: Partial<Record<keyof ReplayForm, string>>;
  sending: boolean;
  result: ReplayResult | null;
  /** Message when the last send failed outright (refused or unreachable). */
  sendError: string | null;
  history: readonly HistoryEntry[];
}

export function renderReplayView(
  container: HTMLElement,
  vm: ReplayViewModel,
  handlers: ReplayHandlers,
): void {
  const methodInput = h("input", {
    class: "replay-method",
    value: vm.form.method,
  }) as HTMLInputElement;
  const urlInput = h("input", { class: "replay-url", value: vm.form.url }) as HTMLInputElement;
  const headersInput = h("textarea", { class: "replay-headers", rows: "6" }) as HTMLTextAreaElement;
  headersInput.value = vm.form.headersText;
  const bodyInput = h("textarea", { class: "replay-body", rows: "6" }) as HTMLTextAreaElement;
  bodyInput.value = vm.form.bodyText;

  const fieldError = (key: keyof ReplayForm) =>
    vm.errors[key] ? h("p", { class: `field-error error-${key}` }, vm.errors[key] as string) : null;

  const send = h(
    "button",
    { class: "replay-send", disabled: vm.sending },
    vm.sending ? "Sending…" : "Send",
  );
  send.addEventListener("click", () =>
    handlers.onSend({
      method: methodInput.value,
      url: urlInput.value,
      headersText: headersInput.value,
      bodyText: bodyInput.value,
    }),
  );

  const children: Node[] = [
    h(
      "div",
      { class: "detail-head" },
      h("button", { class: "back", onclick: () => handlers.onBack() }, "← detail"),
      h("h2", {}, `Replay flag ${vm.detail.flag_id}`),
    ),
    h(
      "div",
      { class: "replay-form" },
      h("label", {}, "Method ", methodInput),
      fieldError("method"),
      h("label", {}, "URL ", urlInput),
      fieldError("url"),
      h("label", {}, "Headers (one per line) ", headersInput),
      fieldError("headersText"),
      h("label", {}, "Body ", bodyInput),
      send,
    ),
  ];
  if (vm.sendError) children.push(h("div", { class: "state-error replay-refused" }, vm.sendError));
  if (vm.result) children.push(replayResultPanel(vm.result));
  children.push(replayHistoryPanel(vm.history));
  container.replaceChildren(...children);
}

function replayResultPanel(result: ReplayResult): HTMLElement {
  const failed = Boolean(result.response.transport_error);
  return h(
    "section",
    { class: `replay-result ${failed ? "transport-failure" : ""}` },
    h(
      "h3",
      {},
      "Live response ",
      badge(result.classification, classBadge(result.classification)),
    ),
    h(
      "p",
      { class: "replay-status" },
      `${fmtStatus(result.response.status, result.response.transport_error)} · ` +
        `dissimilarity ${fmtDissimilarity(result.dissimilarity)}` +
        (result.regex_hit_names.length ? ` · hits: ${result.regex_hit_names.join(", ")}` : ""),
    ),
    h("pre", { class: "replay-body-view" }, result.response.body_preview),
  );
}

function replayHistoryPanel(history: readonly HistoryEntry[]): HTMLElement {
  if (!history.length) return h("section", { class: "replay-history" });
  const rows = history.map((entry) => {
    const verdict = entry.error
      ? `failed: ${entry.error}`
      : entry.result
        ? `${entry.result.classification} (${fmtStatus(
            entry.result.response.status,
            entry.result.response.transport_error,
          )})`
        : "no result";
    return h(
      "li",
      {},
      `${entry.at} ${entry.edits.method ?? ""} ${oneLine(entry.edits.url ?? "", 60)} → ${verdict}`,
    );
  });
  return h(
    "section",
    { class: "replay-history" },
    h("h3", {}, `This session (${history.length})`),
    h("ul", {}, ...rows),
  );
}
