/** Replay editor logic: form parsing, client-side validation, history. */

import type { ReplayEdits, ReplayResult } from "./types.js";

/**
 * Parse "Name: value" lines into header pairs. Blank lines are skipped.
 * Throws with a line-numbered message on a malformed line so the editor
 * can surface it inline.
 */
export function parseHeadersText(text: string): [string, string][] {
  const pairs: [string, string][] = [];
  text.split("\n").forEach((line, index) => {
    const trimmed = line.trim();
    if (!trimmed) return;
    const colon = trimmed.indexOf(":");
    if (colon <= 0) {
      throw new Error(`line ${index + 1}: expected "Name: value", got "${trimmed}"`);
    }
    pairs.push([trimmed.slice(0, colon).trim(), trimmed.slice(colon + 1).trim()]);
  });
  return pairs;
}

export function headersToText(pairs: [string, string][]): string {
  return pairs.map(([name, value]) => `${name}: ${value}`).join("\n");
}

/**
 * Client-side URL check so obviously broken input never reaches the wire.
 * Returns an error message, or null when the URL is sendable.
 */
export function validateUrl(raw: string): string | null {
  const trimmed = raw.trim();
  if (!trimmed) return "URL is required";
  let parsed: URL;
  try {
    parsed = new URL(trimmed);
  } catch {
    return "not a valid absolute URL";
  }
  if (parsed.protocol !== "http:" && parsed.protocol !== "https:") {
    return `unsupported scheme "${parsed.protocol.replace(/:$/, "")}"`;
  }
  if (!parsed.hostname) return "URL has no host";
  return null;
}

const METHODS = new Set(["GET", "POST", "PUT", "PATCH", "DELETE", "HEAD", "OPTIONS"]);

export function validateMethod(raw: string): string | null {
  const method = raw.trim().toUpperCase();
  if (!method) return "method is required";
  if (!METHODS.has(method)) return `unknown method "${raw.trim()}"`;
  return null;
}

export interface ReplayForm {
  method: string;
  url: string;
  headersText: string;
  bodyText: string;
}

/**
 * Validate the whole form and assemble the replay payload. Result is either
 * the edits to send or a field-keyed error map for inline display.
 */
export function buildReplayEdits(
  form: ReplayForm,
): { edits: ReplayEdits } | { errors: Partial<Record<keyof ReplayForm, string>> } {
  const errors: Partial<Record<keyof ReplayForm, string>> = {};
  const methodError = validateMethod(form.method);
  if (methodError) errors.method = methodError;
  const urlError = validateUrl(form.url);
  if (urlError) errors.url = urlError;
  let headers: [string, string][] = [];
  try {
    headers = parseHeadersText(form.headersText);
  } catch (err) {
    errors.headersText = err instanceof Error ? err.message : String(err);
  }
  if (Object.keys(errors).length) return { errors };
  return {
    edits: {
      method: form.method.trim().toUpperCase(),
      url: form.url.trim(),
      headers,
      body_text: form.bodyText,
    },
  };
}

export interface HistoryEntry {
  at: string;
  edits: ReplayEdits;
  result: ReplayResult | null;
  /** Message when the send itself failed (service down, refused, invalid). */
  error: string | null;
}

const HISTORY_LIMIT = 50;

/**
 * Session-local record of replay attempts, newest first. Nothing here is
 * persisted; the service keeps its own copies of whatever actually ran.
 */
export class ReplayHistory {
  private entries: HistoryEntry[] = [];

  push(entry: Omit<HistoryEntry, "at">): HistoryEntry {
    const stamped: HistoryEntry = { at: new Date().toISOString(), ...entry };
    this.entries.unshift(stamped);
    if (this.entries.length > HISTORY_LIMIT) this.entries.length = HISTORY_LIMIT;
    return stamped;
  }

  list(): readonly HistoryEntry[] {
    return this.entries;
  }

  get length(): number {
    return this.entries.length;
  }
}
