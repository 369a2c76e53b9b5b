/** Small presentation helpers shared by the views. */

import type { Classification } from "./types.js";

export function fmtDissimilarity(value: number): string {
  return value.toFixed(4);
}

export function fmtStatus(status: number | null, transportError: string): string {
  if (transportError) return `transport failure: ${transportError}`;
  return status === null ? "no response" : String(status);
}

export function classBadge(classification: Classification): string {
  return {
    PVE: "badge-pve",
    MANUAL_REVIEW: "badge-review",
    BENIGN: "badge-benign",
  }[classification];
}

export function fmtChars(count: number): string {
  if (count < 10_000) return `${count} chars`;
  return `${(count / 1000).toFixed(1)}k chars`;
}

/** Compact single-line preview for table cells and history rows. */
export function oneLine(text: string, max = 80): string {
  const flat = text.replace(/\s+/g, " ").trim();
  return flat.length <= max ? flat : `${flat.slice(0, max - 1)}…`;
}
