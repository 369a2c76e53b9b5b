/**
 * Diff-span consumption: turning a body text plus the server's alignment
 * spans into an ordered list of render segments that exactly cover the text.
 *
 * The UI never computes diffs itself; spans arrive precomputed and this
 * module only slices, validates, and windows them.
 */

import type { DiffSpan, SpanKind } from "./types.js";

export type Side = "baseline" | "mutated";

export interface Segment {
  /** Slice of the side's text; empty only for opposite-side anchors. */
  text: string;
  /** "same" for common regions, otherwise the span kind. */
  kind: "same" | SpanKind;
  /** Index into the span list for non-"same" segments. */
  spanIndex?: number;
}

function bounds(span: DiffSpan, side: Side): [number, number] {
  return side === "baseline" ? [span.a_start, span.a_end] : [span.b_start, span.b_end];
}

/**
 * Split one side's text into segments covering every character exactly once,
 * in order. Spans that are empty on this side (an insert seen from the
 * baseline, a delete seen from the mutated side) become zero-width anchor
 * segments so the renderer can mark where the other side changed.
 */
export function segmentText(text: string, spans: DiffSpan[], side: Side): Segment[] {
  const segments: Segment[] = [];
  let cursor = 0;
  spans.forEach((span, index) => {
    const [start, end] = bounds(span, side);
    if (start > cursor) segments.push({ text: text.slice(cursor, start), kind: "same" });
    segments.push({ text: text.slice(start, end), kind: span.kind, spanIndex: index });
    cursor = end;
  });
  if (cursor < text.length) segments.push({ text: text.slice(cursor), kind: "same" });
  return segments;
}

/**
 * Truncate a segment list to the first `maxChars` characters for windowed
 * rendering of very large bodies. Zero-width anchors inside the window are
 * kept; everything past the cut is dropped.
 */
export function clipSegments(segments: Segment[], maxChars: number): Segment[] {
  const out: Segment[] = [];
  let used = 0;
  for (const segment of segments) {
    if (used >= maxChars) break;
    const room = maxChars - used;
    if (segment.text.length <= room) {
      out.push(segment);
      used += segment.text.length;
    } else {
      out.push({ ...segment, text: segment.text.slice(0, room) });
      used = maxChars;
    }
  }
  return out;
}

/** Rebuild the mutated text from the baseline plus the span list. */
export function applySpans(baseline: string, mutated: string, spans: DiffSpan[]): string {
  let out = "";
  let cursor = 0;
  for (const span of spans) {
    out += baseline.slice(cursor, span.a_start);
    out += mutated.slice(span.b_start, span.b_end);
    cursor = span.a_end;
  }
  return out + baseline.slice(cursor);
}

/**
 * Structural validation of a span list against both texts. Returns a list
 * of human-readable violations; empty means the spans exactly cover the
 * textual differences (ordered, non-overlapping, in bounds, kinds
 * consistent, identical outside spans, and reconstruction holds).
 */
export function checkSpans(baseline: string, mutated: string, spans: DiffSpan[]): string[] {
  const problems: string[] = [];
  let prevA = 0;
  let prevB = 0;
  spans.forEach((span, index) => {
    const where = `span ${index} (${span.kind})`;
    if (span.a_start > span.a_end || span.b_start > span.b_end)
      problems.push(`${where}: negative extent`);
    if (span.a_start < prevA || span.b_start < prevB)
      problems.push(`${where}: overlaps or precedes the previous span`);
    if (span.a_end > baseline.length || span.b_end > mutated.length)
      problems.push(`${where}: out of bounds`);
    const aLen = span.a_end - span.a_start;
    const bLen = span.b_end - span.b_start;
    const expected: SpanKind = aLen && bLen ? "replace" : aLen ? "delete" : "insert";
    if (aLen === 0 && bLen === 0) problems.push(`${where}: empty on both sides`);
    else if (span.kind !== expected)
      problems.push(`${where}: kind should be ${expected}`);
    if (baseline.slice(prevA, span.a_start) !== mutated.slice(prevB, span.b_start))
      problems.push(`${where}: texts differ in the gap before it`);
    prevA = Math.max(prevA, span.a_end);
    prevB = Math.max(prevB, span.b_end);
  });
  if (baseline.slice(prevA) !== mutated.slice(prevB))
    problems.push("texts differ after the last span");
  if (problems.length === 0 && applySpans(baseline, mutated, spans) !== mutated)
    problems.push("applying spans to the baseline does not rebuild the mutated text");
  return problems;
}

/** Total characters marked as differing on one side. */
export function changedChars(spans: DiffSpan[], side: Side): number {
  return spans.reduce((sum, span) => {
    const [start, end] = bounds(span, side);
    return sum + (end - start);
  }, 0);
}
