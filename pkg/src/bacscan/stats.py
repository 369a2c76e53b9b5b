"""Per-method statistics and report export.

Success rate here is the fraction of a method's sent mutations that drew a
2xx response: it measures how often the target accepted the tampered request
at all, which is the first thing to look at when comparing attack methods.
``dissimilar_count`` counts responses at or above the run's dissimilarity
threshold regardless of whether anything sensitive matched, so it bounds
``pve_count`` from above by construction.

Exports are deterministic: exporting the same run twice yields identical
bytes in every format.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

from .model import Classification, NotFoundError
from .store import Store

REPORT_VERSION = 1
REPORT_FORMATS = ("structured", "table", "csv")


@dataclass(frozen=True)
class IamStats:
    """One attack method's aggregate outcomes for a run."""

    iam_name: str
    sent: int
    success_rate: float  # fraction of sent mutations answered 2xx
    dissimilar_count: int
    pve_count: int
    manual_review_count: int
    code_leak_count: int


def _registry_names(run_policy: dict) -> list[str]:
    return [entry["name"] for entry in run_policy.get("registry", [])]


def per_iam_stats(store: Store, run_id: int) -> list[IamStats]:
    """Aggregate rows for every registered method of the run, ranked by
    pve_count (then dissimilar_count, sent, name). Empty when the run sent
    nothing, for example after a dry run."""
    run = store.get_run(run_id)
    if run.sent == 0:
        return []
    names = _registry_names(run.policy)
    threshold = run.policy.get("detector", {}).get("threshold", 0.9)
    sends = store.run_send_counts(run_id)
    flag_rows = store.run_flag_rows(run_id)

    stats = []
    for name in names:
        sent = sends.get(name, {}).get("sent", 0)
        ok = sends.get(name, {}).get("ok", 0)
        dissimilar = pve = manual = leaks = 0
        for iam_name, classification, dissimilarity, code_leak in flag_rows:
            if iam_name != name:
                continue
            if dissimilarity >= threshold:
                dissimilar += 1
            if classification == Classification.PVE.value:
                pve += 1
            elif classification == Classification.MANUAL_REVIEW.value:
                manual += 1
            if code_leak:
                leaks += 1
        stats.append(IamStats(
            iam_name=name,
            sent=sent,
            success_rate=(ok / sent) if sent else 0.0,
            dissimilar_count=dissimilar,
            pve_count=pve,
            manual_review_count=manual,
            code_leak_count=leaks,
        ))
    stats.sort(key=lambda s: (-s.pve_count, -s.dissimilar_count, -s.sent, s.iam_name))
    return stats


def code_leak_histogram(store: Store, run_id: int) -> list[tuple[str, int]]:
    """Code-leak counts per registered method, zeros included, registry order."""
    run = store.get_run(run_id)
    counts = {name: 0 for name in _registry_names(run.policy)}
    for iam_name, _, _, code_leak in store.run_flag_rows(run_id):
        if code_leak and iam_name in counts:
            counts[iam_name] += 1
    return list(counts.items())


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------


def _flag_entries(store: Store, run_id: int) -> list[dict]:
    entries = []
    for context in store.query_flags(run_id=run_id):
        verdict = context.verdict
        entries.append({
            "flag_id": context.flag.flag_id,
            "classification": context.flag.classification.value,
            "iam_name": context.mutated.iam_name,
            "dissimilarity": round(context.flag.dissimilarity, 6),
            "regex_hits": [name for name, _ in context.flag.regex_hits],
            "code_leak": context.flag.code_leak,
            "method": context.mutated.request.method,
            "url": context.mutated.request.url,
            "modification": context.mutated.modification,
            "reason": context.flag.reason,
            "verdict": verdict.verdict.value if verdict else "untriaged",
            "cwe_tags": list(verdict.cwe_tags) if verdict else [],
        })
    return entries


def _triage_summary(flags: list[dict]) -> dict:
    pve_flags = sum(1 for f in flags if f["classification"] == Classification.PVE.value)
    manual = sum(1 for f in flags if f["classification"] == Classification.MANUAL_REVIEW.value)
    triaged = sum(1 for f in flags if f["verdict"] != "untriaged")
    confirmed = sum(1 for f in flags if f["verdict"] == "CONFIRMED_VULN")
    fppve = sum(1 for f in flags if f["verdict"] == "FPPVE")
    return {
        "pve_flags": pve_flags,
        "manual_review_flags": manual,
        "triaged": triaged,
        "confirmed": confirmed,
        "fppve": fppve,
        # of all PVE flags, how many a human confirmed exploitable
        "confirmed_ratio": (confirmed / pve_flags) if pve_flags else 0.0,
        # of the flags a human has looked at, how many were false alarms
        "fppve_ratio_among_triaged": (fppve / triaged) if triaged else 0.0,
    }


def build_report(store: Store, run_id: int) -> dict:
    run = store.get_run(run_id)
    flags = _flag_entries(store, run_id)
    return {
        "report_version": REPORT_VERSION,
        "run": {
            "run_id": run.run_id,
            "started_at": run.started_at,
            "ended_at": run.ended_at,
            "counts": run.counts,
            "policy": run.policy,
        },
        "iam_stats": [asdict(s) for s in per_iam_stats(store, run_id)],
        "code_leak_histogram": [
            {"iam_name": n, "count": c} for n, c in code_leak_histogram(store, run_id)],
        "flags": flags,
        "triage": _triage_summary(flags),
    }


_CSV_COLUMNS = ("flag_id", "classification", "iam_name", "dissimilarity", "code_leak",
                "method", "url", "modification", "verdict", "cwe_tags", "reason")


def export_report(store: Store, run_id: int, fmt: str = "structured") -> str:
    """Render one run's report. ``structured`` is JSON, ``table`` is a plain
    text summary, ``csv`` is the flag list (one row per flag)."""
    if fmt not in REPORT_FORMATS:
        raise NotFoundError(f"unknown report format {fmt!r}; pick one of {REPORT_FORMATS}")
    report = build_report(store, run_id)
    if fmt == "structured":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for flag in report["flags"]:
            row = dict(flag, cwe_tags=" ".join(str(t) for t in flag["cwe_tags"]))
            writer.writerow([row[c] for c in _CSV_COLUMNS])
        return buffer.getvalue()
    return _render_table(report)


def _render_table(report: dict) -> str:
    run = report["run"]
    lines = [
        f"scan run {run['run_id']}",
        "  counts: " + ", ".join(f"{k}={v}" for k, v in run["counts"].items()),
        "",
        f"{'method':<24}{'sent':>6}{'2xx rate':>10}{'dissim':>8}{'pve':>6}{'manual':>8}{'leaks':>7}",
    ]
    for s in report["iam_stats"]:
        lines.append(
            f"{s['iam_name']:<24}{s['sent']:>6}{s['success_rate']:>10.3f}"
            f"{s['dissimilar_count']:>8}{s['pve_count']:>6}"
            f"{s['manual_review_count']:>8}{s['code_leak_count']:>7}")
    triage = report["triage"]
    lines += [
        "",
        f"flags: {len(report['flags'])} total, {triage['pve_flags']} PVE, "
        f"{triage['manual_review_flags']} manual review",
        f"triage: {triage['triaged']} triaged, {triage['confirmed']} confirmed, "
        f"{triage['fppve']} FPPVE "
        f"(confirmed ratio {triage['confirmed_ratio']:.2f}, "
        f"FPPVE ratio among triaged {triage['fppve_ratio_among_triaged']:.2f})",
        "",
    ]
    for flag in report["flags"]:
        if flag["classification"] == Classification.BENIGN.value:
            continue
        lines.append(
            f"  [{flag['flag_id']:>4}] {flag['classification']:<14}"
            f" {flag['iam_name']:<22} {flag['method']:<5} {flag['url']}")
        lines.append(
            f"         {flag['modification']} | dissim {flag['dissimilarity']:.4f}"
            f" | hits {','.join(flag['regex_hits']) or '-'} | verdict {flag['verdict']}")
    return "\n".join(lines) + "\n"
