#!/usr/bin/env python3
"""End-to-end demo against the built-in practice target.

Boots the deliberately vulnerable simulator, captures a browsing session as
a HAR, ingests it, scans with every attack method, prints the report table,
and finally checks the flags against the target's own planted-vulnerability
manifest. Exits 1 if any planted vulnerability went unflagged, so the script
doubles as a quick smoke check.

    python3 scripts/demo_scan.py
    python3 scripts/demo_scan.py --seed 99 --rate 40 --keep-db /tmp/demo.db
"""

import argparse
import json
import re
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from bacscan import simulator
from bacscan.detector import DetectorConfig
from bacscan.dispatcher import DispatchPolicy, run_scan
from bacscan.har import ScopePolicy, apply_scope, dedupe, parse_har
from bacscan.iam import default_registry
from bacscan.stats import build_report, export_report
from bacscan.store import Store


def endpoint_pattern(template: str) -> re.Pattern:
    """Turn a manifest path template like /orders/{id}/receipt into a regex."""
    return re.compile("^" + re.sub(r"\{[^}]+\}", "[^/]+", template) + "/?$")


def url_path(url: str) -> str:
    tail = url.split("://", 1)[1]
    path = "/" + tail.split("/", 1)[1] if "/" in tail else "/"
    return path.split("?", 1)[0]


def check_recall(report: dict, manifest: dict) -> bool:
    """Print one verdict line per planted vulnerability; True if all hit."""
    flags = report["flags"]
    all_hit = True
    print("\nground truth check:")
    for entry in manifest["entries"]:
        pattern = endpoint_pattern(entry["endpoint"])
        raised = [
            f for f in flags
            if f["iam_name"] == entry["trigger_iam"]
            and pattern.match(url_path(f["url"]))
            and f["classification"] in ("PVE", "MANUAL_REVIEW")
        ]
        label = "decoy" if entry["decoy"] else entry["cwe"] and f"CWE-{entry['cwe']}"
        if raised:
            kinds = sorted({name for f in raised for name in f["regex_hits"]})
            print(f"  HIT   {entry['vuln_id']:<24} ({label}) "
                  f"{len(raised)} flag(s), matched: {', '.join(kinds) or '-'}")
        else:
            print(f"  MISS  {entry['vuln_id']:<24} ({label})")
            if not entry["decoy"]:
                all_hit = False
    return all_hit


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=1337,
                        help="fixture seed for the practice target")
    parser.add_argument("--rate", type=float, default=25.0,
                        help="requests per second against the target")
    parser.add_argument("--threshold", type=float, default=0.9)
    parser.add_argument("--keep-db", metavar="PATH",
                        help="keep the scan database at this path")
    args = parser.parse_args()

    handle = simulator.serve(fixture_seed=args.seed)
    print(f"practice target up at {handle.url} (seed {args.seed})")

    db_path = args.keep_db or str(
        Path(tempfile.mkdtemp(prefix="bacscan-demo-")) / "demo.db")
    try:
        har = simulator.build_fixture_har(handle)
        parsed = parse_har(json.dumps(har))
        scope = ScopePolicy(allowed_hosts=(f"{handle.host}:{handle.port}",))
        kept = dedupe(apply_scope(parsed.requests, scope).in_scope)
        by_identity = {id(c.request): c for c in parsed.calls}

        with Store(db_path) as store:
            for request in kept:
                call = by_identity[id(request)]
                store.persist_exchange(call.request, response=call.response)
            print(f"ingested {len(kept)} base requests into {db_path}")

            policy = DispatchPolicy(scope=scope, per_host_rate=args.rate,
                                    max_in_flight=4, timeout_ms=5000)
            started = time.monotonic()
            run = run_scan(store, policy, default_registry(),
                           DetectorConfig(threshold=args.threshold))
            elapsed = time.monotonic() - started
            print(f"scan finished in {elapsed:.1f}s: {run.mutations} mutations, "
                  f"{run.sent} sent, {run.transport_failures} transport failures\n")

            sys.stdout.write(export_report(store, run.run_id, fmt="table"))
            ok = check_recall(build_report(store, run.run_id),
                              handle.ground_truth())
    finally:
        handle.stop()

    if not ok:
        print("\nFAIL: at least one planted vulnerability went unflagged")
        return 1
    print("\nall planted vulnerabilities flagged")
    return 0


if __name__ == "__main__":
    sys.exit(main())
