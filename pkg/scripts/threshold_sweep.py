#!/usr/bin/env python3
"""Sweep the dissimilarity threshold and tabulate recall against ground truth.

Scans the practice target once, then re-classifies the stored exchanges
offline at a range of thresholds (no extra traffic). For each threshold the
table shows how many responses flag as PVE, how many planted vulnerabilities
those cover, and whether the decoy still slips through. Useful when tuning
the cutoff for a new corpus.

    python3 scripts/threshold_sweep.py
    python3 scripts/threshold_sweep.py --thresholds 0.5 0.7 0.9 0.95
"""

import argparse
import json
import re
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from bacscan import simulator
from bacscan.detector import DetectorConfig, classify_response
from bacscan.dispatcher import DispatchPolicy, run_scan
from bacscan.har import ScopePolicy, apply_scope, dedupe, parse_har
from bacscan.iam import default_registry
from bacscan.model import Classification
from bacscan.store import Store

DEFAULT_THRESHOLDS = (0.50, 0.60, 0.70, 0.80, 0.85, 0.90, 0.95, 0.99)


def endpoint_pattern(template: str) -> re.Pattern:
    return re.compile("^" + re.sub(r"\{[^}]+\}", "[^/]+", template) + "/?$")


def url_path(url: str) -> str:
    tail = url.split("://", 1)[1]
    path = "/" + tail.split("/", 1)[1] if "/" in tail else "/"
    return path.split("?", 1)[0]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=1337)
    parser.add_argument("--rate", type=float, default=25.0)
    parser.add_argument("--thresholds", type=float, nargs="+",
                        default=list(DEFAULT_THRESHOLDS))
    args = parser.parse_args()

    handle = simulator.serve(fixture_seed=args.seed)
    db_path = str(Path(tempfile.mkdtemp(prefix="bacscan-sweep-")) / "sweep.db")
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
            policy = DispatchPolicy(scope=scope, per_host_rate=args.rate,
                                    max_in_flight=4, timeout_ms=5000)
            run = run_scan(store, policy, default_registry(), DetectorConfig())
            print(f"scanned once: {run.sent} mutations sent; "
                  f"re-classifying offline at {len(args.thresholds)} thresholds\n")

            # gather (baseline response, mutated response, url, iam) per flag
            pairs = []
            for context in store.query_flags(run_id=run.run_id, limit=100_000):
                if context.base is None or context.base.response is None:
                    continue
                if context.mutated.response is None:
                    continue
                pairs.append((context.base.response, context.mutated.response,
                              context.mutated.request.url,
                              context.mutated.iam_name))

        manifest = handle.ground_truth()["entries"]
        real = [e for e in manifest if not e["decoy"]]
        decoys = [e for e in manifest if e["decoy"]]

        print(f"{'threshold':>9} {'pve':>5} {'recall':>8} {'decoy pve':>10}")
        for threshold in sorted(args.thresholds):
            config = DetectorConfig(threshold=threshold)
            flagged = []
            for base_resp, mut_resp, url, iam in pairs:
                flag = classify_response(base_resp, mut_resp, config)
                if flag.classification is Classification.PVE:
                    flagged.append((url, iam))

            def covered(entry):
                pattern = endpoint_pattern(entry["endpoint"])
                return any(iam == entry["trigger_iam"] and pattern.match(url_path(url))
                           for url, iam in flagged)

            hits = sum(1 for e in real if covered(e))
            decoy_hit = any(covered(e) for e in decoys)
            print(f"{threshold:>9.2f} {len(flagged):>5} {hits:>3}/{len(real)}"
                  f"{'yes' if decoy_hit else 'no':>11}")
    finally:
        handle.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
