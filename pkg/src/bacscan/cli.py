"""Command line front end.

Subcommands cover the whole loop: ``ingest`` captured traffic, ``scan`` it
with the attack methods, ``report`` the results, ``serve`` the triage API,
``serve-sim`` the practice target, and ``replay`` a single flag. Settings
come from (highest priority first) command line flags, the ``--config``
YAML file, then built-in defaults.

Exit codes: 0 success, 1 domain error (bad config, scope refusal, unknown
flag id, ...), 2 usage error. Diagnostics go to stderr; results go to
stdout as text or, with ``--output structured``, as JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .config import ScanConfig, load_config
from .detector import DetectorConfig
from .dispatcher import DispatchPolicy, replay_flag, run_scan
from .har import ScopePolicy, apply_scope, dedupe, parse_har
from .iam import METHOD_CLASSES, IamDescriptor
from .model import BacscanError, ConfigError
from .stats import REPORT_FORMATS, export_report
from .store import Store


def _emit(args, payload: dict, text: str) -> None:
    if args.output == "structured":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _merged_config(args) -> ScanConfig:
    config = load_config(args.config) if args.config else ScanConfig()
    if args.store:
        config.store_path = args.store
    return config


def _scope_from(args, config: ScanConfig, *, required: bool) -> ScopePolicy | None:
    hosts = tuple(args.allow_host or ()) or config.allowed_hosts
    if not hosts:
        if required:
            raise ConfigError(
                "no scope configured; pass --allow-host or set scope.allowed_hosts")
        return None
    prefixes = tuple(args.deny_path_prefix or ()) or config.denied_path_prefixes
    max_requests = args.max_requests if args.max_requests is not None else config.max_requests
    kwargs = {"allowed_hosts": hosts, "denied_path_prefixes": prefixes}
    if max_requests is not None:
        kwargs["max_requests"] = max_requests
    return ScopePolicy(**kwargs)


def _registry_from(args, config: ScanConfig) -> tuple[IamDescriptor, ...]:
    names = tuple(args.iam or ()) or config.enabled_iams or tuple(METHOD_CLASSES)
    descriptors = []
    for name in names:
        if name not in METHOD_CLASSES:
            raise ConfigError(
                f"unknown attack method {name!r}; known: {', '.join(METHOD_CLASSES)}")
        extra = {}
        if name == "iterate_identifiers":
            window = args.id_window if args.id_window is not None else (
                config.id_window if config.was_set("id_window") else None)
            if window is not None:
                extra["window"] = window
        descriptors.append(IamDescriptor(name=name, config=extra))
    return tuple(descriptors)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_ingest(args, config: ScanConfig) -> int:
    scope = _scope_from(args, config, required=False)
    totals = {"files": 0, "entries": 0, "skipped_entries": 0, "out_of_scope": 0,
              "duplicates": 0, "stored": 0}
    with Store(config.store_path) as store:
        for path in args.har:
            parsed = parse_har(Path(path).read_bytes())
            totals["files"] += 1
            totals["entries"] += len(parsed.calls) + parsed.skipped
            totals["skipped_entries"] += parsed.skipped
            calls = parsed.calls
            if scope is not None:
                result = apply_scope([c.request for c in calls], scope)
                kept_ids = {id(r) for r in result.in_scope}
                totals["out_of_scope"] += len(result.excluded)
                calls = [c for c in calls if id(c.request) in kept_ids]
            if not args.no_dedupe:
                kept = dedupe([c.request for c in calls])
                kept_ids = {id(r) for r in kept}
                totals["duplicates"] += len(calls) - len(kept)
                calls = [c for c in calls if id(c.request) in kept_ids]
            for call in calls:
                store.persist_exchange(call.request, response=call.response)
                totals["stored"] += 1
    _emit(args, totals,
          f"ingested {totals['stored']} requests from {totals['files']} file(s) "
          f"({totals['duplicates']} duplicates, {totals['out_of_scope']} out of scope, "
          f"{totals['skipped_entries']} unparseable entries)")
    return 0


def _cmd_scan(args, config: ScanConfig) -> int:
    scope = _scope_from(args, config, required=True)
    policy = DispatchPolicy(
        scope=scope,
        max_in_flight=args.concurrency if args.concurrency is not None else config.max_in_flight,
        per_host_rate=args.rate if args.rate is not None else config.per_host_rate,
        timeout_ms=args.timeout_ms if args.timeout_ms is not None else config.timeout_ms,
        retries=args.retries if args.retries is not None else config.retries,
    )
    detector = DetectorConfig(
        threshold=args.threshold if args.threshold is not None else config.threshold,
        max_auto_len=config.max_auto_len,
    )
    registry = _registry_from(args, config)
    budget = args.budget if args.budget is not None else config.budget_per_base
    started = time.monotonic()
    with Store(config.store_path) as store:
        if not store.list_bases():
            raise ConfigError("store holds no ingested requests; run ingest first")
        progress = None
        if args.output == "text" and not args.quiet:
            def progress(kind, detail):
                print(f"  {kind}: {detail}", file=sys.stderr)
        run = run_scan(store, policy, registry, detector, budget=budget,
                       refresh_baseline=args.refresh_baseline, dry_run=args.dry_run,
                       progress=progress)
    elapsed = time.monotonic() - started
    payload = {"run_id": run.run_id, "elapsed_s": round(elapsed, 2), **run.counts}
    _emit(args, payload,
          f"run {run.run_id}: {run.bases} bases, {run.mutations} mutations, "
          f"{run.sent} sent, {run.transport_failures} transport failures "
          f"in {elapsed:.1f}s")
    return 0


def _cmd_report(args, config: ScanConfig) -> int:
    with Store(config.store_path) as store:
        if args.run is not None:
            run_id = args.run
        else:
            latest = store.latest_run()
            if latest is None:
                raise ConfigError("no scan runs in the store yet")
            run_id = latest.run_id
        rendered = export_report(store, run_id, fmt=args.format)
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
        _emit(args, {"run_id": run_id, "written": args.out},
              f"report for run {run_id} written to {args.out}")
    else:
        sys.stdout.write(rendered)
    return 0


def _cmd_serve_sim(args, config: ScanConfig) -> int:
    from . import simulator

    handle = simulator.serve(fixture_seed=args.seed, port=args.port)
    if args.manifest_out:
        Path(args.manifest_out).write_text(
            json.dumps(handle.ground_truth(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8")
    if args.har_out:
        har = simulator.build_fixture_har(handle)
        Path(args.har_out).write_text(json.dumps(har, indent=2) + "\n", encoding="utf-8")
    _emit(args, {"url": handle.url, "seed": args.seed},
          f"practice target listening on {handle.url} (seed {args.seed}); Ctrl-C stops it")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        handle.stop()
        return 0


def _cmd_serve(args, config: ScanConfig) -> int:
    from .service import serve

    bind = args.bind or config.service_bind
    port = args.port if args.port is not None else config.service_port
    print(f"triage service on http://{bind}:{port}/ (store {config.store_path})",
          file=sys.stderr)
    serve(config.store_path, bind=bind, port=port)
    return 0


def _parse_header_args(pairs: list[str] | None) -> list[tuple[str, str]] | None:
    if not pairs:
        return None
    headers = []
    for raw in pairs:
        name, sep, value = raw.partition(":")
        if not sep or not name.strip():
            raise ConfigError(f"bad --header {raw!r}; expected 'Name: value'")
        headers.append((name.strip(), value.strip()))
    return headers


def _cmd_replay(args, config: ScanConfig) -> int:
    with Store(config.store_path) as store:
        result = replay_flag(
            store, args.flag_id,
            method=args.method,
            url=args.url,
            headers=_parse_header_args(args.header),
            body=args.body.encode("utf-8") if args.body is not None else None,
        )
    response = result.response
    outcome = (f"status {response.status}" if response.status
               else f"transport failure: {response.transport_error}")
    payload = {
        "flag_id": args.flag_id,
        "replayed_request_id": result.request_id,
        "status": response.status,
        "transport_error": response.transport_error,
        "classification": result.flag.classification.value,
        "dissimilarity": round(result.flag.dissimilarity, 6),
        "regex_hits": [name for name, _ in result.flag.regex_hits],
    }
    _emit(args, payload,
          f"replayed flag {args.flag_id} as request {result.request_id}: {outcome}, "
          f"classified {result.flag.classification.value} "
          f"(dissimilarity {result.flag.dissimilarity:.4f})")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bacscan",
        description="Replay captured API traffic with access-control mutations "
                    "and flag responses that leak other users' data.")
    parser.add_argument("--store", help="sqlite database path (default bacscan.db)")
    parser.add_argument("--config", help="YAML settings file")
    parser.add_argument("--output", choices=("structured", "text"), default="text",
                        help="result format on stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load HAR capture files into the store")
    p.add_argument("har", nargs="+", help="HAR file path(s)")
    p.add_argument("--allow-host", action="append", metavar="HOST",
                   help="scope allowlist entry (repeatable; *.suffix and host:port work)")
    p.add_argument("--deny-path-prefix", action="append", metavar="PREFIX")
    p.add_argument("--max-requests", type=int)
    p.add_argument("--no-dedupe", action="store_true",
                   help="keep repeated method+URL+body entries")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("scan", help="mutate stored requests and classify the responses")
    p.add_argument("--allow-host", action="append", metavar="HOST")
    p.add_argument("--deny-path-prefix", action="append", metavar="PREFIX")
    p.add_argument("--max-requests", type=int)
    p.add_argument("--rate", type=float, help="per-host requests per second")
    p.add_argument("--concurrency", type=int)
    p.add_argument("--timeout-ms", type=int)
    p.add_argument("--retries", type=int)
    p.add_argument("--threshold", type=float, help="dissimilarity cutoff in (0, 1]")
    p.add_argument("--budget", type=int, help="mutation cap per base request")
    p.add_argument("--iam", action="append", metavar="NAME",
                   help=f"enable only these methods (known: {', '.join(METHOD_CLASSES)})")
    p.add_argument("--id-window", type=int)
    p.add_argument("--refresh-baseline", action="store_true",
                   help="re-request each base live instead of trusting the capture")
    p.add_argument("--dry-run", action="store_true",
                   help="generate and persist mutations without sending")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("report", help="render statistics for a scan run")
    p.add_argument("--run", type=int, help="run id (default: latest)")
    p.add_argument("--format", choices=REPORT_FORMATS, default="table")
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve-sim", help="run the deliberately vulnerable practice target")
    p.add_argument("--port", type=int, default=0, help="0 picks a free port")
    p.add_argument("--seed", type=int, default=1337)
    p.add_argument("--manifest-out", help="write the planted-vulnerability manifest here")
    p.add_argument("--har-out", help="capture a fixture HAR against the target and write it here")
    p.set_defaults(func=_cmd_serve_sim)

    p = sub.add_parser("serve", help="run the triage API and UI")
    p.add_argument("--bind")
    p.add_argument("--port", type=int)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("replay", help="re-send one flagged mutation, optionally edited")
    p.add_argument("flag_id", type=int)
    p.add_argument("--method")
    p.add_argument("--url")
    p.add_argument("--header", action="append", metavar="'Name: value'")
    p.add_argument("--body")
    p.set_defaults(func=_cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _merged_config(args)
        return args.func(args, config)
    except (BacscanError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
