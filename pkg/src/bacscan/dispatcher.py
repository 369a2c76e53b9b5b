"""Rate-limited, scope-guarded dispatch of scan traffic.

The hard rule lives here: no request leaves this module unless its host is
on the scope allowlist, checked before any connection is opened. Everything
else is politeness and bookkeeping: per-host token buckets, a bounded worker
pool, transport-only retries, and persistence of every exchange as it
completes so an interrupted run keeps its partial progress.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import httpx

from .detector import DetectorConfig, classify_response
from .har import ScopePolicy
from .iam import DEFAULT_MUTATION_BUDGET, IamDescriptor, default_registry, generate_all
from .model import BaseRequest, MutatedRequest, PveFlag, ResponseRecord, ScopeViolation
from .ratelimit import host_bucket
from .store import RunRecord, Store, StoredExchange

DEFAULT_RATE = 5.0
DEFAULT_TIMEOUT_MS = 10_000
DEFAULT_CONCURRENCY = 4
DEFAULT_RETRIES = 1

# headers the HTTP client must own at send time: a stale captured value would
# corrupt the wire framing of a mutated body
_CLIENT_OWNED_HEADERS = ("content-length", "host", "transfer-encoding")


@dataclass(frozen=True)
class DispatchPolicy:
    """How traffic is allowed to flow for one scan."""

    scope: ScopePolicy
    max_in_flight: int = DEFAULT_CONCURRENCY
    per_host_rate: float = DEFAULT_RATE
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    retries: int = DEFAULT_RETRIES
    follow_redirects: bool = False

    def __post_init__(self) -> None:
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.per_host_rate <= 0:
            raise ValueError("per_host_rate must be positive")
        if self.timeout_ms < 1:
            raise ValueError("timeout_ms must be >= 1")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


def policy_snapshot(policy: DispatchPolicy, detector: DetectorConfig,
                    registry: tuple[IamDescriptor, ...], budget: int) -> dict:
    """JSON-able record of everything that shaped a run."""
    return {
        "dispatch": {
            "max_in_flight": policy.max_in_flight,
            "per_host_rate": policy.per_host_rate,
            "timeout_ms": policy.timeout_ms,
            "retries": policy.retries,
            "follow_redirects": policy.follow_redirects,
            "scope": {
                "allowed_hosts": list(policy.scope.allowed_hosts),
                "denied_path_prefixes": list(policy.scope.denied_path_prefixes),
                "max_requests": policy.scope.max_requests,
            },
        },
        "detector": {
            "threshold": detector.threshold,
            "max_auto_len": detector.max_auto_len,
            "markup_types": list(detector.markup_types),
            "patterns": [[n, p] for n, p in detector.patterns],
        },
        "registry": [{"name": d.name, "config": dict(d.config)} for d in registry],
        "budget": budget,
    }


def policy_from_snapshot(snapshot: dict) -> DispatchPolicy:
    d = snapshot["dispatch"]
    s = d["scope"]
    return DispatchPolicy(
        scope=ScopePolicy(
            allowed_hosts=tuple(s["allowed_hosts"]),
            denied_path_prefixes=tuple(s["denied_path_prefixes"]),
            max_requests=s["max_requests"],
        ),
        max_in_flight=d["max_in_flight"],
        per_host_rate=d["per_host_rate"],
        timeout_ms=d["timeout_ms"],
        retries=d["retries"],
        follow_redirects=d["follow_redirects"],
    )


def detector_from_snapshot(snapshot: dict) -> DetectorConfig:
    d = snapshot["detector"]
    return DetectorConfig(
        threshold=d["threshold"],
        max_auto_len=d["max_auto_len"],
        patterns=tuple((n, p) for n, p in d["patterns"]),
        markup_types=tuple(d["markup_types"]),
    )


def registry_from_snapshot(snapshot: dict) -> tuple[IamDescriptor, ...]:
    return tuple(IamDescriptor(name=e["name"], config=e.get("config", {}))
                 for e in snapshot.get("registry", []))


# ---------------------------------------------------------------------------
# Sending
# ---------------------------------------------------------------------------


def _wire_headers(request: BaseRequest) -> list[tuple[str, str]]:
    return [(n, v) for n, v in request.headers if n.lower() not in _CLIENT_OWNED_HEADERS]


def send(request: BaseRequest, policy: DispatchPolicy,
         client: httpx.Client | None = None) -> ResponseRecord:
    """Send one request within policy. Refuses out-of-scope targets before
    any network activity; transport failures come back as status 0 after
    ``policy.retries`` additional attempts. HTTP error statuses are results,
    not failures, and are never retried."""
    if not policy.scope.allows(request):
        host, port = request.host_port()
        raise ScopeViolation(f"refusing to contact {host}:{port}: outside scope allowlist")

    host, port = request.host_port()
    bucket = host_bucket(host, port, policy.per_host_rate)
    timeout = policy.timeout_ms / 1000

    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=timeout, follow_redirects=policy.follow_redirects)
    error = "unknown transport failure"
    started = time.perf_counter()
    try:
        for _ in range(policy.retries + 1):
            bucket.acquire()
            started = time.perf_counter()
            try:
                response = client.request(
                    request.method,
                    request.url,
                    headers=_wire_headers(request),
                    content=request.body or None,
                    timeout=timeout,
                    follow_redirects=policy.follow_redirects,
                )
            except httpx.TimeoutException:
                error = "timeout"
                continue
            except httpx.TransportError as exc:
                error = f"{type(exc).__name__}: {exc}" if str(exc) else type(exc).__name__
                continue
            elapsed_ms = int((time.perf_counter() - started) * 1000)
            return ResponseRecord(
                status=response.status_code,
                content_type=response.headers.get("content-type", ""),
                body=response.content,
                elapsed_ms=elapsed_ms,
            )
    finally:
        if own_client:
            client.close()
    elapsed_ms = int((time.perf_counter() - started) * 1000)
    return ResponseRecord(status=0, transport_error=error, elapsed_ms=elapsed_ms)


# ---------------------------------------------------------------------------
# Scan orchestration
# ---------------------------------------------------------------------------


def run_scan(
    store: Store,
    policy: DispatchPolicy,
    registry: tuple[IamDescriptor, ...] | None = None,
    detector_config: DetectorConfig | None = None,
    *,
    bases: list[StoredExchange] | None = None,
    budget: int = DEFAULT_MUTATION_BUDGET,
    refresh_baseline: bool = False,
    dry_run: bool = False,
    progress=None,
) -> RunRecord:
    """Generate, send, persist, and classify mutations for every base.

    Baselines come from the captured responses unless ``refresh_baseline``
    asks for fresh ones (a base with no captured response is refreshed
    regardless). ``dry_run`` persists the generated mutations and sends
    nothing. Each exchange is committed as it completes, so interrupting a
    run loses at most the in-flight requests; per-request failures never
    abort the run, store failures always do.

    ``progress``, when given, is called as progress(kind, detail) after each
    persisted exchange.
    """
    registry = default_registry() if registry is None else tuple(registry)
    detector_config = detector_config or DetectorConfig()
    if bases is None:
        bases = store.list_bases()

    snapshot = policy_snapshot(policy, detector_config, registry, budget)
    snapshot["refresh_baseline"] = refresh_baseline
    snapshot["dry_run"] = dry_run
    run_id = store.create_run(snapshot)

    counts = {"bases": len(bases), "mutations": 0, "sent": 0, "transport_failures": 0}
    timeout = policy.timeout_ms / 1000
    try:
        with httpx.Client(timeout=timeout, follow_redirects=policy.follow_redirects) as client:
            with ThreadPoolExecutor(max_workers=policy.max_in_flight) as pool:
                for stored in bases:
                    _scan_one_base(store, stored, run_id, policy, registry, detector_config,
                                   budget, refresh_baseline, dry_run, client, pool,
                                   counts, progress)
                    store.update_run(run_id, **counts)
    finally:
        store.update_run(run_id, ended=True, **counts)
    return store.get_run(run_id)


def _scan_one_base(store, stored, run_id, policy, registry, detector_config, budget,
                   refresh_baseline, dry_run, client, pool, counts, progress) -> None:
    base_request = stored.request
    mutations = generate_all(base_request, registry, budget)
    counts["mutations"] += len(mutations)

    if dry_run:
        for mutation in mutations:
            request_id = store.persist_exchange(base_request, mutation, None, run_id=run_id)
            if progress:
                progress("planned", request_id)
        return

    baseline = stored.response
    if refresh_baseline or baseline is None:
        baseline = send(base_request, policy, client)
        counts["sent"] += 1
        if baseline.status == 0:
            counts["transport_failures"] += 1
        store.persist_exchange(base_request, None, baseline, run_id=run_id)

    futures = [pool.submit(_send_quietly, mutation.request, policy, client)
               for mutation in mutations]
    for mutation, future in zip(mutations, futures):
        response = future.result()
        if response is None:  # scope refusal: never sent, nothing to classify
            store.persist_exchange(base_request, mutation, None, run_id=run_id)
            continue
        counts["sent"] += 1
        if response.status == 0:
            counts["transport_failures"] += 1
        mutated_id = store.persist_exchange(base_request, mutation, response, run_id=run_id)
        flag = classify_response(baseline, response, detector_config)
        flag = replace(flag, mutated_id=mutated_id)
        flag_id = store.insert_flag(flag, run_id=run_id)
        if progress:
            progress("classified", flag_id)


def _send_quietly(request: BaseRequest, policy: DispatchPolicy,
                  client: httpx.Client) -> ResponseRecord | None:
    try:
        return send(request, policy, client)
    except ScopeViolation:
        return None


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


@dataclass
class ReplayResult:
    request_id: int
    request: BaseRequest
    response: ResponseRecord
    flag: PveFlag  # classification of the replay, not persisted as a flag


def replay_flag(
    store: Store,
    flag_id: int,
    *,
    method: str | None = None,
    url: str | None = None,
    headers: list[tuple[str, str]] | None = None,
    body: bytes | None = None,
    policy: DispatchPolicy | None = None,
    detector_config: DetectorConfig | None = None,
) -> ReplayResult:
    """Re-send a flagged mutation, optionally with operator edits.

    The replay is classified against the flag's original baseline and
    appended to the store marked as a replay; the original flag and its
    exchange are never modified.
    """
    context = store.get_flag(flag_id)
    run = store.get_run(context.run_id) if context.run_id else None
    if policy is None:
        if run is None:
            raise ScopeViolation("no stored policy for this flag; pass one explicitly")
        policy = policy_from_snapshot(run.policy)
    if detector_config is None:
        detector_config = detector_from_snapshot(run.policy) if run else DetectorConfig()

    original = context.mutated.request
    edited = BaseRequest(
        method=method or original.method,
        url=url or original.url,
        headers=tuple(headers) if headers is not None else original.headers,
        body=body if body is not None else original.body,
    )
    edits = []
    if method and method != original.method:
        edits.append("method")
    if url and url != original.url:
        edits.append("url")
    if headers is not None and tuple(headers) != original.headers:
        edits.append("headers")
    if body is not None and body != original.body:
        edits.append("body")
    description = f"replay of flag {flag_id}"
    if edits:
        description += f" with edits to {', '.join(edits)}"

    response = send(edited, policy)
    baseline = context.base.response if context.base and context.base.response else \
        ResponseRecord(status=204)
    flag = classify_response(baseline, response, detector_config)

    mutation = MutatedRequest(
        base_id=context.mutated.request_id,
        iam_name=context.mutated.iam_name or "replay",
        modification=description,
        request=edited,
    )
    request_id = store.persist_exchange(
        context.mutated.request, mutation, response,
        run_id=context.run_id, is_replay=True)
    return ReplayResult(request_id=request_id, request=edited,
                        response=response, flag=replace(flag, mutated_id=request_id))
