"""Shared fixtures.

The expensive pieces are session scoped: one live simulator (plus a second
"canary" instance that must never see traffic), one captured HAR, and one
fully scanned store. Reporting, service, and acceptance tests all read from
that store; tests that need to write traffic of their own spin up separate
simulator instances so the shared audit trail stays interpretable.

Everything sent to the shared simulator must go through dispatcher.send at
SHARED_RATE or below, because the politeness checks at the end of the suite
replay the audit timestamps against that cap.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import pytest
from hypothesis import settings

from bacscan import simulator
from bacscan.detector import DetectorConfig
from bacscan.dispatcher import DispatchPolicy, run_scan
from bacscan.har import ScopePolicy, apply_scope, dedupe, parse_har
from bacscan.iam import default_registry
from bacscan.store import RunRecord, Store

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")

FIXTURE_SEED = 1337
SHARED_RATE = 25.0

# one line per acceptance criterion, echoed after the run so the verdicts
# survive pytest's output capture
ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{verdict:4}  {name}")


@dataclass
class Pipeline:
    """Everything the downstream tests need from the shared scan."""

    sim: simulator.SimulatorHandle
    canary: simulator.SimulatorHandle
    store: Store
    store_path: str
    scope: ScopePolicy
    policy: DispatchPolicy
    detector: DetectorConfig
    run: RunRecord
    har: dict
    ingested: int
    scan_seconds: float
    capture_audit_len: int


@pytest.fixture(scope="session")
def sim():
    handle = simulator.serve(fixture_seed=FIXTURE_SEED, port=0)
    yield handle
    handle.stop()


@pytest.fixture(scope="session")
def canary():
    handle = simulator.serve(fixture_seed=FIXTURE_SEED, port=0)
    yield handle
    leaked = handle.audit()
    handle.stop()
    # hard suite-wide invariant: no test, fixture, or scan may ever have
    # contacted the out-of-scope instance, not even once
    assert leaked == [], f"out-of-scope canary received traffic: {leaked!r}"


@pytest.fixture(scope="session")
def fixture_har(sim, canary) -> dict:
    return simulator.build_fixture_har(sim, canary_url=canary.url)


@pytest.fixture(scope="session")
def pipeline(sim, canary, fixture_har, tmp_path_factory) -> Pipeline:
    store_path = str(tmp_path_factory.mktemp("pipeline") / "scan.db")
    store = Store(store_path)

    parsed = parse_har(json.dumps(fixture_har))
    assert parsed.skipped == 0
    scope = ScopePolicy(allowed_hosts=(f"{sim.host}:{sim.port}",))
    in_scope = apply_scope(parsed.requests, scope).in_scope
    kept = dedupe(in_scope)
    by_identity = {id(c.request): c for c in parsed.calls}
    for request in kept:
        call = by_identity[id(request)]
        store.persist_exchange(call.request, response=call.response)

    capture_audit_len = len(sim.audit())
    policy = DispatchPolicy(scope=scope, per_host_rate=SHARED_RATE,
                            max_in_flight=4, timeout_ms=5000)
    detector = DetectorConfig()
    started = time.monotonic()
    run = run_scan(store, policy, default_registry(), detector)
    scan_seconds = time.monotonic() - started

    yield Pipeline(
        sim=sim, canary=canary, store=store, store_path=store_path,
        scope=scope, policy=policy, detector=detector, run=run,
        har=fixture_har, ingested=len(kept), scan_seconds=scan_seconds,
        capture_audit_len=capture_audit_len,
    )
    store.close()
