"""Traffic policy: scope refusal, timeouts, retries, redirects, scan runs.

These tests run against a private simulator instance so their traffic never
lands in the shared audit trail that the politeness checks read.
"""

import pytest

from bacscan import simulator
from bacscan.detector import DetectorConfig
from bacscan.dispatcher import DispatchPolicy, run_scan, send
from bacscan.har import ScopePolicy
from bacscan.iam import IamDescriptor
from bacscan.model import BaseRequest, ScopeViolation
from bacscan.store import Store


@pytest.fixture(scope="module")
def target():
    handle = simulator.serve(fixture_seed=99, port=0)
    yield handle
    handle.stop()


def policy_for(handle, **overrides) -> DispatchPolicy:
    defaults = dict(scope=ScopePolicy(allowed_hosts=(f"{handle.host}:{handle.port}",)),
                    per_host_rate=50.0, timeout_ms=3000, retries=0)
    defaults.update(overrides)
    return DispatchPolicy(**defaults)


def audit_paths(handle) -> list[str]:
    return [e["path"] for e in handle.audit()]


class TestSend:
    def test_out_of_scope_is_refused_before_any_network(self, target):
        before = len(target.audit())
        policy = policy_for(target, scope=ScopePolicy(allowed_hosts=("elsewhere.test",)))
        request = BaseRequest(method="GET", url=f"{target.url}/users/get-info/?user=1")
        with pytest.raises(ScopeViolation):
            send(request, policy)
        assert len(target.audit()) == before

    def test_denied_path_prefix_is_refused(self, target):
        scope = ScopePolicy(allowed_hosts=(f"{target.host}:{target.port}",),
                            denied_path_prefixes=("/messages",))
        request = BaseRequest(method="GET", url=f"{target.url}/messages/inbox")
        with pytest.raises(ScopeViolation):
            send(request, policy_for(target, scope=scope))

    def test_plain_get_round_trip(self, target):
        request = BaseRequest(method="GET", url=f"{target.url}/users/get-info/?user=13495")
        response = send(request, policy_for(target))
        assert response.status == 200
        assert b"13495" in response.body
        assert response.elapsed_ms >= 0

    def test_timeout_becomes_status_zero(self, target):
        request = BaseRequest(method="GET", url=f"{target.url}/slow?ms=500")
        response = send(request, policy_for(target, timeout_ms=120))
        assert response.status == 0
        assert response.transport_error == "timeout"

    def test_transport_retries_are_attempted(self, target):
        before = audit_paths(target).count("/slow?ms=400")
        request = BaseRequest(method="GET", url=f"{target.url}/slow?ms=400")
        response = send(request, policy_for(target, timeout_ms=100, retries=1))
        assert response.status == 0
        # hmm: audit only records requests the server finished reading, and a
        # client-side timeout still reaches the handler, so both tries count
        after = audit_paths(target).count("/slow?ms=400")
        assert after - before == 2

    def test_unreachable_port_is_typed_failure(self, target):
        scope = ScopePolicy(allowed_hosts=("127.0.0.1:9",))
        request = BaseRequest(method="GET", url="http://127.0.0.1:9/none")
        response = send(request, policy_for(target, scope=scope, timeout_ms=500))
        assert response.status == 0
        assert response.transport_error and response.transport_error != "timeout"

    def test_redirect_is_recorded_not_followed(self, target):
        before = len(target.audit())
        request = BaseRequest(method="GET", url=f"{target.url}/redirect")
        response = send(request, policy_for(target))
        assert response.status == 302
        assert len(target.audit()) == before + 1  # no follow-up request

    def test_client_owned_headers_do_not_break_sends(self, target):
        # captures carry Host/Content-Length from the original session; the
        # dispatcher must drop them so the transport can set its own
        request = BaseRequest(
            method="GET", url=f"{target.url}/users/get-info/?user=13495",
            headers=(("Host", "stale.capture.test"), ("Content-Length", "999"),
                     ("Accept", "application/json")))
        response = send(request, policy_for(target))
        assert response.status == 200

    def test_http_error_statuses_are_results(self, target):
        request = BaseRequest(method="GET", url=f"{target.url}/definitely/not/there")
        response = send(request, policy_for(target))
        assert response.status == 404


def seed_store(store: Store, target, *paths: str) -> None:
    for path in paths:
        request = BaseRequest(method="GET", url=f"{target.url}{path}")
        response = send(request, policy_for(target))
        store.persist_exchange(request, response=response)


class TestRunScan:
    def test_dry_run_sends_nothing(self, target):
        with Store(":memory:") as store:
            seed_store(store, target, "/users/get-info/?user=13495")
            before = len(target.audit())
            run = run_scan(store, policy_for(target), dry_run=True)
            assert len(target.audit()) == before
            assert run.sent == 0 and run.mutations > 0
            planned = [e for e in store.query_flags()]
            assert planned == []  # nothing classified either

    def test_captured_baseline_is_reused(self, target):
        with Store(":memory:") as store:
            seed_store(store, target, "/orders/42/receipt")
            registry = (IamDescriptor("iterate_identifiers", {"window": 1}),)
            run = run_scan(store, policy_for(target), registry)
            # two neighbor ids sent, the captured baseline reused unsent
            assert run.sent == 2
            assert run.mutations == 2

    def test_missing_baseline_is_fetched_live(self, target):
        with Store(":memory:") as store:
            request = BaseRequest(method="GET", url=f"{target.url}/orders/42/receipt")
            store.persist_exchange(request)  # no captured response
            registry = (IamDescriptor("iterate_identifiers", {"window": 1}),)
            run = run_scan(store, policy_for(target), registry)
            assert run.sent == 3  # one baseline plus two mutations

    def test_out_of_scope_mutation_is_kept_but_never_sent(self, target):
        with Store(":memory:") as store:
            seed_store(store, target, "/orders/42/receipt")
            scope = ScopePolicy(allowed_hosts=(f"{target.host}:{target.port}",),
                                denied_path_prefixes=("/orders/41",))
            registry = (IamDescriptor("iterate_identifiers", {"window": 1}),)
            before_41 = sum(p.startswith("/orders/41") for p in audit_paths(target))
            run = run_scan(store, policy_for(target, scope=scope), registry)
            assert sum(p.startswith("/orders/41") for p in audit_paths(target)) == before_41
            assert run.mutations == 2 and run.sent == 1
            rows = [c for c in store.query_flags(run_id=run.run_id)]
            assert len(rows) == 1  # only the sent variant got classified

    def test_interruption_still_closes_the_run(self, target):
        with Store(":memory:") as store:
            seed_store(store, target, "/users/get-info/?user=13495",
                       "/orders/42/receipt")
            calls = []

            def progress(kind, detail):
                calls.append(kind)
                if len(calls) == 2:
                    raise KeyboardInterrupt

            with pytest.raises(KeyboardInterrupt):
                run_scan(store, policy_for(target),
                         (IamDescriptor("iterate_identifiers", {"window": 2}),),
                         progress=progress)
            run = store.latest_run()
            assert run.ended_at is not None
            # the exchanges classified before the interrupt were committed
            assert len(store.query_flags(run_id=run.run_id)) >= 1

    def test_scan_with_no_bases_is_an_empty_run(self, target):
        with Store(":memory:") as store:
            run = run_scan(store, policy_for(target))
            assert run.bases == 0 and run.sent == 0 and run.mutations == 0
