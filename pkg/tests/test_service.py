"""HTTP API tests, run against the shared pipeline's store.

The client talks to the app in process. The replay tests do reach the live
mock target, through the same dispatch policy the original scan recorded.
"""

import pytest
from fastapi.testclient import TestClient

from bacscan.service import API_VERSION, PREVIEW_CHARS, create_app
from bacscan.textdiff import DiffSpan

from test_textdiff import apply_spans, check_span_shape


@pytest.fixture(scope="module")
def client(pipeline):
    app = create_app(pipeline.store, frontend_dir=None)
    with TestClient(app) as c:
        yield c


def _pve_flag_id(client, run_id) -> int:
    data = client.get("/api/v1/flags",
                      params={"classification": "PVE", "run": run_id}).json()
    assert data["flags"], "pipeline scan produced no PVE flags"
    return data["flags"][0]["flag_id"]


class TestFlagList:

    def test_total_matches_store(self, client, pipeline):
        data = client.get("/api/v1/flags", params={"run": pipeline.run.run_id}).json()
        assert data["schema_version"] == API_VERSION
        assert data["total"] == pipeline.store.count_flags(run_id=pipeline.run.run_id)
        assert len(data["flags"]) == min(data["total"], 50)

    def test_classification_filter(self, client, pipeline):
        data = client.get("/api/v1/flags", params={
            "classification": "PVE", "run": pipeline.run.run_id, "limit": 500}).json()
        assert data["flags"]
        assert all(f["classification"] == "PVE" for f in data["flags"])
        assert data["total"] == len(data["flags"])

    def test_iam_filter(self, client, pipeline):
        data = client.get("/api/v1/flags", params={
            "iam": "iterate_identifiers", "run": pipeline.run.run_id, "limit": 500}).json()
        assert data["flags"]
        assert all(f["iam_name"] == "iterate_identifiers" for f in data["flags"])

    def test_pagination_walks_every_flag_once(self, client, pipeline):
        run = pipeline.run.run_id
        total = client.get("/api/v1/flags", params={"run": run}).json()["total"]
        seen = []
        offset = 0
        while offset < total:
            page = client.get("/api/v1/flags", params={
                "run": run, "limit": 7, "offset": offset}).json()["flags"]
            assert len(page) <= 7
            seen.extend(f["flag_id"] for f in page)
            offset += 7
        assert len(seen) == total
        assert len(set(seen)) == total

    def test_page_size_is_capped(self, client):
        assert client.get("/api/v1/flags", params={"limit": 9999}).status_code == 422

    def test_bad_verdict_status_rejected(self, client):
        response = client.get("/api/v1/flags", params={"verdict_status": "meh"})
        assert response.status_code == 400
        assert "verdict_status" in response.json()["error"]


class TestFlagDetail:

    def test_detail_carries_both_sides(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        data = client.get(f"/api/v1/flags/{flag_id}").json()
        assert data["flag_id"] == flag_id
        assert data["baseline"] is not None
        assert data["mutated"] is not None
        assert data["mutated"]["status"] is not None
        assert data["regex_hits"], "a PVE must carry at least one sensitive match"
        for name, excerpt in data["regex_hits"]:
            assert name and excerpt

    def test_diff_spans_rebuild_mutated_text(self, client, pipeline):
        # spans index into the decoded texts in characters, so a client can
        # splice the mutated side back together from the baseline
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        data = client.get(f"/api/v1/flags/{flag_id}").json()
        baseline = data["baseline"]["body_preview"]
        mutated = data["mutated"]["body_preview"]
        assert data["baseline"]["body_total_chars"] == len(baseline)  # small bodies
        spans = [DiffSpan(**s) for s in data["diff_spans"]]
        check_span_shape(baseline, mutated, spans)
        assert apply_spans(baseline, mutated, spans) == mutated

    def test_unknown_flag_is_404(self, client):
        response = client.get("/api/v1/flags/999999")
        assert response.status_code == 404
        assert "999999" in response.json()["error"]


class TestFlagBody:

    def test_window_slices_the_decoded_text(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        full = client.get(f"/api/v1/flags/{flag_id}/body",
                          params={"which": "mutated", "limit": 4 * PREVIEW_CHARS}).json()
        text = full["text"]
        assert full["total_chars"] == len(text)
        window = client.get(f"/api/v1/flags/{flag_id}/body", params={
            "which": "mutated", "offset": 5, "limit": 20}).json()
        assert window["text"] == text[5:25]
        assert window["total_chars"] == len(text)

    def test_offset_past_the_end_is_empty(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        data = client.get(f"/api/v1/flags/{flag_id}/body",
                          params={"offset": 10_000_000}).json()
        assert data["text"] == ""

    def test_body_matches_detail_preview(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        detail = client.get(f"/api/v1/flags/{flag_id}").json()
        body = client.get(f"/api/v1/flags/{flag_id}/body",
                          params={"which": "baseline"}).json()
        assert body["text"] == detail["baseline"]["body_preview"]

    def test_which_is_validated(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        response = client.get(f"/api/v1/flags/{flag_id}/body", params={"which": "other"})
        assert response.status_code == 400


class TestVerdicts:

    def test_wrong_field_type_names_the_field(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        response = client.post(f"/api/v1/flags/{flag_id}/verdict",
                               json={"verdict": "FPPVE", "cwe_tags": "notalist"})
        assert response.status_code == 422
        locs = [err["loc"] for err in response.json()["detail"]]
        assert any("cwe_tags" in loc for loc in locs)

    def test_unknown_verdict_kind(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        response = client.post(f"/api/v1/flags/{flag_id}/verdict",
                               json={"verdict": "MEH"})
        assert response.status_code == 400
        assert "MEH" in response.json()["error"]

    def test_cwe_outside_allowed_set(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        response = client.post(f"/api/v1/flags/{flag_id}/verdict", json={
            "verdict": "CONFIRMED_VULN", "cwe_tags": [999]})
        assert response.status_code == 400
        assert "999" in response.json()["error"]

    def test_unknown_flag_is_404(self, client):
        response = client.post("/api/v1/flags/999999/verdict",
                               json={"verdict": "FPPVE"})
        assert response.status_code == 404

    def test_roundtrip_shows_up_in_queue_filters(self, client, pipeline):
        run = pipeline.run.run_id
        flags = client.get("/api/v1/flags", params={
            "classification": "PVE", "run": run, "limit": 500}).json()["flags"]
        target = flags[-1]["flag_id"]
        posted = client.post(f"/api/v1/flags/{target}/verdict", json={
            "verdict": "CONFIRMED_VULN", "cwe_tags": [359, 862],
            "notes": "manually reproduced"})
        assert posted.status_code == 200
        assert posted.json()["verdict"]["cwe_tags"] == [359, 862]

        confirmed = client.get("/api/v1/flags", params={
            "verdict_status": "confirmed", "run": run, "limit": 500}).json()
        assert target in [f["flag_id"] for f in confirmed["flags"]]

        detail = client.get(f"/api/v1/flags/{target}").json()
        assert detail["verdict"]["verdict"] == "CONFIRMED_VULN"
        assert detail["verdict_history"], "history should record the decision"


class TestReplay:

    def test_straight_replay_hits_the_target(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        before = len(pipeline.sim.audit())
        response = client.post(f"/api/v1/flags/{flag_id}/replay", json={})
        assert response.status_code == 200
        data = response.json()
        assert data["response"]["status"] == 200
        assert data["classification"] in {"PVE", "MANUAL_REVIEW", "BENIGN"}
        assert data["replayed_request_id"] > flag_id
        assert len(pipeline.sim.audit()) == before + 1

    def test_edited_replay_reports_the_edit(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        original = client.get(f"/api/v1/flags/{flag_id}").json()["mutated"]
        edited_headers = [["x-replay-probe", "1"]]
        response = client.post(f"/api/v1/flags/{flag_id}/replay", json={
            "headers": edited_headers})
        assert response.status_code == 200
        data = response.json()
        assert data["request"]["headers"] == edited_headers
        assert data["request"]["url"] == original["url"]

    def test_out_of_scope_edit_is_refused(self, client, pipeline, canary):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        before = len(canary.audit())
        response = client.post(f"/api/v1/flags/{flag_id}/replay", json={
            "url": canary.url + "/users/get-info/?user=13495"})
        assert response.status_code == 403
        assert len(canary.audit()) == before  # refused before any network use

    def test_malformed_header_pairs_rejected(self, client, pipeline):
        flag_id = _pve_flag_id(client, pipeline.run.run_id)
        response = client.post(f"/api/v1/flags/{flag_id}/replay", json={
            "headers": [["only-a-name"]]})
        assert response.status_code == 400


class TestStatsAndRuns:

    def test_stats_match_direct_report(self, client, pipeline):
        from bacscan.stats import build_report
        via_api = client.get("/api/v1/stats",
                             params={"run": pipeline.run.run_id}).json()
        direct = build_report(pipeline.store, pipeline.run.run_id)
        via_api.pop("schema_version")
        assert via_api == direct

    def test_stats_default_to_latest_run(self, client, pipeline):
        data = client.get("/api/v1/stats").json()
        assert data["run"]["run_id"] == pipeline.store.latest_run().run_id

    def test_unknown_run_is_404(self, client):
        assert client.get("/api/v1/stats", params={"run": 424242}).status_code == 404

    def test_runs_lists_the_pipeline_run(self, client, pipeline):
        data = client.get("/api/v1/runs").json()
        match = [r for r in data["runs"] if r["run_id"] == pipeline.run.run_id]
        assert match
        assert match[0]["counts"]["sent"] == pipeline.run.sent
        assert match[0]["ended_at"] is not None
