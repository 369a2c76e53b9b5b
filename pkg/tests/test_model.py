"""Validation rules on the core record types."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bacscan.model import (ALLOWED_CWES, BaseRequest, Classification, MutatedRequest,
                           PveFlag, ResponseRecord, TriageVerdict, ValidationError,
                           VerdictKind)


def make_request(**overrides) -> BaseRequest:
    fields = dict(method="GET", url="http://api.example.test/users?id=7",
                  headers=(("Accept", "application/json"),), body=b"")
    fields.update(overrides)
    return BaseRequest(**fields)


class TestBaseRequest:
    def test_rejects_unknown_method(self):
        with pytest.raises(ValidationError):
            make_request(method="BREW")

    def test_method_is_case_normalized(self):
        assert make_request(method="get").method == "GET"

    def test_rejects_non_http_url(self):
        with pytest.raises(ValidationError):
            make_request(url="ftp://files.example.test/x")

    def test_rejects_relative_url(self):
        with pytest.raises(ValidationError):
            make_request(url="/users?id=7")

    def test_host_port_defaults_by_scheme(self):
        assert make_request(url="http://a.test/x").host_port() == ("a.test", 80)
        assert make_request(url="https://a.test/x").host_port() == ("a.test", 443)
        assert make_request(url="http://a.test:8081/x").host_port() == ("a.test", 8081)

    def test_host_is_lowercased(self):
        assert make_request(url="http://API.Example.TEST/x").host_port()[0] == "api.example.test"

    def test_header_value_lookup_is_case_insensitive(self):
        request = make_request(headers=(("X-Api-Key", "k1"), ("Accept", "*/*")))
        assert request.header_value("x-api-key") == "k1"
        assert request.header_value("ACCEPT") == "*/*"
        assert request.header_value("missing") is None

    def test_body_must_be_bytes(self):
        with pytest.raises(ValidationError):
            make_request(body="text")  # type: ignore[arg-type]

    @given(st.sampled_from(["GET", "POST", "PUT", "DELETE", "PATCH", "HEAD", "OPTIONS"]))
    def test_allowed_methods_accepted(self, method):
        assert make_request(method=method).method == method


class TestResponseRecord:
    def test_transport_failure_needs_reason(self):
        with pytest.raises(ValidationError):
            ResponseRecord(status=0, body=b"", elapsed_ms=1)

    def test_real_status_excludes_transport_error(self):
        with pytest.raises(ValidationError):
            ResponseRecord(status=200, body=b"", elapsed_ms=1, transport_error="timeout")

    def test_ok_means_2xx(self):
        ok = ResponseRecord(status=204, body=b"", elapsed_ms=1)
        not_ok = ResponseRecord(status=302, body=b"", elapsed_ms=1)
        failed = ResponseRecord(status=0, body=b"", elapsed_ms=1, transport_error="timeout")
        assert ok.ok and not not_ok.ok and not failed.ok

    def test_status_range_checked(self):
        with pytest.raises(ValidationError):
            ResponseRecord(status=799, body=b"", elapsed_ms=1)


class TestMutatedRequest:
    def test_requires_method_name_and_description(self):
        request = make_request()
        with pytest.raises(ValidationError):
            MutatedRequest(base_id=1, iam_name="", modification="x", request=request)
        with pytest.raises(ValidationError):
            MutatedRequest(base_id=1, iam_name="strip_headers", modification="",
                           request=request)


class TestPveFlag:
    def test_pve_requires_regex_hits(self):
        with pytest.raises(ValidationError):
            PveFlag(mutated_id=1, classification=Classification.PVE, dissimilarity=0.95)

    def test_dissimilarity_bounds(self):
        with pytest.raises(ValidationError):
            PveFlag(mutated_id=1, classification=Classification.BENIGN, dissimilarity=1.01)

    def test_manual_review_without_hits_is_fine(self):
        flag = PveFlag(mutated_id=1, classification=Classification.MANUAL_REVIEW,
                       dissimilarity=0.0, reason="markup content type")
        assert flag.regex_hits == ()


class TestTriageVerdict:
    def test_confirmed_requires_cwe(self):
        with pytest.raises(ValidationError):
            TriageVerdict(flag_id=1, verdict=VerdictKind.CONFIRMED_VULN)

    def test_cwe_set_is_enforced(self):
        with pytest.raises(ValidationError):
            TriageVerdict(flag_id=1, verdict=VerdictKind.CONFIRMED_VULN, cwe_tags=(999,))

    def test_fppve_needs_no_tags(self):
        verdict = TriageVerdict(flag_id=1, verdict=VerdictKind.FPPVE, notes="public data")
        assert verdict.cwe_tags == ()

    @given(st.sets(st.sampled_from(sorted(ALLOWED_CWES)), min_size=1))
    def test_any_allowed_combination_accepted(self, tags):
        verdict = TriageVerdict(flag_id=1, verdict=VerdictKind.CONFIRMED_VULN,
                                cwe_tags=tuple(sorted(tags)))
        assert set(verdict.cwe_tags) == tags
