"""Classifier behavior: sensitive patterns, threshold boundary, carve-outs.

The threshold fixtures are built so the normalized dissimilarity lands at
exactly 0.89, 0.90, and 0.91, and each construction is re-checked against
the independent DP oracle before the classifier sees it. That keeps the
boundary test honest: if the construction drifts, the oracle assert fails
first with a clear message.
"""

import pytest

from bacscan.detector import (DetectorConfig, classify_response, detect_code_leak,
                              scan_sensitive)
from bacscan.model import Classification, ResponseRecord, ValidationError
from oracles import dp_edit_distance

SSN = "523-45-6789"


def response(text: str, status: int = 200, ctype: str = "application/json") -> ResponseRecord:
    return ResponseRecord(status=status, content_type=ctype,
                          body=text.encode("utf-8"), elapsed_ms=3)


def pair_with_dissimilarity(k: int) -> tuple[str, str]:
    """Equal-length pair whose normalized dissimilarity is exactly k/100.

    The baseline is 100 'a's; the mutated text keeps the first 100-k of
    them and replaces the tail with non-'a' characters ending in a social
    security number, so the same construction also carries a sensitive hit.
    """
    assert 11 <= k <= 100
    baseline = "a" * 100
    mutated = "a" * (100 - k) + "b" * (k - len(SSN)) + SSN
    assert len(mutated) == 100
    assert dp_edit_distance(baseline, mutated) == k, "construction drifted"
    return baseline, mutated


class TestSensitivePatterns:
    def test_email(self):
        hits = scan_sensitive("contact rivka.stern@example.test please", DetectorConfig())
        assert [n for n, _ in hits] == ["email"]

    def test_ssn(self):
        assert any(n == "ssn" for n, _ in scan_sensitive(f"ssn: {SSN}", DetectorConfig()))

    def test_phone(self):
        hits = scan_sensitive("call (415) 555-0173 today", DetectorConfig())
        assert any(n == "phone" for n, _ in hits)

    def test_credit_card_requires_luhn(self):
        valid = "4532015112830366"      # passes the checksum
        invalid = "4532015112830367"    # same digits, last one bumped
        config = DetectorConfig()
        assert any(n == "credit_card" for n, _ in scan_sensitive(f"card {valid}", config))
        assert not any(n == "credit_card" for n, _ in scan_sensitive(f"card {invalid}", config))

    def test_street_address(self):
        hits = scan_sensitive("ships to 1274 Willow Avenue, floor 2", DetectorConfig())
        assert any(n == "street_address" for n, _ in hits)

    def test_credential_assignment_json_and_ini(self):
        config = DetectorConfig()
        assert any(n == "credential_assignment" for n, _ in
                   scan_sensitive('{"password":"hunter22x"}', config))
        assert any(n == "credential_assignment" for n, _ in
                   scan_sensitive("api_key = 0f9adb331902", config))

    def test_hits_are_ordered_and_excerpted(self):
        text = f"a@b.test then {SSN} then c@d.test"
        hits = scan_sensitive(text, DetectorConfig())
        names = [n for n, _ in hits]
        assert names == ["email", "email", "ssn"]  # pattern order, then position
        assert all(len(excerpt) <= 64 for _, excerpt in hits)

    def test_benign_prose_is_quiet(self):
        text = "Thanks for subscribing. We improved checkout speed this month."
        assert scan_sensitive(text, DetectorConfig()) == ()


class TestThresholdBoundary:
    """dissimilarity >= 0.90 (not >) is the flagging rule."""

    def test_just_below_is_benign(self):
        baseline, mutated = pair_with_dissimilarity(89)
        flag = classify_response(response(baseline), response(mutated), DetectorConfig())
        assert flag.classification is Classification.BENIGN
        assert flag.dissimilarity == pytest.approx(0.89)
        assert flag.regex_hits  # the hit alone must not flag below threshold

    def test_exactly_at_threshold_flags(self):
        baseline, mutated = pair_with_dissimilarity(90)
        flag = classify_response(response(baseline), response(mutated), DetectorConfig())
        assert flag.classification is Classification.PVE
        assert flag.dissimilarity == pytest.approx(0.90)

    def test_just_above_flags(self):
        baseline, mutated = pair_with_dissimilarity(91)
        flag = classify_response(response(baseline), response(mutated), DetectorConfig())
        assert flag.classification is Classification.PVE

    def test_dissimilar_without_hits_is_benign(self):
        # short word runs so the long-token pattern stays quiet
        noise = ("zq " * 34)[:100]
        flag = classify_response(response("a" * 100), response(noise),
                                 DetectorConfig())
        assert flag.classification is Classification.BENIGN
        assert flag.dissimilarity == pytest.approx(1.0)
        assert "no sensitive hits" in flag.reason

    def test_hits_without_dissimilarity_is_benign(self):
        baseline = "a" * 89 + SSN
        mutated = "a" * 88 + "b" + SSN  # one substitution
        flag = classify_response(response(baseline), response(mutated), DetectorConfig())
        assert flag.classification is Classification.BENIGN
        assert flag.regex_hits

    def test_custom_threshold_respected(self):
        baseline, mutated = pair_with_dissimilarity(50)
        config = DetectorConfig(threshold=0.5)
        flag = classify_response(response(baseline), response(mutated), config)
        assert flag.classification is Classification.PVE

    def test_threshold_validation(self):
        with pytest.raises(ValidationError):
            DetectorConfig(threshold=0.0)
        with pytest.raises(ValidationError):
            DetectorConfig(threshold=1.2)


class TestCarveOuts:
    def test_markup_type_goes_to_manual_review(self):
        baseline, mutated = pair_with_dissimilarity(95)
        flag = classify_response(
            response(baseline),
            response(mutated, ctype="text/html; charset=utf-8"),
            DetectorConfig())
        assert flag.classification is Classification.MANUAL_REVIEW
        assert flag.dissimilarity == 0.0      # comparison skipped entirely
        assert flag.regex_hits == ()          # pattern scan skipped too
        assert "skipped" in flag.reason and "html" in flag.reason

    @pytest.mark.parametrize("ctype", [
        "text/css", "application/javascript", "application/xml", "text/html"])
    def test_all_markup_families(self, ctype):
        flag = classify_response(response("x"), response("y" * 50, ctype=ctype),
                                 DetectorConfig())
        assert flag.classification is Classification.MANUAL_REVIEW

    def test_oversized_body_goes_to_manual_review(self):
        big = "x" * (100_001 - len(SSN)) + SSN
        assert len(big) == 100_001
        flag = classify_response(response("small"), response(big, ctype="text/plain"),
                                 DetectorConfig())
        assert flag.classification is Classification.MANUAL_REVIEW
        assert flag.dissimilarity == 0.0
        assert flag.regex_hits == ()
        assert "100001" in flag.reason.replace(",", "")

    def test_oversized_baseline_alone_does_not_carve_out(self):
        # the gate is on the response being judged, not the reference
        flag = classify_response(response("x" * 100_001), response("tiny " + SSN),
                                 DetectorConfig())
        assert flag.classification is Classification.PVE

    def test_at_limit_is_still_automatic(self):
        body = "x" * (100_000 - len(SSN)) + SSN
        flag = classify_response(response("small"), response(body), DetectorConfig())
        assert flag.classification is Classification.PVE

    def test_transport_failure_is_benign(self):
        failed = ResponseRecord(status=0, body=b"", elapsed_ms=1,
                                transport_error="timeout")
        flag = classify_response(response("base"), failed, DetectorConfig())
        assert flag.classification is Classification.BENIGN
        assert flag.reason == "transport"


class TestCodeLeak:
    @pytest.mark.parametrize("ctype,body,expected", [
        ("application/javascript", "var x = 1;", True),
        ("text/css", "body { color: red }", True),
        ("text/html", "<div>hello</div>", True),
        ("application/xml", "<a/>", True),
        ("text/plain", "<html><body>x</body></html>", True),
        ("text/plain", "<!DOCTYPE html><html></html>", True),
        ("text/plain", "function(a, b) { return a; }", True),
        ("text/plain", "var config = { key: 'v' };", True),
        ("text/plain", "import os", True),
        ("application/json", '{"a": 1, "b": [2, 3]}', False),  # JSON is data
        ("text/plain", '{"a": 1}', False),
        ("text/plain", "plain sentence, nothing else", False),
        ("text/plain", "", False),
        ("text/plain", "{broken json; with; many; semis;}", True),
    ])
    def test_signature_table(self, ctype, body, expected):
        record = response(body, ctype=ctype)
        assert detect_code_leak(record) is expected

    def test_leak_flag_rides_along_with_classification(self):
        baseline, mutated = pair_with_dissimilarity(95)
        flag = classify_response(response(baseline),
                                 response("var secret = 'x';\n" + mutated,
                                          ctype="text/plain"),
                                 DetectorConfig())
        assert flag.code_leak is True


class TestConfigValidation:
    def test_duplicate_pattern_names_rejected(self):
        with pytest.raises(ValidationError):
            DetectorConfig(patterns=(("dup", r"\d"), ("dup", r"\w")))

    def test_broken_regex_rejected(self):
        with pytest.raises(ValidationError):
            DetectorConfig(patterns=(("bad", "(unclosed"),))
