"""Response classification: dissimilarity threshold plus sensitive-data scan.

A mutated exchange is flagged PVE (potentially vulnerable endpoint) when its
response is at least 90% dissimilar from the baseline response AND the body
contains something that looks sensitive. Site code (HTML/CSS/JS/XML) and
very large bodies are excluded from automatic comparison and routed to
MANUAL_REVIEW instead, mirroring how a human pipeline would treat them.

The threshold comparison is non-strict: a pair sitting exactly on the
configured threshold is flagged.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .model import Classification, PveFlag, ResponseRecord, ValidationError
from .textdiff import normalized_dissimilarity

EXCERPT_LEN = 64

# Default sensitive-data families. Conservative on purpose: each one targets
# a concrete shape (separator-required SSNs, Luhn-passing card runs) rather
# than bare digit blobs, to keep false hits on ordinary numbers down.
DEFAULT_PATTERNS: tuple[tuple[str, str], ...] = (
    ("email", r"[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}"),
    ("ssn", r"\b\d{3}-\d{2}-\d{4}\b"),
    # a word boundary cannot sit before "(", so parenthesized area codes need
    # the lookbehind form instead of a leading \b
    ("phone", r"(?<![\w)])(?:\+?1[-. ])?(?:\(\d{3}\)|\d{3})[-. ]\d{3}[-. ]\d{4}\b"),
    ("credit_card", r"\b\d(?:[ -]?\d){12,18}\b"),
    ("street_address",
     r"\b\d{1,5}\s+(?:[A-Z][A-Za-z]*\s+){0,3}"
     r"(?:Street|St|Avenue|Ave|Road|Rd|Boulevard|Blvd|Lane|Ln|Drive|Dr|"
     r"Court|Ct|Place|Pl|Way|Terrace|Ter)\b"),
    ("credential_assignment",
     r"(?i)\b(?:password|passwd|secret|token|api[_-]?key)\b['\"]?\s*[:=]\s*['\"]?[^\s'\"]{4,}"),
    ("bearer_token", r"\b[A-Za-z0-9+/_-]{32,}={0,2}\b"),
)


def _luhn_ok(digits: str) -> bool:
    total = 0
    for pos, ch in enumerate(reversed(digits)):
        d = int(ch)
        if pos % 2:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0


def _card_match_valid(text: str) -> bool:
    digits = re.sub(r"[ -]", "", text)
    return 13 <= len(digits) <= 19 and _luhn_ok(digits)


# Extra validation applied to raw regex matches, keyed by pattern name.
MATCH_VALIDATORS = {"credit_card": _card_match_valid}


@dataclass
class DetectorConfig:
    """Knobs for the classifier. Defaults follow the scanner's standard
    thresholds; all of them can be overridden from the config file."""

    threshold: float = 0.9
    max_auto_len: int = 100_000
    patterns: tuple[tuple[str, str], ...] = DEFAULT_PATTERNS
    markup_types: tuple[str, ...] = ("html", "css", "javascript", "xml")
    compiled: tuple[tuple[str, re.Pattern], ...] = field(
        init=False, repr=False, compare=False, default=())

    def __post_init__(self) -> None:
        if not (0.0 < self.threshold <= 1.0):
            raise ValidationError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.max_auto_len < 1:
            raise ValidationError("max_auto_len must be positive")
        self.patterns = tuple((str(n), str(p)) for n, p in self.patterns)
        names = [n for n, _ in self.patterns]
        if len(names) != len(set(names)):
            raise ValidationError("pattern names must be unique")
        try:
            self.compiled = tuple((n, re.compile(p)) for n, p in self.patterns)
        except re.error as exc:
            raise ValidationError(f"bad sensitive-data pattern: {exc}") from exc
        self.markup_types = tuple(m.lower() for m in self.markup_types)


def scan_sensitive(text: str, config: DetectorConfig) -> tuple[tuple[str, str], ...]:
    """Non-overlapping matches of every configured family against ``text``.

    Returns (pattern_name, excerpt) pairs ordered by pattern then position;
    excerpts are clipped to 64 characters.
    """
    hits: list[tuple[str, str]] = []
    for name, pattern in config.compiled:
        validator = MATCH_VALIDATORS.get(name)
        for match in pattern.finditer(text):
            got = match.group(0)
            if validator is not None and not validator(got):
                continue
            hits.append((name, got[:EXCERPT_LEN]))
    return tuple(hits)


# ---------------------------------------------------------------------------
# Code-leak heuristic
# ---------------------------------------------------------------------------

CODE_TYPE_MARKERS = ("html", "css", "javascript", "xml")
CODE_PREFIXES = ("<html", "<!doctype", "function(", "var ", "import ")
BRACE_DENSITY_PER_100 = 5.0


def _decoded(response: ResponseRecord) -> str:
    charset = "utf-8"
    match = re.search(r"charset=([\w-]+)", response.content_type, re.IGNORECASE)
    if match:
        charset = match.group(1)
    try:
        return response.body.decode(charset, errors="replace")
    except LookupError:
        return response.body.decode("utf-8", errors="replace")


def detect_code_leak(response: ResponseRecord) -> bool:
    """True when the response looks like site code rather than data.

    Checked against the declared media type first, then a handful of body
    prefix signatures. A body opening with ``{`` only counts as code when it
    is not parseable JSON and its brace/semicolon density is above 5 per 100
    characters; plain JSON objects are data, not code.
    """
    ctype = response.content_type.lower()
    if any(marker in ctype for marker in CODE_TYPE_MARKERS):
        return True
    text = _decoded(response).lstrip()
    if not text:
        return False
    low = text.lower()
    if any(low.startswith(prefix) for prefix in CODE_PREFIXES):
        return True
    if low.startswith("{"):
        try:
            json.loads(text)
            return False
        except ValueError:
            pass
        density = (text.count("{") + text.count("}") + text.count(";")) / len(text) * 100
        return density > BRACE_DENSITY_PER_100
    return False


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

_TEXTUAL_TYPE = re.compile(r"text/|json|urlencoded|csv|yaml|plain", re.IGNORECASE)


def _comparable(baseline: ResponseRecord, mutated: ResponseRecord):
    """Pick the sequences the distance runs over: decoded text when the
    responses declare a textual type (or both decode cleanly), bytes
    otherwise."""
    declared = mutated.content_type or baseline.content_type
    if declared and _TEXTUAL_TYPE.search(declared):
        return _decoded(baseline), _decoded(mutated)
    if not declared:
        try:
            return (baseline.body.decode("utf-8"), mutated.body.decode("utf-8"))
        except UnicodeDecodeError:
            pass
    return baseline.body, mutated.body


def classify_response(
    baseline: ResponseRecord,
    mutated: ResponseRecord,
    config: DetectorConfig,
) -> PveFlag:
    """Classify one mutated exchange against its baseline.

    Decision order: transport failures are BENIGN; markup types and
    oversized bodies go to MANUAL_REVIEW with automatic analysis skipped;
    then dissimilarity >= threshold combined with at least one sensitive
    hit makes a PVE; everything else is BENIGN. The returned flag has
    ``mutated_id`` 0, the store fills it in at persist time.
    """
    code_leak = detect_code_leak(mutated)

    if mutated.status == 0:
        return PveFlag(
            mutated_id=0,
            classification=Classification.BENIGN,
            dissimilarity=0.0,
            code_leak=code_leak,
            reason="transport",
        )

    ctype = mutated.content_type.lower()
    markup_hit = next((m for m in config.markup_types if m in ctype), None)
    if markup_hit is not None:
        return PveFlag(
            mutated_id=0,
            classification=Classification.MANUAL_REVIEW,
            dissimilarity=0.0,
            code_leak=code_leak,
            reason=(f"manual review: content type {mutated.content_type!r} matches "
                    f"{markup_hit!r}; automatic comparison skipped"),
        )

    base_seq, mut_seq = _comparable(baseline, mutated)
    if len(mut_seq) > config.max_auto_len:
        return PveFlag(
            mutated_id=0,
            classification=Classification.MANUAL_REVIEW,
            dissimilarity=0.0,
            code_leak=code_leak,
            reason=(f"manual review: body length {len(mut_seq)} exceeds "
                    f"{config.max_auto_len}; automatic comparison skipped"),
        )

    dissimilarity = normalized_dissimilarity(base_seq, mut_seq)
    mutated_text = mut_seq if isinstance(mut_seq, str) else _decoded(mutated)
    hits = scan_sensitive(mutated_text, config)

    # non-strict comparison: exactly on the threshold still flags
    if dissimilarity >= config.threshold and hits:
        return PveFlag(
            mutated_id=0,
            classification=Classification.PVE,
            dissimilarity=dissimilarity,
            regex_hits=hits,
            code_leak=code_leak,
            reason=(f"dissimilarity {dissimilarity:.4f} >= {config.threshold:g} "
                    f"with {len(hits)} sensitive hit(s)"),
        )

    if dissimilarity >= config.threshold:
        reason = f"dissimilar ({dissimilarity:.4f}) but no sensitive hits"
    else:
        reason = f"below threshold ({dissimilarity:.4f} < {config.threshold:g})"
    return PveFlag(
        mutated_id=0,
        classification=Classification.BENIGN,
        dissimilarity=dissimilarity,
        regex_hits=hits,
        code_leak=code_leak,
        reason=reason,
    )
