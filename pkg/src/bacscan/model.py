"""Core domain types shared by every stage of the scanner.

Everything that crosses a module boundary is defined here: captured requests,
responses, mutated requests produced by attack methods, heuristic flags, and
triage verdicts. Instances validate their own invariants at construction so
that downstream code never has to re-check them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from urllib.parse import urlsplit

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

ALLOWED_METHODS = frozenset({"GET", "POST", "PUT", "PATCH", "DELETE", "HEAD", "OPTIONS"})

# CWE identifiers a confirmed verdict may carry. 0 is reserved for decoy
# entries in simulator ground-truth manifests and is not a valid verdict tag.
ALLOWED_CWES = frozenset({200, 201, 285, 359, 538, 540, 862})

HeaderPairs = tuple[tuple[str, str], ...]


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class BacscanError(Exception):
    """Base class for all scanner errors."""


class ValidationError(BacscanError):
    """A domain object violated one of its invariants."""


class NotFoundError(BacscanError):
    """A referenced record does not exist in the store."""


class ScopeViolation(BacscanError):
    """A request targeted a host outside the configured allowlist."""


class ConfigError(BacscanError):
    """A configuration document is malformed or contains unknown keys."""


class HarParseError(BacscanError):
    """A capture document could not be parsed at all (entry-level defects
    are skipped instead, see har.parse_har)."""


class StoreError(BacscanError):
    """The persistent store rejected an operation."""


# ---------------------------------------------------------------------------
# Requests and responses
# ---------------------------------------------------------------------------

def _check_url(url: str) -> None:
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https"):
        raise ValidationError(f"url must be absolute http/https, got {url!r}")
    if not parts.netloc:
        raise ValidationError(f"url has no host: {url!r}")


@dataclass(frozen=True)
class BaseRequest:
    """One captured (or synthesized) HTTP request.

    ``request_id`` is 0 until the store assigns a real id at persist time.
    ``headers`` preserves capture order and may repeat names.
    ``captured_at`` is a unix timestamp, 0.0 when unknown.
    """

    method: str
    url: str
    headers: HeaderPairs = ()
    body: bytes = b""
    request_id: int = 0
    captured_at: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", str(self.method).upper())
        if self.method not in ALLOWED_METHODS:
            raise ValidationError(f"unsupported method {self.method!r}")
        _check_url(self.url)
        if not isinstance(self.body, bytes):
            raise ValidationError("body must be bytes")
        object.__setattr__(self, "headers", tuple((str(n), str(v)) for n, v in self.headers))
        for name, _ in self.headers:
            if not name:
                raise ValidationError("header name must be non-empty")

    def host_port(self) -> tuple[str, int | None]:
        """Lowercased host plus explicit-or-default port (None if neither)."""
        parts = urlsplit(self.url)
        host = (parts.hostname or "").lower()
        port = parts.port
        if port is None:
            port = 443 if parts.scheme == "https" else 80
        return host, port

    def header_value(self, name: str) -> str | None:
        """First value for a header name, case-insensitive."""
        lowered = name.lower()
        for n, v in self.headers:
            if n.lower() == lowered:
                return v
        return None


@dataclass(frozen=True)
class ResponseRecord:
    """Outcome of one send. status == 0 means the transport failed and
    ``transport_error`` says why; real HTTP statuses are 100..599."""

    status: int
    content_type: str = ""
    body: bytes = b""
    elapsed_ms: int = 0
    transport_error: str = ""

    def __post_init__(self) -> None:
        if self.status != 0 and not (100 <= self.status <= 599):
            raise ValidationError(f"status out of range: {self.status}")
        if (self.status == 0) != bool(self.transport_error):
            raise ValidationError("transport_error must be set exactly when status == 0")
        if self.elapsed_ms < 0:
            raise ValidationError("elapsed_ms must be >= 0")
        if not isinstance(self.body, bytes):
            raise ValidationError("response body must be bytes")

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300


@dataclass(frozen=True)
class MutatedRequest:
    """A variant of a base request emitted by one attack method.

    ``modification`` is a human-readable description of the single edit this
    variant applies; it is never empty. ``base_id`` is the store id of the
    original request (0 when the base has not been persisted yet).
    """

    base_id: int
    iam_name: str
    modification: str
    request: BaseRequest

    def __post_init__(self) -> None:
        if not self.iam_name:
            raise ValidationError("iam_name must be non-empty")
        if not self.modification:
            raise ValidationError("modification description must be non-empty")


# ---------------------------------------------------------------------------
# Flags and verdicts
# ---------------------------------------------------------------------------

class Classification(enum.Enum):
    PVE = "PVE"
    MANUAL_REVIEW = "MANUAL_REVIEW"
    BENIGN = "BENIGN"


class VerdictKind(enum.Enum):
    CONFIRMED_VULN = "CONFIRMED_VULN"
    FPPVE = "FPPVE"


@dataclass(frozen=True)
class PveFlag:
    """Classifier output for one mutated exchange.

    ``regex_hits`` is a tuple of (pattern_name, excerpt) pairs; excerpts are
    truncated to 64 characters by the detector. ``dissimilarity`` is the
    normalized edit distance against the baseline response, always in [0, 1]
    (0.0 when the carve-out skipped the comparison, see ``reason``).
    """

    mutated_id: int
    classification: Classification
    dissimilarity: float
    regex_hits: tuple[tuple[str, str], ...] = ()
    code_leak: bool = False
    reason: str = ""
    flag_id: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.classification, Classification):
            raise ValidationError("classification must be a Classification")
        if not (0.0 <= self.dissimilarity <= 1.0):
            raise ValidationError(f"dissimilarity out of range: {self.dissimilarity}")
        object.__setattr__(self, "regex_hits", tuple((str(n), str(e)) for n, e in self.regex_hits))
        if self.classification is Classification.PVE and not self.regex_hits:
            raise ValidationError("a PVE flag requires at least one regex hit")


@dataclass(frozen=True)
class TriageVerdict:
    """A human decision about a flag. Later verdicts supersede earlier ones;
    the store keeps the full history and marks the newest one active."""

    flag_id: int
    verdict: VerdictKind
    cwe_tags: tuple[int, ...] = ()
    notes: str = ""
    decided_at: float = 0.0
    verdict_id: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.verdict, VerdictKind):
            raise ValidationError("verdict must be a VerdictKind")
        object.__setattr__(self, "cwe_tags", tuple(int(t) for t in self.cwe_tags))
        bad = [t for t in self.cwe_tags if t not in ALLOWED_CWES]
        if bad:
            raise ValidationError(f"cwe_tags outside the allowed set: {bad}")
        if self.verdict is VerdictKind.CONFIRMED_VULN and not self.cwe_tags:
            raise ValidationError("CONFIRMED_VULN requires at least one CWE tag")
