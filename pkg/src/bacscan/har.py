"""HAR 1.2 ingestion: parse, scope-filter, dedupe.

Capture files from browser dev tools and proxies are messy, so parsing is
tolerant at the entry level: an entry with a bad URL, unsupported scheme, or
garbled body is skipped and counted, never fatal. A document that is not
JSON or lacks the log.entries backbone is a hard parse error that names the
offending location.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime
from urllib.parse import urlsplit

from .model import BaseRequest, HarParseError, ResponseRecord, ValidationError

# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapturedCall:
    """One HAR entry: the request plus the response recorded at capture time
    (None when the capture holds no usable response). The captured response
    is what scans use as the baseline unless asked to refresh live."""

    request: BaseRequest
    response: ResponseRecord | None


@dataclass
class ParsedHar:
    calls: list[CapturedCall] = field(default_factory=list)
    skipped: int = 0  # entries dropped for unsupported scheme or defects

    @property
    def requests(self) -> list[BaseRequest]:
        return [c.request for c in self.calls]


def _decode_body(container: dict) -> bytes:
    text = container.get("text")
    if text is None:
        return b""
    if not isinstance(text, str):
        raise ValueError("body text is not a string")
    if container.get("encoding") == "base64":
        return base64.b64decode(text, validate=False)
    return text.encode("utf-8")


def _parse_timestamp(value) -> float:
    if not isinstance(value, str) or not value:
        return 0.0
    try:
        return datetime.fromisoformat(value.replace("Z", "+00:00")).timestamp()
    except ValueError:
        return 0.0


def _entry_request(entry: dict) -> BaseRequest:
    req = entry.get("request")
    if not isinstance(req, dict):
        raise ValueError("entry has no request object")
    url = req.get("url", "")
    scheme = urlsplit(url).scheme
    if scheme not in ("http", "https"):
        raise ValueError(f"unsupported scheme {scheme!r}")
    headers = []
    for h in req.get("headers", []) or []:
        if isinstance(h, dict) and h.get("name"):
            headers.append((str(h["name"]), str(h.get("value", ""))))
    body = _decode_body(req.get("postData") or {})
    return BaseRequest(
        method=str(req.get("method", "")).upper(),
        url=url,
        headers=tuple(headers),
        body=body,
        captured_at=_parse_timestamp(entry.get("startedDateTime")),
    )


def _entry_response(entry: dict) -> ResponseRecord | None:
    resp = entry.get("response")
    if not isinstance(resp, dict):
        return None
    status = resp.get("status")
    if not isinstance(status, int) or not (100 <= status <= 599):
        return None  # HAR writes status 0 for aborted fetches
    content = resp.get("content") or {}
    content_type = str(content.get("mimeType", "") or "")
    try:
        body = _decode_body(content)
    except (ValueError, binascii.Error):
        body = b""
    return ResponseRecord(status=status, content_type=content_type, body=body)


def parse_har(document: bytes | str) -> ParsedHar:
    """Parse a HAR document into captured calls, preserving entry order.

    Raises HarParseError when the document as a whole is unusable; the error
    message names the byte offset (JSON errors) or the missing path.
    """
    if isinstance(document, bytes):
        # dev tools on Windows like to prepend a BOM
        document = document.decode("utf-8-sig", errors="replace")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise HarParseError(f"not valid JSON at byte offset {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("log"), dict):
        raise HarParseError("missing object at path 'log'")
    entries = doc["log"].get("entries")
    if not isinstance(entries, list):
        raise HarParseError("missing array at path 'log.entries'")

    parsed = ParsedHar()
    for entry in entries:
        if not isinstance(entry, dict):
            parsed.skipped += 1
            continue
        try:
            request = _entry_request(entry)
        except (ValueError, ValidationError, KeyError, TypeError, binascii.Error):
            parsed.skipped += 1
            continue
        parsed.calls.append(CapturedCall(request=request, response=_entry_response(entry)))
    return parsed


# ---------------------------------------------------------------------------
# Scope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScopePolicy:
    """Hard allowlist applied before anything is stored or sent.

    ``allowed_hosts`` entries are exact hostnames or ``*.suffix`` wildcards,
    matched case-insensitively. An entry may pin a port (``host:8080``); a
    pinned port must match the request's explicit-or-default port exactly,
    while an entry without a port matches any port.
    """

    allowed_hosts: tuple[str, ...]
    denied_path_prefixes: tuple[str, ...] = ()
    max_requests: int = 10_000

    def __post_init__(self) -> None:
        if not self.allowed_hosts:
            raise ValidationError("scope needs at least one allowed host")
        object.__setattr__(self, "allowed_hosts", tuple(h.lower() for h in self.allowed_hosts))
        object.__setattr__(self, "denied_path_prefixes", tuple(self.denied_path_prefixes))
        if self.max_requests < 1:
            raise ValidationError("max_requests must be positive")

    def host_allowed(self, host: str, port: int | None) -> bool:
        host = host.lower()
        for pattern in self.allowed_hosts:
            want_port = None
            name = pattern
            if ":" in pattern:
                name, _, port_text = pattern.rpartition(":")
                try:
                    want_port = int(port_text)
                except ValueError:
                    name = pattern
            if name.startswith("*."):
                if not host.endswith(name[1:]):
                    continue
            elif host != name:
                continue
            if want_port is None or want_port == port:
                return True
        return False

    def allows(self, request: BaseRequest) -> bool:
        host, port = request.host_port()
        if not self.host_allowed(host, port):
            return False
        path = urlsplit(request.url).path or "/"
        return not any(path.startswith(p) for p in self.denied_path_prefixes)


@dataclass
class ScopeResult:
    in_scope: list[BaseRequest]
    excluded: list[BaseRequest]


def apply_scope(requests: list[BaseRequest], policy: ScopePolicy) -> ScopeResult:
    """Partition requests into in-scope and excluded, preserving order.

    Every input lands in exactly one bucket; requests beyond
    ``policy.max_requests`` in-scope entries overflow into ``excluded``.
    """
    result = ScopeResult(in_scope=[], excluded=[])
    for request in requests:
        if policy.allows(request) and len(result.in_scope) < policy.max_requests:
            result.in_scope.append(request)
        else:
            result.excluded.append(request)
    return result


# ---------------------------------------------------------------------------
# Dedupe
# ---------------------------------------------------------------------------


def _dedupe_key(request: BaseRequest) -> tuple[str, str, str]:
    # URL compared verbatim including the query string; headers deliberately
    # excluded so that cookie/UA churn does not multiply scan volume.
    return (request.method, request.url, hashlib.sha256(request.body).hexdigest())


def dedupe(requests: list[BaseRequest]) -> list[BaseRequest]:
    """Drop repeat captures of the same call, keeping the first of each.

    Key is (method, verbatim URL, body digest). Stable and idempotent.
    """
    seen: set[tuple[str, str, str]] = set()
    kept: list[BaseRequest] = []
    for request in requests:
        key = _dedupe_key(request)
        if key in seen:
            continue
        seen.add(key)
        kept.append(request)
    return kept
