"""Attack method engine: pure request-mutation strategies.

Each attack method derives variants of a captured request by editing exactly
one of three surfaces (URL, headers, body). Methods override the relevant
``modify_*`` hooks on the shared base class; ``generate`` assembles whatever
the hooks emit. All methods are pure functions of the base request and their
own configuration: no I/O, no randomness, same input means same output in
the same order.

The six built-in methods probe the classic broken-access-control surfaces:
walking numeric identifiers, dropping headers (credentials included),
rewriting URL parameter values, removing bodies, appending noise to header
values, and injecting extra JSON fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence
from urllib.parse import urlsplit, urlunsplit

from .model import BaseRequest, ConfigError, HeaderPairs, MutatedRequest

# Mutation surfaces a method may declare.
TARGET_URL = "url"
TARGET_HEADERS = "headers"
TARGET_BODY = "body"

DEFAULT_ID_WINDOW = 2
DEFAULT_AUTH_HEADERS = ("authorization", "cookie", "x-api-key", "x-auth-token")
DEFAULT_PARAM_PAYLOADS = ("0", "1", "true", "null", "*")
DEFAULT_NOISE_PAYLOADS = ("'", "0")
DEFAULT_JSON_FIELDS: Mapping[str, object] = {"admin": True, "debug": True}
DEFAULT_MUTATION_BUDGET = 200

Variant = tuple[BaseRequest, str]  # (mutated request, human-readable description)


def _is_decimal(text: str) -> bool:
    return bool(text) and text.isascii() and text.isdigit()


def _neighbor_values(value: int, window: int) -> list[int]:
    """value +/- 1 .. +/- window, clamped at 0, duplicates and the original
    dropped, nearest first."""
    out: list[int] = []
    for step in range(1, window + 1):
        for cand in (value - step, value + step):
            cand = max(cand, 0)
            if cand != value and cand not in out:
                out.append(cand)
    return out


def _split_query(url: str) -> list[str]:
    query = urlsplit(url).query
    return query.split("&") if query else []


def _with_query(url: str, params: list[str]) -> str:
    parts = urlsplit(url)
    return urlunsplit((parts.scheme, parts.netloc, parts.path, "&".join(params), parts.fragment))


def _param_name_value(param: str) -> tuple[str, str, bool]:
    """Split one raw query parameter; bool marks whether '=' was present."""
    if "=" in param:
        name, _, value = param.partition("=")
        return name, value, True
    return param, "", False


def _body_json_object(base: BaseRequest) -> dict | None:
    if not base.body:
        return None
    try:
        parsed = json.loads(base.body.decode("utf-8"))
    except (ValueError, UnicodeDecodeError):
        return None
    return parsed if isinstance(parsed, dict) else None


def _encode_json(obj: dict) -> bytes:
    return json.dumps(obj, separators=(",", ":")).encode("utf-8")


def _replace(base: BaseRequest, **changes) -> BaseRequest:
    fields = dict(
        method=base.method,
        url=base.url,
        headers=base.headers,
        body=base.body,
        request_id=base.request_id,
        captured_at=base.captured_at,
    )
    fields.update(changes)
    return BaseRequest(**fields)


# ---------------------------------------------------------------------------
# Method interface
# ---------------------------------------------------------------------------


class AttackMethod:
    """Base class for all mutation strategies.

    Subclasses override the hooks for the surfaces they claim in ``targets``
    and leave the rest inherited (empty). A hook returns zero or more
    (request, description) variants; a request the method does not apply to
    simply yields nothing.
    """

    name: str = ""
    targets: frozenset[str] = frozenset()

    def modify_url(self, base: BaseRequest) -> list[Variant]:
        return []

    def modify_headers(self, base: BaseRequest) -> list[Variant]:
        return []

    def modify_body(self, base: BaseRequest) -> list[Variant]:
        return []

    def generate(self, base: BaseRequest) -> list[MutatedRequest]:
        out = []
        seen = {(base.url, base.headers, base.body)}
        for request, description in (
            *self.modify_url(base),
            *self.modify_headers(base),
            *self.modify_body(base),
        ):
            # a variant that would repeat the base request (payload equal to
            # the original value, say) or an earlier variant is wasted
            # traffic, so it is dropped here rather than policed per hook
            key = (request.url, request.headers, request.body)
            if key in seen:
                continue
            seen.add(key)
            out.append(MutatedRequest(
                base_id=base.request_id,
                iam_name=self.name,
                modification=description,
                request=request,
            ))
        return out


class IdentifierIterator(AttackMethod):
    """Walk numeric identifiers up and down within a small window.

    Applies to decimal-integer query parameter values, all-digit path
    segments (length capped so hashes are left alone), and integer-valued
    top-level fields of a JSON object body.
    """

    name = "iterate_identifiers"
    targets = frozenset({TARGET_URL, TARGET_BODY})

    def __init__(self, window: int = DEFAULT_ID_WINDOW, max_segment_digits: int = 18):
        if window < 1:
            raise ConfigError("iterate_identifiers window must be >= 1")
        self.window = window
        self.max_segment_digits = max_segment_digits

    def modify_url(self, base: BaseRequest) -> list[Variant]:
        variants: list[Variant] = []
        params = _split_query(base.url)
        for idx, param in enumerate(params):
            name, value, _ = _param_name_value(param)
            if not _is_decimal(value):
                continue
            for cand in _neighbor_values(int(value), self.window):
                mutated = params.copy()
                mutated[idx] = f"{name}={cand}"
                variants.append((
                    _replace(base, url=_with_query(base.url, mutated)),
                    f"query parameter {name!r} value {value} -> {cand}",
                ))
        parts = urlsplit(base.url)
        segments = parts.path.split("/")
        for idx, segment in enumerate(segments):
            if not _is_decimal(segment) or len(segment) > self.max_segment_digits:
                continue
            for cand in _neighbor_values(int(segment), self.window):
                mutated_segments = segments.copy()
                mutated_segments[idx] = str(cand)
                new_url = urlunsplit((parts.scheme, parts.netloc,
                                      "/".join(mutated_segments), parts.query, parts.fragment))
                variants.append((
                    _replace(base, url=new_url),
                    f"path segment {idx} value {segment} -> {cand}",
                ))
        return variants

    def modify_body(self, base: BaseRequest) -> list[Variant]:
        obj = _body_json_object(base)
        if obj is None:
            return []
        variants: list[Variant] = []
        for key, value in obj.items():
            if isinstance(value, bool):
                continue
            if isinstance(value, int):
                make = lambda c: c  # noqa: E731 - keep the original field type
            elif isinstance(value, str) and _is_decimal(value):
                make = str
            else:
                continue
            for cand in _neighbor_values(int(value), self.window):
                mutated = dict(obj)
                mutated[key] = make(cand)
                variants.append((
                    _replace(base, body=_encode_json(mutated)),
                    f"body JSON field {key!r} value {value} -> {cand}",
                ))
        return variants


class HeaderStripper(AttackMethod):
    """Drop headers one at a time, plus all credential headers at once."""

    name = "strip_headers"
    targets = frozenset({TARGET_HEADERS})

    def __init__(self, auth_headers: Sequence[str] = DEFAULT_AUTH_HEADERS):
        self.auth_headers = frozenset(h.lower() for h in auth_headers)

    def modify_headers(self, base: BaseRequest) -> list[Variant]:
        variants: list[Variant] = []
        for idx, (name, _) in enumerate(base.headers):
            remaining = base.headers[:idx] + base.headers[idx + 1:]
            variants.append((
                _replace(base, headers=remaining),
                f"removed header {name!r}",
            ))
        auth_present = [n for n, _ in base.headers if n.lower() in self.auth_headers]
        if auth_present:
            remaining = tuple((n, v) for n, v in base.headers if n.lower() not in self.auth_headers)
            variants.append((
                _replace(base, headers=remaining),
                f"removed all auth headers ({', '.join(auth_present)})",
            ))
        return variants


class UrlParamMutator(AttackMethod):
    """Empty, remove, or overwrite each query parameter value in turn."""

    name = "mutate_url_params"
    targets = frozenset({TARGET_URL})

    def __init__(self, payloads: Sequence[str] = DEFAULT_PARAM_PAYLOADS):
        self.payloads = tuple(payloads)

    def modify_url(self, base: BaseRequest) -> list[Variant]:
        params = _split_query(base.url)
        variants: list[Variant] = []
        for idx, param in enumerate(params):
            name, _, _ = _param_name_value(param)
            emptied = params.copy()
            emptied[idx] = f"{name}="
            variants.append((
                _replace(base, url=_with_query(base.url, emptied)),
                f"query parameter {name!r} value emptied",
            ))
            removed = params.copy()
            del removed[idx]
            variants.append((
                _replace(base, url=_with_query(base.url, removed)),
                f"query parameter {name!r} removed",
            ))
            for payload in self.payloads:
                overwritten = params.copy()
                overwritten[idx] = f"{name}={payload}"
                variants.append((
                    _replace(base, url=_with_query(base.url, overwritten)),
                    f"query parameter {name!r} value replaced with {payload!r}",
                ))
        return variants


class BodyStripper(AttackMethod):
    """Send the request again with an empty body."""

    name = "strip_body"
    # content-length is corrected alongside the removal, hence both surfaces
    targets = frozenset({TARGET_BODY, TARGET_HEADERS})

    def modify_body(self, base: BaseRequest) -> list[Variant]:
        if not base.body:
            return []
        headers = base.headers
        adjusted = False
        new_headers = []
        for name, value in headers:
            if name.lower() == "content-length":
                new_headers.append((name, "0"))
                adjusted = True
            else:
                new_headers.append((name, value))
        description = "request body removed"
        if adjusted:
            description += ", content-length set to 0"
        return [(
            _replace(base, body=b"", headers=tuple(new_headers)),
            description,
        )]


class HeaderNoiser(AttackMethod):
    """Append short noise payloads to each header value."""

    name = "append_header_noise"
    targets = frozenset({TARGET_HEADERS})

    def __init__(self, payloads: Sequence[str] = DEFAULT_NOISE_PAYLOADS):
        self.payloads = tuple(payloads)

    def modify_headers(self, base: BaseRequest) -> list[Variant]:
        variants: list[Variant] = []
        for idx, (name, value) in enumerate(base.headers):
            for payload in self.payloads:
                mutated = list(base.headers)
                mutated[idx] = (name, value + payload)
                variants.append((
                    _replace(base, headers=tuple(mutated)),
                    f"appended {payload!r} to header {name!r}",
                ))
        return variants


class JsonFieldAppender(AttackMethod):
    """Inject extra top-level fields into a JSON object body."""

    name = "append_json_fields"
    targets = frozenset({TARGET_BODY})

    def __init__(self, fields: Mapping[str, object] = DEFAULT_JSON_FIELDS):
        self.fields = dict(fields)

    def modify_body(self, base: BaseRequest) -> list[Variant]:
        obj = _body_json_object(base)
        if obj is None:
            return []
        variants: list[Variant] = []
        for key, value in self.fields.items():
            mutated = dict(obj)
            existed = key in mutated
            mutated[key] = value
            rendered = json.dumps(value)
            if existed:
                description = f"body JSON field {key!r} overwritten with value {rendered} (key existed)"
            else:
                description = f"body JSON field {key!r} added with value {rendered}"
            variants.append((_replace(base, body=_encode_json(mutated)), description))
        return variants


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

METHOD_CLASSES: dict[str, type[AttackMethod]] = {
    cls.name: cls
    for cls in (IdentifierIterator, HeaderStripper, UrlParamMutator,
                BodyStripper, HeaderNoiser, JsonFieldAppender)
}


@dataclass(frozen=True)
class IamDescriptor:
    """Registry entry: a method name plus its configuration knobs."""

    name: str
    config: Mapping[str, object] = field(default_factory=dict)

    @property
    def targets(self) -> frozenset[str]:
        cls = METHOD_CLASSES.get(self.name)
        return cls.targets if cls else frozenset()


def build_method(descriptor: IamDescriptor) -> AttackMethod:
    cls = METHOD_CLASSES.get(descriptor.name)
    if cls is None:
        raise ConfigError(f"unknown attack method {descriptor.name!r}")
    try:
        return cls(**dict(descriptor.config))
    except TypeError as exc:
        raise ConfigError(f"bad config for {descriptor.name!r}: {exc}") from exc


def default_registry() -> tuple[IamDescriptor, ...]:
    return tuple(IamDescriptor(name) for name in METHOD_CLASSES)


def generate_all(
    base: BaseRequest,
    registry: Sequence[IamDescriptor],
    budget: int = DEFAULT_MUTATION_BUDGET,
) -> list[MutatedRequest]:
    """All variants of ``base`` across the registry, in registry order.

    Duplicate registry names are a configuration error. When the combined
    output exceeds ``budget`` it is truncated deterministically: registry
    order first, then each method's own emission order.
    """
    names = [d.name for d in registry]
    if len(names) != len(set(names)):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ConfigError(f"duplicate attack method names in registry: {dupes}")
    out: list[MutatedRequest] = []
    for descriptor in registry:
        out.extend(build_method(descriptor).generate(base))
    return out[:budget]


# Convenience wrappers mirroring the method surface one call at a time.

def iterate_identifiers(base: BaseRequest, window: int = DEFAULT_ID_WINDOW) -> list[MutatedRequest]:
    return IdentifierIterator(window=window).generate(base)


def strip_headers(base: BaseRequest,
                  auth_headers: Sequence[str] = DEFAULT_AUTH_HEADERS) -> list[MutatedRequest]:
    return HeaderStripper(auth_headers=auth_headers).generate(base)


def mutate_url_params(base: BaseRequest,
                      payloads: Sequence[str] = DEFAULT_PARAM_PAYLOADS) -> list[MutatedRequest]:
    return UrlParamMutator(payloads=payloads).generate(base)


def strip_body(base: BaseRequest) -> list[MutatedRequest]:
    return BodyStripper().generate(base)


def append_header_noise(base: BaseRequest,
                        payloads: Sequence[str] = DEFAULT_NOISE_PAYLOADS) -> list[MutatedRequest]:
    return HeaderNoiser(payloads=payloads).generate(base)


def append_json_fields(base: BaseRequest,
                       fields: Mapping[str, object] = DEFAULT_JSON_FIELDS) -> list[MutatedRequest]:
    return JsonFieldAppender(fields=fields).generate(base)
