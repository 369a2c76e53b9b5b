"""Deterministic vulnerable HTTP target for tests and demos.

The simulated API mimics a small commerce site captured from the point of
view of a tester's own freshly registered account (user 13495): the account
has a sparse profile, an empty pending order, and a short inbox, while the
long-standing accounts around it carry rich records. Five access-control
bugs are planted, plus one decoy endpoint that serves public data shaped
like sensitive data (street addresses). Everything is generated from
``fixture_seed``, so identical seeds produce byte-identical responses.

The server also keeps an audit log of every request it receives (timestamp,
method, path) exposed at /__audit, which lets tests assert politeness and
scope compliance from the target's point of view. Requests to the /__
introspection endpoints themselves are not recorded.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from . import __version__

DEFAULT_SEED = 1337

_FIRST_NAMES = ("Avery", "Blake", "Casey", "Dana", "Ellis", "Frankie", "Gray",
                "Harper", "Indra", "Jules", "Kendall", "Logan", "Marlow", "Noor",
                "Oakley", "Parker", "Quinn", "Riley", "Sasha", "Tatum")
_LAST_NAMES = ("Abbott", "Barnes", "Castillo", "Donovan", "Eng", "Fletcher",
               "Guzman", "Holt", "Ibarra", "Jennings", "Kerr", "Lindqvist",
               "Moreau", "Nakamura", "Osei", "Pruitt", "Quintero", "Reyes",
               "Sandoval", "Thao")
_STREETS = ("Cedar Ave", "Willow St", "Harbor Rd", "Summit Blvd", "Juniper Ln",
            "Birchwood Dr", "Granite Ct", "Pacific Way", "Alder Pl", "Lakeview Ter")
_EVENTS = ("signed in", "updated payment method", "placed order", "opened ticket",
           "changed address", "renewed plan", "downloaded invoice", "redeemed offer")


def _luhn_complete(prefix: str) -> str:
    """Append the Luhn check digit to a digit prefix."""
    total = 0
    for pos, ch in enumerate(reversed(prefix)):
        d = int(ch)
        if pos % 2 == 0:  # check digit will occupy position 0
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return prefix + str((10 - total % 10) % 10)


def _ssn(rng: random.Random) -> str:
    return f"{rng.randint(100, 899):03d}-{rng.randint(10, 99):02d}-{rng.randint(1000, 9999):04d}"


def _phone(rng: random.Random) -> str:
    return f"{rng.randint(201, 989)}-{rng.randint(200, 999)}-{rng.randint(1000, 9999)}"


def _address(rng: random.Random) -> str:
    return f"{rng.randint(10, 9900)} {rng.choice(_STREETS)}"


def _name(rng: random.Random) -> str:
    return f"{rng.choice(_FIRST_NAMES)} {rng.choice(_LAST_NAMES)}"


def _email(name: str, rng: random.Random) -> str:
    slug = name.lower().replace(" ", ".")
    return f"{slug}{rng.randint(1, 99)}@example-mail.test"


def _card(rng: random.Random) -> str:
    return _luhn_complete("4" + "".join(str(rng.randint(0, 9)) for _ in range(14)))


def _token(rng: random.Random, length: int = 28) -> str:
    alphabet = "ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz23456789"
    return "".join(rng.choice(alphabet) for _ in range(length))


# ---------------------------------------------------------------------------
# Fixture dataset
# ---------------------------------------------------------------------------

OWN_USER = 13495
USER_IDS = tuple(range(13490, 13500))
OWN_ORDER = 42
ORDER_IDS = tuple(range(39, 46))
PILOT_CELL = (37, 122, 2)


@dataclass
class FixtureData:
    seed: int
    users: dict = field(default_factory=dict)
    user_tokens: dict = field(default_factory=dict)
    orders: dict = field(default_factory=dict)
    messages: dict = field(default_factory=dict)
    staff: list = field(default_factory=list)
    public_source: str = ""
    newsletter: str = ""
    app_conf: str = ""
    config_js: str = ""
    big_body: str = ""
    static_html: str = ""
    static_css: str = ""
    static_js: str = ""


def fixture_data(seed: int = DEFAULT_SEED) -> FixtureData:
    """Generate the full dataset for one seed. Pure and deterministic."""
    rng = random.Random(seed)
    data = FixtureData(seed=seed)

    for uid in USER_IDS:
        name = _name(rng)
        record = {
            "user": uid,
            "name": name,
            "email": _email(name, rng),
        }
        if uid == OWN_USER:
            # the tester's own freshly registered account stays sparse
            record["joined"] = "2026-08"
            record["profile"] = "incomplete"
        else:
            record["ssn"] = _ssn(rng)
            record["phone"] = _phone(rng)
            record["address"] = _address(rng)
            record["joined"] = f"20{rng.randint(18, 24)}-{rng.randint(1, 12):02d}"
            record["activity"] = [
                {
                    "ts": f"2026-{rng.randint(1, 8):02d}-{rng.randint(1, 28):02d}",
                    "event": f"{rng.choice(_EVENTS)} ref {rng.randint(1000, 9999)}",
                }
                for _ in range(30)
            ]
        data.users[uid] = record
        data.user_tokens[uid] = f"tok-u{uid}-{_token(rng, 12)}"

    for oid in ORDER_IDS:
        if oid == OWN_ORDER:
            data.orders[oid] = {"order": oid, "status": "pending", "items": []}
            continue
        owner = _name(rng)
        items = [
            {
                "sku": f"SKU-{rng.randint(10000, 99999)}",
                "desc": f"{rng.choice(('walnut', 'steel', 'canvas', 'ceramic'))} "
                        f"{rng.choice(('lamp', 'stool', 'planter', 'shelf', 'frame'))}",
                "qty": rng.randint(1, 4),
                "price": f"{rng.randint(8, 240)}.{rng.randint(0, 99):02d}",
            }
            for _ in range(14)
        ]
        data.orders[oid] = {
            "order": oid,
            "status": "delivered",
            "customer": {"name": owner, "address": _address(rng)},
            "payment": {"card": _card(rng), "exp": f"{rng.randint(1, 12):02d}/2{rng.randint(7, 9)}"},
            "items": items,
            "total": f"{rng.randint(200, 2400)}.{rng.randint(0, 99):02d}",
        }

    for uid in USER_IDS:
        count = 2 if uid == OWN_USER else rng.randint(2, 4)
        sender_pool = [data.users[u]["email"] for u in USER_IDS if u != uid]
        data.messages[uid] = [
            {
                "from": rng.choice(sender_pool),
                "subject": f"{rng.choice(('invoice', 'delivery', 'reminder', 'offer'))} "
                           f"#{rng.randint(100, 999)}",
                "body": f"please review item {rng.randint(10, 99)} before "
                        f"2026-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
            }
            for _ in range(count)
        ]

    for _ in range(16):
        name = _name(rng)
        data.staff.append({
            "name": name,
            "email": _email(name, rng),
            "phone": _phone(rng),
            "ssn": _ssn(rng),
            "address": _address(rng),
            "department": rng.choice(("sales", "sales", "support", "ops")),
        })

    data.public_source = f"PUB{_token(rng, 24)}"
    data.newsletter = (
        "Community update. Thanks for subscribing to our monthly notes. "
        "This month we improved checkout speed and refreshed the help center. "
        "Reply to share feedback."
    )

    conf_secret = _token(rng, 36)
    conf_password = _token(rng, 16)
    data.app_conf = "\n".join(
        [
            "[app]",
            "env = production",
            "debug = off",
            "workers = 8",
            "",
            "[database]",
            "host = db-internal-01",
            "port = 5432",
            "name = commerce",
            "user = svc_commerce",
            f"password = {conf_password}",
            "",
            "[auth]",
            f"secret = {conf_secret}",
            "session_ttl = 86400",
            "",
            "[smtp]",
            "host = mail-internal-02",
            "port = 587",
            "user = noreply",
            f"passwd = {_token(rng, 14)}",
            "",
            "[billing]",
            "provider = acme-pay",
            f"api_key = {_token(rng, 40)}",
            "retry_limit = 3",
            "",
            "[cache]",
            "backend = redis",
            "host = cache-internal-01",
            "port = 6379",
            f"auth_token = {_token(rng, 28)}",
            "ttl_seconds = 300",
            "",
            "[object_store]",
            "bucket = commerce-assets-prod",
            "region = us-east-1",
            f"access_key = AK{_token(rng, 18)}",
            f"secret_key = {_token(rng, 40)}",
            "",
            "[ldap]",
            "url = ldaps://dir-internal-01:636",
            "bind_dn = cn=svc_commerce,ou=services,dc=corp,dc=example",
            f"bind_password = {_token(rng, 20)}",
            "",
            "[logging]",
            "level = warning",
            "sink = collector-internal-03:9200",
            "retention_days = 30",
            "audit_sample_rate = 0.05",
            "",
            "[upstreams]",
            "inventory = http://inventory-internal-01:8080",
            "payments = http://payments-internal-02:8443",
            "shipping = http://shipping-internal-01:8080",
            "notifications = http://notify-internal-01:8080",
            "",
            "[features]",
        ]
        + [f"flag_{i:02d} = {'on' if rng.random() < 0.5 else 'off'}" for i in range(56)]
    )

    api_key = "".join(rng.choice("0123456789abcdef") for _ in range(40))
    routes = "\n".join(
        f"    '{p}': '{h}',"
        for p, h in (
            ("/users/get-info/", "usersController.show"),
            ("/secure/get-info/", "usersController.showSecure"),
            ("/orders/:id/receipt", "ordersController.receipt"),
            ("/retrieve-data/", "sourcesController.fetch"),
            ("/messages/inbox", "inboxController.list"),
            ("/api/directory", "directoryController.search"),
            ("/locations/nearby", "locationsController.nearby"),
        )
    )
    flags_js = "\n".join(
        f"    {f'flag{i:02d}'}: {'true' if rng.random() < 0.5 else 'false'},"
        for i in range(56)
    )
    upstreams_js = "\n".join(
        f"    {name}: 'http://{host}:{port}',"
        for name, host, port in (
            ("inventory", "inventory-internal-01", 8080),
            ("payments", "payments-internal-02", 8443),
            ("shipping", "shipping-internal-01", 8080),
            ("notifications", "notify-internal-01", 8080),
            ("search", "search-internal-04", 9300),
        )
    )
    data.config_js = (
        "var config = {\n"
        f"  api_key: '{api_key}',\n"
        f"  session_secret: '{_token(rng, 36)}',\n"
        "  env: 'production',\n"
        "  sessionTtl: 86400,\n"
        "  retry: { attempts: 3, backoffMs: 250 },\n"
        "  routes: {\n" + routes + "\n  },\n"
        "  upstreams: {\n" + upstreams_js + "\n  },\n"
        "  features: {\n" + flags_js + "\n  },\n"
        "  telemetry: { enabled: true, sampleRate: 0.25, sink: 'collector-internal-03' },\n"
        "  cache: { ttlSeconds: 300, maxEntries: 10000, strategy: 'lru' },\n"
        "  cdn: { base: 'https://assets.internal.example', purgeToken: '"
        + _token(rng, 32) + "' },\n"
        "  limits: { maxUploadMb: 25, maxPageSize: 200, maxRetries: 5 }\n"
        "};\n"
        "if (typeof module !== 'undefined') { module.exports = config; }\n"
    )

    lines = []
    i = 0
    while sum(len(l) + 1 for l in lines) <= 100_400:
        lines.append(f"{i:06d} level=info source=worker-{i % 7} event={rng.choice(_EVENTS).replace(' ', '_')} ok")
        i += 1
    data.big_body = "\n".join(lines)

    data.static_html = (
        "<!DOCTYPE html>\n<html>\n<head><title>shopfront</title>"
        "<link rel=\"stylesheet\" href=\"/static/app.css\"></head>\n"
        "<body>\n<div id=\"root\"><h1>shopfront</h1>"
        "<p>loading catalog...</p></div>\n"
        "<script src=\"/static/app.js\"></script>\n</body>\n</html>\n"
    )
    data.static_css = (
        "body { font-family: sans-serif; margin: 0; background: #f4f4f2; }\n"
        "#root { max-width: 960px; margin: 2rem auto; padding: 1rem; }\n"
        "h1 { color: #223; letter-spacing: 0.02em; }\n"
        ".card { border: 1px solid #ddd; border-radius: 6px; padding: 12px; }\n"
    )
    data.static_js = (
        "var app = (function () {\n"
        "  function fetchCatalog(page) {\n"
        "    return fetch('/api/catalog?page=' + page).then(function (r) { return r.json(); });\n"
        "  }\n"
        "  function render(items) { document.getElementById('root').textContent = items.length; }\n"
        "  return { boot: function () { fetchCatalog(1).then(render); } };\n"
        "})();\n"
    )
    return data


def _locations_for(seed: int, lat: int, lon: int, radius: int) -> list[dict]:
    """Store listings per integer grid cell. The pilot cell the tester
    captured has two locations; every other cell is densely covered."""
    if radius == 0:
        return []
    if (lat, lon, radius) == PILOT_CELL:
        rng = random.Random(f"{seed}:pilot")
        return [{"name": f"Store #{rng.randint(100, 199)}", "address": _address(rng)}
                for _ in range(2)]
    rng = random.Random(f"{seed}:{lat}:{lon}:{radius}")
    return [{"name": f"Store #{rng.randint(200, 999)}", "address": _address(rng)}
            for _ in range(28)]


# ---------------------------------------------------------------------------
# Ground truth
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlantedVuln:
    vuln_id: str
    endpoint: str
    cwe: int  # 0 marks the decoy
    trigger_iam: str
    sensitive_kind: str
    decoy: bool = False
    note: str = ""


def planted_vulns() -> tuple[PlantedVuln, ...]:
    return (
        PlantedVuln(
            "idor-user-record", "/users/get-info/", 359, "iterate_identifiers", "ssn",
            note="user records keyed by a guessable id, no ownership check"),
        PlantedVuln(
            "idor-order-receipt", "/orders/{order_id}/receipt", 285,
            "iterate_identifiers", "credit_card",
            note="receipts fetched by path id without authorization"),
        PlantedVuln(
            "source-file-leak", "/retrieve-data/", 540, "mutate_url_params",
            "credential_assignment",
            note="legacy integer source ids map to internal config files"),
        PlantedVuln(
            "inbox-missing-authz", "/messages/inbox", 862, "strip_headers", "email",
            note="absent credentials fall through to an unfiltered dump"),
        PlantedVuln(
            "directory-debug-dump", "/api/directory", 200, "append_json_fields", "ssn",
            note="admin/debug body fields unlock full staff records"),
        PlantedVuln(
            "nearby-locations-decoy", "/locations/nearby", 0, "iterate_identifiers",
            "street_address", decoy=True,
            note="public store addresses look sensitive but are not"),
    )


def ground_truth(seed: int = DEFAULT_SEED) -> dict:
    """Machine-readable manifest of what is planted for a given seed."""
    return {
        "fixture_seed": seed,
        "entries": [asdict(v) for v in planted_vulns()],
    }


# ---------------------------------------------------------------------------
# Request handling
# ---------------------------------------------------------------------------


class TargetApp:
    """Route table plus dataset; handler objects delegate here so the logic
    stays testable without sockets."""

    def __init__(self, seed: int = DEFAULT_SEED):
        self.seed = seed
        self.data = fixture_data(seed)
        self.audit: list[dict] = []
        self._audit_lock = threading.Lock()

    # -- helpers -------------------------------------------------------------

    def record(self, method: str, path_query: str) -> None:
        if path_query.startswith("/__"):
            return
        with self._audit_lock:
            self.audit.append({"ts": time.time(), "method": method, "path": path_query})

    def audit_snapshot(self) -> list[dict]:
        with self._audit_lock:
            return list(self.audit)

    def _auth_user(self, headers: dict) -> int | None:
        value = headers.get("authorization", "")
        if not value.startswith("Bearer "):
            return None
        token = value[len("Bearer "):]
        for uid, tok in self.data.user_tokens.items():
            if token == tok:
                return uid
        return None

    # -- routing -------------------------------------------------------------

    def handle(self, method: str, path: str, query: dict, headers: dict,
               body: bytes) -> tuple[int, str, bytes]:
        """Returns (status, content_type, body)."""
        if path == "/__audit":
            return 200, "application/json", json.dumps(self.audit_snapshot()).encode()
        if path == "/__groundtruth":
            return 200, "application/json", json.dumps(ground_truth(self.seed)).encode()

        if path == "/users/get-info/":
            return self._user_info(query)
        if path == "/secure/get-info/":
            return self._secure_user_info(query, headers)
        if path.startswith("/orders/") and path.endswith("/receipt"):
            return self._order_receipt(path)
        if path == "/retrieve-data/":
            return self._retrieve_data(query)
        if path == "/messages/inbox":
            return self._inbox(headers)
        if path == "/api/directory" and method == "POST":
            return self._directory(body)
        if path == "/locations/nearby":
            return self._nearby(query)
        if path == "/static/app.html":
            return 200, "text/html; charset=utf-8", self.data.static_html.encode()
        if path == "/static/app.css":
            return 200, "text/css", self.data.static_css.encode()
        if path == "/static/app.js":
            return 200, "application/javascript", self.data.static_js.encode()
        if path == "/big":
            return 200, "text/plain; charset=utf-8", self.data.big_body.encode()
        if path == "/slow":
            delay_ms = self._int_param(query, "ms", 1000) or 1000
            time.sleep(min(delay_ms, 10_000) / 1000)
            return 200, "application/json", b'{"slept": true}'
        if path == "/redirect":
            return 302, "", b""
        return 404, "application/json", b'{"error":"no such endpoint"}'

    @staticmethod
    def _int_param(query: dict, name: str, default=None):
        values = query.get(name)
        if not values:
            return default
        text = values[0]
        if text.lstrip("-").isdigit():
            return int(text)
        return None

    def _user_info(self, query):
        # IDOR: any well-formed id returns the full record, no ownership check
        if "user" not in query or not query["user"][0]:
            return 400, "application/json", b'{"error":"missing user parameter"}'
        uid = self._int_param(query, "user")
        if uid is None:
            return 400, "application/json", b'{"error":"user must be an integer"}'
        record = self.data.users.get(uid)
        if record is None:
            return 404, "application/json", b'{"error":"no such user"}'
        return 200, "application/json", json.dumps(record).encode()

    def _secure_user_info(self, query, headers):
        # remediated twin of /users/get-info/: token required, own data only
        caller = self._auth_user(headers)
        if caller is None:
            return 401, "application/json", b'{"error":"unauthorized"}'
        uid = self._int_param(query, "user")
        if uid is None or uid != caller:
            return 401, "application/json", b'{"error":"unauthorized"}'
        return 200, "application/json", json.dumps(self.data.users[uid]).encode()

    def _order_receipt(self, path):
        segment = path[len("/orders/"):-len("/receipt")]
        if not segment.isdigit():
            return 400, "application/json", b'{"error":"order id must be numeric"}'
        order = self.data.orders.get(int(segment))
        if order is None:
            return 404, "application/json", b'{"error":"no such order"}'
        return 200, "application/json", json.dumps(order).encode()

    def _retrieve_data(self, query):
        if "source" not in query or not query["source"][0]:
            return 400, "application/json", b'{"error":"missing source"}'
        source = query["source"][0]
        if source == self.data.public_source:
            return 200, "text/plain; charset=utf-8", self.data.newsletter.encode()
        # legacy numeric ids were never removed and index internal files
        if source == "0":
            return 200, "text/plain; charset=utf-8", self.data.app_conf.encode()
        if source == "1":
            return 200, "text/plain; charset=utf-8", self.data.config_js.encode()
        return 404, "application/json", b'{"error":"unknown source"}'

    def _inbox(self, headers):
        if "authorization" not in headers:
            # missing authorization check: no credentials, every mailbox
            dump = {
                "messages": [
                    dict(m, owner=self.data.users[uid]["email"])
                    for uid in USER_IDS
                    for m in self.data.messages[uid]
                ]
            }
            return 200, "application/json", json.dumps(dump).encode()
        caller = self._auth_user(headers)
        if caller is None:
            return 401, "application/json", b'{"error":"invalid token"}'
        own = {"user": caller, "messages": self.data.messages[caller]}
        return 200, "application/json", json.dumps(own).encode()

    def _directory(self, body):
        try:
            payload = json.loads(body.decode("utf-8")) if body else {}
        except ValueError:
            return 400, "application/json", b'{"error":"body must be JSON"}'
        if not isinstance(payload, dict) or not payload.get("department"):
            return 400, "application/json", b'{"error":"missing department"}'
        department = payload["department"]
        if payload.get("admin") is True or payload.get("debug") is True:
            # undocumented flags skip the public projection entirely
            out = {"department": department, "entries": self.data.staff}
            if payload.get("debug") is True:
                out["debug"] = {"query_ms": 4, "source": "hr-directory-internal"}
            return 200, "application/json", json.dumps(out).encode()
        limit = payload.get("limit", 1)
        if not isinstance(limit, int) or limit < 0:
            limit = 1
        names = [{"name": s["name"]} for s in self.data.staff
                 if s["department"] == department][:limit]
        return 200, "application/json", json.dumps(
            {"department": department, "entries": names}).encode()

    def _nearby(self, query):
        lat = self._int_param(query, "lat")
        lon = self._int_param(query, "lon")
        radius = self._int_param(query, "radius")
        if lat is None or lon is None or radius is None:
            return 400, "application/json", b'{"error":"lat, lon and radius are required integers"}'
        stores = _locations_for(self.seed, lat, lon, radius)
        return 200, "application/json", json.dumps({"locations": stores}).encode()


class _Handler(BaseHTTPRequestHandler):
    server_version = "target-sim/" + __version__

    def log_message(self, *args) -> None:  # keep pytest output clean
        pass

    def _dispatch(self, method: str) -> None:
        app: TargetApp = self.server.app  # type: ignore[attr-defined]
        parts = urlsplit(self.path)
        query = parse_qs(parts.query, keep_blank_values=True)
        headers = {k.lower(): v for k, v in self.headers.items()}
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        app.record(method, self.path)
        status, ctype, payload = app.handle(method, parts.path, query, headers, body)
        self.send_response(status)
        if status == 302:
            self.send_header("Location", f"/users/get-info/?user={OWN_USER}")
        if ctype:
            self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        if method != "HEAD":
            self.wfile.write(payload)

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_PUT(self) -> None:
        self._dispatch("PUT")

    def do_DELETE(self) -> None:
        self._dispatch("DELETE")

    def do_HEAD(self) -> None:
        self._dispatch("HEAD")


@dataclass
class SimulatorHandle:
    app: TargetApp
    host: str
    port: int
    _server: ThreadingHTTPServer = None  # type: ignore[assignment]
    _thread: threading.Thread = None  # type: ignore[assignment]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def ground_truth(self) -> dict:
        return ground_truth(self.app.seed)

    def audit(self) -> list[dict]:
        return self.app.audit_snapshot()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)


def serve(fixture_seed: int = DEFAULT_SEED, port: int = 0,
          host: str = "127.0.0.1") -> SimulatorHandle:
    """Start the simulator on a background thread. ``port`` 0 picks a free
    one. Binds loopback unless told otherwise."""
    server = ThreadingHTTPServer((host, port), _Handler)
    server.app = TargetApp(fixture_seed)  # type: ignore[attr-defined]
    thread = threading.Thread(target=server.serve_forever, name="target-sim", daemon=True)
    thread.start()
    return SimulatorHandle(app=server.app, host=host, port=server.server_address[1],
                           _server=server, _thread=thread)


# ---------------------------------------------------------------------------
# Capture fixture
# ---------------------------------------------------------------------------


def _har_entry(request_dict: dict, response: tuple[int, str, str]) -> dict:
    status, ctype, text = response
    return {
        "startedDateTime": datetime.now(timezone.utc).isoformat(),
        "time": 1,
        "request": {
            "httpVersion": "HTTP/1.1",
            "queryString": [],
            "headersSize": -1,
            "bodySize": -1,
            **request_dict,
        },
        "response": {
            "status": status,
            "statusText": "",
            "httpVersion": "HTTP/1.1",
            "headers": [],
            "content": {"size": len(text), "mimeType": ctype, "text": text},
            "redirectURL": "",
            "headersSize": -1,
            "bodySize": -1,
        },
        "cache": {},
        "timings": {"send": 0, "wait": 1, "receive": 0},
    }


def build_fixture_har(handle: SimulatorHandle, canary_url: str | None = None) -> dict:
    """Capture a realistic browsing session against a running simulator.

    Issues the legitimate requests a tester's own session would contain and
    wraps them in a HAR 1.2 document. Also appends one duplicate entry (to
    exercise dedupe) and, when ``canary_url`` is given, one fabricated entry
    pointing at that out-of-scope host; the canary is never contacted.
    """
    from .dispatcher import DispatchPolicy, send  # local import, no cycle
    from .har import ScopePolicy
    from .model import BaseRequest

    tokens = handle.app.data.user_tokens
    public_source = handle.app.data.public_source
    base = handle.url
    common = (("Accept", "application/json"), ("User-Agent", "fixture-client/1.0"))
    auth = ("Authorization", f"Bearer {tokens[OWN_USER]}")

    session: list[tuple[str, str, tuple, bytes]] = [
        ("GET", f"{base}/users/get-info/?user={OWN_USER}", common, b""),
        ("GET", f"{base}/secure/get-info/?user={OWN_USER}", common + (auth,), b""),
        ("GET", f"{base}/orders/{OWN_ORDER}/receipt", common, b""),
        ("GET", f"{base}/retrieve-data/?source={public_source}", common, b""),
        ("GET", f"{base}/messages/inbox", common + (auth,), b""),
        ("POST", f"{base}/api/directory",
         common + (("Content-Type", "application/json"),),
         b'{"department":"sales","limit":1}'),
        ("GET", f"{base}/locations/nearby?lat={PILOT_CELL[0]}&lon={PILOT_CELL[1]}"
                f"&radius={PILOT_CELL[2]}", common, b""),
        ("GET", f"{base}/static/app.html", common, b""),
        ("GET", f"{base}/static/app.css", common, b""),
        ("GET", f"{base}/static/app.js", common, b""),
        ("GET", f"{base}/big", common, b""),
    ]

    policy = DispatchPolicy(
        scope=ScopePolicy(allowed_hosts=(f"{handle.host}:{handle.port}",)))
    entries = []
    for method, url, headers, body in session:
        request = BaseRequest(method=method, url=url, headers=headers, body=body)
        response = send(request, policy)
        request_dict = {
            "method": method,
            "url": url,
            "headers": [{"name": n, "value": v} for n, v in headers],
        }
        if body:
            request_dict["postData"] = {
                "mimeType": "application/json",
                "text": body.decode("utf-8"),
            }
        entries.append(_har_entry(
            request_dict,
            (response.status, response.content_type, response.body.decode("utf-8"))))

    # duplicate of the first call, later in the session with a session cookie:
    # same method+url+body, so dedupe should drop it
    dup = json.loads(json.dumps(entries[0]))
    dup["request"]["headers"].append({"name": "Cookie", "value": "session=af1c2e"})
    entries.append(dup)

    if canary_url:
        entries.append(_har_entry(
            {
                "method": "GET",
                "url": f"{canary_url.rstrip('/')}/users/get-info/?user=7",
                "headers": [{"name": n, "value": v} for n, v in common],
            },
            (200, "application/json",
             '{"note":"captured on a host that is out of scope for scanning"}')))

    return {
        "log": {
            "version": "1.2",
            "creator": {"name": "bacscan-fixture", "version": __version__},
            "entries": entries,
        }
    }


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="run the vulnerable target simulator")
    parser.add_argument("--port", type=int, default=8471)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)

    handle = serve(fixture_seed=args.seed, port=args.port, host=args.host)
    print("=" * 64)
    print(" deliberately vulnerable target simulator")
    print(f" listening on {handle.url}  (seed {args.seed})")
    print(" never expose this server beyond loopback")
    print("=" * 64)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        handle.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
