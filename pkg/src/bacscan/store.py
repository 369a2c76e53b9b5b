"""SQLite-backed persistent store for exchanges, flags, and verdicts.

The data model is deliberately plain: a ``requests`` table holds every
exchange (originals and mutations alike, mutations carrying a description of
the edit and a reference to their base row), a ``headers`` table holds the
ordered header pairs of each stored request, and two artifact tables hold
classifier flags and triage verdicts. A small ``runs`` table records scan
metadata so reports can be reproduced later.

Writes are serialized through a single lock (the dispatcher already funnels
through one writer; the triage service takes the same lock), reads can come
from any thread. Ids are AUTOINCREMENT and therefore strictly increasing.
"""

from __future__ import annotations

import base64
import csv
import io
import json
import sqlite3
import threading
import time
from dataclasses import dataclass

from .model import (
    BaseRequest,
    Classification,
    MutatedRequest,
    NotFoundError,
    PveFlag,
    ResponseRecord,
    StoreError,
    TriageVerdict,
    ValidationError,
    VerdictKind,
)

SCHEMA_VERSION = 1

_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS requests (
    request_id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id INTEGER,
    base_id INTEGER REFERENCES requests(request_id),
    iam_name TEXT NOT NULL DEFAULT '',
    modification TEXT NOT NULL DEFAULT '',
    is_replay INTEGER NOT NULL DEFAULT 0,
    method TEXT NOT NULL,
    url TEXT NOT NULL,
    body BLOB NOT NULL,
    body_src_encoding TEXT NOT NULL DEFAULT '',
    captured_at REAL NOT NULL DEFAULT 0,
    response_status INTEGER,
    response_content_type TEXT,
    response_body BLOB,
    response_elapsed_ms INTEGER,
    response_transport_error TEXT
);
CREATE TABLE IF NOT EXISTS headers (
    header_id INTEGER PRIMARY KEY AUTOINCREMENT,
    request_id INTEGER NOT NULL REFERENCES requests(request_id),
    name TEXT NOT NULL,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS flags (
    flag_id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id INTEGER,
    mutated_id INTEGER NOT NULL REFERENCES requests(request_id),
    classification TEXT NOT NULL,
    dissimilarity REAL NOT NULL,
    regex_hits TEXT NOT NULL DEFAULT '[]',
    code_leak INTEGER NOT NULL DEFAULT 0,
    reason TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS verdicts (
    verdict_id INTEGER PRIMARY KEY AUTOINCREMENT,
    flag_id INTEGER NOT NULL REFERENCES flags(flag_id),
    verdict TEXT NOT NULL,
    cwe_tags TEXT NOT NULL DEFAULT '[]',
    notes TEXT NOT NULL DEFAULT '',
    decided_at REAL NOT NULL DEFAULT 0,
    active INTEGER NOT NULL DEFAULT 1
);
CREATE TABLE IF NOT EXISTS runs (
    run_id INTEGER PRIMARY KEY AUTOINCREMENT,
    started_at REAL NOT NULL DEFAULT 0,
    ended_at REAL,
    policy TEXT NOT NULL DEFAULT '{}',
    bases INTEGER NOT NULL DEFAULT 0,
    mutations INTEGER NOT NULL DEFAULT 0,
    sent INTEGER NOT NULL DEFAULT 0,
    transport_failures INTEGER NOT NULL DEFAULT 0
);
CREATE INDEX IF NOT EXISTS idx_headers_request ON headers(request_id);
CREATE INDEX IF NOT EXISTS idx_requests_run ON requests(run_id);
CREATE INDEX IF NOT EXISTS idx_flags_run ON flags(run_id);
CREATE INDEX IF NOT EXISTS idx_verdicts_flag ON verdicts(flag_id);
"""

EXPORT_TABLES = ("requests", "headers", "flags", "verdicts", "runs")
_BLOB_COLUMNS = {"body", "response_body"}


@dataclass
class StoredExchange:
    """One requests-table row joined with its headers."""

    request: BaseRequest
    iam_name: str = ""
    modification: str = ""
    base_id: int | None = None
    run_id: int | None = None
    is_replay: bool = False
    response: ResponseRecord | None = None

    @property
    def request_id(self) -> int:
        return self.request.request_id


@dataclass
class RunRecord:
    run_id: int
    started_at: float
    ended_at: float | None
    policy: dict
    bases: int
    mutations: int
    sent: int
    transport_failures: int

    @property
    def counts(self) -> dict:
        return {
            "bases": self.bases,
            "mutations": self.mutations,
            "sent": self.sent,
            "transport_failures": self.transport_failures,
        }


@dataclass
class FlagContext:
    """A flag joined with everything triage needs to judge it."""

    flag: PveFlag
    run_id: int | None
    mutated: StoredExchange
    base: StoredExchange | None
    verdict: TriageVerdict | None


class Store:
    """Handle on one scanner database. Safe for one writer and any number
    of reader threads within a process."""

    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._write_lock = threading.Lock()
        with self._write_lock:
            self._conn.executescript(_SCHEMA)
            if path != ":memory:":
                self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute("PRAGMA foreign_keys=ON")
            row = self._conn.execute("SELECT value FROM meta WHERE key='schema_version'").fetchone()
            if row is None:
                self._conn.execute(
                    "INSERT INTO meta(key, value) VALUES ('schema_version', ?)",
                    (str(SCHEMA_VERSION),))
            elif int(row["value"]) != SCHEMA_VERSION:
                raise StoreError(
                    f"store schema version {row['value']} does not match {SCHEMA_VERSION}")
            self._conn.commit()

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- exchanges ----------------------------------------------------------

    def persist_exchange(
        self,
        base: BaseRequest,
        mutated: MutatedRequest | None = None,
        response: ResponseRecord | None = None,
        *,
        run_id: int | None = None,
        is_replay: bool = False,
        body_src_encoding: str = "",
    ) -> int:
        """Insert one exchange and its headers, returning the new id.

        Originals store an empty modification description. A mutated
        exchange must reference an already-persisted base row.
        """
        if mutated is not None:
            request = mutated.request
            iam_name = mutated.iam_name
            modification = mutated.modification
            base_id = mutated.base_id or base.request_id
            if base_id <= 0:
                raise StoreError("persist the base exchange before its mutations")
        else:
            request = base
            iam_name = ""
            modification = ""
            base_id = None

        with self._write_lock:
            if base_id is not None:
                row = self._conn.execute(
                    "SELECT 1 FROM requests WHERE request_id=?", (base_id,)).fetchone()
                if row is None:
                    raise StoreError(f"base request {base_id} is not in the store")
            cur = self._conn.execute(
                "INSERT INTO requests (run_id, base_id, iam_name, modification, is_replay,"
                " method, url, body, body_src_encoding, captured_at, response_status,"
                " response_content_type, response_body, response_elapsed_ms,"
                " response_transport_error)"
                " VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?,?,?)",
                (
                    run_id,
                    base_id,
                    iam_name,
                    modification,
                    1 if is_replay else 0,
                    request.method,
                    request.url,
                    request.body,
                    body_src_encoding,
                    request.captured_at,
                    response.status if response else None,
                    response.content_type if response else None,
                    response.body if response else None,
                    response.elapsed_ms if response else None,
                    response.transport_error if response else None,
                ),
            )
            request_id = cur.lastrowid
            self._conn.executemany(
                "INSERT INTO headers (request_id, name, value) VALUES (?,?,?)",
                [(request_id, n, v) for n, v in request.headers],
            )
            self._conn.commit()
        return request_id

    def _exchange_from_row(self, row: sqlite3.Row) -> StoredExchange:
        headers = tuple(
            (h["name"], h["value"])
            for h in self._conn.execute(
                "SELECT name, value FROM headers WHERE request_id=? ORDER BY header_id",
                (row["request_id"],))
        )
        request = BaseRequest(
            method=row["method"],
            url=row["url"],
            headers=headers,
            body=bytes(row["body"]),
            request_id=row["request_id"],
            captured_at=row["captured_at"],
        )
        response = None
        if row["response_status"] is not None:
            response = ResponseRecord(
                status=row["response_status"],
                content_type=row["response_content_type"] or "",
                body=bytes(row["response_body"] or b""),
                elapsed_ms=row["response_elapsed_ms"] or 0,
                transport_error=row["response_transport_error"] or "",
            )
        return StoredExchange(
            request=request,
            iam_name=row["iam_name"],
            modification=row["modification"],
            base_id=row["base_id"],
            run_id=row["run_id"],
            is_replay=bool(row["is_replay"]),
            response=response,
        )

    def get_exchange(self, request_id: int) -> StoredExchange:
        row = self._conn.execute(
            "SELECT * FROM requests WHERE request_id=?", (request_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"no request with id {request_id}")
        return self._exchange_from_row(row)

    def list_bases(self) -> list[StoredExchange]:
        """Ingested originals, in insertion order (refreshed baselines and
        replays excluded)."""
        rows = self._conn.execute(
            "SELECT * FROM requests WHERE base_id IS NULL AND is_replay=0 AND run_id IS NULL"
            " ORDER BY request_id").fetchall()
        return [self._exchange_from_row(r) for r in rows]

    # -- flags --------------------------------------------------------------

    def insert_flag(self, flag: PveFlag, run_id: int | None = None) -> int:
        with self._write_lock:
            row = self._conn.execute(
                "SELECT 1 FROM requests WHERE request_id=?", (flag.mutated_id,)).fetchone()
            if row is None:
                raise StoreError(f"flag references unknown request {flag.mutated_id}")
            cur = self._conn.execute(
                "INSERT INTO flags (run_id, mutated_id, classification, dissimilarity,"
                " regex_hits, code_leak, reason) VALUES (?,?,?,?,?,?,?)",
                (
                    run_id,
                    flag.mutated_id,
                    flag.classification.value,
                    flag.dissimilarity,
                    json.dumps(flag.regex_hits),
                    1 if flag.code_leak else 0,
                    flag.reason,
                ),
            )
            self._conn.commit()
        return cur.lastrowid

    def _flag_from_row(self, row: sqlite3.Row) -> PveFlag:
        return PveFlag(
            mutated_id=row["mutated_id"],
            classification=Classification(row["classification"]),
            dissimilarity=row["dissimilarity"],
            regex_hits=tuple((n, e) for n, e in json.loads(row["regex_hits"])),
            code_leak=bool(row["code_leak"]),
            reason=row["reason"],
            flag_id=row["flag_id"],
        )

    def get_flag(self, flag_id: int) -> FlagContext:
        rows = self._query_flag_rows("WHERE f.flag_id=?", (flag_id,))
        if not rows:
            raise NotFoundError(f"no flag with id {flag_id}")
        return rows[0]

    def _query_flag_rows(self, where: str, params: tuple) -> list[FlagContext]:
        rows = self._conn.execute(
            f"SELECT f.* FROM flags f {where} ORDER BY f.flag_id", params).fetchall()
        out = []
        for row in rows:
            flag = self._flag_from_row(row)
            mutated = self.get_exchange(flag.mutated_id)
            base = self.get_exchange(mutated.base_id) if mutated.base_id else None
            out.append(FlagContext(
                flag=flag,
                run_id=row["run_id"],
                mutated=mutated,
                base=base,
                verdict=self.active_verdict(flag.flag_id),
            ))
        return out

    def query_flags(
        self,
        classification: Classification | str | None = None,
        iam_name: str | None = None,
        verdict_status: str | None = None,
        run_id: int | None = None,
        limit: int | None = None,
        offset: int = 0,
    ) -> list[FlagContext]:
        """Flags joined with their exchanges and active verdicts, ordered by
        flag id. ``verdict_status`` accepts untriaged / triaged / confirmed
        / fppve."""
        clauses = []
        params: list = []
        if classification is not None:
            value = classification.value if isinstance(classification, Classification) \
                else str(classification)
            clauses.append("f.classification=?")
            params.append(value)
        if iam_name is not None:
            clauses.append("f.mutated_id IN (SELECT request_id FROM requests WHERE iam_name=?)")
            params.append(iam_name)
        if run_id is not None:
            clauses.append("f.run_id=?")
            params.append(run_id)
        active = "SELECT v.verdict FROM verdicts v WHERE v.flag_id=f.flag_id AND v.active=1"
        if verdict_status == "untriaged":
            clauses.append(f"NOT EXISTS ({active})")
        elif verdict_status == "triaged":
            clauses.append(f"EXISTS ({active})")
        elif verdict_status == "confirmed":
            clauses.append(f"(({active})='{VerdictKind.CONFIRMED_VULN.value}')")
        elif verdict_status == "fppve":
            clauses.append(f"(({active})='{VerdictKind.FPPVE.value}')")
        elif verdict_status is not None:
            raise ValidationError(f"unknown verdict_status filter {verdict_status!r}")
        where = "WHERE " + " AND ".join(clauses) if clauses else ""
        rows = self._query_flag_rows(where, tuple(params))
        if offset:
            rows = rows[offset:]
        if limit is not None:
            rows = rows[:limit]
        return rows

    def count_flags(self, **filters) -> int:
        return len(self.query_flags(**filters))

    # -- verdicts -----------------------------------------------------------

    def record_verdict(self, verdict: TriageVerdict) -> TriageVerdict:
        """Store a verdict for a flag, superseding any active one.

        Only PVE and MANUAL_REVIEW flags are triageable; verdicts on BENIGN
        flags are rejected. History is retained, the new row becomes the
        single active verdict.
        """
        with self._write_lock:
            row = self._conn.execute(
                "SELECT classification FROM flags WHERE flag_id=?", (verdict.flag_id,)).fetchone()
            if row is None:
                raise NotFoundError(f"no flag with id {verdict.flag_id}")
            if row["classification"] == Classification.BENIGN.value:
                raise ValidationError("BENIGN flags are not triageable")
            decided_at = verdict.decided_at or time.time()
            self._conn.execute(
                "UPDATE verdicts SET active=0 WHERE flag_id=? AND active=1",
                (verdict.flag_id,))
            cur = self._conn.execute(
                "INSERT INTO verdicts (flag_id, verdict, cwe_tags, notes, decided_at, active)"
                " VALUES (?,?,?,?,?,1)",
                (
                    verdict.flag_id,
                    verdict.verdict.value,
                    json.dumps(list(verdict.cwe_tags)),
                    verdict.notes,
                    decided_at,
                ),
            )
            self._conn.commit()
        return TriageVerdict(
            flag_id=verdict.flag_id,
            verdict=verdict.verdict,
            cwe_tags=verdict.cwe_tags,
            notes=verdict.notes,
            decided_at=decided_at,
            verdict_id=cur.lastrowid,
        )

    def _verdict_from_row(self, row: sqlite3.Row) -> TriageVerdict:
        return TriageVerdict(
            flag_id=row["flag_id"],
            verdict=VerdictKind(row["verdict"]),
            cwe_tags=tuple(json.loads(row["cwe_tags"])),
            notes=row["notes"],
            decided_at=row["decided_at"],
            verdict_id=row["verdict_id"],
        )

    def active_verdict(self, flag_id: int) -> TriageVerdict | None:
        row = self._conn.execute(
            "SELECT * FROM verdicts WHERE flag_id=? AND active=1", (flag_id,)).fetchone()
        return self._verdict_from_row(row) if row else None

    def verdict_history(self, flag_id: int) -> list[TriageVerdict]:
        rows = self._conn.execute(
            "SELECT * FROM verdicts WHERE flag_id=? ORDER BY verdict_id", (flag_id,)).fetchall()
        return [self._verdict_from_row(r) for r in rows]

    # -- runs ----------------------------------------------------------------

    def create_run(self, policy: dict) -> int:
        with self._write_lock:
            cur = self._conn.execute(
                "INSERT INTO runs (started_at, policy) VALUES (?,?)",
                (time.time(), json.dumps(policy, sort_keys=True)))
            self._conn.commit()
        return cur.lastrowid

    def update_run(self, run_id: int, *, ended: bool = False, **counts) -> None:
        allowed = {"bases", "mutations", "sent", "transport_failures"}
        bad = set(counts) - allowed
        if bad:
            raise StoreError(f"unknown run counters: {sorted(bad)}")
        sets = ", ".join(f"{k}=?" for k in counts)
        params = list(counts.values())
        if ended:
            sets = sets + ", " if sets else ""
            sets += "ended_at=?"
            params.append(time.time())
        with self._write_lock:
            cur = self._conn.execute(
                f"UPDATE runs SET {sets} WHERE run_id=?", (*params, run_id))
            if cur.rowcount == 0:
                raise NotFoundError(f"no run with id {run_id}")
            self._conn.commit()

    def _run_from_row(self, row: sqlite3.Row) -> RunRecord:
        return RunRecord(
            run_id=row["run_id"],
            started_at=row["started_at"],
            ended_at=row["ended_at"],
            policy=json.loads(row["policy"]),
            bases=row["bases"],
            mutations=row["mutations"],
            sent=row["sent"],
            transport_failures=row["transport_failures"],
        )

    def get_run(self, run_id: int) -> RunRecord:
        row = self._conn.execute("SELECT * FROM runs WHERE run_id=?", (run_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"no run with id {run_id}")
        return self._run_from_row(row)

    def latest_run(self) -> RunRecord | None:
        row = self._conn.execute(
            "SELECT * FROM runs ORDER BY run_id DESC LIMIT 1").fetchone()
        return self._run_from_row(row) if row else None

    def list_runs(self) -> list[RunRecord]:
        rows = self._conn.execute("SELECT * FROM runs ORDER BY run_id").fetchall()
        return [self._run_from_row(r) for r in rows]

    # -- aggregates for reporting --------------------------------------------

    def run_send_counts(self, run_id: int) -> dict[str, dict[str, int]]:
        """Per-IAM send and 2xx counts for one run (baseline sends keyed '')."""
        rows = self._conn.execute(
            "SELECT iam_name,"
            " SUM(CASE WHEN response_status IS NOT NULL THEN 1 ELSE 0 END) AS sent,"
            " SUM(CASE WHEN response_status BETWEEN 200 AND 299 THEN 1 ELSE 0 END) AS ok,"
            " SUM(CASE WHEN response_status=0 THEN 1 ELSE 0 END) AS failed,"
            " COUNT(*) AS total"
            " FROM requests WHERE run_id=? AND is_replay=0 GROUP BY iam_name",
            (run_id,)).fetchall()
        return {
            r["iam_name"]: {"sent": r["sent"] or 0, "ok": r["ok"] or 0,
                            "failed": r["failed"] or 0, "total": r["total"]}
            for r in rows
        }

    def run_flag_rows(self, run_id: int) -> list[tuple[str, str, float, bool]]:
        """(iam_name, classification, dissimilarity, code_leak) per flag."""
        rows = self._conn.execute(
            "SELECT r.iam_name AS iam_name, f.classification AS classification,"
            " f.dissimilarity AS dissimilarity, f.code_leak AS code_leak"
            " FROM flags f JOIN requests r ON r.request_id=f.mutated_id"
            " WHERE f.run_id=? ORDER BY f.flag_id",
            (run_id,)).fetchall()
        return [(r["iam_name"], r["classification"], r["dissimilarity"], bool(r["code_leak"]))
                for r in rows]

    # -- export / import -----------------------------------------------------

    def _table_rows(self, table: str) -> tuple[list[str], list[sqlite3.Row]]:
        if table not in EXPORT_TABLES:
            raise StoreError(f"unknown table {table!r}")
        rows = self._conn.execute(f"SELECT * FROM {table} ORDER BY 1").fetchall()
        columns = [d[0] for d in self._conn.execute(f"SELECT * FROM {table} LIMIT 0").description]
        return columns, rows

    def export_jsonl(self) -> str:
        """Whole store as deterministic line-delimited JSON (bodies base64)."""
        lines = [json.dumps({"schema_version": SCHEMA_VERSION}, sort_keys=True)]
        for table in EXPORT_TABLES:
            columns, rows = self._table_rows(table)
            for row in rows:
                record = {}
                for col in columns:
                    value = row[col]
                    if col in _BLOB_COLUMNS and value is not None:
                        value = base64.b64encode(bytes(value)).decode("ascii")
                    record[col] = value
                lines.append(json.dumps({"table": table, "row": record}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def import_jsonl(self, dump: str) -> int:
        """Load a dump produced by export_jsonl into this (empty) store."""
        for table in EXPORT_TABLES:
            if self._conn.execute(f"SELECT 1 FROM {table} LIMIT 1").fetchone():
                raise StoreError("import target store must be empty")
        count = 0
        with self._write_lock:
            for line in dump.splitlines():
                if not line.strip():
                    continue
                record = json.loads(line)
                if "schema_version" in record:
                    if record["schema_version"] != SCHEMA_VERSION:
                        raise StoreError(
                            f"dump schema version {record['schema_version']} unsupported")
                    continue
                table, row = record["table"], record["row"]
                if table not in EXPORT_TABLES:
                    raise StoreError(f"dump references unknown table {table!r}")
                row = dict(row)
                for col in _BLOB_COLUMNS:
                    if col in row and row[col] is not None:
                        row[col] = base64.b64decode(row[col])
                columns = ",".join(row)
                placeholders = ",".join("?" for _ in row)
                self._conn.execute(
                    f"INSERT INTO {table} ({columns}) VALUES ({placeholders})",
                    tuple(row.values()))
                count += 1
            self._conn.commit()
        return count

    def export_csv(self, table: str) -> str:
        """One table as CSV with a header row; blob columns are base64."""
        columns, rows = self._table_rows(table)
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            out = []
            for col in columns:
                value = row[col]
                if col in _BLOB_COLUMNS and value is not None:
                    value = base64.b64encode(bytes(value)).decode("ascii")
                out.append(value)
            writer.writerow(out)
        return buffer.getvalue()

    def header_orphan_count(self) -> int:
        """Referential integrity probe: header rows without a parent request."""
        row = self._conn.execute(
            "SELECT COUNT(*) AS n FROM headers h"
            " LEFT JOIN requests r ON r.request_id=h.request_id"
            " WHERE r.request_id IS NULL").fetchone()
        return row["n"]
