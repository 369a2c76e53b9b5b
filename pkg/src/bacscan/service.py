"""HTTP triage service.

Serves flag queues, diff detail, verdict recording, and replay over a JSON
API rooted at ``/api/v1/``. The API is the only contract the browser UI is
allowed to rely on, so response shapes here are versioned and everything the
UI renders (diff spans included) is computed server side.

Body previews and diff spans both index into the *decoded* response texts
(utf-8 with replacement), measured in characters, so a client can window a
large body with the body endpoint and still line spans up correctly.
"""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .dispatcher import replay_flag
from .model import (NotFoundError, ScopeViolation, TriageVerdict, ValidationError,
                    VerdictKind)
from .stats import build_report
from .store import Store, StoredExchange
from .textdiff import align_spans

API_VERSION = 1
PREVIEW_CHARS = 65_536
MAX_PAGE = 500


def _text(exchange: StoredExchange | None) -> str:
    if exchange is None or exchange.response is None:
        return ""
    return exchange.response.body.decode("utf-8", errors="replace")


def _verdict_json(verdict: TriageVerdict | None) -> dict | None:
    if verdict is None:
        return None
    return {
        "verdict": verdict.verdict.value,
        "cwe_tags": list(verdict.cwe_tags),
        "notes": verdict.notes,
        "decided_at": verdict.decided_at,
    }


def _exchange_json(exchange: StoredExchange | None, *, preview: bool = False) -> dict | None:
    if exchange is None:
        return None
    request = exchange.request
    response = exchange.response
    out = {
        "request_id": request.request_id,
        "method": request.method,
        "url": request.url,
        "headers": [[n, v] for n, v in request.headers],
        "body_text": request.body.decode("utf-8", errors="replace"),
        "status": response.status if response else None,
        "transport_error": response.transport_error if response else "",
        "content_type": response.content_type if response else "",
        "elapsed_ms": response.elapsed_ms if response else None,
    }
    if preview:
        text = _text(exchange)
        out["body_preview"] = text[:PREVIEW_CHARS]
        out["body_total_chars"] = len(text)
    return out


def _flag_summary(context) -> dict:
    flag = context.flag
    return {
        "flag_id": flag.flag_id,
        "run_id": context.run_id,
        "classification": flag.classification.value,
        "dissimilarity": flag.dissimilarity,
        "regex_hit_names": [name for name, _ in flag.regex_hits],
        "code_leak": flag.code_leak,
        "reason": flag.reason,
        "iam_name": context.mutated.iam_name,
        "modification": context.mutated.modification,
        "method": context.mutated.request.method,
        "url": context.mutated.request.url,
        "status": context.mutated.response.status if context.mutated.response else None,
        "verdict": _verdict_json(context.verdict),
    }


class VerdictIn(BaseModel):
    verdict: str = Field(description="CONFIRMED_VULN or FPPVE")
    cwe_tags: list[int] = Field(default_factory=list)
    notes: str = ""


class ReplayIn(BaseModel):
    method: str | None = None
    url: str | None = None
    headers: list[list[str]] | None = None
    body_text: str | None = None


def create_app(store: Store, frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="bacscan triage", version=str(API_VERSION), docs_url=None,
                  redoc_url=None)

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(ValidationError)
    async def _domain_error(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ScopeViolation)
    async def _scope_error(request: Request, exc: ScopeViolation):
        return JSONResponse(status_code=403, content={"error": str(exc)})

    @app.get("/api/v1/flags")
    def list_flags(
        classification: str | None = None,
        iam: str | None = None,
        verdict_status: str | None = None,
        run: int | None = None,
        limit: int = Query(default=50, ge=1, le=MAX_PAGE),
        offset: int = Query(default=0, ge=0),
    ):
        if verdict_status not in (None, "untriaged", "triaged", "confirmed", "fppve"):
            raise ValidationError(f"unknown verdict_status {verdict_status!r}")
        filters = dict(classification=classification, iam_name=iam,
                       verdict_status=verdict_status, run_id=run)
        total = store.count_flags(**filters)
        contexts = store.query_flags(limit=limit, offset=offset, **filters)
        return {
            "schema_version": API_VERSION,
            "total": total,
            "flags": [_flag_summary(c) for c in contexts],
        }

    @app.get("/api/v1/flags/{flag_id}")
    def flag_detail(flag_id: int):
        context = store.get_flag(flag_id)
        baseline_text = _text(context.base)
        mutated_text = _text(context.mutated)
        spans = align_spans(baseline_text, mutated_text)
        return {
            "schema_version": API_VERSION,
            **_flag_summary(context),
            "regex_hits": [[name, excerpt] for name, excerpt in context.flag.regex_hits],
            "baseline": _exchange_json(context.base, preview=True),
            "mutated": _exchange_json(context.mutated, preview=True),
            "diff_spans": [asdict(s) for s in spans],
            "verdict_history": [_verdict_json(v) for v in store.verdict_history(flag_id)],
        }

    @app.get("/api/v1/flags/{flag_id}/body")
    def flag_body(
        flag_id: int,
        which: str = Query(default="mutated"),
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=PREVIEW_CHARS, ge=1, le=4 * PREVIEW_CHARS),
    ):
        if which not in ("baseline", "mutated"):
            raise ValidationError("which must be baseline or mutated")
        context = store.get_flag(flag_id)
        exchange = context.base if which == "baseline" else context.mutated
        text = _text(exchange)
        return {
            "schema_version": API_VERSION,
            "which": which,
            "offset": offset,
            "total_chars": len(text),
            "text": text[offset:offset + limit],
        }

    @app.post("/api/v1/flags/{flag_id}/verdict")
    def post_verdict(flag_id: int, body: VerdictIn):
        try:
            kind = VerdictKind(body.verdict)
        except ValueError:
            raise ValidationError(
                f"verdict must be one of {[k.value for k in VerdictKind]}, got {body.verdict!r}")
        verdict = TriageVerdict(flag_id=flag_id, verdict=kind,
                                cwe_tags=tuple(body.cwe_tags), notes=body.notes)
        recorded = store.record_verdict(verdict)
        return {"schema_version": API_VERSION, "flag_id": flag_id,
                "verdict": _verdict_json(recorded)}

    @app.post("/api/v1/flags/{flag_id}/replay")
    def post_replay(flag_id: int, body: ReplayIn):
        headers = None
        if body.headers is not None:
            for pair in body.headers:
                if len(pair) != 2:
                    raise ValidationError("headers must be [name, value] pairs")
            headers = [(n, v) for n, v in body.headers]
        raw_body = body.body_text.encode("utf-8") if body.body_text is not None else None
        result = replay_flag(store, flag_id, method=body.method, url=body.url,
                             headers=headers, body=raw_body)
        return {
            "schema_version": API_VERSION,
            "flag_id": flag_id,
            "replayed_request_id": result.request_id,
            "request": {
                "method": result.request.method,
                "url": result.request.url,
                "headers": [[n, v] for n, v in result.request.headers],
                "body_text": result.request.body.decode("utf-8", errors="replace"),
            },
            "response": {
                "status": result.response.status,
                "transport_error": result.response.transport_error,
                "content_type": result.response.content_type,
                "body_preview": result.response.body.decode("utf-8", errors="replace")[:PREVIEW_CHARS],
                "elapsed_ms": result.response.elapsed_ms,
            },
            "classification": result.flag.classification.value,
            "dissimilarity": result.flag.dissimilarity,
            "regex_hit_names": [name for name, _ in result.flag.regex_hits],
        }

    @app.get("/api/v1/stats")
    def stats(run: int | None = None):
        if run is None:
            latest = store.latest_run()
            if latest is None:
                raise NotFoundError("no scan runs recorded yet")
            run = latest.run_id
        return {"schema_version": API_VERSION, **build_report(store, run)}

    @app.get("/api/v1/runs")
    def runs():
        return {
            "schema_version": API_VERSION,
            "runs": [
                {"run_id": r.run_id, "started_at": r.started_at,
                 "ended_at": r.ended_at, "counts": r.counts}
                for r in store.list_runs()
            ],
        }

    if frontend_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        frontend_dir = candidate if candidate.is_dir() else None
    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app


def serve(store_path: str, bind: str = "127.0.0.1", port: int = 8180) -> None:
    """Run the triage service until interrupted."""
    import uvicorn

    store = Store(store_path)
    app = create_app(store)
    uvicorn.run(app, host=bind, port=port, log_level="warning")
