"""HTTP face of the session engine: JSON over a versioned /v1 prefix.

The service is a thin adapter: every handler resolves a session, takes its
lock, and delegates to Session methods.  Raw data never crosses into
lattice state here; questions carry column names only, and the lattice
learns from graph structures alone.

Binds are expected to stay on localhost by default (single-user desk
tool); there is no authentication layer.
"""

from __future__ import annotations

import threading
from typing import Any, Mapping

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import JSONResponse

from . import __version__
from .data import ParseError, SplitSpec
from .graph import EvaluationError
from .lattice import (
    ConfigError,
    FilterStarvationError,
    LatticeConfig,
    filter_from_json,
)
from .session import (
    HoldoutLockedError,
    Session,
    SessionIntegrityError,
    SessionVersionError,
    UnknownIdError,
)

__all__ = ["SessionStore", "create_app"]


class SessionStore:
    """In-memory session registry; one writer lock per session."""

    def __init__(self):
        self._mutex = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.RLock] = {}

    def create(self, config: LatticeConfig | None = None) -> Session:
        session = Session(config)
        with self._mutex:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.RLock()
        return session

    def add(self, session: Session) -> Session:
        with self._mutex:
            self._sessions[session.id] = session
            self._locks.setdefault(session.id, threading.RLock())
        return session

    def get(self, session_id: str) -> Session:
        with self._mutex:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownIdError("session", session_id) from None

    def lock(self, session_id: str) -> threading.RLock:
        with self._mutex:
            try:
                return self._locks[session_id]
            except KeyError:
                raise UnknownIdError("session", session_id) from None

    def ids(self) -> list[str]:
        with self._mutex:
            return list(self._sessions)


_CONFIG_KEYS = ("width", "depth", "islands", "alpha", "seed")


def _lattice_config(payload: Mapping[str, Any] | None) -> LatticeConfig | None:
    if not payload:
        return None
    unknown = set(payload) - set(_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown lattice config keys: {sorted(unknown)}")
    return LatticeConfig(**{k: payload[k] for k in _CONFIG_KEYS if k in payload})


def _split_spec(payload: Mapping[str, Any] | None) -> SplitSpec:
    if not payload:
        return SplitSpec()
    fractions = payload.get("fractions", (0.6, 0.2, 0.2))
    return SplitSpec(
        fractions=tuple(fractions),
        stratify_by=payload.get("stratify_by"),
        seed=int(payload.get("seed", 0)),
    )


def create_app(store: SessionStore | None = None, static_dir: str | None = None) -> FastAPI:
    """Build the API application (optionally serving a static UI bundle)."""
    app = FastAPI(title="symlattice", version=__version__)
    store = store or SessionStore()
    app.state.store = store

    # -- error mapping ------------------------------------------------------

    def _payload(exc: Exception, **extra) -> dict:
        return {"error": str(exc), "type": type(exc).__name__, **extra}

    @app.exception_handler(UnknownIdError)
    async def _unknown(request: Request, exc: UnknownIdError):
        return JSONResponse(status_code=404, content=_payload(exc, kind=exc.kind))

    @app.exception_handler(HoldoutLockedError)
    async def _locked(request: Request, exc: HoldoutLockedError):
        return JSONResponse(status_code=409, content=_payload(exc))

    @app.exception_handler(FilterStarvationError)
    async def _starved(request: Request, exc: FilterStarvationError):
        return JSONResponse(
            status_code=422,
            content=_payload(
                exc,
                attempts=exc.attempts,
                accepted=exc.accepted,
                acceptance_rate=exc.acceptance_rate,
            ),
        )

    @app.exception_handler(SessionVersionError)
    async def _version(request: Request, exc: SessionVersionError):
        return JSONResponse(status_code=400, content=_payload(exc))

    @app.exception_handler(SessionIntegrityError)
    async def _integrity(request: Request, exc: SessionIntegrityError):
        return JSONResponse(status_code=400, content=_payload(exc))

    @app.exception_handler(ParseError)
    async def _parse(request: Request, exc: ParseError):
        return JSONResponse(status_code=400, content=_payload(exc))

    @app.exception_handler(ConfigError)
    async def _config(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content=_payload(exc))

    @app.exception_handler(EvaluationError)
    async def _evaluation(request: Request, exc: EvaluationError):
        return JSONResponse(status_code=400, content=_payload(exc))

    @app.exception_handler(ValueError)
    async def _value(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content=_payload(exc))

    # -- sessions -----------------------------------------------------------

    @app.post("/v1/sessions")
    def create_session(payload: dict = Body(default=None)):
        session = store.create(_lattice_config(payload))
        return {"session_id": session.id, "lattice": session.lattice.config.to_json()}

    @app.get("/v1/sessions")
    def list_sessions():
        return {"sessions": store.ids()}

    @app.get("/v1/sessions/{sid}")
    def session_overview(sid: str):
        with store.lock(sid):
            return store.get(sid).overview()

    @app.get("/v1/sessions/{sid}/history")
    def session_history(sid: str):
        with store.lock(sid):
            return {"events": list(store.get(sid).history)}

    # -- data -----------------------------------------------------------------

    @app.post("/v1/sessions/{sid}/data")
    def load_data(sid: str, payload: dict = Body(...)):
        if "csv" not in payload:
            raise ValueError("body needs a 'csv' field with the file content")
        with store.lock(sid):
            return store.get(sid).load_data(
                payload["csv"],
                _split_spec(payload.get("split")),
                label=payload.get("label", "data"),
                stype_overrides=payload.get("stype_overrides"),
            )

    # -- questions --------------------------------------------------------------

    @app.post("/v1/sessions/{sid}/qgraph")
    def pose_question(sid: str, payload: dict = Body(...)):
        for key in ("inputs", "output", "task"):
            if key not in payload:
                raise ValueError(f"body needs a {key!r} field")
        filters = [filter_from_json(f) for f in payload.get("filters", [])]
        kwargs: dict[str, Any] = {}
        if payload.get("criterion"):
            kwargs["sort_criterion"] = payload["criterion"]
        with store.lock(sid):
            session = store.get(sid)
            pid = session.ask(
                inputs=list(payload["inputs"]),
                output=payload["output"],
                task=payload["task"],
                max_depth=int(payload.get("max_depth", 2)),
                filters=filters,
                capacity=int(payload.get("capacity", 200)),
                dataset=payload.get("dataset"),
                **kwargs,
            )
            pool = session.pool(pid)
            return {
                "pool_id": pid,
                "capacity": pool.capacity,
                "sort_criterion": pool.sort_criterion,
                "spec": pool.spec.to_json(),
            }

    @app.post("/v1/sessions/{sid}/qgraph/{pid}/fit")
    def fit_pool(sid: str, pid: str, payload: dict = Body(default=None)):
        payload = payload or {}
        with store.lock(sid):
            rows = store.get(sid).fit(
                pid,
                rounds=int(payload.get("rounds", 1)),
                workers=int(payload.get("workers", 1)),
                auto_update=bool(payload.get("auto_update", False)),
            )
        return {"pool_id": pid, "rounds": rows}

    @app.post("/v1/sessions/{sid}/update")
    def update_lattice(sid: str, payload: dict = Body(...)):
        ids = payload.get("graph_ids")
        if not ids:
            raise ValueError("body needs a nonempty 'graph_ids' list")
        with store.lock(sid):
            n = store.get(sid).update(ids, pool_id=payload.get("pool_id"))
        return {"updated": n}

    @app.get("/v1/sessions/{sid}/qgraph/{pid}/graphs")
    def list_graphs(sid: str, pid: str, n: int | None = Query(default=None, ge=1)):
        with store.lock(sid):
            return {"pool_id": pid, "graphs": store.get(sid).graphs(pid, n)}

    @app.get("/v1/sessions/{sid}/qgraph/{pid}/graphs/{gid}/equation")
    def equation(
        sid: str,
        pid: str,
        gid: int,
        signif: int = Query(default=6, ge=1),
        format: str = Query(default="text"),
    ):
        with store.lock(sid):
            return store.get(sid).equation(pid, gid, signif=signif, format=format)

    @app.get("/v1/sessions/{sid}/qgraph/{pid}/graphs/{gid}/plot/{kind}")
    def plot(
        sid: str,
        pid: str,
        gid: int,
        kind: str,
        dataset: str = Query(default="train"),
        fx: str | None = Query(default=None),
        fy: str | None = Query(default=None),
        by: str | None = Query(default=None),
        bins: int | None = Query(default=None, ge=1),
        resolution: int | None = Query(default=None, ge=2),
    ):
        params: dict[str, Any] = {}
        if fx is not None:
            params["fx"] = fx
        if fy is not None:
            params["fy"] = fy
        if by is not None:
            params["by"] = by
        if bins is not None:
            params["bins"] = bins
        if resolution is not None:
            params["resolution"] = resolution
        with store.lock(sid):
            return store.get(sid).plot(pid, gid, kind, dataset=dataset, **params)

    # -- holdout gate ----------------------------------------------------------------

    @app.post("/v1/sessions/{sid}/holdout/unlock")
    def unlock_holdout(sid: str):
        with store.lock(sid):
            return store.get(sid).unlock_holdout()

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
