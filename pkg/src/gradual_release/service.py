"""Local HTTP API for interactively steering gradual-release sessions.

Endpoints
---------
POST /sessions                      open a session
POST /sessions/{id}/step            advance one round ({"target_eps": e})
GET  /sessions/{id}                 state snapshot (ledger, status, stop record)
POST /sessions/{id}/stop            finalize (idempotent)
GET  /sessions/{id}/boundary        (t, psi(t)) pairs for plotting

Errors are returned as JSON ``{code, field?, message}`` with status 400
(invalid config/body), 404 (unknown id), or 409 (monotonicity or halted
session).  The secret center and raw noise values never appear in responses
unless the session was opened with ``debug_unsafe``.  Requests to one session
id are serialized behind a per-session lock.

This is an analyst-local tool: it binds to loopback by default and keeps all
state in process memory.
"""

from __future__ import annotations

import copy
import itertools
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import boundaries as bnd
from . import erm, threshold
from ._rng import stream
from .cli import ABOVE_THRESHOLD_EPS, ExperimentConfig, TaskContext, build_task
from .errors import (
    BudgetError,
    GradualReleaseError,
    HaltedSessionError,
    MonotonicityError,
    UnattainablePrivacyError,
)
from .mechanisms import SensitivityBudget, StopRecord, open_session, step


class ApiError(Exception):
    """Maps directly onto the HTTP error envelope."""

    def __init__(self, status: int, code: str, message: str, fieldname: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.fieldname = fieldname

    def response(self) -> JSONResponse:
        body = {"code": self.code, "message": str(self)}
        if self.fieldname is not None:
            body["field"] = self.fieldname
        return JSONResponse(status_code=self.status, content=body)


@dataclass
class ServerSession:
    id: str
    mechanism: str
    checker: str
    session: object
    boundary: bnd.PrivacyBoundary | None
    ctx: TaskContext | None
    rat: threshold.RatSession | None
    public_iterates: bool
    debug_unsafe: bool
    status: str = "open"  # open | halted | stopped
    rounds: list = field(default_factory=list)
    stop_record: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    _counter: itertools.count = field(default_factory=itertools.count)


def _require(body: dict, key: str, typ, fieldname: str | None = None):
    fieldname = fieldname or key
    if key not in body:
        raise ApiError(400, "invalid_config", f"missing required field {fieldname!r}", fieldname)
    value = body[key]
    if typ is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, typ):
        raise ApiError(400, "invalid_config", f"field {fieldname!r} has wrong type", fieldname)
    return value


def _open_from_request(body: dict) -> ServerSession:
    mechanism = _require(body, "mechanism", str)
    if mechanism not in ("brownian", "laplace"):
        raise ApiError(400, "invalid_config", f"unknown mechanism {mechanism!r}", "mechanism")
    checker = body.get("checker", "public")
    if checker not in ("public", "above_threshold", "reduced_above_threshold"):
        raise ApiError(400, "invalid_config", f"unknown checker {checker!r}", "checker")
    task = body.get("task")
    seed = int(body.get("seed", 0))
    eps_max = float(body.get("eps_max", 2.0))
    rng = stream(seed, 1000)

    ctx = None
    if task is not None:
        if task not in ("logistic", "ridge"):
            raise ApiError(400, "invalid_config", f"unknown task {task!r}", "task")
        try:
            config = ExperimentConfig(
                task=task,
                n=int(body.get("n", 2000)),
                d=int(body.get("d", 10)),
                eps_max=eps_max,
                tune_target=float(body.get("tune_target", 0.3)),
                boundary_kind=body.get("boundary", {}).get("kind", "mixture"),
                delta=float(body.get("boundary", {}).get("delta", 0.05)),
                reg_lambda=float(body.get("reg_lambda", erm.DEFAULT_REG_LAMBDA)),
                stop_threshold=body.get("stop_threshold"),
                checker=checker,
                seed=seed,
            )
        except GradualReleaseError as exc:
            raise ApiError(400, "invalid_config", str(exc))
        ctx = build_task(config)
        center = ctx.center
        budget = ctx.budget
        boundary = ctx.boundary
    else:
        if checker != "public":
            raise ApiError(
                400, "invalid_config",
                "threshold checkers need a task to score utility", "checker",
            )
        boundary = None
        raw_boundary = body.get("boundary")
        if mechanism == "brownian":
            if not isinstance(raw_boundary, dict):
                raise ApiError(400, "invalid_config", "missing required field 'boundary'", "boundary")
            kind = _require(raw_boundary, "kind", str, "boundary.kind")
            delta = _require(raw_boundary, "delta", float, "boundary.delta")
            sensitivity = _require(raw_boundary, "sensitivity", float, "boundary.sensitivity")
            try:
                if "tune_target" in raw_boundary:
                    boundary = bnd.tune_boundary(
                        kind, sensitivity, delta, float(raw_boundary["tune_target"])
                    )
                elif kind == "linear":
                    a = _require(raw_boundary, "a", float, "boundary.a")
                    boundary = bnd.PrivacyBoundary(
                        kind="linear", delta=delta, sensitivity=sensitivity,
                        a=a, b=np.log(1.0 / delta) / (2 * a),
                    )
                else:
                    rho = _require(raw_boundary, "rho", float, "boundary.rho")
                    boundary = bnd.PrivacyBoundary(
                        kind="mixture", delta=delta, sensitivity=sensitivity, rho=rho
                    )
            except GradualReleaseError as exc:
                raise ApiError(400, "invalid_config", str(exc), "boundary")
        raw_budget = body.get("budget", {})
        if mechanism == "brownian":
            budget = SensitivityBudget(l2=boundary.sensitivity, l1=float(raw_budget.get("l1", 0.0)))
        else:
            if "l1" not in raw_budget:
                raise ApiError(400, "invalid_config", "missing required field 'budget.l1'", "budget.l1")
            budget = SensitivityBudget(l2=float(raw_budget.get("l2", 0.0)), l1=float(raw_budget["l1"]))
        dim = int(body.get("dim", 1))
        if dim < 1:
            raise ApiError(400, "invalid_config", "dim must be >= 1", "dim")
        center = np.zeros(dim)

    if mechanism == "brownian":
        session = open_session("brownian", center, budget, rng, boundary=boundary)
    else:
        eta = budget.l1 / (2 * eps_max)
        session = open_session("laplace", center, budget, rng, eta=eta)

    rat = None
    if checker != "public":
        tau = -ctx.config.threshold_value
        rat_eps_max = ABOVE_THRESHOLD_EPS if checker == "above_threshold" else eps_max
        rat = threshold.rat_open(rat_eps_max, tau, ctx.utility_delta, rng)

    return ServerSession(
        id=uuid.uuid4().hex,
        mechanism=mechanism,
        checker=checker,
        session=session,
        boundary=boundary,
        ctx=ctx,
        rat=rat,
        public_iterates=bool(body.get("public_iterates", False)),
        debug_unsafe=bool(body.get("debug_unsafe", False)),
    )


def _step_once(server: ServerSession, target_eps: float) -> dict:
    if server.status == "stopped":
        raise ApiError(409, "stopped", "session already stopped")
    if server.status == "halted":
        raise ApiError(409, "halted", "session halted at the threshold check")
    if server.rounds and abs(target_eps - server.rounds[-1]["requested_eps"]) <= 1e-12:
        # Idempotent replay: identical response, no fresh randomness spent.
        return copy.deepcopy(server.rounds[-1])
    if server.rounds and target_eps < server.rounds[-1]["requested_eps"]:
        raise ApiError(
            409, "monotonicity",
            "target_eps must be nondecreasing across rounds", "target_eps",
        )
    try:
        iterate, receipt = step(server.session, target_eps=target_eps)
    except MonotonicityError as exc:
        raise ApiError(409, "monotonicity", str(exc), "target_eps")
    except (UnattainablePrivacyError, BudgetError) as exc:
        raise ApiError(400, "invalid_config", str(exc), "target_eps")

    round_record: dict = {
        "n": next(server._counter) + 1,
        "requested_eps": target_eps,
        "eps": receipt.expost_eps,
        "delta": receipt.delta,
        "time": receipt.time,
        "status": "open",
    }
    if server.ctx is not None:
        loss = server.ctx.loss(iterate)
        if server.checker == "public":
            round_record["loss"] = loss
    if server.public_iterates or server.debug_unsafe:
        round_record["iterate"] = np.asarray(iterate).tolist()

    if server.rat is not None:
        utility = server.ctx.clipped_utility(iterate)
        rat_eps = ABOVE_THRESHOLD_EPS if server.checker == "above_threshold" else target_eps
        try:
            bit = threshold.rat_step(server.rat, utility, rat_eps)
        except (MonotonicityError, BudgetError) as exc:
            raise ApiError(409, "monotonicity", str(exc), "target_eps")
        round_record["rat_bit"] = bit
        if bit == 1:
            round_record["total_eps"] = receipt.expost_eps + rat_eps
            round_record["status"] = "halted"
            server.status = "halted"

    server.rounds.append(round_record)
    return copy.deepcopy(round_record)


def _state(server: ServerSession) -> dict:
    rounds = copy.deepcopy(server.rounds)
    if not (server.public_iterates or server.debug_unsafe):
        for entry in rounds:
            entry.pop("iterate", None)
    return {
        "id": server.id,
        "mechanism": server.mechanism,
        "checker": server.checker,
        "status": server.status,
        "rounds": rounds,
        "boundary": server.boundary.to_dict() if server.boundary is not None else None,
        "stop": server.stop_record,
    }


def create_app(static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="gradual-release service")
    store: dict[str, ServerSession] = {}
    store_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return exc.response()

    def _lookup(session_id: str) -> ServerSession:
        with store_lock:
            server = store.get(session_id)
        if server is None:
            raise ApiError(404, "unknown_session", f"no session with id {session_id!r}")
        return server

    @app.post("/sessions")
    async def open_endpoint(request: Request):
        body = await request.json()
        if not isinstance(body, dict):
            raise ApiError(400, "invalid_config", "request body must be a JSON object")
        server = _open_from_request(body)
        with store_lock:
            store[server.id] = server
        return _state(server)

    @app.post("/sessions/{session_id}/step")
    async def step_endpoint(session_id: str, request: Request):
        server = _lookup(session_id)
        body = await request.json()
        if not isinstance(body, dict) or "target_eps" not in body:
            raise ApiError(400, "invalid_body", "body must contain 'target_eps'", "target_eps")
        try:
            target_eps = float(body["target_eps"])
        except (TypeError, ValueError):
            raise ApiError(400, "invalid_body", "'target_eps' must be a number", "target_eps")
        if not (target_eps > 0 and np.isfinite(target_eps)):
            raise ApiError(400, "invalid_body", "'target_eps' must be positive and finite", "target_eps")
        with server.lock:
            return _step_once(server, target_eps)

    @app.get("/sessions/{session_id}")
    async def state_endpoint(session_id: str):
        server = _lookup(session_id)
        with server.lock:
            return _state(server)

    @app.post("/sessions/{session_id}/stop")
    async def stop_endpoint(session_id: str):
        server = _lookup(session_id)
        with server.lock:
            if server.stop_record is None:
                server.status = "stopped"
                record = StopRecord(stopped_index=len(server.rounds), reason="analyst-stop")
                server.stop_record = {"N": record.stopped_index, "reason": record.reason}
            return _state(server)

    @app.get("/sessions/{session_id}/boundary")
    async def boundary_endpoint(
        session_id: str, tmin: float = 0.01, tmax: float = 100.0, points: int = 100
    ):
        server = _lookup(session_id)
        if not (0 < tmin < tmax) or points < 2:
            raise ApiError(400, "invalid_body", "need 0 < tmin < tmax and points >= 2", "tmin")
        grid = np.logspace(np.log10(tmin), np.log10(tmax), points)
        if server.boundary is not None:
            values = [bnd.eval_boundary(server.boundary, t) for t in grid]
        else:
            values = [server.session.budget.l1 / t for t in grid]
        return {"points": [{"t": float(t), "eps": float(v)} for t, v in zip(grid, values)]}

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
