"""Versioned HTTP API: the single wire boundary for devices and the
dashboard.

Thin adapters only; every rule lives in the owning service. Admin
endpoints authenticate with the X-Admin-Key header, device endpoints with
the token secret in X-Auth-Secret (or the secret embedded in the QR
payload for enrollment). No endpoint accepts both credentials.

Errors map to {error_code, detail} documents; codes are the exception
class names and stay stable. Unknown request fields are rejected.
"""

import contextvars
import json
from datetime import datetime, timezone
from typing import Callable, Optional

from fastapi import Depends, FastAPI, File, Form, Header, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .enrollment import LeaveReason, encode_qr_payload
from .errors import AuthFailure, MalformedPayload, PlatformError
from .ingestion import SensorBatch
from .notifications import ALL
from .registry import StudyConfig, spec_from_doc
from .server import ServerCore

_sim_time: contextvars.ContextVar[Optional[datetime]] = contextvars.ContextVar(
    "sim_time", default=None
)


def sim_aware_clock(base: Callable[[], datetime]) -> Callable[[], datetime]:
    """Clock that honors a per-request X-Sim-Time override (simulation
    deployments only)."""

    def clock() -> datetime:
        return _sim_time.get() or base()

    return clock


class StudyIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    study_id: str
    name: str
    description: str = ""
    duration_days: int
    n_subjects: int
    sensors: list[dict]


class TokensIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    subject_label: str
    n_codes: int = Field(default=4, ge=1)
    auth_hint: Optional[str] = None


class EnrollIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    payload: str
    device_id: str


class LeaveIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    token_id: str
    reason: str = "USER_LEFT"


class NotifyIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    title: str = Field(min_length=1)
    body: str = Field(min_length=1)
    receiver: str | list[str] = ALL


def create_app(core: ServerCore, allow_sim_time: bool = False) -> FastAPI:
    app = FastAPI(title="fieldmon", version="1")

    @app.middleware("http")
    async def sim_time_middleware(request: Request, call_next):
        token = None
        if allow_sim_time and (raw := request.headers.get("x-sim-time")):
            try:
                token = _sim_time.set(datetime.fromisoformat(raw))
            except ValueError:
                return _error_response(MalformedPayload(f"bad X-Sim-Time: {raw!r}"))
        try:
            return await call_next(request)
        finally:
            if token is not None:
                _sim_time.reset(token)

    def require_admin(x_admin_key: Optional[str] = Header(default=None)):
        if x_admin_key != core.admin_key:
            raise AuthFailure("admin credential required")

    # -- admin: studies ---------------------------------------------------

    @app.post("/v1/studies", status_code=201, dependencies=[Depends(require_admin)])
    def create_study(body: StudyIn):
        cfg = StudyConfig(
            study_id=body.study_id,
            name=body.name,
            description=body.description,
            duration_days=body.duration_days,
            n_subjects=body.n_subjects,
            sensors=tuple(spec_from_doc(d) for d in body.sensors),
        )
        study_id = core.create_study(cfg)
        return core.registry.get_config(study_id).to_doc()

    @app.get("/v1/studies", dependencies=[Depends(require_admin)])
    def list_studies():
        return [c.to_doc() for c in core.registry.list_studies()]

    @app.get("/v1/studies/{study_id}", dependencies=[Depends(require_admin)])
    def get_study(study_id: str):
        return core.registry.get_config(study_id).to_doc()

    @app.post("/v1/studies/{study_id}/close", dependencies=[Depends(require_admin)])
    def close_study(study_id: str):
        return core.close_study(study_id)

    @app.get("/v1/studies/{study_id}/overview", dependencies=[Depends(require_admin)])
    def overview(study_id: str):
        return core.study_overview(study_id)

    @app.post("/v1/studies/{study_id}/tokens", status_code=201,
              dependencies=[Depends(require_admin)])
    def generate_tokens(study_id: str, body: TokensIn):
        tokens = core.enrollment.generate_tokens(
            study_id, body.subject_label, body.n_codes, body.auth_hint
        )
        # the QR payload string is the only surface that carries the secret
        return [
            {**t.public_doc(), "qr_payload": encode_qr_payload(t)}
            for t in tokens
        ]

    @app.get("/v1/studies/{study_id}/qc", dependencies=[Depends(require_admin)])
    def qc_table(study_id: str, now: Optional[str] = None):
        at = datetime.fromisoformat(now) if now else None
        if at is not None and at.tzinfo is None:
            at = at.replace(tzinfo=timezone.utc)
        return {
            "study_id": study_id,
            "rows": [row.to_doc() for row in core.qc_table(study_id, at)],
        }

    @app.post("/v1/studies/{study_id}/notify", status_code=201,
              dependencies=[Depends(require_admin)])
    def notify(study_id: str, body: NotifyIn):
        receiver = body.receiver if body.receiver == ALL else set(body.receiver)
        msg, queued = core.notifications.send(
            study_id, body.title, body.body, receiver, core.clock()
        )
        return {"message": msg.to_doc(), "queued_deliveries": queued}

    # -- device-facing ------------------------------------------------------

    @app.post("/v1/enroll", status_code=201)
    def enroll(body: EnrollIn):
        reg = core.activate(body.payload, body.device_id)
        cfg = core.registry.get_config(reg.study_id)
        # remote configuration: the device pulls its recording plan here
        return {"registration": reg.to_doc(), "config": cfg.to_doc()}

    @app.post("/v1/leave")
    def leave(body: LeaveIn, x_auth_secret: Optional[str] = Header(default=None)):
        core.enrollment.authenticate(body.token_id, x_auth_secret or "")
        try:
            reason = LeaveReason(body.reason)
        except ValueError:
            raise MalformedPayload(f"unknown leave reason {body.reason!r}") from None
        return core.leave_study(body.token_id, reason).to_doc()

    @app.post("/v1/batches", status_code=201)
    def submit_batch(
        meta: str = Form(...),
        payload: UploadFile = File(...),
        x_auth_secret: Optional[str] = Header(default=None),
    ):
        try:
            doc = json.loads(meta)
            batch = SensorBatch(
                study_id=doc["study_id"],
                token_id=doc["token_id"],
                device_id=doc["device_id"],
                sensor=doc["sensor"],
                batch_id=doc["batch_id"],
                created_at=datetime.fromisoformat(doc["created_at"]),
                payload=payload.file.read(),
                md5_hex=doc["md5_hex"],
            )
        except (KeyError, ValueError, TypeError) as e:
            raise MalformedPayload(f"bad batch metadata: {e}") from None
        receipt = core.submit_batch(batch, x_auth_secret or "")
        return receipt.to_doc()

    @app.get("/v1/notifications")
    def poll_notifications(
        token_id: str, x_auth_secret: Optional[str] = Header(default=None)
    ):
        msgs = core.poll_notifications(token_id, x_auth_secret or "")
        return [m.to_doc() for m in msgs]

    # -- error mapping ---------------------------------------------------------

    @app.exception_handler(PlatformError)
    async def platform_error(request: Request, exc: PlatformError):
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error_code": "MalformedPayload", "detail": str(exc.errors()[:3])},
        )

    @app.exception_handler(404)
    async def not_found(request: Request, exc):
        return JSONResponse(
            status_code=404,
            content={"error_code": "NotFound", "detail": f"no route {request.url.path}"},
        )

    return app


def _error_response(exc: PlatformError) -> JSONResponse:
    return JSONResponse(
        status_code=exc.http_status,
        content={"error_code": exc.error_code, "detail": str(exc)},
    )
