"""Server transports for the fleet: in-process module calls or real HTTP.

Both surfaces must produce identical end states for the same scenario;
errors come back as {error_code, detail} documents either way.
"""

import json
from datetime import datetime, timezone
from typing import Optional

import httpx

from ..datastore import DataStore
from ..enrollment import LeaveReason
from ..errors import PlatformError
from ..ingestion import SensorBatch
from ..registry import StudyConfig, spec_from_doc
from ..server import ServerCore


class DirectTransport:
    """Module-call adapter over a ServerCore sharing the simulation clock."""

    def __init__(self, core: ServerCore):
        self.core = core

    def _guard(self, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PlatformError as e:
            return {"error_code": e.error_code, "detail": str(e)}

    def create_study(self, doc: dict) -> dict:
        def run():
            cfg = StudyConfig(
                study_id=doc["study_id"],
                name=doc["name"],
                description=doc.get("description", ""),
                duration_days=doc["duration_days"],
                n_subjects=doc["n_subjects"],
                sensors=tuple(spec_from_doc(d) for d in doc["sensors"]),
            )
            self.core.create_study(cfg)
            return self.core.registry.get_config(cfg.study_id).to_doc()

        return self._guard(run)

    def generate_tokens(self, study_id: str, subject: str, n: int) -> list | dict:
        from ..enrollment import encode_qr_payload

        def run():
            tokens = self.core.enrollment.generate_tokens(study_id, subject, n)
            return [{**t.public_doc(), "qr_payload": encode_qr_payload(t)} for t in tokens]

        return self._guard(run)

    def enroll(self, payload: str, device_id: str) -> dict:
        def run():
            reg = self.core.activate(payload, device_id)
            cfg = self.core.registry.get_config(reg.study_id)
            return {"registration": reg.to_doc(), "config": cfg.to_doc()}

        return self._guard(run)

    def submit_batch(self, meta: dict, payload: bytes, secret: str) -> dict:
        def run():
            batch = SensorBatch(
                study_id=meta["study_id"],
                token_id=meta["token_id"],
                device_id=meta["device_id"],
                sensor=meta["sensor"],
                batch_id=meta["batch_id"],
                created_at=datetime.fromisoformat(meta["created_at"]),
                payload=payload,
                md5_hex=meta["md5_hex"],
            )
            return self.core.submit_batch(batch, secret).to_doc()

        return self._guard(run)

    def leave(self, token_id: str, secret: str, reason: str = "USER_LEFT") -> dict:
        def run():
            self.core.enrollment.authenticate(token_id, secret)
            return self.core.leave_study(token_id, LeaveReason(reason)).to_doc()

        return self._guard(run)

    def poll_notifications(self, token_id: str, secret: str) -> list | dict:
        return self._guard(
            lambda: [m.to_doc() for m in self.core.poll_notifications(token_id, secret)]
        )

    def notify(self, study_id: str, title: str, body: str, receiver) -> dict:
        def run():
            msg, queued = self.core.notifications.send(
                study_id, title, body, receiver, self.core.clock()
            )
            return {"message": msg.to_doc(), "queued_deliveries": queued}

        return self._guard(run)

    def qc(self, study_id: str, now: Optional[datetime] = None) -> dict:
        def run():
            rows = self.core.qc_table(study_id, now)
            return {"study_id": study_id, "rows": [r.to_doc() for r in rows]}

        return self._guard(run)


class HttpTransport:
    """Real HTTP client; timestamps ride the X-Sim-Time header so a
    sim-enabled server stays on the scenario clock."""

    def __init__(self, base_url: str, admin_key: str = "admin"):
        self.base_url = base_url.rstrip("/")
        self.admin_key = admin_key
        self.client = httpx.Client(base_url=self.base_url, timeout=30.0)
        self.sim_time: Optional[str] = None

    def set_time(self, t: datetime) -> None:
        self.sim_time = t.astimezone(timezone.utc).isoformat()

    def _headers(self, admin=False, secret: Optional[str] = None) -> dict:
        h = {}
        if self.sim_time:
            h["X-Sim-Time"] = self.sim_time
        if admin:
            h["X-Admin-Key"] = self.admin_key
        if secret is not None:
            h["X-Auth-Secret"] = secret
        return h

    @staticmethod
    def _doc(resp: httpx.Response):
        return resp.json()

    def create_study(self, doc: dict) -> dict:
        return self._doc(self.client.post("/v1/studies", json=doc, headers=self._headers(admin=True)))

    def generate_tokens(self, study_id: str, subject: str, n: int):
        return self._doc(
            self.client.post(
                f"/v1/studies/{study_id}/tokens",
                json={"subject_label": subject, "n_codes": n},
                headers=self._headers(admin=True),
            )
        )

    def enroll(self, payload: str, device_id: str) -> dict:
        return self._doc(
            self.client.post(
                "/v1/enroll",
                json={"payload": payload, "device_id": device_id},
                headers=self._headers(),
            )
        )

    def submit_batch(self, meta: dict, payload: bytes, secret: str) -> dict:
        return self._doc(
            self.client.post(
                "/v1/batches",
                data={"meta": json.dumps(meta)},
                files={"payload": ("payload.bin", payload)},
                headers=self._headers(secret=secret),
            )
        )

    def leave(self, token_id: str, secret: str, reason: str = "USER_LEFT") -> dict:
        return self._doc(
            self.client.post(
                "/v1/leave",
                json={"token_id": token_id, "reason": reason},
                headers=self._headers(secret=secret),
            )
        )

    def poll_notifications(self, token_id: str, secret: str):
        return self._doc(
            self.client.get(
                "/v1/notifications",
                params={"token_id": token_id},
                headers=self._headers(secret=secret),
            )
        )

    def notify(self, study_id: str, title: str, body: str, receiver) -> dict:
        body_doc = {"title": title, "body": body, "receiver": receiver}
        return self._doc(
            self.client.post(
                f"/v1/studies/{study_id}/notify", json=body_doc, headers=self._headers(admin=True)
            )
        )

    def qc(self, study_id: str, now: Optional[datetime] = None) -> dict:
        params = {"now": now.isoformat()} if now else {}
        return self._doc(
            self.client.get(
                f"/v1/studies/{study_id}/qc", params=params, headers=self._headers(admin=True)
            )
        )
