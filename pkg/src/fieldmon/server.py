"""Server core: one object composing registry, enrollment, ingestion,
datastore, QC, and notifications over a shared clock.

The HTTP layer in ``api.py`` is a thin adapter over this; the fleet
simulator can drive either surface and must reach identical end states.
"""

from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

from . import qc
from .datastore import DataStore
from .enrollment import EnrollmentService, LeaveReason
from .ingestion import IngestionService, SensorBatch
from .notifications import NotificationService
from .registry import NEW_SUBJECT_WINDOW, StudyConfig, StudyRegistry


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


class ServerCore:
    def __init__(
        self,
        data_dir: Path,
        admin_key: str = "admin",
        clock: Optional[Callable[[], datetime]] = None,
        server_address: str = "http://localhost:8430",
    ):
        self.clock = clock or utc_now
        self.admin_key = admin_key
        self.registry = StudyRegistry(self.clock)
        self.store = DataStore(Path(data_dir))
        self.enrollment = EnrollmentService(self.registry, server_address)
        self.ingestion = IngestionService(self.registry, self.enrollment, self.store)
        self.notifications = NotificationService(self.registry, self.enrollment)

    # -- studies ---------------------------------------------------------

    def create_study(self, cfg: StudyConfig) -> str:
        study_id = self.registry.create_study(cfg)
        self.store.init_dataset(study_id, now=self.clock())
        return study_id

    def close_study(self, study_id: str) -> dict:
        return self.registry.close_study(study_id, self.clock())

    def study_overview(self, study_id: str) -> dict:
        """Enrollment counters for the study page."""
        cfg = self.registry.get_config(study_id)
        now = self.clock()
        subjects = self.enrollment.subject_labels(study_id)
        regs = self.enrollment.registrations_for_study(study_id)
        first_reg: dict[str, datetime] = {}
        for r in regs:
            prev = first_reg.get(r.subject_label)
            if prev is None or r.date_registered < prev:
                first_reg[r.subject_label] = r.date_registered
        enrolled = set(first_reg)
        new = {s for s, t in first_reg.items() if now - t <= NEW_SUBJECT_WINDOW}
        return {
            "study_id": study_id,
            "name": cfg.name,
            "description": cfg.description,
            "state": cfg.state.value,
            "duration_days": cfg.duration_days,
            "total_subjects": len(subjects),
            "enrolled_subjects": len(enrolled),
            "new_subjects": len(new),
            "sensors": sorted(cfg.sensor_names()),
        }

    # -- device-facing ------------------------------------------------------

    def activate(self, payload: str, device_id: str):
        return self.enrollment.activate(payload, device_id, self.clock())

    def leave_study(self, token_id: str, reason: LeaveReason = LeaveReason.USER_LEFT):
        return self.enrollment.leave_study(token_id, self.clock(), reason)

    def submit_batch(self, batch: SensorBatch, auth_secret: str):
        return self.ingestion.submit_batch(batch, auth_secret, self.clock())

    def poll_notifications(self, token_id: str, auth_secret: str):
        return self.notifications.poll(token_id, auth_secret)

    # -- QC ------------------------------------------------------------------

    def qc_table(self, study_id: str, now: Optional[datetime] = None):
        return qc.study_table(
            self.registry, self.enrollment, self.ingestion, study_id, now or self.clock()
        )
