"""Batch ingestion: checksum gate, idempotency, handoff to the datastore.

Clients deliver at-least-once; the server stores exactly once, keyed on
(device_id, batch_id). The MD5 checksum is a transport sanity check over
the exact transmitted payload bytes (authentication is the token secret,
storage integrity is the datastore's SHA-256 content address).
"""

import hashlib
import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from enum import Enum
from typing import Optional

from .datastore import DataStore
from .enrollment import EnrollmentService
from .errors import (
    ChecksumMismatch,
    EmptyObject,
    SensorNotInStudy,
    StudyClosed,
    UnknownRegistration,
)
from .registry import StudyRegistry

LEAVE_GRACE = timedelta(hours=24)  # late buffered batches accepted this long after leaving


class Outcome(Enum):
    STORED = "STORED"
    DUPLICATE = "DUPLICATE"


@dataclass(frozen=True)
class SensorBatch:
    study_id: str
    token_id: str
    device_id: str
    sensor: str
    batch_id: str
    created_at: datetime
    payload: bytes
    md5_hex: str


@dataclass(frozen=True)
class BatchReceipt:
    batch_id: str
    received_at: datetime
    outcome: Outcome
    object_ref: str

    def to_doc(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "received_at": self.received_at.isoformat(),
            "outcome": self.outcome.value,
            "object_ref": self.object_ref,
        }


@dataclass
class SensorTally:
    n_batches: int = 0
    last_received: Optional[datetime] = None
    created_days: set[date] = field(default_factory=set)  # UTC dates covered by stored batches


def verify_checksum(payload: bytes, md5_hex: str) -> bool:
    """True iff the MD5 of the payload matches, case-insensitively."""
    return hashlib.md5(payload).hexdigest() == (md5_hex or "").lower()


class IngestionService:
    def __init__(self, registry: StudyRegistry, enrollment: EnrollmentService, store: DataStore):
        self._registry = registry
        self._enrollment = enrollment
        self._store = store
        self._seen: dict[tuple[str, str], str] = {}  # (device_id, batch_id) -> object id
        self._tallies: dict[tuple[str, str, str], SensorTally] = {}  # (study, token, sensor)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _lock_for(self, study_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(study_id, threading.Lock())

    def submit_batch(self, b: SensorBatch, auth_secret: str, now: datetime) -> BatchReceipt:
        reg = self._enrollment.authenticate(b.token_id, auth_secret)
        self._registry.require_open(b.study_id)
        if reg.study_id != b.study_id:
            raise UnknownRegistration(f"token {b.token_id} is not registered in study {b.study_id}")
        cfg = self._registry.get_config(b.study_id)
        if b.sensor not in cfg.sensor_names():
            raise SensorNotInStudy(b.sensor)
        if reg.date_left is not None:
            # late buffered data: accepted briefly after leaving, for samples
            # recorded before the leave instant
            if now > reg.date_left + LEAVE_GRACE or b.created_at > reg.date_left:
                raise StudyClosed(f"registration {b.token_id} left the study")
        if not b.payload:
            raise EmptyObject("empty batch payload")
        if not verify_checksum(b.payload, b.md5_hex):
            raise ChecksumMismatch(b.batch_id)

        key = (b.device_id, b.batch_id)
        with self._lock_for(b.study_id):
            existing = self._seen.get(key)
            if existing is not None:
                return BatchReceipt(b.batch_id, now, Outcome.DUPLICATE, existing)
            oid = self._store.put_object(b.study_id, b.payload)
            logical_path = f"{b.token_id}/{b.sensor}/{b.created_at.date().isoformat()}/{b.batch_id}"
            self._store.commit_batch(
                b.study_id, logical_path, oid,
                f"batch {b.sensor} {b.batch_id} from {b.token_id}", now=now,
            )
            self._seen[key] = oid
            tally = self._tallies.setdefault((b.study_id, b.token_id, b.sensor), SensorTally())
            tally.n_batches += 1
            tally.last_received = now if tally.last_received is None else max(tally.last_received, now)
            tally.created_days.add(b.created_at.date())
        return BatchReceipt(b.batch_id, now, Outcome.STORED, oid)

    # -- QC-facing views ------------------------------------------------------

    def batch_counts(self, study_id: str) -> dict[tuple[str, str], dict]:
        """Per (token_id, sensor): stored-batch count and last receipt time."""
        self._registry.get_config(study_id)
        out = {}
        for (sid, token_id, sensor), tally in self._tallies.items():
            if sid == study_id:
                out[(token_id, sensor)] = {
                    "n_batches": tally.n_batches,
                    "last_received": tally.last_received,
                }
        return out

    def tally(self, study_id: str, token_id: str, sensor: str) -> SensorTally:
        return self._tallies.get((study_id, token_id, sensor), SensorTally())

    def covered_days(self, study_id: str, token_id: str, sensor: str) -> set[date]:
        return set(self.tally(study_id, token_id, sensor).created_days)
