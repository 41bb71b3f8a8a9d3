"""Operator-to-participant messaging, delivered by device polling.

A message targets ALL subjects or a named set; one delivery is queued per
active registration of each targeted subject, and each registration
receives its copy at most once (on its next poll).
"""

import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Union

from .enrollment import EnrollmentService
from .errors import UnknownSubject
from .registry import StudyRegistry

ALL = "ALL"


@dataclass
class PushMessage:
    message_id: str
    study_id: str
    title: str
    body: str
    receiver: Union[str, frozenset]  # ALL or subject labels
    created_at: datetime
    delivered_to: set[str] = field(default_factory=set)  # token_ids that polled it

    def to_doc(self) -> dict:
        return {
            "message_id": self.message_id,
            "study_id": self.study_id,
            "title": self.title,
            "body": self.body,
            "receiver": self.receiver if self.receiver == ALL else sorted(self.receiver),
            "created_at": self.created_at.isoformat(),
            "delivered_to": sorted(self.delivered_to),
        }


class NotificationService:
    def __init__(self, registry: StudyRegistry, enrollment: EnrollmentService):
        self._registry = registry
        self._enrollment = enrollment
        self._messages: list[PushMessage] = []
        self._queues: dict[str, list[PushMessage]] = {}  # token_id -> pending
        self._lock = threading.Lock()

    def send(self, study_id: str, title: str, body: str,
             receiver: Union[str, set, frozenset], now: datetime) -> tuple[PushMessage, int]:
        self._registry.require_open(study_id)
        if receiver != ALL:
            receiver = frozenset(receiver)
            known = self._enrollment.subject_labels(study_id)
            missing = receiver - known
            if missing:
                raise UnknownSubject(", ".join(sorted(missing)))
        msg = PushMessage(
            message_id=str(uuid.uuid4()),
            study_id=study_id,
            title=title,
            body=body,
            receiver=receiver,
            created_at=now,
        )
        queued = 0
        with self._lock:
            self._messages.append(msg)
            for reg in self._enrollment.registrations_for_study(study_id):
                if not reg.active:
                    continue
                if receiver != ALL and reg.subject_label not in receiver:
                    continue
                self._queues.setdefault(reg.token_id, []).append(msg)
                queued += 1
        return msg, queued

    def poll(self, token_id: str, auth_secret: str) -> list[PushMessage]:
        """Undelivered messages for this registration; marks them delivered."""
        self._enrollment.authenticate(token_id, auth_secret)
        with self._lock:
            pending = self._queues.pop(token_id, [])
            for msg in pending:
                msg.delivered_to.add(token_id)
        return pending

    def messages_for_study(self, study_id: str) -> list[PushMessage]:
        return [m for m in self._messages if m.study_id == study_id]
