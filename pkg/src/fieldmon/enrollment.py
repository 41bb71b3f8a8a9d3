"""One-time QR enrollment tokens and registrations.

Tokens are minted in numbered batches per subject (the first code plus
backups, suffixes _1.._n). Scanning a token's payload consumes it exactly
once and creates a registration; backup codes cover rejoin and device
switch. The token secret authenticates all later uploads and is never
exposed by any operation except the QR payload encoding itself.
"""

import json
import secrets
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Callable, Optional

from .errors import (
    AlreadyLeft,
    AuthFailure,
    DuplicateSubjectLabel,
    MalformedPayload,
    NotRegistered,
    TokenAlreadyUsed,
    UnknownRegistration,
    UnknownToken,
)
from .registry import StudyRegistry

DEFAULT_CODES_PER_SUBJECT = 4  # primary + 3 backups; table suffixes run _1.._4

PAYLOAD_VERSION = 1
PAYLOAD_FIELDS = {"v", "token_id", "study_id", "server", "auth", "secret"}


class LeaveReason(Enum):
    USER_LEFT = "USER_LEFT"
    AUTO_DURATION = "AUTO_DURATION"


@dataclass(frozen=True)
class EnrollmentToken:
    subject_label: str
    token_id: str
    study_id: str
    server_address: str
    secret: str  # 32 hex chars, 128-bit
    auth_hint: Optional[str] = None

    def public_doc(self) -> dict:
        # never leaks the secret; QC and admin listings use this view
        return {
            "subject_label": self.subject_label,
            "token_id": self.token_id,
            "study_id": self.study_id,
            "server": self.server_address,
        }


@dataclass
class Registration:
    token_id: str
    subject_label: str
    study_id: str
    device_id: str
    date_registered: datetime
    date_left: Optional[datetime] = None
    left_reason: Optional[LeaveReason] = None

    @property
    def active(self) -> bool:
        return self.date_left is None

    def to_doc(self) -> dict:
        return {
            "token_id": self.token_id,
            "subject_label": self.subject_label,
            "study_id": self.study_id,
            "device_id": self.device_id,
            "date_registered": self.date_registered.isoformat(),
            "date_left": self.date_left.isoformat() if self.date_left else None,
            "left_reason": self.left_reason.value if self.left_reason else None,
        }


def encode_qr_payload(token: EnrollmentToken) -> str:
    """Canonical QR payload: UTF-8 JSON, keys sorted, no whitespace.

    This exact string is what the dashboard renders as a QR image.
    """
    doc = {
        "v": PAYLOAD_VERSION,
        "token_id": token.token_id,
        "study_id": token.study_id,
        "server": token.server_address,
        "auth": token.auth_hint,
        "secret": token.secret,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def parse_qr_payload(payload: str) -> dict:
    try:
        doc = json.loads(payload)
    except (json.JSONDecodeError, TypeError) as e:
        raise MalformedPayload(f"payload is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or set(doc) != PAYLOAD_FIELDS:
        raise MalformedPayload("payload fields do not match the enrollment schema")
    if doc["v"] != PAYLOAD_VERSION:
        raise MalformedPayload(f"unsupported payload version {doc['v']!r}")
    return doc


class EnrollmentService:
    """Token and registration store; consume/leave are linearizable."""

    def __init__(self, registry: StudyRegistry, server_address: str = "http://localhost:8430"):
        self._registry = registry
        self._server_address = server_address
        self._tokens: dict[str, EnrollmentToken] = {}
        self._consumed: set[str] = set()
        self._registrations: dict[str, Registration] = {}
        self._subjects: dict[str, set[str]] = {}  # study_id -> subject labels
        self._lock = threading.Lock()
        registry.on_close(self._auto_leave_all)

    # -- token minting ----------------------------------------------------

    def generate_tokens(
        self,
        study_id: str,
        subject_label: str,
        n_codes: int = DEFAULT_CODES_PER_SUBJECT,
        auth_hint: Optional[str] = None,
    ) -> list[EnrollmentToken]:
        if n_codes < 1:
            raise ValueError("n_codes must be >= 1")
        self._registry.require_open(study_id)
        with self._lock:
            labels = self._subjects.setdefault(study_id, set())
            if subject_label in labels:
                raise DuplicateSubjectLabel(subject_label)
            labels.add(subject_label)
            out = []
            for i in range(1, n_codes + 1):
                token = EnrollmentToken(
                    subject_label=subject_label,
                    token_id=f"{subject_label}_{i}",
                    study_id=study_id,
                    server_address=self._server_address,
                    secret=secrets.token_hex(16),
                    auth_hint=auth_hint,
                )
                self._tokens[token.token_id] = token
                out.append(token)
        return out

    def tokens_for_study(self, study_id: str) -> list[EnrollmentToken]:
        return [t for t in self._tokens.values() if t.study_id == study_id]

    def subject_labels(self, study_id: str) -> set[str]:
        return set(self._subjects.get(study_id, set()))

    # -- activation / leaving ----------------------------------------------

    def activate(self, payload: str, device_id: str, now: datetime) -> Registration:
        doc = parse_qr_payload(payload)
        token_id = doc["token_id"]
        with self._lock:
            token = self._tokens.get(token_id)
            if token is None:
                raise UnknownToken(token_id)
            if doc["secret"] != token.secret:
                raise AuthFailure("payload secret does not match the issued token")
            self._registry.require_open(token.study_id)
            if token_id in self._consumed:
                raise TokenAlreadyUsed(token_id)
            self._consumed.add(token_id)
            reg = Registration(
                token_id=token_id,
                subject_label=token.subject_label,
                study_id=token.study_id,
                device_id=device_id,
                date_registered=now,
            )
            self._registrations[token_id] = reg
        return reg

    def leave_study(self, token_id: str, now: datetime, reason: LeaveReason) -> Registration:
        with self._lock:
            reg = self._registrations.get(token_id)
            if reg is None:
                raise NotRegistered(token_id)
            if reg.date_left is not None:
                raise AlreadyLeft(token_id)
            reg.date_left = now
            reg.left_reason = reason
        return reg

    def _auto_leave_all(self, study_id: str, now: datetime) -> None:
        with self._lock:
            for reg in self._registrations.values():
                if reg.study_id == study_id and reg.date_left is None:
                    reg.date_left = now
                    reg.left_reason = LeaveReason.AUTO_DURATION

    # -- lookups ------------------------------------------------------------

    def registration(self, token_id: str) -> Registration:
        reg = self._registrations.get(token_id)
        if reg is None:
            raise UnknownRegistration(token_id)
        return reg

    def registrations_for_study(self, study_id: str) -> list[Registration]:
        return [r for r in self._registrations.values() if r.study_id == study_id]

    def authenticate(self, token_id: str, auth_secret: str) -> Registration:
        """Check a device-supplied secret against the token; returns the
        registration on success."""
        token = self._tokens.get(token_id)
        if token is None or token_id not in self._registrations:
            raise UnknownRegistration(token_id)
        if not secrets.compare_digest(token.secret, auth_secret or ""):
            raise AuthFailure("bad token secret")
        return self._registrations[token_id]

    def token(self, token_id: str) -> EnrollmentToken:
        token = self._tokens.get(token_id)
        if token is None:
            raise UnknownToken(token_id)
        return token
