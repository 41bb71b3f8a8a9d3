"""Study registry: creation, configuration, lifecycle.

The source of truth for remote configuration: devices fetch a study's
config once at activation and derive all recording behavior from it.
Configs are immutable after creation except for the OPEN -> CLOSED state
transition, which is absorbing.
"""

import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import Callable, Optional

from .errors import AlreadyClosed, DuplicateStudyId, InvalidConfig, StudyClosed, UnknownStudy

IMU_SENSORS = frozenset({"accelerometer", "gyroscope", "gravity_sensor", "linear_acceleration"})
SENSOR_CATALOG = IMU_SENSORS | {"location", "activity", "application_usage"}

DEFAULT_CADENCE_S = {
    "location": 600.0,
    "activity": 300.0,
    "application_usage": 86400.0,
}

NEW_SUBJECT_WINDOW = timedelta(days=7)


class StudyState(Enum):
    OPEN = "OPEN"
    CLOSED = "CLOSED"


@dataclass(frozen=True)
class SensorSpec:
    """One sensor's recording setting: Hz for IMU sensors, cadence in
    seconds for location/activity/application_usage."""

    name: str
    frequency: float

    def validate(self) -> None:
        if self.name not in SENSOR_CATALOG:
            raise InvalidConfig(f"unknown sensor {self.name!r}; catalog: {sorted(SENSOR_CATALOG)}")
        if not self.frequency > 0:
            raise InvalidConfig(f"sensor {self.name}: frequency must be positive")
        if self.name in IMU_SENSORS and not 1.0 <= self.frequency <= 200.0:
            raise InvalidConfig(f"sensor {self.name}: rate {self.frequency} Hz outside [1, 200]")
        if self.name == "application_usage" and self.frequency != 86400.0:
            raise InvalidConfig("application_usage cadence is fixed at 86400 s (daily)")
        if self.name in ("location", "activity") and self.frequency < 60.0:
            raise InvalidConfig(f"sensor {self.name}: cadence below 60 s")


@dataclass
class StudyConfig:
    study_id: str
    name: str
    description: str
    duration_days: int
    n_subjects: int
    sensors: tuple[SensorSpec, ...]
    created_at: Optional[datetime] = None
    state: StudyState = StudyState.OPEN

    def validate(self) -> None:
        if not self.study_id:
            raise InvalidConfig("study_id must be non-empty")
        if self.duration_days < 1:
            raise InvalidConfig("duration_days must be >= 1")
        if self.n_subjects < 1:
            raise InvalidConfig("n_subjects must be >= 1")
        if not self.sensors:
            raise InvalidConfig("sensors must be non-empty")
        names = [s.name for s in self.sensors]
        if len(set(names)) != len(names):
            raise InvalidConfig("duplicate sensor in config")
        for s in self.sensors:
            s.validate()

    def sensor_names(self) -> set[str]:
        return {s.name for s in self.sensors}

    def sensor(self, name: str) -> SensorSpec:
        for s in self.sensors:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_doc(self) -> dict:
        return {
            "study_id": self.study_id,
            "name": self.name,
            "description": self.description,
            "duration_days": self.duration_days,
            "n_subjects": self.n_subjects,
            "sensors": [{"name": s.name, "frequency": s.frequency} for s in self.sensors],
            "created_at": self.created_at.isoformat() if self.created_at else None,
            "state": self.state.value,
        }


def spec_from_doc(doc: dict) -> SensorSpec:
    name = doc.get("name")
    frequency = doc.get("frequency")
    if frequency is None:
        frequency = DEFAULT_CADENCE_S.get(name)
    if frequency is None:
        raise InvalidConfig(f"sensor {name!r}: frequency required for IMU sensors")
    return SensorSpec(name=name, frequency=float(frequency))


class StudyRegistry:
    """In-memory registry; create/close are serialized per instance."""

    def __init__(self, clock: Callable[[], datetime]):
        self._clock = clock
        self._studies: dict[str, StudyConfig] = {}
        self._lock = threading.Lock()
        self._close_hooks: list[Callable[[str, datetime], None]] = []

    def on_close(self, hook: Callable[[str, datetime], None]) -> None:
        """Register a hook run when a study closes (used by enrollment to
        auto-leave active registrations)."""
        self._close_hooks.append(hook)

    def create_study(self, cfg: StudyConfig) -> str:
        cfg.validate()
        with self._lock:
            if cfg.study_id in self._studies:
                raise DuplicateStudyId(cfg.study_id)
            cfg.created_at = cfg.created_at or self._clock()
            cfg.state = StudyState.OPEN
            self._studies[cfg.study_id] = cfg
        return cfg.study_id

    def get_config(self, study_id: str) -> StudyConfig:
        try:
            return self._studies[study_id]
        except KeyError:
            raise UnknownStudy(study_id) from None

    def list_studies(self) -> list[StudyConfig]:
        return list(self._studies.values())

    def require_open(self, study_id: str) -> StudyConfig:
        cfg = self.get_config(study_id)
        if cfg.state is not StudyState.OPEN:
            raise StudyClosed(study_id)
        return cfg

    def close_study(self, study_id: str, now: Optional[datetime] = None) -> dict:
        now = now or self._clock()
        with self._lock:
            cfg = self.get_config(study_id)
            if cfg.state is StudyState.CLOSED:
                raise AlreadyClosed(study_id)
            cfg.state = StudyState.CLOSED
        for hook in self._close_hooks:
            hook(study_id, now)
        return {"study_id": study_id, "state": cfg.state.value, "closed_at": now.isoformat()}
