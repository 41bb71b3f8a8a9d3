"""Quality control: the per-registration status table behind the
missing-data highlighting in the operator dashboard.

Time in study counts whole 24-hour periods between registration and the
leave instant (or ``now`` while active). Day-level data coverage looks at
complete UTC days strictly inside the active interval, so partial first
and last days never count as missing.
"""

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Optional

from .enrollment import EnrollmentService, LeaveReason, Registration
from .errors import NegativeInterval
from .ingestion import IngestionService
from .registry import SENSOR_CATALOG, StudyConfig, StudyRegistry

NO_DATA_THRESHOLD = timedelta(hours=48)


class Flag(Enum):
    NO_DATA_48H = "NO_DATA_48H"
    SENSOR_NOT_CHOSEN = "SENSOR_NOT_CHOSEN"
    LEFT_TOO_EARLY = "LEFT_TOO_EARLY"
    DURATION_REACHED_NOT_LEFT = "DURATION_REACHED_NOT_LEFT"
    DURATION_REACHED_LEFT = "DURATION_REACHED_LEFT"
    MULTIPLE_ACTIVE = "MULTIPLE_ACTIVE"


# flag -> palette name; the single documented mapping the dashboard renders
FLAG_COLORS = {
    Flag.NO_DATA_48H: "red",
    Flag.SENSOR_NOT_CHOSEN: "grey",
    Flag.LEFT_TOO_EARLY: "orange",
    Flag.DURATION_REACHED_NOT_LEFT: "yellow",
    Flag.DURATION_REACHED_LEFT: "green",
    Flag.MULTIPLE_ACTIVE: "purple",
}
# no flags, no status code: "everything is fine"
OK_COLOR = "white"


@dataclass
class SensorCell:
    n_batches: int = 0
    last_received: Optional[datetime] = None
    chosen: bool = True

    def to_doc(self) -> dict:
        return {
            "n_batches": self.n_batches,
            "last_received": self.last_received.isoformat() if self.last_received else None,
            "chosen": self.chosen,
        }


@dataclass
class ParticipantStatus:
    subject_label: str
    token_id: str
    device_id: str
    date_registered: datetime
    date_left: Optional[datetime]
    time_in_study_days: int
    status_code: Optional[int]
    flags: set[Flag]
    sensors: dict[str, SensorCell] = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "subject_label": self.subject_label,
            "token_id": self.token_id,
            "device_id": self.device_id,
            "date_registered": self.date_registered.isoformat(),
            "date_left": self.date_left.isoformat() if self.date_left else None,
            "time_in_study_days": self.time_in_study_days,
            "status_code": self.status_code,
            "flags": sorted(f.value for f in self.flags),
            "colors": sorted({FLAG_COLORS[f] for f in self.flags}) or [OK_COLOR],
            "sensors": {name: cell.to_doc() for name, cell in self.sensors.items()},
        }


def time_in_study(date_registered: datetime, end: datetime) -> int:
    """Whole 24-hour periods elapsed between registration and ``end``."""
    delta = (end - date_registered).total_seconds()
    if delta < 0:
        raise NegativeInterval(f"end {end} precedes registration {date_registered}")
    return int(delta // 86400)


def _full_days_between(start: datetime, end: datetime):
    """Complete UTC dates strictly inside (start, end)."""
    day = start.astimezone(timezone.utc).date() + timedelta(days=1)
    last = end.astimezone(timezone.utc).date()
    while day < last:
        yield day
        day += timedelta(days=1)


def compute_flags(
    reg: Registration,
    cfg: StudyConfig,
    ingestion: IngestionService,
    now: datetime,
    n_active_for_subject: int,
) -> tuple[set[Flag], Optional[int]]:
    flags: set[Flag] = set()
    end = reg.date_left or now
    days = time_in_study(reg.date_registered, end)
    chosen = cfg.sensor_names()

    if reg.active:
        latest = max(
            (
                t.last_received
                for s in chosen
                if (t := ingestion.tally(cfg.study_id, reg.token_id, s)).last_received
            ),
            default=reg.date_registered,
        )
        if now - latest > NO_DATA_THRESHOLD:
            flags.add(Flag.NO_DATA_48H)
        if days >= cfg.duration_days:
            flags.add(Flag.DURATION_REACHED_NOT_LEFT)
    else:
        if days >= cfg.duration_days:
            flags.add(Flag.DURATION_REACHED_LEFT)
        elif reg.left_reason is LeaveReason.USER_LEFT:
            flags.add(Flag.LEFT_TOO_EARLY)

    if reg.active and n_active_for_subject >= 2:
        flags.add(Flag.MULTIPLE_ACTIVE)

    if reg.left_reason is LeaveReason.USER_LEFT:
        code: Optional[int] = 1
    elif reg.left_reason is LeaveReason.AUTO_DURATION:
        code = 2
    elif _has_missing_day(reg, cfg, ingestion, end):
        code = 3
    else:
        code = None
    return flags, code


def _has_missing_day(reg: Registration, cfg: StudyConfig, ingestion: IngestionService,
                     end: datetime) -> bool:
    for sensor in cfg.sensor_names():
        covered = ingestion.covered_days(cfg.study_id, reg.token_id, sensor)
        for day in _full_days_between(reg.date_registered, end):
            if day not in covered:
                return True
    return False


def study_table(
    registry: StudyRegistry,
    enrollment: EnrollmentService,
    ingestion: IngestionService,
    study_id: str,
    now: datetime,
) -> list[ParticipantStatus]:
    """One row per registration, ordered by subject label then code suffix."""
    cfg = registry.get_config(study_id)
    regs = enrollment.registrations_for_study(study_id)
    active_per_subject: dict[str, int] = {}
    for r in regs:
        if r.active:
            active_per_subject[r.subject_label] = active_per_subject.get(r.subject_label, 0) + 1

    rows = []
    for reg in sorted(regs, key=lambda r: (r.subject_label, _suffix(r.token_id))):
        flags, code = compute_flags(
            reg, cfg, ingestion, now, active_per_subject.get(reg.subject_label, 0)
        )
        cells = {}
        for sensor in sorted(SENSOR_CATALOG):
            tally = ingestion.tally(study_id, reg.token_id, sensor)
            if sensor in cfg.sensor_names():
                cells[sensor] = SensorCell(tally.n_batches, tally.last_received, chosen=True)
            else:
                cells[sensor] = SensorCell(0, None, chosen=False)
        rows.append(
            ParticipantStatus(
                subject_label=reg.subject_label,
                token_id=reg.token_id,
                device_id=reg.device_id,
                date_registered=reg.date_registered,
                date_left=reg.date_left,
                time_in_study_days=time_in_study(reg.date_registered, reg.date_left or now),
                status_code=code,
                flags=flags,
                sensors=cells,
            )
        )
    return rows


def _suffix(token_id: str) -> int:
    try:
        return int(token_id.rsplit("_", 1)[1])
    except (IndexError, ValueError):
        return 0
