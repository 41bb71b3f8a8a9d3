"""Declarative fleet scenarios: devices, traces, crash schedules.

A scenario plus its seed fully determines a run; the generator helpers
below synthesize randomized campaigns that stay reproducible.
"""

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import ScenarioInvalid
from ..registry import DEFAULT_CADENCE_S


@dataclass
class DeviceSpec:
    subject_label: str
    home: tuple[float, float, float]  # lat, lon, alt
    wifi: list[tuple[float, bool]] = field(default_factory=lambda: [(0.0, True)])
    battery: list[tuple[float, float]] = field(default_factory=lambda: [(0.0, 90.0)])
    crash_times: list[float] = field(default_factory=list)
    sensor_gaps: list[dict] = field(default_factory=list)  # {sensor, start_s, end_s}
    join_at_s: float = 0.0

    def wifi_at(self, t_s: float) -> bool:
        return _trace_value(self.wifi, t_s, True)

    def battery_at(self, t_s: float) -> float:
        return _trace_value(self.battery, t_s, 90.0)

    def in_gap(self, sensor: str, t_s: float) -> bool:
        return any(
            g["sensor"] == sensor and g["start_s"] <= t_s < g["end_s"]
            for g in self.sensor_gaps
        )

    def to_doc(self) -> dict:
        return {
            "subject_label": self.subject_label,
            "home": list(self.home),
            "wifi": [[t, v] for t, v in self.wifi],
            "battery": [[t, v] for t, v in self.battery],
            "crash_times": list(self.crash_times),
            "sensor_gaps": self.sensor_gaps,
            "join_at_s": self.join_at_s,
        }


def _trace_value(trace, t_s, default):
    value = default
    for start, v in trace:
        if t_s >= start:
            value = v
        else:
            break
    return value


@dataclass
class Scenario:
    seed: int
    start_time: datetime
    duration_s: float
    study: dict  # study-config document (the create-study request body)
    devices: list[DeviceSpec]
    sync_interval_s: float = 300.0
    upload_s: float = 1.0
    crash_retry_s: float = 60.0
    manual_syncs: list[tuple[int, float]] = field(default_factory=list)
    messages: list[dict] = field(default_factory=list)  # {t_s, title, body, receiver}

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise ScenarioInvalid("duration_s must be positive")
        if not self.devices:
            raise ScenarioInvalid("scenario needs at least one device")
        if self.start_time.tzinfo is None:
            raise ScenarioInvalid("start_time must be timezone-aware")
        if self.sync_interval_s <= 0 or self.upload_s <= 0:
            raise ScenarioInvalid("sync_interval_s and upload_s must be positive")
        labels = [d.subject_label for d in self.devices]
        if len(set(labels)) != len(labels):
            raise ScenarioInvalid("duplicate subject labels")
        for d in self.devices:
            lat, lon, _alt = d.home
            if not (-90 <= lat <= 90 and -180 < lon <= 180):
                raise ScenarioInvalid(f"device {d.subject_label}: home out of range")
            for c in d.crash_times:
                if not 0 <= c < self.duration_s:
                    raise ScenarioInvalid(f"device {d.subject_label}: crash time {c} outside run")
            for trace in (d.wifi, d.battery):
                starts = [t for t, _ in trace]
                if starts != sorted(starts):
                    raise ScenarioInvalid(f"device {d.subject_label}: trace not sorted")
        if not self.study.get("sensors"):
            raise ScenarioInvalid("study config needs sensors")

    @property
    def start_s(self) -> float:
        return self.start_time.timestamp()

    def without_crashes(self) -> "Scenario":
        clone = Scenario.from_doc(self.to_doc())
        for d in clone.devices:
            d.crash_times = []
        return clone

    def to_doc(self) -> dict:
        return {
            "seed": self.seed,
            "start_time": self.start_time.isoformat(),
            "duration_s": self.duration_s,
            "study": self.study,
            "devices": [d.to_doc() for d in self.devices],
            "sync_interval_s": self.sync_interval_s,
            "upload_s": self.upload_s,
            "crash_retry_s": self.crash_retry_s,
            "manual_syncs": [list(m) for m in self.manual_syncs],
            "messages": self.messages,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Scenario":
        try:
            scenario = cls(
                seed=int(doc["seed"]),
                start_time=datetime.fromisoformat(doc["start_time"]),
                duration_s=float(doc["duration_s"]),
                study=doc["study"],
                devices=[
                    DeviceSpec(
                        subject_label=d["subject_label"],
                        home=tuple(d["home"]),
                        wifi=[(float(t), bool(v)) for t, v in d.get("wifi", [[0, True]])],
                        battery=[(float(t), float(v)) for t, v in d.get("battery", [[0, 90]])],
                        crash_times=[float(c) for c in d.get("crash_times", [])],
                        sensor_gaps=d.get("sensor_gaps", []),
                        join_at_s=float(d.get("join_at_s", 0.0)),
                    )
                    for d in doc["devices"]
                ],
                sync_interval_s=float(doc.get("sync_interval_s", 300.0)),
                upload_s=float(doc.get("upload_s", 1.0)),
                crash_retry_s=float(doc.get("crash_retry_s", 60.0)),
                manual_syncs=[(int(i), float(t)) for i, t in doc.get("manual_syncs", [])],
                messages=doc.get("messages", []),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ScenarioInvalid(f"bad scenario document: {e}") from None
        scenario.validate()
        return scenario

    @classmethod
    def load(cls, path: Path) -> "Scenario":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ScenarioInvalid(f"scenario file is not valid JSON: {e}") from None
        return cls.from_doc(doc)

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_doc(), indent=2) + "\n")


def build_campaign(
    n_devices: int,
    days: float,
    seed: int,
    study_id: str = "sim_study",
    sensors: Optional[list[dict]] = None,
    crashes_per_device: float = 4.0,
    silenced_device: Optional[int] = None,
    silence_after_s: Optional[float] = None,
    gap_device: Optional[int] = None,
    gap_sensor: str = "activity",
    gap_day: int = 5,
    start_time: Optional[datetime] = None,
) -> Scenario:
    """Synthesize a randomized but reproducible fleet campaign.

    Crashes land anywhere except the final hour so delayed re-syncs drain
    before the run ends; the optional silenced device loses Wi-Fi for good
    at ``silence_after_s``; the optional gap device stops one sensor for
    one full UTC day.
    """
    rng = np.random.default_rng(seed)
    duration_s = days * 86400.0
    start = start_time or datetime(2021, 3, 1, 0, 0, 0, tzinfo=timezone.utc)
    sensors = sensors or [
        {"name": "activity", "frequency": DEFAULT_CADENCE_S["activity"]},
        {"name": "application_usage", "frequency": DEFAULT_CADENCE_S["application_usage"]},
        {"name": "location", "frequency": DEFAULT_CADENCE_S["location"]},
    ]
    devices = []
    for i in range(n_devices):
        home = (
            float(rng.uniform(-55, 65)),
            float(rng.uniform(-179, 179)),
            float(rng.uniform(0, 500)),
        )
        n_crashes = int(rng.poisson(crashes_per_device))
        crash_window = max(duration_s - 3600.0, 1.0)
        crashes = sorted(float(rng.uniform(600.0, crash_window)) for _ in range(n_crashes))
        wifi: list[tuple[float, bool]] = [(0.0, True)]
        if i == silenced_device:
            cut = silence_after_s if silence_after_s is not None else duration_s - 60 * 3600.0
            wifi.append((float(cut), False))
        gaps = []
        if i == gap_device:
            gaps.append(
                {
                    "sensor": gap_sensor,
                    "start_s": gap_day * 86400.0,
                    "end_s": (gap_day + 1) * 86400.0,
                }
            )
        devices.append(
            DeviceSpec(
                subject_label=f"S_{i:05d}",
                home=home,
                wifi=wifi,
                battery=[(0.0, float(rng.uniform(55, 95)))],
                crash_times=crashes,
                sensor_gaps=gaps,
            )
        )
    scenario = Scenario(
        seed=seed,
        start_time=start,
        duration_s=duration_s,
        study={
            "study_id": study_id,
            "name": f"campaign {study_id}",
            "description": "synthetic fleet campaign",
            "duration_days": max(int(days) * 6, 84),
            "n_subjects": n_devices,
            "sensors": sensors,
        },
        devices=devices,
    )
    scenario.validate()
    return scenario
