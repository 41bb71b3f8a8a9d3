"""Per-device actor: enrollment, on-device generation, local buffering.

Generation is a pure function of (scenario seed, device index, schedule):
location, activity, and app-usage traces are precomputed at activation
from dedicated RNG streams, and IMU windows draw from stateless per-tick
streams. Crashes therefore never change WHAT a device records, only when
it manages to sync — which is what makes crash/no-crash runs comparable
object-for-object.

The local buffer is the device's persisted queue: it survives crashes, and
entries leave it only on a STORED/DUPLICATE receipt (delete after sync).
"""

import hashlib
import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

import numpy as np

from ..geo import Wgs84Point, derive_key
from ..registry import IMU_SENSORS
from . import generators
from .scenario import DeviceSpec, Scenario

BATTERY_MIN_PCT = 20.0
IMU_WINDOW_S = 60.0        # IMU batches close at 60 s or IMU_MAX_SAMPLES, whichever first
IMU_MAX_SAMPLES = 5000
USAGE_SNAPSHOT_OFFSET_S = 86340.0  # daily snapshot at 23:59:00 UTC

_SENSOR_CODES = {
    "accelerometer": 1,
    "gyroscope": 2,
    "gravity_sensor": 3,
    "linear_acceleration": 4,
    "location": 5,
    "activity": 6,
    "application_usage": 7,
}


class SyncVerdict(Enum):
    SYNC = "SYNC"
    HOLD = "HOLD"


def sync_decision(buffer_len: int, wifi_connected: bool, battery_pct: float,
                  manual_pending: bool = False) -> SyncVerdict:
    """Scheduled sync predicate: Wi-Fi plus enough battery, or an explicit
    manual trigger."""
    if manual_pending:
        return SyncVerdict.SYNC
    if buffer_len > 0 and wifi_connected and battery_pct >= BATTERY_MIN_PCT:
        return SyncVerdict.SYNC
    return SyncVerdict.HOLD


@dataclass
class BufferedBatch:
    sensor: str
    batch_id: str
    created_at_s: float
    payload: bytes
    md5_hex: str


@dataclass
class LocalBuffer:
    """Persisted upload queue; survives crashes by design."""

    pending: list[BufferedBatch] = field(default_factory=list)
    acked: set[str] = field(default_factory=set)
    generated: int = 0

    def add(self, batch: BufferedBatch) -> None:
        self.pending.append(batch)
        self.generated += 1

    def ack(self, batch_id: str) -> None:
        self.acked.add(batch_id)
        self.pending = [b for b in self.pending if b.batch_id != batch_id]


def _stream(*entropy) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _canonical(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


class DeviceActor:
    def __init__(self, scenario: Scenario, index: int, spec: DeviceSpec):
        self.scenario = scenario
        self.index = index
        self.spec = spec
        self.device_id = str(uuid.UUID(bytes=_stream(scenario.seed, index, 100).bytes(16), version=4))
        self.home = Wgs84Point(*spec.home)
        self.token_id: Optional[str] = None
        self.secret: Optional[str] = None
        self.config: Optional[dict] = None
        self.anon_key = None
        self.buffer = LocalBuffer()
        # volatile sync state: crashes reset it, the buffer survives
        self.syncing = False
        self.crash_epoch = 0
        self.sync_epoch = 0
        self.sync_sent = 0
        self.sync_dups = 0
        self.true_location_trace: list = []  # never leaves the device
        self._anon_location: list[dict] = []
        self._har_events: list[dict] = []
        self._usage_days: dict[str, generators.AppUsageDay] = {}
        self._motion_segments: list[tuple[float, str]] = []
        self.notifications: list[dict] = []

    # -- activation ---------------------------------------------------------

    def activate(self, registration: dict, config: dict) -> None:
        """Install the registration and remote config; mint the location
        secret on-device (the server never sees it)."""
        self.token_id = registration["token_id"]
        self.config = config
        key_seed = _stream(self.scenario.seed, self.index, 101).bytes(16)
        self.anon_key = derive_key(key_seed)
        self._precompute_traces()

    def destroy_key(self) -> None:
        """Leave-study cleanup: the secret dies with the installation."""
        self.anon_key = None

    def _sensor_cadence(self, sensor: str) -> float:
        for s in self.config["sensors"]:
            if s["name"] == sensor:
                return float(s["frequency"])
        raise KeyError(sensor)

    def chosen_sensors(self) -> list[str]:
        return [s["name"] for s in self.config["sensors"]]

    def _precompute_traces(self) -> None:
        sc = self.scenario
        t0, dur = sc.start_s + self.spec.join_at_s, sc.duration_s - self.spec.join_at_s
        chosen = self.chosen_sensors()
        if "location" in chosen:
            self.true_location_trace, self._anon_location = generators.generate_location(
                self.home,
                self._sensor_cadence("location"),
                t0,
                dur,
                self.anon_key,
                _stream(sc.seed, self.index, _SENSOR_CODES["location"]),
            )
        if "activity" in chosen:
            self._har_events = generators.generate_har(
                self._sensor_cadence("activity"), t0, dur,
                _stream(sc.seed, self.index, _SENSOR_CODES["activity"]),
            )
        if "application_usage" in chosen:
            day_s = 86400.0
            first_midnight = (t0 // day_s) * day_s
            d = 0
            while first_midnight + d * day_s < t0 + dur:
                midnight = first_midnight + d * day_s
                key = datetime.fromtimestamp(midnight, tz=timezone.utc).date().isoformat()
                self._usage_days[key] = generators.AppUsageDay(
                    midnight, _stream(sc.seed, self.index, _SENSOR_CODES["application_usage"], d)
                )
                d += 1
        if any(s in IMU_SENSORS for s in chosen):
            self._motion_segments = self._build_motion_schedule(t0, dur)

    def _build_motion_schedule(self, t0: float, dur: float) -> list[tuple[float, str]]:
        rng = _stream(self.scenario.seed, self.index, 102)
        segments = []
        t = t0
        state = "still"
        while t < t0 + dur:
            segments.append((t, state))
            hold = rng.uniform(1200, 7200) if state == "still" else rng.uniform(300, 1200)
            t += float(hold)
            state = "walking" if state == "still" else "still"
        return segments

    def motion_state(self, t_s: float) -> str:
        state = "still"
        for start, s in self._motion_segments:
            if t_s >= start:
                state = s
            else:
                break
        return state

    # -- tick schedules -------------------------------------------------------

    def tick_times(self, sensor: str) -> list[float]:
        sc = self.scenario
        t0 = sc.start_s + self.spec.join_at_s
        end = sc.start_s + sc.duration_s
        if sensor == "application_usage":
            day_s = 86400.0
            first_midnight = (t0 // day_s) * day_s
            ticks, d = [], 0
            while True:
                t = first_midnight + d * day_s + USAGE_SNAPSHOT_OFFSET_S
                if t > end:
                    break
                if t >= t0:
                    ticks.append(t)
                d += 1
            return ticks
        if sensor in IMU_SENSORS:
            cadence = self._imu_window_s(sensor)
        else:
            cadence = self._sensor_cadence(sensor)
        ticks = []
        t = t0 + cadence
        k = 1
        while t <= end + 1e-9:
            ticks.append(t)
            k += 1
            t = t0 + k * cadence
        return ticks

    # -- batch creation ----------------------------------------------------------

    def make_batch(self, sensor: str, tick_index: int, t_s: float) -> Optional[BufferedBatch]:
        """Close the batch for one cadence tick; None when gated or gapped."""
        if self.spec.in_gap(sensor, t_s - self.scenario.start_s):
            return None
        if sensor == "location":
            sample = self._anon_location[tick_index]
            doc = {"sensor": "location", "samples": [sample]}
        elif sensor == "activity":
            event = self._har_events[tick_index]
            doc = {"sensor": "activity", "samples": [event]}
        elif sensor == "application_usage":
            day_key = datetime.fromtimestamp(t_s, tz=timezone.utc).date().isoformat()
            usage = self._usage_days[day_key].snapshot(t_s)
            doc = {
                "sensor": "application_usage",
                "samples": [{"t": generators._iso(t_s), "apps": usage}],
            }
        elif sensor in IMU_SENSORS:
            window = self._imu_window_s(sensor)
            if self._still_verdict(tick_index, t_s, window) == "PAUSE":
                return None
            rng = _stream(
                self.scenario.seed, self.index, _SENSOR_CODES[sensor], tick_index
            )
            samples = generators.generate_imu(
                sensor,
                self._sensor_cadence(sensor),
                t_s - window,
                window,
                self.motion_state(t_s - window),
                rng,
            )
            doc = {"sensor": sensor, "samples": samples}
        else:
            raise KeyError(sensor)

        payload = _canonical(doc)
        batch_id = str(
            uuid.UUID(
                bytes=_stream(
                    self.scenario.seed, self.index, _SENSOR_CODES[sensor], tick_index, 7
                ).bytes(16),
                version=4,
            )
        )
        return BufferedBatch(
            sensor=sensor,
            batch_id=batch_id,
            created_at_s=t_s,
            payload=payload,
            md5_hex=hashlib.md5(payload).hexdigest(),
        )

    def _imu_window_s(self, sensor: str) -> float:
        return min(IMU_WINDOW_S, IMU_MAX_SAMPLES / self._sensor_cadence(sensor))

    def _still_verdict(self, tick_index: int, t_s: float, window: float) -> str:
        """Still detection from the accelerometer stream; one verdict pauses
        all IMU batches for the window."""
        rate = (
            self._sensor_cadence("accelerometer")
            if "accelerometer" in self.chosen_sensors()
            else 50.0
        )
        rng = _stream(self.scenario.seed, self.index, _SENSOR_CODES["accelerometer"], tick_index)
        probe = generators.generate_imu(
            "accelerometer", rate, t_s - window, window, self.motion_state(t_s - window), rng
        )
        return generators.still_gate(probe)

    def batch_meta(self, batch: BufferedBatch) -> dict:
        return {
            "study_id": self.config["study_id"],
            "token_id": self.token_id,
            "device_id": self.device_id,
            "sensor": batch.sensor,
            "batch_id": batch.batch_id,
            "created_at": datetime.fromtimestamp(batch.created_at_s, tz=timezone.utc).isoformat(),
            "md5_hex": batch.md5_hex,
        }
