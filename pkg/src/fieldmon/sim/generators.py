"""Synthetic sensor data generators.

Everything is driven by numpy Generators that callers seed; nothing here
touches wall clocks or global RNG state, so traces are reproducible and
independent of scheduling.
"""

import math
from datetime import datetime, timezone

import numpy as np

from ..errors import InvalidSpec
from ..geo import AnonymizationKey, LocationSample, Wgs84Point, anonymize_arrays
from ..registry import IMU_SENSORS

GRAVITY = 9.81
REST_NOISE_STD = 0.02        # m/s^2 per axis at rest
WALK_FREQ_HZ = 2.0
WALK_AMPLITUDE = 2.0         # m/s^2 sinusoid while walking
STILL_STD_THRESHOLD = 0.05   # below this the phone counts as motionless
STILL_WINDOW_S = 30.0

HAR_CLASSES = ("walking", "running", "still", "on_bicycle", "on_vehicle", "tilting")
HAR_SELF_TRANSITION = 0.8
CONFIDENCE_MEAN = 85.0
CONFIDENCE_STD = 5.0

# median fused-positioning error in meters; Rayleigh median = sigma*sqrt(ln 4)
ACCURACY_MEDIAN_M = 14.0
ACCURACY_SIGMA = ACCURACY_MEDIAN_M / math.sqrt(math.log(4.0))

DEFAULT_APP_CATALOG = (
    "phone_calls",
    "sms",
    "browser",
    "maps",
    "camera",
    "mail",
    "games",
)


def _iso(t_s: float) -> str:
    return datetime.fromtimestamp(round(t_s, 6), tz=timezone.utc).isoformat()


def generate_imu(sensor: str, rate_hz: float, t0_s: float, duration_s: float,
                 motion_state: str, rng: np.random.Generator) -> list[dict]:
    """Triaxial samples at the requested rate over [t0, t0+duration)."""
    if sensor not in IMU_SENSORS:
        raise InvalidSpec(f"{sensor} is not an IMU-class sensor")
    if not 1.0 <= rate_hz <= 200.0:
        raise InvalidSpec(f"rate {rate_hz} Hz outside [1, 200]")
    n = int(round(duration_s * rate_hz))
    t = t0_s + np.arange(n) / rate_hz
    noise = rng.normal(0.0, REST_NOISE_STD, (3, n))

    if sensor in ("accelerometer", "gravity_sensor"):
        x, y, z = noise[0], noise[1], GRAVITY + noise[2]
    else:  # gyroscope, linear_acceleration rest near zero
        x, y, z = noise[0], noise[1], noise[2]

    if motion_state == "walking" and sensor != "gravity_sensor":
        phase = rng.uniform(0.0, 2.0 * np.pi)
        swing = WALK_AMPLITUDE if sensor != "gyroscope" else 1.0
        wave = swing * np.sin(2.0 * np.pi * WALK_FREQ_HZ * (t - t0_s) + phase)
        x = x + wave
        z = z + 0.5 * swing * np.sin(2.0 * np.pi * WALK_FREQ_HZ * (t - t0_s) + phase + 0.7)

    return [
        {"t": _iso(ti), "x": float(xi), "y": float(yi), "z": float(zi)}
        for ti, xi, yi, zi in zip(t, x, y, z)
    ]


def still_gate(samples: list[dict], window_s: float = STILL_WINDOW_S) -> str:
    """RECORD or PAUSE from the trailing accelerometer window.

    PAUSE iff the standard deviation of the magnitude over the trailing
    window is strictly below the threshold.
    """
    if not samples:
        raise InvalidSpec("still gate needs at least one sample")
    t_last = samples[-1]["t"]
    cutoff = datetime.fromisoformat(t_last).timestamp() - window_s
    mags = np.array(
        [
            math.sqrt(s["x"] ** 2 + s["y"] ** 2 + s["z"] ** 2)
            for s in samples
            if datetime.fromisoformat(s["t"]).timestamp() >= cutoff
        ]
    )
    return "PAUSE" if float(mags.std()) < STILL_STD_THRESHOLD else "RECORD"


def random_walk_positions(home: Wgs84Point, n: int, rng: np.random.Generator,
                          step_std_m: float = 40.0) -> np.ndarray:
    """True positions: a bounded random walk around home, (n, 3) lat/lon/alt."""
    steps = rng.normal(0.0, step_std_m, (n, 2))
    offsets = np.cumsum(steps, axis=0)
    # soft-bound the walk to a few km so traces stay neighborhood-scale
    offsets = 3000.0 * np.tanh(offsets / 3000.0)
    lat_rad = math.radians(home.latitude_deg)
    dlat = offsets[:, 1] / 111194.9266
    dlon = offsets[:, 0] / (111194.9266 * max(math.cos(lat_rad), 1e-6))
    lat = home.latitude_deg + dlat
    lon = home.longitude_deg + dlon
    alt = np.full(n, home.altitude_m)
    return np.column_stack([lat, lon, alt])


def measurement_errors(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(error distance m, bearing rad): fused-positioning noise, Rayleigh
    with median ACCURACY_MEDIAN_M."""
    r = rng.rayleigh(ACCURACY_SIGMA, n)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    return r, theta


def generate_location(home: Wgs84Point, cadence_s: float, t0_s: float, duration_s: float,
                      key: AnonymizationKey, rng: np.random.Generator):
    """Location samples at the cadence, anonymized before buffering.

    Returns (true_samples, anon_samples); the true trace never leaves the
    device and exists here only so tests can verify the privacy transform.
    """
    if cadence_s < 60.0:
        raise InvalidSpec(f"location cadence {cadence_s} below 60 s")
    n = int(duration_s / cadence_s + 1e-9)
    ticks = t0_s + cadence_s * np.arange(1, n + 1)
    positions = random_walk_positions(home, n, rng)
    err_m, bearing = measurement_errors(n, rng)

    lat = positions[:, 0] + (err_m * np.cos(bearing)) / 111194.9266
    lon = positions[:, 1] + (err_m * np.sin(bearing)) / (
        111194.9266 * np.maximum(np.cos(np.radians(positions[:, 0])), 1e-6)
    )
    alt = positions[:, 2]
    anon_lat, anon_lon, anon_alt = anonymize_arrays(lat, lon, alt, key)

    true_samples = []
    anon_samples = []
    for i, t in enumerate(ticks):
        measured = Wgs84Point(float(lat[i]), float(lon[i]), float(alt[i]))
        accuracy = float(err_m[i])
        true_samples.append(
            LocationSample(datetime.fromtimestamp(t, tz=timezone.utc), measured, accuracy)
        )
        anon_samples.append(
            {
                "t": _iso(t),
                "lat": float(anon_lat[i]),
                "lon": float(anon_lon[i]),
                "alt": float(anon_alt[i]),
                "accuracy_m": accuracy,
            }
        )
    return true_samples, anon_samples


def har_transition_matrix() -> np.ndarray:
    k = len(HAR_CLASSES)
    off = (1.0 - HAR_SELF_TRANSITION) / (k - 1)
    m = np.full((k, k), off)
    np.fill_diagonal(m, HAR_SELF_TRANSITION)
    return m


def generate_har(cadence_s: float, t0_s: float, duration_s: float,
                 rng: np.random.Generator) -> list[dict]:
    """One activity event per cadence tick: label from the six-class chain
    plus an integer confidence in [0, 100]."""
    if cadence_s < 60.0:
        raise InvalidSpec(f"activity cadence {cadence_s} below 60 s")
    n = int(duration_s / cadence_s + 1e-9)
    ticks = t0_s + cadence_s * np.arange(1, n + 1)
    k = len(HAR_CLASSES)
    state = int(rng.integers(k))
    events = []
    for t in ticks:
        if rng.random() >= HAR_SELF_TRANSITION:
            others = [s for s in range(k) if s != state]
            state = others[int(rng.integers(k - 1))]
        confidence = int(np.clip(round(rng.normal(CONFIDENCE_MEAN, CONFIDENCE_STD)), 0, 100))
        events.append({"t": _iso(t), "label": HAR_CLASSES[state], "confidence": confidence})
    return events


class AppUsageDay:
    """One simulated day of foreground app usage.

    A single app is in the foreground at a time; snapshots report per-app
    cumulative foreground seconds since that day's midnight, so counters
    are intra-day monotone, reset at midnight, and sum to at most the
    elapsed seconds.
    """

    def __init__(self, midnight_s: float, rng: np.random.Generator,
                 catalog: tuple[str, ...] = DEFAULT_APP_CATALOG):
        if "phone_calls" not in catalog or "sms" not in catalog:
            raise InvalidSpec("catalog must include the phone_calls and sms pseudo-apps")
        self.midnight_s = midnight_s
        self.catalog = catalog
        self.sessions: list[tuple[float, float, str]] = []  # (start, end offsets, app)
        t = float(rng.uniform(4 * 3600, 9 * 3600))  # first pickup
        while t < 86400.0:
            app = catalog[int(rng.integers(len(catalog)))]
            length = float(rng.exponential(240.0)) + 10.0
            end = min(t + length, 86400.0)
            self.sessions.append((t, end, app))
            t = end + float(rng.exponential(1800.0)) + 30.0

    def snapshot(self, at_s: float) -> dict[str, int]:
        """Per-app cumulative foreground seconds at an absolute instant."""
        offset = at_s - self.midnight_s
        if not 0 <= offset <= 86400.0:
            raise InvalidSpec("snapshot instant outside this day")
        totals = {app: 0.0 for app in self.catalog}
        for start, end, app in self.sessions:
            if start >= offset:
                break
            totals[app] += min(end, offset) - start
        return {app: int(v) for app, v in totals.items()}
