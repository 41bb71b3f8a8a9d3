"""Geolocation privacy transform and trajectory summaries.

The anonymization scheme: convert a geodetic point to earth-centered
Cartesian coordinates, apply a per-device secret rotation (uniform random
over all 3-D rotations, derived deterministically from a 128-bit seed),
and convert back. Rotations are isometries of chord distance, so all
relative geometry of a trace survives while the absolute position moves to
an unrecoverable place on the globe.

A pure rotation leaves points slightly off the ellipsoid (it is only
symmetric about its polar axis); the resulting altitude perturbation is
accepted since downstream features use horizontal geometry only.
"""

from dataclasses import dataclass, field
from datetime import datetime
import math

import numpy as np

from .kernel import ACTIVE_IMPL, available, forward, inverse
from ._pykernel import LAT_TOL_RAD, MAX_ITER, WGS84_A, WGS84_B, WGS84_E2, WGS84_F

EARTH_MEAN_RADIUS_M = 6371000.0

__all__ = [
    "ACTIVE_IMPL",
    "AnonymizationKey",
    "EcefPoint",
    "LocationSample",
    "NonConvergence",
    "Wgs84Point",
    "anonymize_arrays",
    "anonymize_point",
    "derive_key",
    "ecef_to_wgs84",
    "ecef_to_wgs84_arrays",
    "haversine_m",
    "travelled_distance",
    "wgs84_to_ecef",
    "wgs84_to_ecef_arrays",
]


class NonConvergence(Exception):
    """Inverse conversion did not converge; signals degenerate input."""


@dataclass(frozen=True)
class Wgs84Point:
    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0

    def __post_init__(self):
        lat, lon, alt = self.latitude_deg, self.longitude_deg, self.altitude_m
        if not (math.isfinite(lat) and math.isfinite(lon) and math.isfinite(alt)):
            raise ValueError("coordinates must be finite")
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        if not -180.0 < lon <= 180.0:
            raise ValueError(f"longitude {lon} outside (-180, 180]")


@dataclass(frozen=True)
class EcefPoint:
    x_m: float
    y_m: float
    z_m: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x_m, self.y_m, self.z_m))):
            raise ValueError("coordinates must be finite")

    def norm(self) -> float:
        return math.sqrt(self.x_m**2 + self.y_m**2 + self.z_m**2)


@dataclass(frozen=True, eq=False)
class AnonymizationKey:
    """Per-device secret: a 128-bit seed and the rotation it determines."""

    seed: bytes
    rotation: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.seed) != 16:
            raise ValueError("seed must be 16 bytes")
        self.rotation.setflags(write=False)


@dataclass(frozen=True)
class LocationSample:
    timestamp: datetime
    point: Wgs84Point
    accuracy_m: float

    def __post_init__(self):
        if self.accuracy_m < 0:
            raise ValueError("accuracy must be >= 0")


def wgs84_to_ecef(p: Wgs84Point) -> EcefPoint:
    """Standard WGS-84 geodetic to earth-centered Cartesian conversion."""
    x, y, z = wgs84_to_ecef_arrays(
        np.array([p.latitude_deg]), np.array([p.longitude_deg]), np.array([p.altitude_m])
    )
    return EcefPoint(float(x[0]), float(y[0]), float(z[0]))


def ecef_to_wgs84(c: EcefPoint) -> Wgs84Point:
    """Inverse conversion via fixed-point latitude iteration.

    Raises NonConvergence for degenerate input (near the earth's center or
    when the iteration fails to settle within the step cap).
    """
    lat, lon, alt = ecef_to_wgs84_arrays(
        np.array([c.x_m]), np.array([c.y_m]), np.array([c.z_m])
    )
    return Wgs84Point(float(lat[0]), float(lon[0]), float(alt[0]))


def wgs84_to_ecef_arrays(lat_deg, lon_deg, alt_m):
    """Vectorized forward conversion over 1-D arrays."""
    lat_deg = np.ascontiguousarray(lat_deg, dtype=np.float64)
    lon_deg = np.ascontiguousarray(lon_deg, dtype=np.float64)
    alt_m = np.ascontiguousarray(alt_m, dtype=np.float64)
    x = np.empty_like(lat_deg)
    y = np.empty_like(lat_deg)
    z = np.empty_like(lat_deg)
    forward(lat_deg, lon_deg, alt_m, x, y, z)
    return x, y, z


def ecef_to_wgs84_arrays(x, y, z):
    """Vectorized inverse conversion over 1-D arrays."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    norms = np.sqrt(x * x + y * y + z * z)
    if np.any(norms <= 1e5):
        raise NonConvergence("point too close to the earth's center")
    lat = np.empty_like(x)
    lon = np.empty_like(x)
    alt = np.empty_like(x)
    if inverse(x, y, z, lat, lon, alt) < 0:
        raise NonConvergence(f"latitude iteration exceeded {MAX_ITER} steps")
    return lat, lon, alt


def derive_key(seed: bytes) -> AnonymizationKey:
    """Derive the secret rotation from a 128-bit seed, deterministically.

    Rotation = Rz(alpha) @ Ry(beta) @ Rz(gamma) with alpha, gamma uniform on
    [0, 2pi) and cos(beta) uniform on [-1, 1], drawn from a PRNG keyed by the
    seed. These marginals make the rotation Haar-uniform over SO(3).
    """
    if len(seed) != 16:
        raise ValueError("seed must be 16 bytes")
    rng = np.random.default_rng(int.from_bytes(seed, "big"))
    u = rng.random(3)
    alpha = 2.0 * np.pi * u[0]
    beta = np.arccos(2.0 * u[1] - 1.0)
    gamma = 2.0 * np.pi * u[2]
    rotation = _rot_z(alpha) @ _rot_y(beta) @ _rot_z(gamma)
    return AnonymizationKey(seed=seed, rotation=rotation)


def _rot_z(t: float) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(t: float) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def anonymize_point(p: Wgs84Point, key: AnonymizationKey) -> Wgs84Point:
    """Apply the secret rotation to one point; runs on the device before
    any sample is buffered for upload."""
    lat, lon, alt = anonymize_arrays(
        np.array([p.latitude_deg]), np.array([p.longitude_deg]), np.array([p.altitude_m]), key
    )
    return Wgs84Point(float(lat[0]), float(lon[0]), float(alt[0]))


def anonymize_arrays(lat_deg, lon_deg, alt_m, key: AnonymizationKey):
    """Vectorized anonymization: forward convert, rotate, convert back."""
    x, y, z = wgs84_to_ecef_arrays(lat_deg, lon_deg, alt_m)
    v = key.rotation @ np.vstack((x, y, z))
    return ecef_to_wgs84_arrays(v[0], v[1], v[2])


def haversine_m(lat1_deg, lon1_deg, lat2_deg, lon2_deg):
    """Great-circle distance on a sphere of mean radius 6371000 m."""
    lat1 = np.radians(lat1_deg)
    lat2 = np.radians(lat2_deg)
    dlat = lat2 - lat1
    dlon = np.radians(lon2_deg) - np.radians(lon1_deg)
    a = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    return EARTH_MEAN_RADIUS_M * 2.0 * np.arcsin(np.sqrt(a))


def travelled_distance(trace) -> float:
    """Sum of consecutive great-circle hops over an ordered trace.

    Accepts a sequence of Wgs84Point; empty and singleton traces travel 0 m.
    """
    if len(trace) < 2:
        return 0.0
    lat = np.array([p.latitude_deg for p in trace])
    lon = np.array([p.longitude_deg for p in trace])
    return float(np.sum(haversine_m(lat[:-1], lon[:-1], lat[1:], lon[1:])))
