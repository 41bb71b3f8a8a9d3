"""Numpy implementation of the geodesy hot kernel.

Same array contract as the compiled kernel in ``_ckernel.pyx``; the two are
interchangeable and ``fieldmon.geo.kernel`` picks one at import time.

WGS-84 ellipsoid: semi-major axis a, flattening f = 1/298.257223563,
first eccentricity squared e2 = f(2-f).

Forward:  X = (N+h) cos(lat) cos(lon)
          Y = (N+h) cos(lat) sin(lon)
          Z = (N(1-e2)+h) sin(lat)         N = a / sqrt(1 - e2 sin^2(lat))

Inverse: fixed-point iteration on geodetic latitude, |dlat| < 1e-12 rad,
capped at 100 steps. Points on the polar axis get longitude 0 by convention.
"""

import numpy as np

IMPL = "python"

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)
WGS84_B = WGS84_A * (1.0 - WGS84_F)

LAT_TOL_RAD = 1e-12
MAX_ITER = 100
_POLE_EPS = 1e-9  # axial distance below which longitude is undefined


def forward(lat_deg, lon_deg, alt_m, out_x, out_y, out_z):
    """Geodetic -> ECEF for 1-D float64 arrays; writes into the out arrays."""
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    sin_lat = np.sin(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    cos_lat = np.cos(lat)
    np.multiply((n + alt_m) * cos_lat, np.cos(lon), out=out_x)
    np.multiply((n + alt_m) * cos_lat, np.sin(lon), out=out_y)
    np.multiply(n * (1.0 - WGS84_E2) + alt_m, sin_lat, out=out_z)


def inverse(x, y, z, out_lat, out_lon, out_alt):
    """ECEF -> geodetic for 1-D float64 arrays.

    Returns the number of iterations used, or -1 if any element failed to
    converge within MAX_ITER.
    """
    p = np.hypot(x, y)
    on_axis = p < _POLE_EPS

    lon = np.arctan2(y, x)
    lon[on_axis] = 0.0

    phi = np.arctan2(z, p * (1.0 - WGS84_E2))
    h = np.zeros_like(phi)
    iterations = 0
    converged = False
    for it in range(1, MAX_ITER + 1):
        sin_phi = np.sin(phi)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_phi * sin_phi)
        cos_phi = np.cos(phi)
        # near the poles p/cos(phi) is ill-conditioned; use the z route there
        polar = np.abs(phi) > 0.25 * np.pi
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(polar, z / sin_phi - n * (1.0 - WGS84_E2), p / cos_phi - n)
        phi_new = np.arctan2(z, p * (1.0 - WGS84_E2 * n / (n + h)))
        delta = np.max(np.abs(phi_new - phi))
        phi = phi_new
        iterations = it
        if delta < LAT_TOL_RAD:
            converged = True
            break
    if not converged:
        return -1

    # final altitude from the converged latitude
    sin_phi = np.sin(phi)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_phi * sin_phi)
    cos_phi = np.cos(phi)
    polar = np.abs(phi) > 0.25 * np.pi
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(polar, z / sin_phi - n * (1.0 - WGS84_E2), p / cos_phi - n)

    phi = np.where(on_axis, np.copysign(0.5 * np.pi, z), phi)
    h = np.where(on_axis, np.abs(z) - WGS84_B, h)

    np.degrees(phi, out=out_lat)
    np.degrees(lon, out=out_lon)
    out_alt[:] = h
    # keep longitude in (-180, 180]
    out_lon[out_lon <= -180.0] += 360.0
    return iterations
