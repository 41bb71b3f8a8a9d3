# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled geodesy hot kernel: tight scalar loops over typed memoryviews.

Array contract mirrors _pykernel.py exactly; see that module for the
formulas and conventions. No -ffast-math: results must track the numpy
kernel to float64 rounding.
"""

from libc.math cimport sin, cos, sqrt, atan, atan2, hypot, fabs, copysign

IMPL = "compiled"

cdef double A = 6378137.0
cdef double F = 1.0 / 298.257223563
cdef double E2 = F * (2.0 - F)
cdef double B = A * (1.0 - F)
cdef double DEG = 0.017453292519943295  # pi/180
cdef double PI = 3.141592653589793
cdef double LAT_TOL = 1e-12
cdef int MAX_IT = 100
cdef double POLE_EPS = 1e-9

WGS84_A = A
WGS84_F = F
WGS84_E2 = E2
WGS84_B = B
LAT_TOL_RAD = LAT_TOL
MAX_ITER = MAX_IT


def forward(double[::1] lat_deg, double[::1] lon_deg, double[::1] alt_m,
            double[::1] out_x, double[::1] out_y, double[::1] out_z):
    cdef Py_ssize_t i, n = lat_deg.shape[0]
    cdef double lat, lon, s, c, nn
    for i in range(n):
        lat = lat_deg[i] * DEG
        lon = lon_deg[i] * DEG
        s = sin(lat)
        c = cos(lat)
        nn = A / sqrt(1.0 - E2 * s * s)
        out_x[i] = (nn + alt_m[i]) * c * cos(lon)
        out_y[i] = (nn + alt_m[i]) * c * sin(lon)
        out_z[i] = (nn * (1.0 - E2) + alt_m[i]) * s


def inverse(double[::1] x, double[::1] y, double[::1] z,
            double[::1] out_lat, double[::1] out_lon, double[::1] out_alt):
    # Same fixed-point map as the numpy kernel, iterated on tan(lat) so each
    # step costs two sqrts instead of sin+cos+atan2. |d tan| / (1 + tan^2)
    # equals |d lat| to first order, so the stop rule matches.
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double p, t, t_new, s, c, inv_r, nn, h, s2
    cdef int it, worst = 0
    cdef bint ok
    for i in range(n):
        p = hypot(x[i], y[i])
        if p < POLE_EPS:
            out_lat[i] = copysign(90.0, z[i])
            out_lon[i] = 0.0
            out_alt[i] = fabs(z[i]) - B
            continue
        t = z[i] / (p * (1.0 - E2))
        ok = False
        h = 0.0
        for it in range(1, MAX_IT + 1):
            s2 = t * t
            inv_r = 1.0 / sqrt(1.0 + s2)
            s = t * inv_r
            c = inv_r
            nn = A / sqrt(1.0 - E2 * s * s)
            if fabs(t) > 1.0:
                h = z[i] / s - nn * (1.0 - E2)
            else:
                h = p / c - nn
            t_new = z[i] / (p * (1.0 - E2 * nn / (nn + h)))
            if fabs(t_new - t) / (1.0 + s2) < LAT_TOL:
                t = t_new
                ok = True
                break
            t = t_new
        if not ok:
            return -1
        if it > worst:
            worst = it
        s2 = t * t
        inv_r = 1.0 / sqrt(1.0 + s2)
        s = t * inv_r
        c = inv_r
        nn = A / sqrt(1.0 - E2 * s * s)
        if fabs(t) > 1.0:
            h = z[i] / s - nn * (1.0 - E2)
        else:
            h = p / c - nn
        out_lat[i] = atan(t) / DEG
        out_lon[i] = atan2(y[i], x[i]) / DEG
        if out_lon[i] <= -180.0:
            out_lon[i] += 360.0
        out_alt[i] = h
    return worst
