# cython: language_level=3
"""Compiled hot loops.

Every function here has a line-for-line twin in ``_fallback.py``; the two
must stay in sync (``tests/test_kernels.py`` compares them).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite, sqrt, fmin, fmax

cnp.import_array()

cdef enum:
    NDIM = 6


cdef inline void _field(const double* y, double source, double sign, double* out) noexcept nogil:
    cdef double a = y[0], b = y[1], x = y[2]
    cdef double pa = y[3], pb = y[4], px = y[5]
    cdef double r2 = a * a + b * b
    cdef double d2 = a * a - b * b
    cdef double dp = pa * pa - pb * pb
    out[0] = sign * (-0.5 * d2 * pa - a * (b * pb - 0.5))
    out[1] = sign * (0.5 * d2 * pb - b * (a * pa - 0.5))
    out[2] = sign * (-2.0 * x * r2 * px)
    out[3] = sign * (0.5 * a * dp + pa * (b * pb - 0.5) + 2.0 * a * source)
    out[4] = sign * (-0.5 * b * dp + pb * (a * pa - 0.5) + 2.0 * b * source)
    out[5] = sign * (r2 * px * px)


cdef inline void _rk4_step(const double* y, double h, double source, double sign,
                           double* out) noexcept nogil:
    cdef double k1[NDIM]
    cdef double k2[NDIM]
    cdef double k3[NDIM]
    cdef double k4[NDIM]
    cdef double tmp[NDIM]
    cdef int i
    _field(y, source, sign, k1)
    for i in range(NDIM):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    _field(tmp, source, sign, k2)
    for i in range(NDIM):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    _field(tmp, source, sign, k3)
    for i in range(NDIM):
        tmp[i] = y[i] + h * k3[i]
    _field(tmp, source, sign, k4)
    for i in range(NDIM):
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def rk4_trajectory(double[::1] y0, double source, double h, double u_max,
                   double eps_blow, double sign, Py_ssize_t capacity):
    """Fixed-step RK4 with step halving near a p_x blow-up.

    Returns ``(u, y, status)`` where status is 0 completed, 1 blew up,
    2 non-finite state, 3 sample buffer exhausted.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] us = np.empty(capacity, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ys = np.empty((capacity, NDIM), dtype=np.float64)
    cdef double[::1] uv = us
    cdef double[:, ::1] yv = ys
    cdef double y[NDIM]
    cdef double ynew[NDIM]
    cdef double f[NDIM]
    cdef double u = 0.0, hc, unew
    cdef double px_cap = 1.0 / eps_blow
    cdef Py_ssize_t n = 1, k = 0
    cdef bint on_grid = True
    cdef int i, status = 0

    for i in range(NDIM):
        y[i] = y0[i]
        yv[0, i] = y[i]
    uv[0] = 0.0

    with nogil:
        while True:
            if u_max - u <= 1e-12 * h:
                status = 0
                break
            if n >= capacity:
                status = 3
                break
            hc = fmin(h, u_max - u)
            _field(y, source, sign, f)
            while fabs(f[5]) * hc > 0.1 * fabs(y[5]) and hc > 1e-14 * fmax(1.0, u):
                hc = 0.5 * hc
            if hc <= 1e-14 * fmax(1.0, u):
                status = 1
                break
            _rk4_step(y, hc, source, sign, ynew)
            for i in range(NDIM):
                if not isfinite(ynew[i]):
                    status = 2
                    break
            if status == 2:
                break
            if on_grid and hc == h:
                k += 1
                unew = k * h
            else:
                on_grid = False
                unew = u + hc
            u = unew
            uv[n] = u
            for i in range(NDIM):
                y[i] = ynew[i]
                yv[n, i] = y[i]
            n += 1
            if fabs(y[5]) > px_cap:
                status = 1
                break

    return us[:n].copy(), ys[:n].copy(), status


def winding_numbers(double[::1] px, double[::1] py, double[::1] qx, double[::1] qy):
    """Winding number of the closed polygon (px, py) around each query point."""
    cdef Py_ssize_t m = px.shape[0], nq = qx.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(nq, dtype=np.int64)
    cdef cnp.int64_t[::1] ov = out
    cdef Py_ssize_t q, i, j
    cdef double x, y, x0, y0, x1, y1, side
    cdef long w
    with nogil:
        for q in range(nq):
            x = qx[q]
            y = qy[q]
            w = 0
            for i in range(m):
                j = i + 1
                if j == m:
                    j = 0
                x0 = px[i]
                y0 = py[i]
                x1 = px[j]
                y1 = py[j]
                side = (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)
                if y0 <= y:
                    if y1 > y and side > 0:
                        w += 1
                elif y1 <= y and side < 0:
                    w -= 1
            ov[q] = w
    return out


def min_distances(double[::1] px, double[::1] py, double[::1] qx, double[::1] qy):
    """Euclidean distance from each query point to the closed polyline."""
    cdef Py_ssize_t m = px.shape[0], nq = qx.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nq, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t q, i, j
    cdef double x, y, x0, y0, dx, dy, len2, s, ex, ey, d2, best
    with nogil:
        for q in range(nq):
            x = qx[q]
            y = qy[q]
            best = 1e308
            for i in range(m):
                j = i + 1
                if j == m:
                    j = 0
                x0 = px[i]
                y0 = py[i]
                dx = px[j] - x0
                dy = py[j] - y0
                len2 = dx * dx + dy * dy
                if len2 > 0:
                    s = ((x - x0) * dx + (y - y0) * dy) / len2
                    s = fmin(1.0, fmax(0.0, s))
                else:
                    s = 0.0
                ex = x0 + s * dx - x
                ey = y0 + s * dy - y
                d2 = ex * ex + ey * ey
                if d2 < best:
                    best = d2
            ov[q] = sqrt(best)
    return out


cdef inline double _orient(double ax, double ay, double bx, double by,
                           double cx, double cy) noexcept nogil:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def count_self_intersections(double[::1] px, double[::1] py):
    """Number of crossing pairs of non-adjacent edges of a closed polygon."""
    cdef Py_ssize_t m = px.shape[0]
    cdef Py_ssize_t i, j, i1, j1
    cdef long count = 0
    cdef double ax, ay, bx, by, cx, cy, dx, dy
    cdef double d1, d2, d3, d4
    with nogil:
        for i in range(m):
            i1 = i + 1
            if i1 == m:
                i1 = 0
            ax = px[i]
            ay = py[i]
            bx = px[i1]
            by = py[i1]
            for j in range(i + 2, m):
                if i == 0 and j == m - 1:
                    continue
                j1 = j + 1
                if j1 == m:
                    j1 = 0
                cx = px[j]
                cy = py[j]
                dx = px[j1]
                dy = py[j1]
                if fmax(ax, bx) < fmin(cx, dx) or fmax(cx, dx) < fmin(ax, bx):
                    continue
                if fmax(ay, by) < fmin(cy, dy) or fmax(cy, dy) < fmin(ay, by):
                    continue
                d1 = _orient(ax, ay, bx, by, cx, cy)
                d2 = _orient(ax, ay, bx, by, dx, dy)
                d3 = _orient(cx, cy, dx, dy, ax, ay)
                d4 = _orient(cx, cy, dx, dy, bx, by)
                if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
                        ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
                    count += 1
    return count
