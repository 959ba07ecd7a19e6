"""Pure-Python twins of the compiled kernels in ``_core.pyx``.

The RK4 loop works on plain floats (faster than numpy for a 6-vector); the
polygon kernels are vectorised with numpy over chunks of query points.
"""
import math

import numpy as np

_CHUNK = 512


def _field(y, source, sign):
    a, b, x, pa, pb, px = y
    r2 = a * a + b * b
    d2 = a * a - b * b
    dp = pa * pa - pb * pb
    return (
        sign * (-0.5 * d2 * pa - a * (b * pb - 0.5)),
        sign * (0.5 * d2 * pb - b * (a * pa - 0.5)),
        sign * (-2.0 * x * r2 * px),
        sign * (0.5 * a * dp + pa * (b * pb - 0.5) + 2.0 * a * source),
        sign * (-0.5 * b * dp + pb * (a * pa - 0.5) + 2.0 * b * source),
        sign * (r2 * px * px),
    )


def _rk4_step(y, h, source, sign):
    k1 = _field(y, source, sign)
    k2 = _field([y[i] + 0.5 * h * k1[i] for i in range(6)], source, sign)
    k3 = _field([y[i] + 0.5 * h * k2[i] for i in range(6)], source, sign)
    k4 = _field([y[i] + h * k3[i] for i in range(6)], source, sign)
    return [y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(6)]


def rk4_trajectory(y0, source, h, u_max, eps_blow, sign, capacity):
    y = [float(v) for v in y0]
    us = [0.0]
    ys = [list(y)]
    u = 0.0
    k = 0
    on_grid = True
    px_cap = 1.0 / eps_blow
    status = 0
    while True:
        if u_max - u <= 1e-12 * h:
            status = 0
            break
        if len(us) >= capacity:
            status = 3
            break
        hc = min(h, u_max - u)
        f = _field(y, source, sign)
        floor = 1e-14 * max(1.0, u)
        while abs(f[5]) * hc > 0.1 * abs(y[5]) and hc > floor:
            hc = 0.5 * hc
        if hc <= floor:
            status = 1
            break
        ynew = _rk4_step(y, hc, source, sign)
        if not all(math.isfinite(v) for v in ynew):
            status = 2
            break
        if on_grid and hc == h:
            k += 1
            u = k * h
        else:
            on_grid = False
            u = u + hc
        y = ynew
        us.append(u)
        ys.append(list(y))
        if abs(y[5]) > px_cap:
            status = 1
            break
    return np.array(us), np.array(ys).reshape(-1, 6), status


def winding_numbers(px, py, qx, qy):
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    x0, y0 = px, py
    x1, y1 = np.roll(px, -1), np.roll(py, -1)
    qx = np.asarray(qx, dtype=float)
    qy = np.asarray(qy, dtype=float)
    out = np.zeros(qx.size, dtype=np.int64)
    for s in range(0, qx.size, _CHUNK):
        x = qx[s:s + _CHUNK, None]
        y = qy[s:s + _CHUNK, None]
        side = (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)
        up = (y0 <= y) & (y1 > y) & (side > 0)
        down = (y0 > y) & (y1 <= y) & (side < 0)
        out[s:s + _CHUNK] = up.sum(axis=1) - down.sum(axis=1)
    return out


def min_distances(px, py, qx, qy):
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    dx = np.roll(px, -1) - px
    dy = np.roll(py, -1) - py
    len2 = dx * dx + dy * dy
    safe = np.where(len2 > 0, len2, 1.0)
    qx = np.asarray(qx, dtype=float)
    qy = np.asarray(qy, dtype=float)
    out = np.empty(qx.size)
    for s in range(0, qx.size, _CHUNK):
        x = qx[s:s + _CHUNK, None]
        y = qy[s:s + _CHUNK, None]
        t = np.where(len2 > 0, ((x - px) * dx + (y - py) * dy) / safe, 0.0)
        t = np.clip(t, 0.0, 1.0)
        ex = px + t * dx - x
        ey = py + t * dy - y
        out[s:s + _CHUNK] = np.sqrt((ex * ex + ey * ey).min(axis=1))
    return out


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def count_self_intersections(px, py):
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    m = px.size
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    count = 0
    for i in range(m):
        j = np.arange(i + 2, m)
        if i == 0:
            j = j[j != m - 1]
        if j.size == 0:
            continue
        ax, ay, bx, by = px[i], py[i], qx[i], qy[i]
        cx, cy, dx, dy = px[j], py[j], qx[j], qy[j]
        box = ~(
            (max(ax, bx) < np.minimum(cx, dx))
            | (np.maximum(cx, dx) < min(ax, bx))
            | (max(ay, by) < np.minimum(cy, dy))
            | (np.maximum(cy, dy) < min(ay, by))
        )
        d1 = _orient(ax, ay, bx, by, cx, cy)
        d2 = _orient(ax, ay, bx, by, dx, dy)
        d3 = _orient(cx, cy, dx, dy, ax, ay)
        d4 = _orient(cx, cy, dx, dy, bx, by)
        cross = (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0))) & (
            ((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0))
        )
        count += int(np.count_nonzero(box & cross))
    return count
