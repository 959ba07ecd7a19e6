"""Hot kernels, compiled when possible.

``BACKEND`` is ``"cython"`` when the extension built, ``"python"`` otherwise.
Set ``FREEBROWN_PURE=1`` to force the fallback even if the extension exists.
"""
import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("FREEBROWN_PURE"):
        raise ImportError("pure-Python backend requested")
    from . import _core as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _fallback
    BACKEND = "python"


def backends():
    """Available kernel implementations keyed by name."""
    out = {"python": _fallback}
    try:
        from . import _core

        out["cython"] = _core
    except ImportError:
        pass
    return out


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def rk4_trajectory(y0, source, h, u_max, eps_blow, sign=1.0, capacity=None, impl=None):
    impl = impl or _impl
    if capacity is None:
        capacity = int(np.ceil(u_max / h)) + 4096
    while True:
        u, y, status = impl.rk4_trajectory(
            _f64(y0), float(source), float(h), float(u_max), float(eps_blow), float(sign), int(capacity)
        )
        if status != 3:
            return u, y, status
        capacity *= 4


def winding_numbers(points, qpoints, impl=None):
    impl = impl or _impl
    points = np.asarray(points, dtype=complex)
    q = np.atleast_1d(np.asarray(qpoints, dtype=complex))
    return impl.winding_numbers(_f64(points.real), _f64(points.imag), _f64(q.real), _f64(q.imag))


def min_distances(points, qpoints, impl=None):
    impl = impl or _impl
    points = np.asarray(points, dtype=complex)
    q = np.atleast_1d(np.asarray(qpoints, dtype=complex))
    return impl.min_distances(_f64(points.real), _f64(points.imag), _f64(q.real), _f64(q.imag))


def count_self_intersections(points, impl=None):
    impl = impl or _impl
    points = np.asarray(points, dtype=complex)
    return int(impl.count_self_intersections(_f64(points.real), _f64(points.imag)))
