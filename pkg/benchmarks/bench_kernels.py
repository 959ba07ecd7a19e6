"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""
import argparse
import json
import time

import numpy as np

from freebrown import _kernels
from freebrown import hamiltonian as ham
from freebrown import region
from freebrown.spectral import InitialData, projection_measure


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    p = ham.initial_point(projection_measure(0.5), InitialData(2.0, 0.5))
    y0, src = p.as_array(), ham.source_term(p)
    curve = region.boundary_omega(1.0, 0.5, 2048).points
    rng = np.random.default_rng(0)
    q = rng.uniform(-1, 1, 2000) + 1j * rng.uniform(-1, 1, 2000)
    return {
        "rk4_trajectory (u in [0, 0.9], h=1e-3)": lambda impl: _kernels.rk4_trajectory(y0, src, 1e-3, 0.9, 1e-10, impl=impl),
        "winding_numbers (2048 x 2000)": lambda impl: _kernels.winding_numbers(curve, q, impl=impl),
        "min_distances (2048 x 2000)": lambda impl: _kernels.min_distances(curve, q, impl=impl),
        "count_self_intersections (2048)": lambda impl: _kernels.count_self_intersections(curve, impl=impl),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()
    backends = _kernels.backends()
    rows = []
    for name, fn in cases().items():
        row = {"kernel": name}
        for b, impl in backends.items():
            row[b] = best_of(lambda: fn(impl), args.repeat)
        rows.append(row)
    names = list(backends)
    print(f"{'kernel':42s}" + "".join(f"{b:>12s}" for b in names) + ("    speedup" if len(names) > 1 else ""))
    for row in rows:
        line = f"{row['kernel']:42s}" + "".join(f"{row[b]:11.4f}s" for b in names)
        if "cython" in row:
            line += f"  {row['python'] / row['cython']:8.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
