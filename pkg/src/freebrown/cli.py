"""Command-line interface.

Every command writes its artifacts and a ``manifest.json`` into ``--out``.
``freebrown replay DIR/manifest.json --out NEW`` re-runs the recorded command
and compares the artifact hashes.

Exit codes: 0 ok, 1 invariant failure, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
import scipy.linalg

from . import __version__
from . import brown_eval as be
from . import checks
from . import closed_form as cf
from . import hamiltonian as ham
from . import region
from . import rmt
from ._kernels import BACKEND
from .defaults import MARGIN, SAMPLES, STEP
from .spectral import DomainError, InitialData, projection_measure

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
NUMERICAL_ERRORS = (
    ham.IntegrationError,
    region.BracketError,
    region.InverseError,
    rmt.RetractionError,
    np.linalg.LinAlgError,
    scipy.linalg.LinAlgError,
    FloatingPointError,
    ArithmeticError,
)
MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


def fmt(v) -> str:
    return "%.17g" % v


# -- manifest --------------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    parameters: list
    artifacts: list = field(default_factory=list)
    versions: dict = field(default_factory=dict)
    seed: int | None = None
    wall_time: float = 0.0

    def to_json(self) -> str:
        d = {
            "command": self.command,
            "parameters": self.parameters,
            "artifacts": self.artifacts,
            "versions": self.versions,
            "seed": self.seed,
            "wall_time": self.wall_time,
        }
        return json.dumps(d, indent=2) + "\n"

    @classmethod
    def load(cls, path) -> "RunManifest":
        d = json.loads(Path(path).read_text())
        return cls(d["command"], d["parameters"], d["artifacts"], d["versions"], d["seed"], d["wall_time"])


def versions() -> dict:
    return {
        "freebrown": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "backend": BACKEND,
    }


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- SVG ---------------------------------------------------------------------------

COLORS = {
    "sigma": "#1f77b4",
    "omega": "#d62728",
    "circle_1ma_a": "#7f7f7f",
    "gamma": "#2ca02c",
    "inv_gamma": "#9467bd",
}


def _svg_points(z):
    return " ".join("%.6f,%.6f" % (p.real, p.imag) for p in z)


def write_svg(path, curves, dots=()):
    """Polylines and dots in the fixed window [-3, 3]^2, imaginary axis up."""
    lines = [
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="-3 -3 6 6" width="600" height="600">',
        '<rect x="-3" y="-3" width="6" height="6" fill="white"/>',
        '<g transform="scale(1,-1)">',
        '<line x1="-3" y1="0" x2="3" y2="0" stroke="#cccccc" stroke-width="0.005"/>',
        '<line x1="0" y1="-3" x2="0" y2="3" stroke="#cccccc" stroke-width="0.005"/>',
    ]
    for z in dots:
        lines.append('<circle cx="%.6f" cy="%.6f" r="0.008" fill="black" fill-opacity="0.5"/>' % (z.real, z.imag))
    for name, z, closed in curves:
        tag = "polygon" if closed else "polyline"
        color = COLORS.get(name, "black")
        lines.append(
            f'<{tag} class="{name}" fill="none" stroke="{color}" stroke-width="0.012" points="{_svg_points(z)}"/>'
        )
    lines += ["</g>", "</svg>"]
    Path(path).write_text("\n".join(lines) + "\n")


# -- commands ------------------------------------------------------------------------

def _check_t_alpha(args):
    if not args.t > 0:
        raise UsageError("--t must be positive")
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")


def region_curves(t, alpha, samples):
    """(name, points, closed) for every curve of the region command."""
    sig = region.boundary_sigma(t, alpha, samples)
    om = region.boundary_omega(t, alpha, samples)
    gam = region.boundary_gamma(t, alpha, samples)
    circ = region.circle_points(alpha, samples)
    return [
        ("sigma", sig.points, sig.closed),
        ("omega", om.points, om.closed),
        ("circle_1ma_a", circ, True),
        ("gamma", gam.points, True),
        ("inv_gamma", 1 / np.conj(gam.points), True),
    ]


def cmd_region(args, out: Path):
    _check_t_alpha(args)
    if args.samples < 16:
        raise UsageError("--samples must be at least 16")
    curves = region_curves(args.t, args.alpha, args.samples)
    arts = []
    with open(out / "region.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve", "re", "im"])
        for name, z, _ in curves:
            for p in z:
                w.writerow([name, fmt(p.real), fmt(p.imag)])
    arts.append("region.csv")
    if args.format == "svg":
        write_svg(out / "region.svg", curves)
        arts.append("region.svg")
    return arts, EXIT_OK


CHAR_COLUMNS = ["u", "a", "b", "x", "p_a", "p_b", "p_x", "H", "K1", "K2", "xpx2", "r_closed", "theta_closed"]


def cmd_characteristic(args, out: Path):
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    if not args.u_max > 0 or not args.step > 0:
        raise UsageError("--u-max and --step must be positive")
    lam0 = parse_complex(args.lambda0)
    mu = projection_measure(args.alpha)
    init = InitialData(lam0, args.x0)
    traj = ham.characteristic(mu, init, args.u_max, step=args.step)
    H, K1, K2, X = ham.conserved_quantities(traj.y)
    cc = cf.curve_constants(mu, init)
    r = cf.radial_solution(cc, traj.u)
    th = cf.angular_solution(cc.K2, cc.theta0, traj.u)
    cols = np.column_stack([traj.u, traj.y, H, K1, K2, X, r, th])
    with open(out / "characteristic.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHAR_COLUMNS)
        for row in cols:
            w.writerow([fmt(v) for v in row])
    drift = traj.drift()
    print("drift " + " ".join(f"{k}={fmt(v)}" for k, v in drift.items()))
    if traj.status == "blew_up":
        try:
            ts = cf.blowup_time(mu, init)
        except DomainError:
            ts = math.nan
        print(f"status blew_up u={fmt(traj.u_blow)} closed_form_t_star={fmt(ts)}")
    else:
        print(f"status completed u={fmt(traj.u[-1])}")
    return ["characteristic.csv"], EXIT_OK


def cmd_field(args, out: Path):
    _check_t_alpha(args)
    if args.format != "csv":
        raise UsageError("field supports --format csv only")
    grid = be.Grid.parse(args.grid)
    f = be.laplacian_field(args.t, args.alpha, grid, band=args.band, singular_radius=args.singular_radius)
    names = {v: k for k, v in be.MASK_CODES.items()}
    nodes = grid.nodes
    with open(out / "field.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im", "s_t", "laplacian", "mask"])
        for z, s, lap, m in zip(nodes.ravel(), f.values.ravel(), f.laplacian.ravel(), f.mask.ravel()):
            w.writerow([fmt(z.real), fmt(z.imag), fmt(s), fmt(lap), names[int(m)]])
    print(f"max |laplacian| outside the mask {fmt(f.max_abs_laplacian())}")
    return ["field.csv"], EXIT_OK


def cmd_rmt(args, out: Path):
    _check_t_alpha(args)
    cfg = rmt.SimConfig(args.n, args.t, args.steps, args.seed, args.reps)
    cloud = rmt.eigencloud(cfg, args.alpha)
    rmt.write_eigencloud_csv(out / "eigenvalues.csv", cloud)
    stats = rmt.cloud_stats(cloud, args.margin)
    rmt.write_stats_json(out / "stats.json", stats)
    arts = ["eigenvalues.csv", "stats.json"]
    if args.format == "svg":
        om = region.boundary_omega(args.t, args.alpha, SAMPLES)
        write_svg(out / "cloud.svg", [("omega", om.points, om.closed)], dots=cloud.nonzero())
        arts.append("cloud.svg")
    print(f"inside_fraction {fmt(stats['inside_fraction'])} margin {fmt(args.margin)}")
    return arts, EXIT_OK


def cmd_check(args, out: Path):
    results = checks.run(args.level, args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.seconds:.1f} s)")
    report = {
        "level": args.level,
        "seed": args.seed,
        "passed": all(r.passed for r in results),
        "failed": [r.name for r in results if not r.passed],
        "suites": [{"name": r.name, "passed": bool(r.passed), "detail": r.detail} for r in results],
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, default=_json_default) + "\n")
    if not report["passed"]:
        print("failing invariants: " + ", ".join(report["failed"]), file=sys.stderr)
    return ["report.json"], EXIT_OK if report["passed"] else EXIT_INVARIANT


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


COMMANDS = {
    "region": cmd_region,
    "characteristic": cmd_characteristic,
    "field": cmd_field,
    "rmt": cmd_rmt,
    "check": cmd_check,
}


def parse_complex(text: str) -> complex:
    try:
        re_, im_ = text.split(",")
        return complex(float(re_), float(im_))
    except ValueError:
        raise UsageError(f"expected re,im but got {text!r}") from None


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freebrown", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_choice=True):
        sp.add_argument("--out", default="freebrown-out", help="output directory")
        if fmt_choice:
            sp.add_argument("--format", choices=["csv", "svg"], default="csv")

    sp = sub.add_parser("region", help="boundary curves of Sigma, Omega, Gamma and 1/Gamma")
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--samples", type=int, default=SAMPLES)
    common(sp)

    sp = sub.add_parser("characteristic", help="one characteristic curve with closed-form columns")
    sp.add_argument("--lambda0", required=True, help="re,im")
    sp.add_argument("--x0", type=float, default=0.0)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--u-max", dest="u_max", type=float, default=1.0)
    sp.add_argument("--step", type=float, default=STEP)
    common(sp, fmt_choice=False)

    sp = sub.add_parser("field", help="s_t and its Laplacian on a grid")
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--grid", default="-3:3:101,-3:3:101", help="re_lo:re_hi:n,im_lo:im_hi:n")
    sp.add_argument("--band", type=float, default=None, help="mask width around the boundary of Omega")
    sp.add_argument("--singular-radius", dest="singular_radius", type=float, default=None)
    common(sp)

    sp = sub.add_parser("rmt", help="eigenvalues of Y_t P for the unitary Brownian motion at size n")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--steps", type=int, default=400)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reps", type=int, default=1)
    sp.add_argument("--margin", type=float, default=MARGIN)
    common(sp)

    sp = sub.add_parser("check", help="run the invariant suites")
    sp.add_argument("--level", choices=["fast", "full"], default="fast")
    sp.add_argument("--seed", type=int, default=0)
    common(sp, fmt_choice=False)

    sp = sub.add_parser("replay", help="re-run a manifest and compare artifacts")
    sp.add_argument("manifest")
    sp.add_argument("--out", required=True, help="directory for the replayed outputs")
    return p


def _parameters(args) -> list:
    d = vars(args)
    return [[k, d[k]] for k in sorted(d) if k not in ("command", "out")]


def run_command(command: str, params: list, out: Path) -> tuple[RunManifest, int]:
    args = argparse.Namespace(command=command, out=str(out), **dict(params))
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    arts, code = COMMANDS[command](args, out)
    man = RunManifest(
        command,
        params,
        [{"path": a, "sha256": sha256(out / a)} for a in arts],
        versions(),
        getattr(args, "seed", None),
    )
    man.wall_time = time.perf_counter() - t0
    (out / MANIFEST).write_text(man.to_json())
    return man, code


def cmd_replay(args) -> int:
    old = RunManifest.load(args.manifest)
    if old.command not in COMMANDS:
        raise UsageError(f"unknown command {old.command!r} in manifest")
    out = Path(args.out)
    if out.resolve() == Path(args.manifest).resolve().parent:
        raise UsageError("--out must differ from the manifest directory")
    new, code = run_command(old.command, old.parameters, out)
    old_h = {a["path"]: a["sha256"] for a in old.artifacts}
    new_h = {a["path"]: a["sha256"] for a in new.artifacts}
    bad = sorted(k for k in old_h.keys() | new_h.keys() if old_h.get(k) != new_h.get(k))
    if old.versions != new.versions:
        print("note: versions differ from the recorded run", file=sys.stderr)
    if bad:
        print("replay mismatch: " + ", ".join(bad), file=sys.stderr)
        return EXIT_INVARIANT
    print(f"replay identical ({len(new_h)} artifacts)")
    return code


VALUE_FLAGS = ("--grid", "--lambda0")


def _join_values(argv):
    """Attach values such as ``-3:3:101,...`` that argparse would take for flags."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_join_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "replay":
            return cmd_replay(args)
        _, code = run_command(args.command, _parameters(args), Path(args.out))
        return code
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, DomainError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
