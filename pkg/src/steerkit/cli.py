"""Command-line interface: ``steerkit <command> [flags]``.

Exit codes: 0 ok, 2 usage or unsupported input, 3 solver failure,
4 ambiguous threshold.
"""

import argparse
import datetime
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial

import numpy as np

from . import __version__, sdp
from .assemblage import Direction
from .errors import AmbiguousThresholdError, NumericFailure, UnsupportedDimensionError
from .measurements import is_prime, mub, mub_settings, mub_vectors
from .sdp.io import encode_nested, load_problem, solution_to_dict
from .states import PesParams, QutritAngles, isotropic_state, pes_state, qutrit_pes
from .steering import (
    GeneralBoundConfig,
    analytic_pstar_bta,
    critical_p,
    harmonic,
    shrinking_factor_mub,
    state_sw,
)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_AMBIGUOUS = 0, 2, 3, 4
SURFACE_HEADER = "theta,phi,pstar_a2b,pstar_b2a"


class UsageError(Exception):
    pass


# -- state / measurement selection ---------------------------------------------


@dataclass(frozen=True)
class FamilySpec:
    """Picklable description of a one-parameter state family ``p -> rho(p)``."""

    state: str
    dim: int
    theta: float = None
    phi: float = None
    amps: tuple = None

    def __call__(self, p):
        if self.state == "iso":
            return isotropic_state(self.dim, p)
        if self.amps is not None:
            return pes_state(PesParams(self.dim, p, self.amps))
        return qutrit_pes(p, QutritAngles(self.theta, self.phi))


@dataclass(frozen=True)
class SweepSpec:
    n_theta: int = 21
    n_phi: int = 21
    margin: float = 0.02
    settings: int = 4
    efficiency: float = 1.0
    directions: str = "both"
    mode: str = "sw"
    tol_p: float = 1e-4
    setting_order: tuple = None

    def __post_init__(self):
        if self.n_theta < 2 or self.n_phi < 2:
            raise UsageError("grid counts must be >= 2")
        if self.margin < 0:
            raise UsageError("margin must be >= 0")
        if self.directions not in ("a2b", "b2a", "both"):
            raise UsageError(f"directions must be a2b, b2a or both, got {self.directions!r}")

    def grid(self):
        thetas = np.linspace(self.margin, np.pi / 4 - self.margin, self.n_theta)
        phis = np.linspace(self.margin, np.pi / 2 - self.margin, self.n_phi)
        return [(float(t), float(f)) for t in thetas for f in phis]


def _check_dim(d):
    if d < 2:
        raise UsageError(f"dimension must be >= 2, got {d}")
    if not is_prime(d):
        raise UnsupportedDimensionError(f"unsupported dimension: {d} is not prime")


def _parse_floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _parse_efficiency(text):
    vals = _parse_floats(text)
    if not vals or any(not 0.0 <= v <= 1.0 for v in vals):
        raise UsageError("efficiency must lie in [0, 1]")
    return vals[0] if len(vals) == 1 else vals


def _parse_order(text):
    if text is None:
        return None
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"setting order must be comma-separated integers, got {text!r}") from None


def _family(args):
    _check_dim(args.dim)
    if args.state == "iso":
        return FamilySpec("iso", args.dim)
    if args.amps is not None:
        amps = np.asarray(_parse_floats(args.amps))
        if amps.size != args.dim:
            raise UsageError(f"--amps needs {args.dim} values, got {amps.size}")
        if np.any(amps < 0) or not np.any(amps):
            raise UsageError("--amps must be nonnegative and not all zero")
        return FamilySpec("pes", args.dim, amps=tuple(float(a) for a in amps / np.linalg.norm(amps)))
    if args.dim != 3:
        raise UsageError("--theta/--phi parametrize d=3 only; use --amps for other dimensions")
    if args.theta is None or args.phi is None:
        raise UsageError("pes state needs --theta and --phi (or --amps)")
    try:
        QutritAngles(args.theta, args.phi)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return FamilySpec("pes", 3, theta=args.theta, phi=args.phi)


def _measurements(d, settings, order):
    m = d + 1 if settings is None else settings
    if not 1 <= m <= d + 1:
        raise UsageError(f"--settings must lie in 1..{d + 1}, got {m}")
    try:
        return mub_settings(d, m, order)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _threads():
    raw = os.environ.get("STEERKIT_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"STEERKIT_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def _pmap(fn, items):
    """Ordered map, parallel over processes when STEERKIT_THREADS > 1."""
    items = list(items)
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# -- output helpers -------------------------------------------------------------


def _emit_json(doc, out=None):
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _atomic_write(path, text):
    path = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    return "" if v is None else f"{v:.6f}"


def _params(args, **extra):
    keys = ("state", "dim", "p", "theta", "phi", "amps", "direction", "settings", "efficiency", "setting_order")
    out = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    out.update(extra)
    return out


# -- commands --------------------------------------------------------------------


def cmd_sw(args):
    family = _family(args)
    ms = _measurements(args.dim, args.settings, _parse_order(args.setting_order))
    eps = _parse_efficiency(args.efficiency)
    if not 0.0 <= args.p <= 1.0:
        raise UsageError(f"--p must lie in [0, 1], got {args.p}")
    verdict = state_sw(family(args.p), ms, Direction.parse(args.direction), eps)
    _emit_json(
        {
            "sw": verdict.sw,
            "mu": verdict.mu,
            "steerable": bool(verdict.steerable),
            "sw_filtered": verdict.sw_filtered,
            "status": verdict.solver.get("status"),
            "gap": verdict.solver.get("gap"),
            "iterations": verdict.solver.get("iterations"),
            "params": _params(args, settings=ms.settings),
        },
        args.out,
    )
    return EXIT_OK


def cmd_pstar(args):
    family = _family(args)
    ms = _measurements(args.dim, args.settings, _parse_order(args.setting_order))
    eps = _parse_efficiency(args.efficiency)
    cfg = _general_cfg(args, ms) if args.mode == "general" else None
    cp = critical_p(family, args.direction, ms, eps=eps, mode=args.mode, tol_p=args.tol, scan=args.scan, cfg=cfg)
    doc = {
        "p_star": cp.p_star,
        "mode": cp.mode,
        "direction": cp.direction.value,
        "bracket": None if cp.bracket is None else list(cp.bracket),
        "solves": cp.solves,
        "params": _params(args, settings=ms.settings, tol=args.tol),
    }
    if cp.scan:
        doc["scan"] = [list(s) for s in cp.scan]
    _emit_json(doc, args.out)
    return EXIT_OK


def _general_cfg(args, ms):
    eta = shrinking_factor_mub(args.dim) if args.eta is None else args.eta
    try:
        return GeneralBoundConfig(eta, ms)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _surface_cell(cell, spec):
    theta, phi = cell
    family = FamilySpec("pes", 3, theta=theta, phi=phi)
    ms = mub_settings(3, spec.settings, spec.setting_order)
    cfg = GeneralBoundConfig(shrinking_factor_mub(3), ms) if spec.mode == "general" else None
    out = []
    for d in ("a2b", "b2a"):
        if spec.directions in (d, "both"):
            cp = critical_p(family, d, ms, spec.efficiency, spec.mode, spec.tol_p, cfg=cfg)
            out.append(cp.p_star)
        else:
            out.append(None)
    return theta, phi, out[0], out[1]


def surface_rows(spec):
    """Compute surface rows ``(theta, phi, pstar_a2b, pstar_b2a)`` in theta-major order."""
    return _pmap(partial(_surface_cell, spec=spec), spec.grid())


def surface_csv(rows):
    lines = [SURFACE_HEADER] + [f"{t:.6f},{f:.6f},{_fmt(a)},{_fmt(b)}" for t, f, a, b in rows]
    return "\n".join(lines) + "\n"


def cmd_surface(args):
    if args.dim != 3:
        raise UsageError("surface sweeps are defined for --dim 3 only")
    n_theta, n_phi = args.grid
    spec = SweepSpec(
        n_theta=n_theta,
        n_phi=n_phi,
        margin=args.margin,
        settings=args.settings,
        efficiency=_parse_efficiency(args.efficiency),
        directions=args.directions,
        mode=args.mode,
        tol_p=args.tol,
        setting_order=_parse_order(args.setting_order),
    )
    _measurements(3, spec.settings, spec.setting_order)
    rows = surface_rows(spec)
    _atomic_write(args.out, surface_csv(rows))
    sidecar = {
        "spec": asdict(spec),
        "version": __version__,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "csv": os.path.basename(args.out),
    }
    _atomic_write(args.out + ".json", json.dumps(sidecar, indent=2) + "\n")
    return EXIT_OK


def cmd_analytic(args):
    if args.dim < 2:
        raise UsageError(f"dimension must be >= 2, got {args.dim}")
    d = args.dim
    _emit_json(
        {
            "dim": d,
            "pstar_bta_general": analytic_pstar_bta(d),
            "eta_mub": shrinking_factor_mub(d),
            "harmonic": harmonic(d),
        }
    )
    return EXIT_OK


def _loss_point(eps, dim, ms, tol):
    return critical_p(FamilySpec("iso", dim), Direction.AtoB, ms, eps=eps, tol_p=tol).p_star


def losscurve_rows(dim, settings, eps_grid, tol=1e-4, order=None):
    _check_dim(dim)
    ms = _measurements(dim, settings, order)
    pstars = _pmap(partial(_loss_point, dim=dim, ms=ms, tol=tol), eps_grid)
    return list(zip(eps_grid, pstars))


def cmd_losscurve(args):
    eps_grid = _parse_floats(args.eps_grid)
    if not eps_grid or any(not 0.0 <= e <= 1.0 for e in eps_grid):
        raise UsageError("--eps-grid values must lie in [0, 1]")
    rows = losscurve_rows(args.dim, args.settings, eps_grid, args.tol, _parse_order(args.setting_order))
    text = "epsilon,p_star\n" + "".join(f"{e:.6f},{_fmt(p)}\n" for e, p in rows)
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def mub_report(d):
    vecs = mub_vectors(d)
    gram = np.einsum("xki,xli->xkl", vecs.conj(), vecs)
    orth = float(np.max(np.abs(gram - np.eye(d))))
    unbiased = 0.0
    for x in range(d + 1):
        for y in range(x + 1, d + 1):
            ov = np.abs(vecs[x].conj() @ vecs[y].T) ** 2
            unbiased = max(unbiased, float(np.max(np.abs(ov - 1.0 / d))))
    return {"orthonormality_error": orth, "unbiasedness_error": unbiased, "ok": orth <= 1e-12 and unbiased <= 1e-12}


def cmd_mub(args):
    _check_dim(args.dim)
    vecs = mub_vectors(args.dim)
    doc = {"dim": args.dim, "bases": encode_nested(vecs)}
    if args.verify:
        mub(args.dim).validate()
        doc["verify"] = mub_report(args.dim)
    _emit_json(doc, args.out)
    return EXIT_OK if not args.verify or doc["verify"]["ok"] else EXIT_SOLVER


def cmd_solve_sdp(args):
    try:
        problem = load_problem(args.problem)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"cannot read problem: {exc}") from None
    sol = sdp.solve(problem, tol=args.tol)
    doc = solution_to_dict(sol, include_blocks=args.blocks)
    if sol.status is sdp.Status.NUMERIC_FAILURE:
        sys.stderr.write(json.dumps(doc) + "\n")
        return EXIT_SOLVER
    _emit_json(doc, args.out)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def _grid(text):
    try:
        a, b = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 21x21, got {text!r}") from None
    return a, b


def _state_flags(p, with_p):
    p.add_argument("--state", choices=("pes", "iso"), default="pes")
    p.add_argument("--dim", type=int, default=3)
    if with_p:
        p.add_argument("--p", type=float, required=True)
    p.add_argument("--theta", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--amps", help="comma-separated Schmidt amplitudes (normalized on input)")
    p.add_argument("--direction", choices=("a2b", "b2a"), default="a2b")
    p.add_argument("--settings", type=int, help="number of MUB settings (default d+1)")
    p.add_argument("--efficiency", default="1", help="heralding efficiency, scalar or per-setting list")
    p.add_argument("--setting-order", help="permutation of MUB indices applied before taking the first m")
    p.add_argument("--out", help="write JSON here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="steerkit", description="EPR steering certification toolkit")
    parser.add_argument("--version", action="version", version=f"steerkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sw", help="steering weight of one state")
    _state_flags(p, with_p=True)
    p.set_defaults(func=cmd_sw)

    p = sub.add_parser("pstar", help="critical mixing weight by bisection")
    _state_flags(p, with_p=False)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--mode", choices=("sw", "general"), default="sw")
    p.add_argument("--eta", type=float, help="shrinking factor for --mode general (default: MUB value)")
    p.add_argument("--scan", type=int, default=0, help="check monotonicity on K points first")
    p.set_defaults(func=cmd_pstar)

    p = sub.add_parser("surface", help="two-qutrit threshold surface as CSV")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--grid", type=_grid, default=(21, 21), help="n_theta x n_phi, e.g. 21x21")
    p.add_argument("--margin", type=float, default=0.02)
    p.add_argument("--settings", type=int, default=4)
    p.add_argument("--efficiency", default="1")
    p.add_argument("--directions", choices=("a2b", "b2a", "both"), default="both")
    p.add_argument("--mode", choices=("sw", "general"), default="sw")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--setting-order")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("analytic", help="closed-form reference values")
    p.add_argument("--dim", type=int, required=True)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("losscurve", help="isotropic threshold versus heralding efficiency")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--settings", type=int, default=2)
    p.add_argument("--eps-grid", default="1,0.95,0.9,0.85,0.8,0.75,0.7,0.65,0.6,0.55,0.5")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--setting-order")
    p.add_argument("--out")
    p.set_defaults(func=cmd_losscurve)

    p = sub.add_parser("mub", help="print mutually unbiased bases")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mub)

    p = sub.add_parser("solve-sdp", help="solve a block program stored as JSON")
    p.add_argument("--problem", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--blocks", action="store_true", help="include primal blocks in the output")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve_sdp)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, UnsupportedDimensionError, ValueError) as exc:
        print(f"steerkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AmbiguousThresholdError as exc:
        doc = {"error": "ambiguous-threshold", "message": str(exc), "samples": [list(s) for s in exc.samples]}
        print(json.dumps(doc), file=sys.stderr)
        return EXIT_AMBIGUOUS
    except NumericFailure as exc:
        print(json.dumps({"status": "numeric-failure", "message": str(exc)}), file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
