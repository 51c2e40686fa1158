"""Steering certification programs.

* steering weight of an assemblage (slack form of the LHS decomposition),
* loss-counted steering weight via the priori assemblage,
* the general-measurement unsteerability relaxation (shrinking factor),
* bisection for critical mixing weights and closed-form reference values.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import sdp
from .assemblage import Direction, filtered_assemblage, make_assemblage, priori_from_state
from .errors import AmbiguousThresholdError, NumericFailure, SteerkitError
from .linalg import hermitian_basis, hvec, partial_trace, swap_parties
from .measurements import MeasurementSet, mub, response_tensor

STEER_TOL = 1e-5
ZERO_CLAMP = 1e-9
Q_TOL = 1e-6
# the relaxation is degenerate right at the threshold; retry once looser
Q_RETRY_TOL = 1e-7
WHITEN_MIN = 1e-8


@dataclass
class SteeringVerdict:
    sw: float
    mu: float
    steerable: bool
    sw_filtered: float = None
    lhs_blocks: list = field(repr=False, default=None)
    solver: dict = field(repr=False, default_factory=dict)


@dataclass(frozen=True, eq=False)
class GeneralBoundConfig:
    eta: float
    measurements: MeasurementSet

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"shrinking factor must lie in (0, 1], got {self.eta}")

    @classmethod
    def mub(cls, d):
        return cls(shrinking_factor_mub(d), mub(d))


@dataclass
class QResult:
    q: float
    certified_unsteerable: bool
    solver: dict = field(repr=False, default_factory=dict)


@dataclass
class CriticalPoint:
    p_star: float
    direction: Direction
    mode: str
    settings: int
    efficiency: object
    tol_p: float
    bracket: tuple = None
    solves: int = 0
    scan: list = field(default_factory=list)


# -- steering weight -----------------------------------------------------------


@lru_cache(maxsize=32)
def _sw_structure(outcomes, settings, n):
    """Constraint matrix of ``sum_lam D sigma_lam + S_{a|x} = sigma_{a|x}``.

    Blocks: ``outcomes**settings`` strategy blocks, then one slack per (x, a).
    Rows are ordered (x, a, hvec coordinate).
    """
    n2 = n * n
    nlam = outcomes**settings
    nslack = settings * outcomes
    D = response_tensor(outcomes, settings)  # (lam, x, a)
    lam, xs, as_ = np.nonzero(D)
    pair = xs * outcomes + as_
    coord = np.arange(n2)
    rows = (pair[:, None] * n2 + coord[None, :]).ravel()
    cols = (lam[:, None] * n2 + coord[None, :]).ravel()
    srow = np.arange(nslack * n2)
    scol = nlam * n2 + srow
    A = sp.csr_matrix(
        (np.ones(rows.size + srow.size), (np.concatenate([rows, srow]), np.concatenate([cols, scol]))),
        shape=(nslack * n2, (nlam + nslack) * n2),
    )
    c = np.zeros((nlam + nslack) * n2)
    c[: nlam * n2] = np.tile(hvec(np.eye(n)), nlam)
    blocks = [sdp.BlockSpec(n)] * (nlam + nslack)
    return blocks, A, c, nlam


def _whitening(asm):
    """``rho^{-1/2}`` of the steered marginal, or None when it is near singular."""
    rho = asm.members[0].sum(axis=0)
    w, V = np.linalg.eigh(rho)
    if w[0] <= WHITEN_MIN * w[-1]:
        return None
    return (V / np.sqrt(w)) @ V.conj().T, rho


def steering_weight_problem(asm, whiten=False):
    """Slack-form program; ``whiten`` conjugates every operator by ``rho^{-1/2}``.

    Whitening is an exact change of variables ``X -> F X F`` with
    ``F = rho^{-1/2}``: the data then sums to the identity per setting and the
    objective becomes ``sum_lam <rho, sigma'_lam>``. It is much better
    conditioned for nearly pure conditional states.
    """
    blocks, A, c, nlam = _sw_structure(asm.outcomes, asm.settings, asm.dim)
    members = asm.members
    if whiten:
        F, rho = _whitening(asm)
        members = F @ members @ F
        c = c.copy()
        c[: nlam * asm.dim**2] = np.tile(hvec(rho), nlam)
    return sdp.BlockSdpProblem(blocks, A, hvec(members).ravel(), c)


def steering_weight(asm, steer_tol=STEER_TOL, tol=sdp.ipm.DEFAULT_TOL):
    """Steering weight ``1 - max mu`` of an assemblage (lossless or priori)."""
    white = _whitening(asm)
    sol = sdp.solve(steering_weight_problem(asm, whiten=white is not None), tol=tol)
    if sol.status is sdp.Status.NUMERIC_FAILURE and white is not None:
        sol = sdp.solve(steering_weight_problem(asm), tol=tol)
        white = None
    if sol.status is sdp.Status.NUMERIC_FAILURE:
        raise NumericFailure(f"steering-weight solve failed: {sol.message}")
    if sol.status is not sdp.Status.OPTIMAL:
        raise SteerkitError(f"internal error: steering-weight program reported {sol.status}")
    sw = 1.0 - sol.objective_value
    if abs(sw) < ZERO_CLAMP:
        sw = 0.0
    sw = min(1.0, max(0.0, sw))
    nlam = asm.outcomes**asm.settings
    lhs = sol.blocks[:nlam]
    if white is not None:
        Finv = np.linalg.inv(white[0])
        lhs = [Finv @ b @ Finv for b in lhs]
    return SteeringVerdict(
        sw=sw,
        mu=1.0 - sw,
        steerable=sw > steer_tol,
        lhs_blocks=lhs,
        solver=sol.summary(),
    )


def filtered_sw(asm, steer_tol=STEER_TOL):
    """Steering weight of the marginal-normalized assemblage.

    Same zero set as the plain weight (steerability is invariant under
    invertible filters on the steered side) but not suppressed by small
    marginal eigenvalues, so it locates thresholds of nearly product states
    accurately. Falls back to the plain weight for singular marginals.
    """
    fasm = filtered_assemblage(asm)
    return steering_weight(asm if fasm is None else fasm, steer_tol=steer_tol)


def _both(asm, steer_tol):
    verdict = steering_weight(asm, steer_tol=steer_tol)
    fv = filtered_sw(asm, steer_tol=steer_tol)
    verdict.sw_filtered = fv.sw
    # either weight being positive certifies steering
    verdict.steerable = verdict.steerable or fv.steerable
    return verdict


def loss_counted_sw(rho, ms, direction, eps, steer_tol=STEER_TOL):
    """Steering weight of the priori assemblage at heralding efficiency ``eps``."""
    return _both(priori_from_state(rho, ms, direction, eps), steer_tol)


def state_assemblage(rho, ms, direction, eps=1.0):
    if np.all(np.asarray(eps) == 1.0):
        return make_assemblage(rho, ms, direction)
    return priori_from_state(rho, ms, direction, eps)


def state_sw(rho, ms, direction, eps=1.0, steer_tol=STEER_TOL):
    """Lossless steering weight when ``eps == 1``, loss-counted otherwise.

    ``sw`` is the plain weight; ``steerable`` is true when it or the
    filtered weight exceeds ``steer_tol``.
    """
    return _both(state_assemblage(rho, ms, direction, eps), steer_tol)


# -- general-measurement relaxation --------------------------------------------


def unsteerability_problem(rho, cfg, direction=Direction.AtoB):
    """Relaxation certifying unsteerability under all projective measurements.

    Variables (in order): free ``O_AB``, free ``O_B``, PSD ``sigma_lam``.
    Constraint families:

    1. ``Tr_A((M_{a|x} (x) I) O_AB) = sum_lam D(a|x,lam) sigma_lam``
    2. ``eta O_AB + (1 - eta) rho^A (x) O_B = rho_AB``
    3. ``O_B = Tr_A O_AB``

    For ``BtoA`` the parties of ``rho`` are exchanged first.
    """
    ms = cfg.measurements
    d = ms.dim
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d * d, d * d):
        raise ValueError("measurement dimension does not match the state")
    if Direction.parse(direction) is Direction.BtoA:
        rho = swap_parties(rho, (d, d))
    eta = cfg.eta
    m, o = ms.settings, ms.outcomes
    n2, N2 = d * d, d**4
    nlam = o**m
    F = hermitian_basis(d)
    FF = hermitian_basis(d * d)
    rho_a = partial_trace(rho, (d, d), "second")

    # family 1
    kr = np.einsum("xaij,ckl->xacikjl", ms.effects, F).reshape(m * o * n2, d * d, d * d)
    A1_ab = hvec(kr)
    D = response_tensor(o, m)
    lam, xs, as_ = np.nonzero(D)
    pair = xs * o + as_
    coord = np.arange(n2)
    rows1 = (pair[:, None] * n2 + coord).ravel()
    cols1 = (lam[:, None] * n2 + coord).ravel()
    A1_lam = sp.csr_matrix((-np.ones(rows1.size), (rows1, cols1)), shape=(m * o * n2, nlam * n2))
    # family 2
    A2_ab = eta * np.eye(N2)
    t = np.einsum("ij,cjbkd->cibkd", rho_a, FF.reshape(N2, d, d, d, d))
    A2_b = (1.0 - eta) * hvec(np.einsum("cibid->cbd", t))
    # family 3
    A3_ab = -hvec(np.einsum("ij,ckl->cikjl", np.eye(d), F).reshape(n2, d * d, d * d))
    A3_b = np.eye(n2)

    A = sp.bmat(
        [
            [sp.csr_matrix(A1_ab), None, A1_lam],
            [sp.csr_matrix(A2_ab), sp.csr_matrix(A2_b), None],
            [sp.csr_matrix(A3_ab), sp.csr_matrix(A3_b), None],
        ],
        format="csr",
    )
    A.resize((A.shape[0], N2 + n2 + nlam * n2))
    b = np.concatenate([np.zeros(m * o * n2), hvec(rho), np.zeros(n2)])
    c = np.zeros(N2 + n2 + nlam * n2)
    c[N2 + n2 :] = np.tile(hvec(np.eye(d)), nlam)
    blocks = [sdp.BlockSpec(d * d, sdp.FREE), sdp.BlockSpec(d, sdp.FREE)] + [sdp.BlockSpec(d)] * nlam
    return sdp.BlockSdpProblem(blocks, A, b, c)


def unsteerability_q(rho, cfg, direction=Direction.AtoB):
    problem = unsteerability_problem(rho, cfg, direction)
    sol = sdp.solve(problem)
    if sol.status is sdp.Status.NUMERIC_FAILURE:
        sol = sdp.solve(problem, tol=Q_RETRY_TOL)
    if sol.status is sdp.Status.NUMERIC_FAILURE:
        raise NumericFailure(f"unsteerability solve failed: {sol.message}")
    if sol.status is not sdp.Status.OPTIMAL:
        return QResult(q=None, certified_unsteerable=False, solver=sol.summary())
    q = float(sol.objective_value)
    return QResult(q=q, certified_unsteerable=q >= 1.0 - Q_TOL, solver=sol.summary())


# -- closed forms ---------------------------------------------------------------


def shrinking_factor_mub(d):
    """Inscribed-sphere ratio of the complete MUB polytope, ``1/sqrt((d^2-1)(d-1))``.

    Only meaningful for prime-power ``d``.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return 1.0 / np.sqrt((d * d - 1.0) * (d - 1.0))


def harmonic(d):
    return float(sum(1.0 / k for k in range(1, d + 1)))


def analytic_pstar_bta(d):
    """``(H_d - 1) / (d - 1)``: the general-measurement isotropic threshold."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return (harmonic(d) - 1.0) / (d - 1.0)


# -- critical mixing weight -----------------------------------------------------


def _predicate(family, direction, ms, eps, mode, cfg):
    if mode == "sw":

        def pred(p):
            return filtered_sw(state_assemblage(family(p), ms, direction, eps)).steerable

    elif mode == "general":
        cfg = cfg or GeneralBoundConfig(shrinking_factor_mub(ms.dim), ms)

        def pred(p):
            return unsteerability_q(family(p), cfg, direction).certified_unsteerable

    else:
        raise ValueError(f"mode must be 'sw' or 'general', got {mode!r}")
    return pred


def critical_p(family, direction, ms, eps=1.0, mode="sw", tol_p=1e-4, scan=0, cfg=None):
    """Bisect the threshold mixing weight of a state family.

    ``mode='sw'``: smallest ``p`` with positive steering weight (midpoint of
    the final bracket); ``None`` when ``family(1)`` is unsteerable.
    ``mode='general'``: largest verified ``p`` that is certified
    unsteerable; ``None`` when even ``family(0)`` is not certified.

    ``scan=K`` (``K >= 2``) first samples ``K`` evenly spaced points and
    raises :class:`AmbiguousThresholdError` on a non-monotone pattern.
    """
    if tol_p < 1e-6:
        raise ValueError("tol_p must be >= 1e-6")
    direction = Direction.parse(direction)
    pred = _predicate(family, direction, ms, eps, mode, cfg)
    # "hit" means the predicate value found above the threshold in sw mode
    # (steerable) and below it in general mode (certified).
    solves = 0
    samples = []

    def hit(p):
        nonlocal solves
        solves += 1
        return pred(p)

    result = CriticalPoint(None, direction, mode, ms.settings, eps, tol_p)
    if scan and scan >= 2:
        grid = np.linspace(0.0, 1.0, int(scan))
        samples = [(float(p), bool(hit(p))) for p in grid]
        vals = [v for _, v in samples]
        flips = sum(1 for u, w in zip(vals, vals[1:]) if u != w)
        wrong_way = (mode == "sw" and vals[0] and not vals[-1]) or (mode == "general" and vals[-1] and not vals[0])
        if flips > 1 or wrong_way:
            raise AmbiguousThresholdError(f"non-monotone {mode} predicate on scan grid", samples)
        result.scan = samples
        lo_val, hi_val = vals[0], vals[-1]
        if flips == 0:
            lo, hi = 0.0, 1.0
        else:
            k = next(i for i in range(len(vals) - 1) if vals[i] != vals[i + 1])
            lo, hi = grid[k], grid[k + 1]
    else:
        lo, hi = 0.0, 1.0
        lo_val, hi_val = hit(lo), hit(hi)

    if mode == "sw":
        if not hi_val:
            result.solves = solves
            return result
        if lo_val and lo == 0.0:
            result.p_star, result.bracket, result.solves = 0.0, (0.0, 0.0), solves
            return result
    else:
        if not lo_val and lo == 0.0:
            result.solves = solves
            return result
        if hi_val and hi == 1.0:
            result.p_star, result.bracket, result.solves = 1.0, (1.0, 1.0), solves
            return result

    while hi - lo > tol_p:
        mid = 0.5 * (lo + hi)
        v = hit(mid)
        if mode == "sw":
            lo, hi = (lo, mid) if v else (mid, hi)
        else:
            lo, hi = (mid, hi) if v else (lo, mid)
    result.bracket = (float(lo), float(hi))
    result.p_star = float(0.5 * (lo + hi)) if mode == "sw" else float(lo)
    result.solves = solves
    return result
