"""Assemblages: conditional states prepared on the steered party."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .linalg import VALIDITY_TOL, hermitize, min_eigenvalue, partial_trace


class Direction(str, Enum):
    AtoB = "a2b"
    BtoA = "b2a"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "").replace("->", "2")
        for d in cls:
            if key in (d.value, d.name.lower()):
                return d
        raise ValueError(f"unknown direction {value!r}")

    def __str__(self):
        return self.value


NOSIGNAL_TOL = 1e-9
NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Assemblage:
    """Members ``sigma_{a|x}`` stored as ``members[x, a]`` (shape ``(m, o, n, n)``).

    ``efficiency`` is 1 for lossless assemblages; priori assemblages carry
    either a scalar or a per-setting array.
    """

    members: np.ndarray
    direction: Direction = Direction.AtoB
    efficiency: object = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        mem = np.asarray(self.members, dtype=complex)
        if mem.ndim != 4 or mem.shape[-1] != mem.shape[-2]:
            raise ValueError(f"members must have shape (m, o, n, n), got {mem.shape}")
        mem.setflags(write=False)
        object.__setattr__(self, "members", mem)
        object.__setattr__(self, "direction", Direction.parse(self.direction))

    @property
    def settings(self):
        return self.members.shape[0]

    @property
    def outcomes(self):
        return self.members.shape[1]

    @property
    def dim(self):
        return self.members.shape[-1]

    @property
    def lossless(self):
        return bool(np.all(np.asarray(self.efficiency) == 1.0))

    def marginals(self):
        """``sum_a sigma_{a|x}`` for every setting."""
        return self.members.sum(axis=1)


def filtered_assemblage(asm, min_ratio=1e-8):
    """Conjugate every member by ``rho^{-1/2} / sqrt(n)``, ``rho`` the steered marginal.

    This is an invertible local filter on the steered party, so it maps
    steerable assemblages to steerable ones and LHS models to LHS models;
    afterwards every setting sums to ``I/n``. Returns None when the
    marginal is numerically singular (eigenvalue ratio below ``min_ratio``).
    """
    rho = hermitize(asm.members[0].sum(axis=0))
    w, V = np.linalg.eigh(rho)
    if w[0] <= min_ratio * w[-1]:
        return None
    F = (V / np.sqrt(w * asm.dim)) @ V.conj().T
    return Assemblage(F @ asm.members @ F, asm.direction, asm.efficiency, dict(asm.meta, filtered=True))


def _steered_reduced(rho, d, direction):
    side = "first" if direction is Direction.AtoB else "second"
    return partial_trace(rho, (d, d), side)


def make_assemblage(rho, ms, direction=Direction.AtoB):
    """Assemblage prepared by measuring ``ms`` on the steering party of ``rho``."""
    direction = Direction.parse(direction)
    d = ms.dim
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d * d, d * d):
        raise ValueError(f"state of shape {rho.shape} does not match measurement dimension {d}")
    t = rho.reshape(d, d, d, d)
    if direction is Direction.AtoB:
        members = np.einsum("xaki,ijkl->xajl", ms.effects, t)
    else:
        members = np.einsum("xalj,ijkl->xaik", ms.effects, t)
    return Assemblage(hermitize(members), direction)


def make_priori(asm, rho_steered, eps):
    """Loss-extended assemblage with a null outcome appended as index ``o``.

    Non-null members are scaled by ``eps`` and the null slice of setting ``x``
    is ``(1 - eps_x) * rho_steered``. ``eps`` is a scalar or a per-setting
    sequence.
    """
    if not asm.lossless:
        raise ValueError("priori assemblage requires a lossless input assemblage")
    eps_arr = np.broadcast_to(np.asarray(eps, dtype=float), (asm.settings,))
    if np.any(eps_arr <= 0.0) or np.any(eps_arr > 1.0):
        raise ValueError(f"efficiency must lie in (0, 1], got {eps}")
    rho_steered = np.asarray(rho_steered, dtype=complex)
    if rho_steered.shape != (asm.dim, asm.dim):
        raise ValueError("steered reduced state has the wrong dimension")
    scaled = eps_arr[:, None, None, None] * asm.members
    null = (1.0 - eps_arr)[:, None, None] * rho_steered[None]
    members = np.concatenate([scaled, null[:, None]], axis=1)
    eff = float(eps_arr[0]) if np.ndim(eps) == 0 else tuple(float(e) for e in eps_arr)
    return Assemblage(members, asm.direction, eff, dict(asm.meta))


def priori_from_state(rho, ms, direction, eps):
    """Priori assemblage with the steered reduced state taken from ``rho`` itself."""
    direction = Direction.parse(direction)
    asm = make_assemblage(rho, ms, direction)
    return make_priori(asm, _steered_reduced(rho, ms.dim, direction), eps)


@dataclass(frozen=True)
class ValidationReport:
    psd_margin: float
    nosignal_residual: float
    normalization_residual: float
    psd_ok: bool
    nosignal_ok: bool
    normalization_ok: bool

    @property
    def passed(self):
        return self.psd_ok and self.nosignal_ok and self.normalization_ok


def validate(asm, psd_tol=VALIDITY_TOL, nosignal_tol=NOSIGNAL_TOL, norm_tol=NORM_TOL):
    """Check positivity, no-signalling and normalization; never raises."""
    margin = float(np.min(min_eigenvalue(asm.members)))
    marg = asm.marginals()
    nosig = float(np.max(np.abs(marg - marg[0:1])))
    norm = float(np.max(np.abs(np.trace(marg, axis1=-2, axis2=-1).real - 1.0)))
    return ValidationReport(
        psd_margin=margin,
        nosignal_residual=nosig,
        normalization_residual=norm,
        psd_ok=margin >= -psd_tol,
        nosignal_ok=nosig <= nosignal_tol,
        normalization_ok=norm <= norm_tol,
    )
