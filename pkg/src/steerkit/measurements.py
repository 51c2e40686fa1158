"""Measurement sets: mutually unbiased bases for prime dimensions and the
deterministic response strategies used by local-hidden-state models."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UnsupportedDimensionError
from .linalg import VALIDITY_TOL, min_eigenvalue


def is_prime(n):
    if n < 2:
        return False
    return all(n % k for k in range(2, int(n**0.5) + 1))


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Effects ``M_{a|x}`` stored as ``effects[x, a]`` (shape ``(m, o, d, d)``)."""

    effects: np.ndarray

    def __post_init__(self):
        eff = np.asarray(self.effects, dtype=complex)
        if eff.ndim != 4 or eff.shape[-1] != eff.shape[-2]:
            raise ValueError(f"effects must have shape (m, o, d, d), got {eff.shape}")
        eff.setflags(write=False)
        object.__setattr__(self, "effects", eff)

    @property
    def settings(self):
        return self.effects.shape[0]

    @property
    def outcomes(self):
        return self.effects.shape[1]

    @property
    def dim(self):
        return self.effects.shape[-1]

    def validate(self, tol=VALIDITY_TOL):
        """Raise ``ValueError`` unless every effect is PSD and each setting sums to I."""
        if np.any(min_eigenvalue(self.effects) < -tol):
            raise ValueError("measurement effect is not positive semidefinite")
        total = self.effects.sum(axis=1)
        resid = np.max(np.abs(total - np.eye(self.dim)))
        if resid > tol:
            raise ValueError(f"effects do not sum to identity (residual {resid:.2e})")
        return self


def mub_vectors(d):
    """The ``d + 1`` bases as an array ``vecs[x, k, l] = <l|e_k^(x)>``."""
    if not is_prime(d):
        raise UnsupportedDimensionError(f"unsupported dimension: {d} is not prime")
    if d == 2:
        s = 1.0 / np.sqrt(2.0)
        return np.array(
            [
                [[1, 0], [0, 1]],
                [[s, s], [s, -s]],
                [[s, 1j * s], [s, -1j * s]],
            ],
            dtype=complex,
        )
    omega = np.exp(2j * np.pi / d)
    l = np.arange(d)
    bases = [np.eye(d, dtype=complex)]
    for j in range(1, d + 1):
        expo = (j * l[None, :] ** 2 + np.arange(d)[:, None] * l[None, :]) % d
        bases.append(omega**expo / np.sqrt(d))
    return np.array(bases)


@lru_cache(maxsize=None)
def _mub(d):
    vecs = mub_vectors(d)
    return MeasurementSet(np.einsum("xki,xkj->xkij", vecs, vecs.conj()))


def mub(d):
    """Complete set of ``d + 1`` mutually unbiased bases as rank-1 projectors."""
    return _mub(int(d))


def take_settings(ms, m, order=None):
    """First ``m`` settings of ``ms``, optionally after permuting settings by ``order``."""
    if order is not None:
        order = [int(i) for i in order]
        if sorted(order) != list(range(ms.settings)):
            raise ValueError(f"setting order must be a permutation of 0..{ms.settings - 1}")
        ms = MeasurementSet(ms.effects[order])
    if not 1 <= m <= ms.settings:
        raise ValueError(f"number of settings must lie in 1..{ms.settings}, got {m}")
    if m == ms.settings:
        return ms
    return MeasurementSet(ms.effects[:m])


def mub_settings(d, m, order=None):
    return take_settings(mub(d), m, order)


# -- deterministic strategies -----------------------------------------------


@dataclass(frozen=True)
class DeterministicStrategy:
    index: int
    settings: int
    outcomes: int

    def __post_init__(self):
        if not 0 <= self.index < self.outcomes**self.settings:
            raise ValueError(f"strategy index {self.index} out of range")

    def __call__(self, x):
        return strategy_outcome(self, x)


def strategy_outcome(s, x):
    """Outcome chosen by strategy ``s`` for setting ``x`` (little-endian digit of the index)."""
    return (s.index // s.outcomes**x) % s.outcomes


@lru_cache(maxsize=None)
def strategy_table(outcomes, settings):
    """Array ``table[lam, x]`` of outcomes for all ``outcomes**settings`` strategies."""
    lam = np.arange(outcomes**settings)[:, None]
    table = (lam // outcomes ** np.arange(settings)[None, :]) % outcomes
    table.setflags(write=False)
    return table


def response_tensor(outcomes, settings):
    """``D[lam, x, a] = 1`` iff strategy ``lam`` answers ``a`` to setting ``x``."""
    table = strategy_table(outcomes, settings)
    return (table[:, :, None] == np.arange(outcomes)[None, None, :]).astype(float)
