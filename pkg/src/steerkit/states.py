"""Bipartite state families: partially entangled states and isotropic states."""

from dataclasses import dataclass

import numpy as np

from .linalg import check_density, hermitize


@dataclass(frozen=True)
class PesParams:
    """Parameters of the d-dimensional partially entangled state.

    ``amps`` are the (nonnegative, unit-norm) Schmidt amplitudes.
    """

    d: int
    p: float
    amps: tuple

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=float)
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if amps.shape != (self.d,):
            raise ValueError(f"expected {self.d} amplitudes, got {amps.shape[0] if amps.ndim else 0}")
        if np.any(amps < 0):
            raise ValueError("amplitudes must be nonnegative")
        if abs(float(amps @ amps) - 1.0) > 1e-10:
            raise ValueError(f"amplitudes must form a unit vector (norm^2 = {amps @ amps!r})")
        _check_p(self.p)
        object.__setattr__(self, "amps", tuple(float(a) for a in amps))


ANGLE_SLACK = 1e-4


@dataclass(frozen=True)
class QutritAngles:
    theta: float
    phi: float

    def __post_init__(self):
        # rounded inputs such as 0.7854 for pi/4 are accepted and clipped
        if not -ANGLE_SLACK <= self.theta <= np.pi / 4 + ANGLE_SLACK:
            raise ValueError(f"theta must lie in [0, pi/4], got {self.theta}")
        if not -ANGLE_SLACK <= self.phi <= np.pi / 2 + ANGLE_SLACK:
            raise ValueError(f"phi must lie in [0, pi/2], got {self.phi}")
        object.__setattr__(self, "theta", float(np.clip(self.theta, 0.0, np.pi / 4)))
        object.__setattr__(self, "phi", float(np.clip(self.phi, 0.0, np.pi / 2)))

    @property
    def amps(self):
        t, f = self.theta, self.phi
        return (np.cos(t) * np.sin(f), np.sin(t) * np.sin(f), np.cos(f))


#: angles at which the qutrit family has equal Schmidt amplitudes
ISOTROPIC_ANGLES = QutritAngles(np.pi / 4, float(np.arctan(np.sqrt(2.0))))


def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight p must lie in [0, 1], got {p}")


def schmidt_vector(amps):
    amps = np.asarray(amps, dtype=float)
    d = len(amps)
    psi = np.zeros(d * d)
    psi[np.arange(d) * (d + 1)] = amps
    return psi


def pes_components(amps):
    """Return ``(pure, noise)`` with pes_state = p * pure + (1 - p) * noise."""
    amps = np.asarray(amps, dtype=float)
    d = len(amps)
    psi = schmidt_vector(amps)
    pure = np.outer(psi, psi).astype(complex)
    noise = np.kron(np.diag(amps**2), np.eye(d) / d).astype(complex)
    return pure, noise


def pes_state(params):
    """``p |psi_a><psi_a| + (1 - p) rho_a^A (x) I/d`` for PesParams."""
    pure, noise = pes_components(params.amps)
    return check_density(hermitize(params.p * pure + (1.0 - params.p) * noise))


def qutrit_pes(p, angles):
    if not isinstance(angles, QutritAngles):
        angles = QutritAngles(*angles)
    amps = np.clip(angles.amps, 0.0, None)
    amps = amps / np.linalg.norm(amps)
    return pes_state(PesParams(3, p, tuple(amps)))


def isotropic_state(d, p):
    _check_p(p)
    phi = schmidt_vector(np.full(d, 1.0 / np.sqrt(d)))
    rho = p * np.outer(phi, phi) + (1.0 - p) * np.eye(d * d) / d**2
    return check_density(rho.astype(complex))
