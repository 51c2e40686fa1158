"""Block-structured Hermitian conic programs and their solutions.

A problem has Hermitian variable blocks ``X_k`` (each PSD-constrained or
free), equality constraints ``sum_k <A_jk, X_k> = b_j`` and the objective
``maximize sum_k <C_k, X_k>`` with ``<A, B> = trace(A B)``.

Internally coefficients are kept in hvec coordinates (see
:func:`steerkit.linalg.hvec`): row ``j`` of ``A`` concatenates
``hvec(A_jk)`` over blocks, so building large structured problems never
materializes per-entry operator objects.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from ..linalg import hermitize, hvec, is_hermitian, unhvec

PSD = "psd"
FREE = "free"


@dataclass(frozen=True)
class BlockSpec:
    size: int
    cone: str = PSD

    def __post_init__(self):
        if int(self.size) < 1:
            raise ValueError(f"block size must be >= 1, got {self.size}")
        if self.cone not in (PSD, FREE):
            raise ValueError(f"cone must be 'psd' or 'free', got {self.cone!r}")

    @property
    def ncoords(self):
        return self.size * self.size


class BlockSdpProblem:
    """Standard-form Hermitian block program (maximization)."""

    def __init__(self, blocks, A, b, c):
        self.blocks = tuple(bl if isinstance(bl, BlockSpec) else BlockSpec(*bl) for bl in blocks)
        self.offsets = np.concatenate([[0], np.cumsum([bl.ncoords for bl in self.blocks])]).astype(int)
        n = int(self.offsets[-1])
        self.A = sp.csr_matrix(A, dtype=float)
        self.b = np.asarray(b, dtype=float).ravel()
        self.c = np.asarray(c, dtype=float).ravel()
        if self.A.shape != (self.b.size, n):
            raise ValueError(f"constraint matrix shape {self.A.shape} != ({self.b.size}, {n})")
        if self.c.size != n:
            raise ValueError(f"objective has {self.c.size} coordinates, expected {n}")
        if not (np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c))):
            raise ValueError("problem data must be finite")
        if not np.all(np.isfinite(self.A.data)):
            raise ValueError("constraint coefficients must be finite")

    @property
    def n_constraints(self):
        return self.b.size

    def block_slice(self, k):
        return slice(self.offsets[k], self.offsets[k + 1])

    def unpack(self, x):
        """Split a coordinate vector into per-block Hermitian matrices."""
        return [unhvec(x[self.block_slice(k)], bl.size) for k, bl in enumerate(self.blocks)]

    def pack(self, mats):
        return np.concatenate([hvec(hermitize(m)) for m in mats])

    def scaled(self, factor):
        """Problem with ``b`` and ``C`` multiplied by ``factor``."""
        return BlockSdpProblem(self.blocks, self.A, factor * self.b, factor * self.c)

    @classmethod
    def from_operators(cls, blocks, objective, constraints, tol=1e-12):
        """Build from explicit Hermitian coefficient operators.

        Parameters
        ----------
        blocks : sequence of BlockSpec
        objective : sequence (one entry per block) of Hermitian arrays or None
        constraints : sequence of ``(coeffs, rhs)`` where ``coeffs`` maps a
            block index to its Hermitian coefficient operator (dict, or a
            sequence aligned with ``blocks`` holding None for absent terms).
        """
        blocks = tuple(bl if isinstance(bl, BlockSpec) else BlockSpec(*bl) for bl in blocks)
        offsets = np.concatenate([[0], np.cumsum([bl.ncoords for bl in blocks])]).astype(int)

        def coords(k, mat):
            mat = np.asarray(mat, dtype=complex)
            n = blocks[k].size
            if mat.shape != (n, n):
                raise ValueError(f"coefficient for block {k} has shape {mat.shape}, expected {(n, n)}")
            if not is_hermitian(mat, tol):
                raise ValueError(f"coefficient for block {k} is not Hermitian")
            return hvec(hermitize(mat))

        c = np.zeros(offsets[-1])
        if objective is not None:
            for k, mat in enumerate(objective):
                if mat is not None:
                    c[offsets[k] : offsets[k + 1]] = coords(k, mat)
        rows, cols, vals, b = [], [], [], []
        for j, (coeffs, rhs) in enumerate(constraints):
            items = coeffs.items() if isinstance(coeffs, dict) else enumerate(coeffs)
            for k, mat in items:
                if mat is None:
                    continue
                v = coords(int(k), mat)
                nz = np.flatnonzero(v)
                rows.extend([j] * nz.size)
                cols.extend(offsets[int(k)] + nz)
                vals.extend(v[nz])
            b.append(float(rhs))
        A = sp.csr_matrix((vals, (rows, cols)), shape=(len(b), offsets[-1]))
        return cls(blocks, A, b, c)

    def to_operators(self):
        """Inverse of :meth:`from_operators` (dict-form constraints)."""
        objective = [
            None if not np.any(self.c[self.block_slice(k)]) else unhvec(self.c[self.block_slice(k)], bl.size)
            for k, bl in enumerate(self.blocks)
        ]
        constraints = []
        for j in range(self.n_constraints):
            row = self.A.getrow(j).toarray().ravel()
            coeffs = {}
            for k, bl in enumerate(self.blocks):
                part = row[self.block_slice(k)]
                if np.any(part):
                    coeffs[k] = unhvec(part, bl.size)
            constraints.append((coeffs, self.b[j]))
        return objective, constraints


class Status(str, Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal-infeasible"
    DUAL_INFEASIBLE = "dual-infeasible"
    NUMERIC_FAILURE = "numeric-failure"

    def __str__(self):
        return self.value


@dataclass
class SdpSolution:
    status: Status
    objective_value: float = float("nan")
    dual_value: float = float("nan")
    gap: float = float("nan")
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    iterations: int = 0
    blocks: list = None
    y: np.ndarray = None
    certificate: dict = None
    tolerances: dict = field(default_factory=dict)
    message: str = ""

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL

    def summary(self):
        """JSON-friendly diagnostics (no block data)."""
        out = {
            "status": str(self.status),
            "objective_value": _num(self.objective_value),
            "dual_value": _num(self.dual_value),
            "gap": _num(self.gap),
            "primal_residual": _num(self.primal_residual),
            "dual_residual": _num(self.dual_residual),
            "iterations": int(self.iterations),
            "tolerances": dict(self.tolerances),
        }
        if self.certificate is not None:
            out["certificate"] = {
                k: (v if isinstance(v, str) else _num(v)) for k, v in self.certificate.items() if np.isscalar(v)
            }
        if self.message:
            out["message"] = self.message
        return out


def _num(v):
    v = float(v)
    return v if np.isfinite(v) else None
