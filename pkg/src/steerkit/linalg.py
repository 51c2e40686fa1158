"""Small dense complex linear algebra: Hermitian structure, tensor products,
partial traces, spectra and the coordinate maps used by the SDP layer.

Operators are plain ``numpy`` arrays. Functions that accept a stack of
matrices operate on the trailing two axes.
"""

from functools import lru_cache

import numpy as np

from .errors import NumericFailure

#: validity tolerance for PSD / trace checks
VALIDITY_TOL = 1e-10
#: Hermiticity tolerance
SYMMETRY_TOL = 1e-12

_SQRT2 = np.sqrt(2.0)


def hermitize(m):
    """Return ``(m + m^dagger) / 2`` as a complex array."""
    m = np.asarray(m, dtype=complex)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {m.shape}")
    return 0.5 * (m + np.swapaxes(m.conj(), -1, -2))


def is_hermitian(m, tol=SYMMETRY_TOL):
    m = np.asarray(m)
    return bool(np.max(np.abs(m - np.swapaxes(m.conj(), -1, -2)), initial=0.0) <= tol)


def kron(a, b):
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(op, dims, side):
    """Trace out one factor of a bipartite operator.

    Parameters
    ----------
    op : (dA*dB, dA*dB) array
    dims : (dA, dB)
    side : {"first", "second"}
        The factor that is traced *out*; the result lives on the other one.
    """
    op = np.asarray(op)
    da, db = (int(d) for d in dims)
    if op.shape[-2:] != (da * db, da * db):
        raise ValueError(f"operator of shape {op.shape[-2:]} does not match dims {dims}")
    t = op.reshape(op.shape[:-2] + (da, db, da, db))
    if side == "first":
        return np.einsum("...ijik->...jk", t)
    if side == "second":
        return np.einsum("...ijkj->...ik", t)
    raise ValueError(f"side must be 'first' or 'second', not {side!r}")


def swap_parties(op, dims):
    """Exchange the two tensor factors of a bipartite operator."""
    da, db = dims
    t = np.asarray(op).reshape(da, db, da, db)
    return t.transpose(1, 0, 3, 2).reshape(da * db, da * db)


def eigvalsh(op):
    op = np.asarray(op)
    if not np.all(np.isfinite(op)):
        raise NumericFailure("eigensolver input contains non-finite entries")
    try:
        return np.linalg.eigvalsh(hermitize(op))
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"eigensolver did not converge: {exc}") from exc


def min_eigenvalue(op):
    return float(eigvalsh(op)[..., 0]) if np.ndim(op) == 2 else eigvalsh(op)[..., 0]


def is_psd(op, tol=VALIDITY_TOL):
    return bool(np.all(min_eigenvalue(op) >= -tol))


def check_density(rho, tol=VALIDITY_TOL):
    """Validate and return ``rho`` as a Hermitian density matrix.

    Raises ``ValueError`` if the trace deviates from 1 or the spectrum
    dips below ``-tol``.
    """
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho, 1e-9):
        raise ValueError("density matrix is not Hermitian")
    rho = hermitize(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix has trace {tr!r}, expected 1")
    lam = min_eigenvalue(rho)
    if lam < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lam:.3e}")
    return rho


def realify(h):
    """Real symmetric embedding ``[[Re H, -Im H], [Im H, Re H]]``."""
    h = np.asarray(h, dtype=complex)
    re, im = h.real, h.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def derealify(x):
    """Hermitian matrix encoded by the structured part of a realified matrix."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    a, b = x[..., :n, :n], x[..., :n, n:]
    c, d = x[..., n:, :n], x[..., n:, n:]
    return 0.5 * (a + d) + 0.5j * (c - b)


# -- orthonormal coordinates -------------------------------------------------
#
# hvec: n x n Hermitian -> R^(n^2), layout [diag, sqrt2*Re(upper), sqrt2*Im(upper)]
# svec: n x n real symmetric -> R^(n(n+1)/2), layout [diag, sqrt2*upper]
# Both are isometries for the trace inner product.


@lru_cache(maxsize=None)
def _upper(n):
    return np.triu_indices(n, 1)


def hvec(h):
    h = np.asarray(h)
    n = h.shape[-1]
    iu, ju = _upper(n)
    diag = np.diagonal(h, axis1=-2, axis2=-1).real
    up = h[..., iu, ju]
    return np.concatenate([diag, _SQRT2 * up.real, _SQRT2 * up.imag], axis=-1)


def unhvec(v, n):
    v = np.asarray(v, dtype=float)
    iu, ju = _upper(n)
    k = len(iu)
    out = np.zeros(v.shape[:-1] + (n, n), dtype=complex)
    idx = np.arange(n)
    out[..., idx, idx] = v[..., :n]
    up = (v[..., n : n + k] + 1j * v[..., n + k :]) / _SQRT2
    out[..., iu, ju] = up
    out[..., ju, iu] = up.conj()
    return out


def svec(s):
    s = np.asarray(s, dtype=float)
    n = s.shape[-1]
    iu, ju = _upper(n)
    return np.concatenate([np.diagonal(s, axis1=-2, axis2=-1), _SQRT2 * s[..., iu, ju]], axis=-1)


def smat(v, n):
    v = np.asarray(v, dtype=float)
    iu, ju = _upper(n)
    out = np.zeros(v.shape[:-1] + (n, n))
    idx = np.arange(n)
    out[..., idx, idx] = v[..., :n]
    out[..., iu, ju] = v[..., n:] / _SQRT2
    out[..., ju, iu] = v[..., n:] / _SQRT2
    return out


@lru_cache(maxsize=None)
def hermitian_basis(n):
    """Orthonormal Hermitian basis ``F`` with ``hvec(X)[c] = trace(F[c] @ X)``."""
    return unhvec(np.eye(n * n), n)


@lru_cache(maxsize=None)
def svec_to_vec(n):
    """Matrix ``Q`` (n^2 x n(n+1)/2) with ``vec(smat(v)) = Q @ v``."""
    p = n * (n + 1) // 2
    return smat(np.eye(p), n).reshape(p, n * n).T.copy()


@lru_cache(maxsize=None)
def realified_projection(n):
    """Matrix ``P`` with ``hvec(derealify(X)) = P @ svec(X)`` for symmetric ``X`` of size 2n.

    Row ``c`` is ``svec(realify(F_c)) / 2``, so ``<A, H> = hvec(A) . P svec(X)``
    whenever ``X`` realifies ``H``.
    """
    return svec(realify(hermitian_basis(n))) / 2.0


def linear_map_matrix(fn, n_in, n_out):
    """Matrix of a Hermiticity-preserving linear map in hvec coordinates.

    ``fn`` must accept a stack of ``(k, n_in, n_in)`` Hermitian matrices and
    return a stack of ``(k, n_out, n_out)``.
    """
    images = fn(hermitian_basis(n_in))
    return hvec(images).T
