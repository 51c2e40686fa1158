"""Primal-dual interior-point solver for block Hermitian programs.

Each Hermitian PSD block is realified to a real symmetric block of twice
the size; free blocks stay as plain real coordinates and only enter the
equality system. The real problem

    minimize  c'x   s.t.  A x = b,  x in S_+ x ... x S_+ x R^f

is solved through its homogeneous self-dual embedding

    A x - b tau = 0,   c tau - A'y - s = 0,   b'y - c'x - kappa = 0,

with Nesterov-Todd scaling and a Mehrotra predictor-corrector step. The
Schur complement ``A_c W A_c'`` is formed densely and bordered by the free
columns, giving the reduced KKT matrix ``[[M, A_f], [A_f', 0]]``.
"""

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..linalg import derealify, realified_projection, smat, svec, svec_to_vec, unhvec
from .problem import FREE, SdpSolution, Status

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
STEP_FRACTION = 0.98
RANK_TOL = 1e-10
# a stalled run is still reported optimal if its best iterate is this close
ACCEPT_FACTOR = 100.0
STALL_WINDOW = 6
DUALITY_SLACK = 1e-9


class _Layout:
    """Maps the hvec coordinates of a problem onto the internal real coordinates.

    Internal order: PSD blocks grouped by realified size (ascending, stable
    within a group), followed by all free coordinates.
    """

    def __init__(self, problem):
        self.problem = problem
        psd = [(k, bl) for k, bl in enumerate(problem.blocks) if bl.cone != FREE]
        free = [(k, bl) for k, bl in enumerate(problem.blocks) if bl.cone == FREE]
        sizes = sorted({2 * bl.size for _, bl in psd})
        self.groups = []
        rows, cols, vals = [], [], []
        pos = 0
        for s in sizes:
            n = s // 2
            members = [k for k, bl in psd if 2 * bl.size == s]
            p = s * (s + 1) // 2
            proj = realified_projection(n)  # (n^2, p)
            pr, pc = np.nonzero(proj)
            starts = pos + p * np.arange(len(members))
            for k, start in zip(members, starts):
                rows.append(problem.offsets[k] + pr)
                cols.append(start + pc)
                vals.append(proj[pr, pc])
            idx = starts[:, None] + np.arange(p)[None, :]
            self.groups.append((s, members, idx))
            pos += p * len(members)
        self.n_cone = pos
        self.nu = sum(s * len(members) for s, members, _ in self.groups)
        self.free_blocks = []
        for k, bl in free:
            m = bl.ncoords
            rows.append(problem.offsets[k] + np.arange(m))
            cols.append(pos + np.arange(m))
            vals.append(np.ones(m))
            self.free_blocks.append((k, pos))
            pos += m
        self.n = pos
        self.n_free = pos - self.n_cone
        nh = int(problem.offsets[-1])
        cat = (lambda a: np.concatenate(a)) if rows else (lambda a: np.zeros(0))
        self.T = sp.csr_matrix((cat(vals), (cat(rows).astype(int), cat(cols).astype(int))), shape=(nh, self.n))

    def identity(self):
        e = np.zeros(self.n)
        for s, _, idx in self.groups:
            e[idx] = svec(np.eye(s))[None, :]
        return e

    def blocks_from(self, x):
        """Hermitian block matrices encoded by an internal primal vector."""
        out = [None] * len(self.problem.blocks)
        for s, members, idx in self.groups:
            mats = derealify(smat(x[idx], s))
            for k, m in zip(members, mats):
                out[k] = m
        for k, start in self.free_blocks:
            n = self.problem.blocks[k].size
            out[k] = unhvec(x[start : start + n * n], n)
        return out


def _independent_rows(A, b):
    """Select a maximal independent row subset; detect inconsistent dependent rows.

    Returns ``(keep, certificate)``; ``certificate`` is a vector ``y`` with
    ``A'y = 0`` and ``b'y > 0`` when the equalities are inconsistent.
    """
    m = A.shape[0]
    if m == 0:
        return np.arange(0), None
    dense = A.toarray()
    _, r, piv = sla.qr(dense.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    scale = diag[0] if diag.size and diag[0] > 0 else 1.0
    rank = int(np.sum(diag > RANK_TOL * scale))
    keep = np.sort(piv[:rank])
    drop = np.setdiff1d(np.arange(m), keep)
    if drop.size == 0:
        return keep, None
    z, *_ = np.linalg.lstsq(dense[keep].T, dense[drop].T, rcond=None)
    mismatch = b[drop] - z.T @ b[keep]
    j = int(np.argmax(np.abs(mismatch)))
    if abs(mismatch[j]) > 1e-9 * (1.0 + np.linalg.norm(b)):
        y = np.zeros(m)
        y[drop[j]] = 1.0
        y[keep] = -z[:, j]
        if mismatch[j] < 0:
            y = -y
        return keep, y
    return keep, None


class _Scaling:
    """Nesterov-Todd scaling of one group of equally sized blocks."""

    def __init__(self, X, S):
        lx = np.linalg.cholesky(X)
        ls = np.linalg.cholesky(S)
        u, lam, vt = np.linalg.svd(np.swapaxes(ls, -1, -2) @ lx)
        self.lam = lam
        rs = 1.0 / np.sqrt(lam)
        self.R = (lx @ np.swapaxes(vt, -1, -2)) * rs[:, None, :]
        self.Rinv = (np.sqrt(lam)[:, :, None] * vt) @ np.linalg.inv(lx)
        self.G = self.R @ np.swapaxes(self.R, -1, -2)

    def kron_operator(self, s):
        g = self.G
        kr = np.einsum("bik,bjl->bijkl", g, g).reshape(g.shape[0], s * s, s * s)
        q = svec_to_vec(s)
        return q.T @ kr @ q

    def scale_x(self, dX):
        return self.Rinv @ dX @ np.swapaxes(self.Rinv, -1, -2)

    def scale_s(self, dS):
        return np.swapaxes(self.R, -1, -2) @ dS @ self.R

    def unscale(self, T):
        return self.R @ T @ np.swapaxes(self.R, -1, -2)


def _sym_product(a, b):
    return 0.5 * (a @ b + b @ a)


def _max_step(lam, dscaled):
    """Largest step keeping ``diag(lam) + t * dscaled`` PSD (inf if unbounded)."""
    r = 1.0 / np.sqrt(lam)
    w = r[:, :, None] * dscaled * r[:, None, :]
    mins = np.linalg.eigvalsh(w)[:, 0]
    worst = mins.min() if mins.size else 0.0
    return np.inf if worst >= 0 else -1.0 / worst


def _kkt_solver(M, A_f):
    """Solver for ``[[M, A_f], [A_f', 0]] w = r`` via Cholesky of ``M``.

    A tiny diagonal shift keeps the factorization alive once ``M`` becomes
    numerically singular; one refinement step against the unshifted
    system removes most of the perturbation.
    """
    m, nf = A_f.shape
    shift = 1e-14 * max(1.0, float(np.max(np.diag(M)))) if m else 0.0
    for attempt in range(4):
        try:
            chol = sla.cho_factor(M + shift * np.eye(m), lower=True, check_finite=False)
            break
        except np.linalg.LinAlgError:
            shift = max(shift * 100.0, 1e-12)
    else:
        raise np.linalg.LinAlgError("Schur complement is not positive definite")
    if nf:
        MiA = sla.cho_solve(chol, A_f, check_finite=False)
        S = A_f.T @ MiA
        S_lu = sla.lu_factor(S + 1e-14 * max(1.0, float(np.max(np.abs(np.diag(S))))) * np.eye(nf), check_finite=False)
        if not np.all(np.isfinite(S_lu[0])):
            raise np.linalg.LinAlgError("free-variable Schur complement is singular")

    def raw(r):
        r1, r2 = r[:m], r[m:]
        Mir1 = sla.cho_solve(chol, r1, check_finite=False)
        if not nf:
            return Mir1
        dxf = sla.lu_solve(S_lu, A_f.T @ Mir1 - r2, check_finite=False)
        return np.concatenate([Mir1 - MiA @ dxf, dxf])

    def apply(w):
        dy, dxf = w[:m], w[m:]
        return np.concatenate([M @ dy + A_f @ dxf, A_f.T @ dy])

    def solve_(r):
        with np.errstate(all="ignore"):
            w = raw(r)
            w += raw(r - apply(w))
        return w

    return solve_


def solve(problem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, verbose=False):
    """Solve a :class:`BlockSdpProblem` (maximization).

    Returns an :class:`SdpSolution`; never raises on infeasible or failed
    solves, the status field carries the verdict.
    """
    # diverging iterates are detected and discarded; their overflow is noise
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _solve(problem, tol, max_iter, verbose)


def _solve(problem, tol, max_iter, verbose):
    tolerances = {"gap": tol, "feasibility": tol, "max_iter": max_iter, "accept_factor": ACCEPT_FACTOR}
    layout = _Layout(problem)
    A_full = (problem.A @ layout.T).tocsr()
    b_full = problem.b.copy()
    c = -(layout.T.T @ problem.c)

    keep, farkas = _independent_rows(A_full, b_full)
    if farkas is not None:
        bty = float(b_full @ farkas)
        norm = np.linalg.norm(farkas)
        return SdpSolution(
            Status.PRIMAL_INFEASIBLE,
            y=farkas / bty,
            certificate={
                "kind": "farkas",
                "margin": float(bty / norm),
                "residual": float(np.linalg.norm(A_full.T @ farkas)) / norm,
            },
            tolerances=tolerances,
            message="inconsistent linear equalities",
        )
    A = A_full[keep]
    b = b_full[keep]
    # row equilibration
    rn = np.sqrt(np.asarray(A.multiply(A).sum(axis=1)).ravel())
    rn[rn == 0] = 1.0
    D = sp.diags(1.0 / rn)
    A = (D @ A).tocsr()
    b = b / rn
    m = b.size

    nc, nf = layout.n_cone, layout.n_free
    A_c = A[:, :nc].tocsr()
    A_cT = A_c.T.tocsr()
    A_f = A[:, nc:].toarray()
    c_c, c_f = c[:nc], c[nc:]
    nb, nrm_c = np.linalg.norm(b), np.linalg.norm(c)

    x = layout.identity()
    s = layout.identity()
    y = np.zeros(m)
    tau = kappa = 1.0
    nu = layout.nu

    def unpack(v):
        return [smat(v[idx], sz) for sz, _, idx in layout.groups]

    def pack(mats, out=None):
        out = np.zeros(nc) if out is None else out
        for (sz, _, idx), M in zip(layout.groups, mats):
            out[idx] = svec(M)
        return out

    status = Status.NUMERIC_FAILURE
    message = "iteration limit reached"
    it = 0
    stalls = 0
    diag = {}
    best = None
    since_best = 0
    for it in range(max_iter + 1):
        # -- residuals and termination ------------------------------------
        rp = A_c @ x[:nc] + A_f @ x[nc:] - b * tau
        aty = A_cT @ y
        aty_f = A_f.T @ y
        rd = np.concatenate([c_c * tau - aty - s[:nc], c_f * tau - aty_f])
        pobj = float(c @ x)
        dobj = float(b @ y)
        rg = dobj - pobj - kappa
        mu = (float(x[:nc] @ s[:nc]) + tau * kappa) / (nu + 1)

        pres = np.linalg.norm(rp) / tau / (1.0 + nb)
        dres = np.linalg.norm(rd) / tau / (1.0 + nrm_c)
        po, do = pobj / tau, dobj / tau
        gap = abs(po - do) / (1.0 + abs(po) + abs(do))
        diag = dict(pres=pres, dres=dres, gap=gap, po=po, do=do)
        if verbose:
            print(f"{it:3d} pobj {-po:+.9e} dobj {-do:+.9e} pres {pres:.1e} dres {dres:.1e} gap {gap:.1e} tau {tau:.1e} kap {kappa:.1e} mu {mu:.1e}")
        # reported dual bound must not undercut the primal value
        ordered = po - do >= -DUALITY_SLACK * max(1.0, abs(po))
        if pres <= tol and dres <= tol and gap <= tol and ordered:
            status = Status.OPTIMAL
            message = ""
            break
        merit = max(pres, dres, gap)
        if best is None or merit < best[0]:
            best = (merit, x.copy(), s.copy(), y.copy(), tau, kappa, dict(diag))
            since_best = 0
        else:
            since_best += 1
            if since_best >= STALL_WINDOW and best[0] <= ACCEPT_FACTOR * tol:
                message = "progress stalled"
                break
        if dobj > 0:
            resid = np.linalg.norm(np.concatenate([aty + s[:nc], aty_f])) / dobj
            if resid * (1.0 + nrm_c) <= tol:
                status = Status.PRIMAL_INFEASIBLE
                message = ""
                break
        if pobj < 0:
            resid = np.linalg.norm(A_c @ x[:nc] + A_f @ x[nc:]) / (-pobj)
            if resid * (1.0 + nb) <= tol:
                status = Status.DUAL_INFEASIBLE
                message = ""
                break
        if it == max_iter:
            break

        # -- scaling and reduced KKT -------------------------------------
        try:
            Xs, Ss = unpack(x), unpack(s)
            scal = [_Scaling(X, S) for X, S in zip(Xs, Ss)]
        except np.linalg.LinAlgError:
            message = "iterate left the cone interior"
            break
        kb = [sc.kron_operator(sz) for sc, (sz, _, _) in zip(scal, layout.groups)]
        parts = []
        for kg in kb:
            cnt, p, _ = kg.shape
            parts.append(sp.bsr_matrix((kg, np.arange(cnt), np.arange(cnt + 1)), shape=(cnt * p, cnt * p)))
        if parts:
            Kbd = sp.block_diag(parts, format="csr") if len(parts) > 1 else parts[0].tocsr()
            AK = (A_c @ Kbd).tocsr()
            M = (AK @ A_cT).toarray()
        else:
            Kbd = sp.csr_matrix((0, 0))
            AK = sp.csr_matrix((m, 0))
            M = np.zeros((m, m))
        try:
            kkt_solve = _kkt_solver(M, A_f)
        except np.linalg.LinAlgError:
            message = "singular reduced KKT system"
            break

        Kc = Kbd @ c_c
        AKc = AK @ c_c
        cKc = float(c_c @ Kc)
        v = kkt_solve(np.concatenate([b + AKc, c_f]))
        g = np.concatenate([b - AKc, -c_f])
        gv = float(g @ v)
        denom = gv + cKc + kappa / tau

        lams = [sc.lam for sc in scal]

        def direction(rcs, rk, eta):
            # rcs: per-group targets for lam o (dx~ + ds~)
            Ts = []
            for lam, rc in zip(lams, rcs):
                Ts.append(2.0 * rc / (lam[:, :, None] + lam[:, None, :]))
            z = pack([sc.unscale(T) for sc, T in zip(scal, Ts)])
            Krd = Kbd @ rd[:nc]
            ry = -eta * rp - A_c @ z + eta * (A_c @ Krd)
            u = kkt_solve(np.concatenate([ry, eta * rd[nc:]]))
            num = -eta * rg + float(c_c @ z) - eta * float(c_c @ Krd) + rk / tau - float(g @ u)
            dtau = num / denom
            w = u + v * dtau
            dy, dxf = w[:m], w[m:]
            ds_c = -(A_cT @ dy) + c_c * dtau + eta * rd[:nc]
            dx_c = z - Kbd @ ds_c
            dkappa = (rk - kappa * dtau) / tau
            dx = np.concatenate([dx_c, dxf])
            ds = np.concatenate([ds_c, np.zeros(nf)])
            return dx, ds, dy, dtau, dkappa

        def step_length(dx, ds, dtau, dkappa):
            dxs = [sc.scale_x(D) for sc, D in zip(scal, unpack(dx))]
            dss = [sc.scale_s(D) for sc, D in zip(scal, unpack(ds))]
            amax = np.inf
            for lam, a1, a2 in zip(lams, dxs, dss):
                amax = min(amax, _max_step(lam, a1), _max_step(lam, a2))
            if dtau < 0:
                amax = min(amax, -tau / dtau)
            if dkappa < 0:
                amax = min(amax, -kappa / dkappa)
            return amax, dxs, dss

        # predictor
        rcs = [-np.einsum("bi,ij->bij", lam**2, np.eye(lam.shape[1])) for lam in lams]
        dxa, dsa, dya, dta, dka = direction(rcs, -tau * kappa, 1.0)
        amax, dxs_a, dss_a = step_length(dxa, dsa, dta, dka)
        aa = min(1.0, amax)
        mu_aff = (
            float((x[:nc] + aa * dxa[:nc]) @ (s[:nc] + aa * dsa[:nc]))
            + (tau + aa * dta) * (kappa + aa * dka)
        ) / (nu + 1)
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # corrector
        rcs = []
        for lam, a1, a2 in zip(lams, dxs_a, dss_a):
            eye = np.eye(lam.shape[1])
            rcs.append(sigma * mu * eye - np.einsum("bi,ij->bij", lam**2, eye) - _sym_product(a1, a2))
        rk = sigma * mu - tau * kappa - dta * dka
        dx, ds, dy, dt, dk = direction(rcs, rk, 1.0 - sigma)
        amax, _, _ = step_length(dx, ds, dt, dk)
        alpha = min(1.0, STEP_FRACTION * amax)
        if not np.isfinite(alpha) or alpha < 1e-10:
            stalls += 1
            if stalls >= 3:
                message = "line search stalled"
                break
            alpha = max(alpha, 0.0) if np.isfinite(alpha) else 0.0
        else:
            stalls = 0

        x = x + alpha * dx
        s = s + alpha * ds
        y = y + alpha * dy
        tau = tau + alpha * dt
        kappa = kappa + alpha * dk

    if status is Status.NUMERIC_FAILURE and best is not None and best[0] <= ACCEPT_FACTOR * tol:
        _, x, s, y, tau, kappa, diag = best
        status = Status.OPTIMAL
        message = f"reduced accuracy ({message}); best residual {best[0]:.1e}"
    y_full = np.zeros(A_full.shape[0])
    y_full[keep] = y / rn
    sol = SdpSolution(status, iterations=it, tolerances=tolerances, message=message)
    sol.primal_residual = float(diag.get("pres", np.nan))
    sol.dual_residual = float(diag.get("dres", np.nan))
    sol.gap = float(diag.get("gap", np.nan))
    if status is Status.PRIMAL_INFEASIBLE:
        bty = float(b @ y)
        cert_y = y_full / bty
        s_cert = s / bty
        sol.y = cert_y
        sol.certificate = {
            "kind": "dual-ray",
            "margin": float(bty / np.linalg.norm(np.concatenate([y, s]))),
            "residual": float(np.linalg.norm(A_full.T @ cert_y + np.concatenate([s_cert[:nc], np.zeros(nf)]))),
        }
        sol.blocks = None
    elif status is Status.DUAL_INFEASIBLE:
        ctx = float(c @ x)
        ray = x / -ctx
        sol.blocks = layout.blocks_from(ray)
        sol.certificate = {
            "kind": "primal-ray",
            "margin": float(-ctx / np.linalg.norm(x)),
            "residual": float(np.linalg.norm(A_full @ ray)),
        }
    else:
        xs = x / tau
        sol.blocks = layout.blocks_from(xs)
        sol.y = y_full / tau
        sol.objective_value = -diag.get("po", np.nan)
        sol.dual_value = -diag.get("do", np.nan)
    return sol
