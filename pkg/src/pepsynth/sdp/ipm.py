"""Dense primal-dual interior-point method for one PSD block plus LP and
free variables.

Standard form (minimization)::

    min  <C, X> + c_l^T x_l + c_u^T x_u
    s.t. Acal(X) + A_l x_l + A_u x_u = b,    X PSD,  x_l >= 0,  x_u free

with dual ``max b^T y`` s.t. ``Acal^*(y) + Z = C``, ``A_l^T y + z_l = c_l``,
``A_u^T y = c_u``.  ``A_l`` is a column selection: slack ``x_l[k]`` enters
row ``lp_rows[k]`` with coefficient one.

Search directions use Nesterov-Todd scaling with a Mehrotra
predictor-corrector; the infeasible starting point follows the usual
scaled-identity recipe.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import kernels


@dataclass
class IpmResult:
    X: np.ndarray
    x_l: np.ndarray
    x_u: np.ndarray
    y: np.ndarray
    Z: np.ndarray
    z_l: np.ndarray
    status: str
    iterations: int
    pobj: float
    dobj: float
    history: list = field(default_factory=list)
    message: str = ""


class SparseSymRows:
    """Symmetric constraint matrices stored as a coordinate list per row."""

    def __init__(self, mats):
        self.n = mats[0].shape[0] if mats else 0
        rows, cols, vals, indptr = [], [], [], [0]
        for A in mats:
            r, c = np.nonzero(A)
            rows.append(r)
            cols.append(c)
            vals.append(A[r, c])
            indptr.append(indptr[-1] + len(r))
        cat = lambda parts, dt: np.ascontiguousarray(np.concatenate(parts) if parts else np.zeros(0), dtype=dt)
        self.rows = cat(rows, np.int64)
        self.cols = cat(cols, np.int64)
        self.vals = cat(vals, np.float64)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        m = len(mats)
        which = np.repeat(np.arange(m), np.diff(self.indptr))
        self.flat = sp.csr_matrix(
            (self.vals, (which, self.rows * self.n + self.cols)), shape=(m, self.n * self.n)
        )

    def apply(self, X):
        return self.flat @ X.ravel()

    def adjoint(self, y):
        S = (self.flat.T @ y).reshape(self.n, self.n)
        return 0.5 * (S + S.T)

    def schur(self, W):
        return kernels.schur_complement(
            np.ascontiguousarray(W), self.indptr, self.rows, self.cols, self.vals
        )


def _max_step(L, D):
    """Largest ``a <= huge`` with ``L L^T + a D`` PSD."""
    if L.shape[0] == 0:
        return np.inf
    Li = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    E = Li @ D @ Li.T
    lam = np.linalg.eigvalsh(0.5 * (E + E.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


_LU_RCOND = 1e-12


class _Solver:
    def __init__(self, fn, cond):
        self.fn, self.cond = fn, cond

    def __call__(self, r):
        return self.fn(r)


def _truncated_eigen(M, rtol):
    w, V = np.linalg.eigh(M)
    keep = np.abs(w) > rtol * np.abs(w).max()
    winv = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
    cond = float(np.abs(w).max() / np.abs(w[keep]).min()) if keep.any() else np.inf
    return _Solver(lambda r: V @ (winv * (V.T @ r)), cond)


def _factor_symmetric(M, rtol, rcond_min):
    """LU solve when ``M`` is well conditioned, truncated eigen-solve otherwise.

    The Newton systems turn singular when the dual optimum is not unique.
    They stay consistent, so the pseudo-inverse gives the least-norm step.
    """
    lu, piv, info = sla.lapack.dgetrf(M)
    if info == 0:
        rcond, _ = sla.lapack.dgecon(lu, np.linalg.norm(M, 1), norm="1")
        if rcond > rcond_min:
            return _Solver(lambda r: sla.lu_solve((lu, piv), r), 1.0 / rcond)
    return _truncated_eigen(M, rtol)


def _pinv_solver(M, rtol):
    """Equilibrated solver for a symmetric PSD matrix."""
    d = np.sqrt(np.abs(np.diag(M)))
    d[d == 0] = 1.0
    inner = _factor_symmetric(M / d[:, None] / d[None, :], rtol, _LU_RCOND)
    return lambda r: inner(r / d) / d


def _max_step_lp(x, dx):
    neg = dx < 0
    if not neg.any():
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def solve_standard_form(
    Acal: SparseSymRows,
    b,
    C,
    lp_rows,
    c_l,
    A_u,
    c_u,
    gap_tol=1e-9,
    feas_tol=1e-9,
    max_iterations=200,
    refine_steps=2,
    pinv_rtol=1e-16,
    stall_iterations=15,
) -> IpmResult:
    n = Acal.n
    m = len(b)
    b = np.asarray(b, float)
    lp_rows = np.asarray(lp_rows, dtype=int)
    c_l = np.asarray(c_l, float)
    A_u = np.asarray(A_u, float).reshape(m, -1)
    c_u = np.asarray(c_u, float)
    nl, nu = len(lp_rows), A_u.shape[1]
    I = np.eye(n)

    def A_l(v):
        out = np.zeros(m)
        np.add.at(out, lp_rows, v)
        return out

    # starting point
    normA = np.sqrt(np.asarray(Acal.flat.multiply(Acal.flat).sum(axis=1)).ravel())
    xi = max(10.0, np.sqrt(n), n * np.max((1 + np.abs(b)) / (1 + normA)) if m else 0.0)
    eta = max(10.0, np.sqrt(n), normA.max() if m else 0.0, np.linalg.norm(C))
    X, Z = xi * I, eta * I
    x_l, z_l = xi * np.ones(nl), eta * np.ones(nl)
    x_u, y = np.zeros(nu), np.zeros(m)

    nb = 1.0 + np.linalg.norm(b)
    nc = 1.0 + np.sqrt(np.linalg.norm(C) ** 2 + np.linalg.norm(c_l) ** 2 + np.linalg.norm(c_u) ** 2)
    history = []
    best = (np.inf, -1, None)
    status, message = "max-iterations", ""
    it = 0
    dof = n + nl

    for it in range(max_iterations + 1):
        rp = b - Acal.apply(X) - A_l(x_l) - A_u @ x_u
        Rd = C - Acal.adjoint(y) - Z
        rdl = c_l - y[lp_rows] - z_l
        rdu = c_u - A_u.T @ y
        pobj = float(np.sum(C * X) + c_l @ x_l + c_u @ x_u)
        dobj = float(b @ y)
        comp = float(np.sum(X * Z) + x_l @ z_l)
        mu = comp / dof
        pinf = np.linalg.norm(rp) / nb
        dinf = np.sqrt(np.sum(Rd**2) + rdl @ rdl + rdu @ rdu) / nc
        rgap = max(abs(pobj - dobj), comp) / (1.0 + abs(pobj) + abs(dobj))
        history.append((it, pobj, dobj, pinf, dinf, rgap))
        merit = max(pinf / feas_tol, dinf / feas_tol, rgap / gap_tol)
        if merit < best[0]:
            best = (merit, it, (X, x_l, x_u, y, Z, z_l, pobj, dobj))
        if merit <= 1.0:
            status = "optimal"
            break
        if it == max_iterations:
            break
        if it - best[1] > stall_iterations:
            status, message = "numerical-failure", "no progress"
            break
        # infeasibility heuristics: diverging objectives with residual stalls
        if dobj > 1e10 * (1 + abs(pobj)) and dinf < 1e-6:
            status, message = "infeasible", "primal infeasible (dual objective diverges)"
            break
        if pobj < -1e10 * (1 + abs(dobj)) and pinf < 1e-6:
            status, message = "infeasible", "dual infeasible (primal objective diverges)"
            break

        try:
            Lx = np.linalg.cholesky(X)
            Lz = np.linalg.cholesky(Z)
        except np.linalg.LinAlgError:
            status, message = "numerical-failure", "iterate left the PSD cone"
            break
        Uz, s, Vt = np.linalg.svd(Lz.T @ Lx)
        if s.size and s.min() <= 0:
            status, message = "numerical-failure", "degenerate scaling point"
            break
        sq = np.sqrt(s)
        Gnt = (Lx @ Vt.T) / sq
        Ginv = (sq[:, None] * Vt) @ sla.solve_triangular(Lx, I, lower=True)
        W = Gnt @ Gnt.T
        W = 0.5 * (W + W.T)
        dvec = s

        Mmat = Acal.schur(W)
        dl = x_l / z_l
        np.add.at(Mmat, (lp_rows, lp_rows), dl)
        Mmat = 0.5 * (Mmat + Mmat.T)
        Kaug = np.zeros((m + nu, m + nu))
        Kaug[:m, :m] = Mmat
        Kaug[:m, m:] = A_u
        Kaug[m:, :m] = A_u.T
        # The Schur system turns singular when the dual optimum is not
        # unique; it stays consistent, so an equilibrated truncated
        # eigen-solve plus refinement is used instead of a plain LU.
        dk = np.sqrt(np.abs(np.diag(Kaug)))
        dk[:m][dk[:m] == 0] = 1.0
        if nu:
            dk[m:] = np.linalg.norm(Kaug[:m, m:] / dk[:m, None], axis=0)
        dk[dk == 0] = 1.0
        Ks = Kaug / dk[:, None] / dk[None, :]
        Ks = 0.5 * (Ks + Ks.T)
        try:
            base = _factor_symmetric(Ks, pinv_rtol, _LU_RCOND)
        except np.linalg.LinAlgError:
            status, message = "numerical-failure", "eigensolver failed on the Newton system"
            break
        kcond = base.cond

        Mx = Acal.schur(X) + A_u @ A_u.T
        np.add.at(Mx, (lp_rows, lp_rows), x_l**2)
        xsolve = _pinv_solver(0.5 * (Mx + Mx.T), pinv_rtol)

        def ksolve(rhs):
            sol = base(rhs / dk) / dk
            for _ in range(refine_steps):
                sol = sol + base((rhs - Kaug @ sol) / dk) / dk
            return sol

        newton_res = [0.0]
        WRdW = W @ Rd @ W
        ArcD = Acal.apply(WRdW)

        def direction(Rtil, rc_l):
            U = Rtil / (dvec[:, None] + dvec[None, :])
            Rc = Gnt @ U @ Gnt.T
            Rc = 0.5 * (Rc + Rc.T)
            h = rp - Acal.apply(Rc) + ArcD - A_l(rc_l / z_l - dl * rdl)
            sol = ksolve(np.concatenate([h, rdu]))
            dy, dxu = sol[:m], sol[m:]
            dZ = Rd - Acal.adjoint(dy)
            dX = Gnt @ (U - Gnt.T @ dZ @ Gnt) @ Gnt.T
            dX = 0.5 * (dX + dX.T)
            dzl = rdl - dy[lp_rows]
            dxl = (rc_l - x_l * dzl) / z_l
            # refine against the primal equation, the one that suffers
            # from cancellation in W dZ W once the scaling is ill-conditioned
            zero_u = np.zeros(nu)
            for _ in range(refine_steps):
                r1 = rp - Acal.apply(dX) - A_l(dxl) - A_u @ dxu
                sol = ksolve(np.concatenate([r1, zero_u]))
                ey, exu = sol[:m], sol[m:]
                eZ = -Acal.adjoint(ey)
                eX = -(Gnt @ (Gnt.T @ eZ @ Gnt) @ Gnt.T)
                ezl = -ey[lp_rows]
                dy, dxu, dZ, dzl = dy + ey, dxu + exu, dZ + eZ, dzl + ezl
                dX = dX + 0.5 * (eX + eX.T)
                dxl = dxl - x_l * ezl / z_l
            # whatever is left is removed by a least-norm correction in the
            # metric of the current primal point, so that small components
            # only receive proportionally small corrections
            r1 = rp - Acal.apply(dX) - A_l(dxl) - A_u @ dxu
            delta = xsolve(r1)
            eX = X @ Acal.adjoint(delta) @ X
            dX = dX + 0.5 * (eX + eX.T)
            dxl = dxl + x_l**2 * delta[lp_rows]
            dxu = dxu + A_u.T @ delta
            newton_res[0] = np.linalg.norm(Acal.apply(dX) + A_l(dxl) + A_u @ dxu - rp) / nb
            return dX, dxl, dxu, dy, dZ, dzl

        def steps(dX, dxl, dZ, dzl):
            ap = min(_max_step(Lx, dX), _max_step_lp(x_l, dxl))
            ad = min(_max_step(Lz, dZ), _max_step_lp(z_l, dzl))
            return ap, ad

        D2 = np.diag(dvec**2)
        # predictor
        dX, dxl, dxu, dy, dZ, dzl = direction(-2.0 * D2, -x_l * z_l)
        ap, ad = steps(dX, dxl, dZ, dzl)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = (np.sum((X + ap * dX) * (Z + ad * dZ)) + (x_l + ap * dxl) @ (z_l + ad * dzl)) / dof
        sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0
        # corrector
        dXs = Ginv @ dX @ Ginv.T
        dZs = Gnt.T @ dZ @ Gnt
        corr = dXs @ dZs
        Rtil = 2.0 * sigma * mu * I - 2.0 * D2 - (corr + corr.T)
        rc_l = sigma * mu - x_l * z_l - dxl * dzl
        dX, dxl, dxu, dy, dZ, dzl = direction(Rtil, rc_l)
        ap, ad = steps(dX, dxl, dZ, dzl)
        gamma = 0.9 + 0.09 * min(1.0, ap, ad)
        ap, ad = min(1.0, gamma * ap), min(1.0, gamma * ad)
        if max(ap, ad) < 1e-10:
            status, message = "numerical-failure", "step length collapsed"
            break

        # backtrack if rounding pushed the new point out of the cone
        for _ in range(30):
            Xn = X + ap * dX
            Xn = 0.5 * (Xn + Xn.T)
            try:
                np.linalg.cholesky(Xn)
                break
            except np.linalg.LinAlgError:
                ap *= 0.8
        for _ in range(30):
            Zn = Z + ad * dZ
            Zn = 0.5 * (Zn + Zn.T)
            try:
                np.linalg.cholesky(Zn)
                break
            except np.linalg.LinAlgError:
                ad *= 0.8
        X, Z = Xn, Zn
        history[-1] = history[-1] + (newton_res[0], ap, ad, kcond)
        x_l = x_l + ap * dxl
        x_u = x_u + ap * dxu
        y = y + ad * dy
        z_l = z_l + ad * dzl

    if status != "optimal" and best[2] is not None:
        # report the most accurate iterate seen, with an honest status
        X, x_l, x_u, y, Z, z_l, pobj, dobj = best[2]
        if best[0] <= 1.0:
            status = "optimal"
    return IpmResult(X, x_l, x_u, y, Z, z_l, status, it, pobj, dobj, history, message)
