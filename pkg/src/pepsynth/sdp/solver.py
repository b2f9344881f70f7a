"""Solve performance-estimation SDPs with the interior-point method."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from ..classes import LE
from ..pep import INFEASIBLE, NUMERICAL_FAILURE, OPTIMAL, SdpProblem, SdpSolution
from .ipm import SparseSymRows, solve_standard_form


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-9
    feas_tol: float = 1e-9
    max_iterations: int = 200
    scaling: bool = True

    def __post_init__(self):
        if not (self.gap_tol > 0 and self.feas_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class SolverError(RuntimeError):
    pass


def _row_scales(problem: SdpProblem, enabled: bool) -> np.ndarray:
    m = len(problem.constraints)
    if not enabled:
        return np.ones(m)
    s = np.ones(m)
    for k, c in enumerate(problem.constraints):
        nrm = max(np.linalg.norm(c.A), np.linalg.norm(c.a))
        if nrm > 0:
            s[k] = 1.0 / nrm
    return s


def free_gram_indices(problem: SdpProblem, tol: float = 0.0) -> np.ndarray:
    """Gram indices whose mutual block is untouched by every constraint.

    For such an index set ``J`` the entries ``G[J, J]`` can grow without
    bound, so the dual slack vanishes on ``J`` and the dual has no interior
    point.  Only the remaining block needs to be PSD; the cross entries
    ``G[J, ~J]`` become free variables.
    """
    n = problem.psd_side
    if not problem.constraints:
        return np.arange(n)
    absA = sum(np.abs(c.A) for c in problem.constraints)
    free = [k for k in range(n) if absA[k, k] <= tol]
    # greedily drop indices coupled to another candidate
    changed = True
    while changed:
        changed = False
        for k in list(free):
            if any(absA[k, j] > tol for j in free if j != k):
                free.remove(k)
                changed = True
                break
    return np.array(free, dtype=int)


def _factor(G: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (G + G.T))
    top = max(float(w.max(initial=0.0)), 0.0)
    pos = w > rtol * top if top > 0 else np.zeros(len(w), dtype=bool)
    return (V[:, pos] * np.sqrt(w[pos])).T


def _recover_free_part(problem, scale, keep, free, Gk, F0, cross0):
    """Rebuild a bounded PSD Gram matrix from the reduced solution.

    With the block ``Gk = P^T P`` fixed, every constraint is linear in the
    value vector and in ``Q`` where ``G[keep, free] = P^T Q``.  One LP
    maximizes the objective, a second keeps ``(Q, F)`` small at that value,
    and a final least-squares step makes the active rows exact.
    Returns ``(G, F)`` or ``None`` when the LPs fail.
    """
    n, nF, nJ = problem.psd_side, problem.N + 2, len(free)
    P = _factor(Gk)
    if P.shape[0] == 0:
        P = np.zeros((1, len(keep)))
    r = P.shape[0]
    nz = r * nJ + nF
    rows, rhs, eq = [], [], []
    for s, con in zip(scale, problem.constraints):
        coefQ = 2.0 * (P @ con.A[np.ix_(keep, free)]).ravel()
        rows.append(s * np.concatenate([coefQ, con.a]))
        Akk = con.A[np.ix_(keep, keep)]
        rhs.append(-s * (float(np.sum(Akk * (P.T @ P))) + con.b))
        eq.append(con.sense != LE)
    rows, rhs, eq = np.array(rows).reshape(-1, nz), np.array(rhs), np.array(eq, dtype=bool)
    c = np.concatenate([np.zeros(r * nJ), problem.objective])
    lp_opts = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}

    def lp(cost, A_ub, b_ub, nvar):
        res = linprog(
            cost, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
            A_eq=A_eq if eq.any() else None, b_eq=b_eq if eq.any() else None,
            bounds=[(None, None)] * nvar, method="highs", options=lp_opts,
        )
        return res.x if res.status == 0 else None

    A_eq, b_eq = rows[eq], rhs[eq]
    z1 = lp(-c, rows[~eq], rhs[~eq], nz)
    if z1 is None:
        return None
    best = float(c @ z1)
    # minimize sum |z| subject to keeping the objective
    I = np.eye(nz)
    A_ub = np.vstack([
        np.hstack([rows[~eq], np.zeros((int((~eq).sum()), nz))]),
        np.hstack([I, -I]),
        np.hstack([-I, -I]),
        np.concatenate([-c, np.zeros(nz)])[None, :],
    ])
    b_ub = np.concatenate([rhs[~eq], np.zeros(2 * nz), [-best + 1e-12 * max(1.0, abs(best))]])
    A_eq = np.hstack([A_eq, np.zeros((A_eq.shape[0], nz))])
    z2 = lp(np.concatenate([np.zeros(nz), np.ones(nz)]), A_ub, b_ub, 2 * nz)
    z = z1 if z2 is None else z2[:nz]

    # snap near-active rows to exact equality
    slack = rows @ z - rhs
    act = eq | (slack > -1e-8 * (1.0 + np.abs(rhs)))
    if act.any():
        z = z + np.linalg.lstsq(rows[act], -slack[act], rcond=1e-13)[0]
    Q = z[: r * nJ].reshape(r, nJ)
    full = np.zeros((r, n))
    full[:, keep] = P
    full[:, free] = Q
    return full.T @ full, z[r * nJ:]


# Newton-system settings tried in turn until one reaches the tolerances:
# (flip the row equilibration, eigenvalue truncation of the Schur solve)
_ATTEMPTS = ((False, 1e-14), (True, 1e-14), (False, 1e-16), (True, 1e-12))


def _merit(sol: SdpSolution, opts: SolverOptions) -> float:
    hist = sol.diagnostics.get("history") or []
    return min((max(h[3] / opts.feas_tol, h[4] / opts.feas_tol, h[5] / opts.gap_tol) for h in hist),
               default=np.inf)


def solve(problem: SdpProblem, opts: SolverOptions = SolverOptions()) -> SdpSolution:
    """Maximize ``c^T F`` over the problem's constraints.

    Multipliers in ``SdpSolution.dual`` follow the Lagrangian convention
    ``lambda_k >= 0`` for ``<=`` rows, so that the dual slack matrix is
    ``sum_k lambda_k A_k`` and the dual objective ``-sum_k lambda_k b_k``.

    Near-degenerate problems occasionally stall the interior-point method;
    those are retried with a different equilibration and Schur-solve
    truncation, and the most accurate attempt is reported.
    """
    best = None
    for k, (flip, rtol) in enumerate(_ATTEMPTS):
        sol = _solve_once(problem, opts, opts.scaling != flip, rtol)
        sol.diagnostics["attempts"] = k + 1
        if sol.status in (OPTIMAL, INFEASIBLE):
            return sol
        if best is None or _merit(sol, opts) < _merit(best, opts):
            best = sol
    return best


def _solve_once(problem: SdpProblem, opts: SolverOptions, scaling: bool, pinv_rtol: float) -> SdpSolution:
    cons = problem.constraints
    m = len(cons)
    n = problem.psd_side
    nF = problem.N + 2
    c = problem.objective
    scale = _row_scales(problem, scaling)

    free = free_gram_indices(problem)
    keep = np.setdiff1d(np.arange(n), free)
    nk = len(keep)
    mats = [s * con.A[np.ix_(keep, keep)] for s, con in zip(scale, cons)]
    # columns: F values, then the cross entries G[keep, free] (row-major)
    cross_cols = np.array(
        [2.0 * s * con.A[np.ix_(keep, free)].ravel() for s, con in zip(scale, cons)]
    ).reshape(m, nk * len(free))
    Arows = np.array([s * con.a for s, con in zip(scale, cons)]).reshape(m, nF)
    Afree = np.hstack([Arows, cross_cols])
    cfree = np.concatenate([c, np.zeros(cross_cols.shape[1])])
    b = np.array([-s * con.b for s, con in zip(scale, cons)])
    lp_rows = np.array([k for k, con in enumerate(cons) if con.sense == LE], dtype=int)

    # free variables only enter through Afree; restrict them to its row space
    if m:
        _, sv, Vt = np.linalg.svd(Afree, full_matrices=False)
        r = int(np.sum(sv > 1e-12 * max(1.0, sv.max(initial=0.0))))
        Vr = Vt[:r].T
    else:
        Vr = np.zeros((Afree.shape[1], 0))
    if np.linalg.norm(cfree - Vr @ (Vr.T @ cfree)) > 1e-10 * max(1.0, np.linalg.norm(c)):
        return SdpSolution(
            np.zeros((n, n)), np.zeros(nF), {}, np.inf, np.inf, INFEASIBLE, 0,
            {"message": "objective unbounded: c is not in the span of the value coefficients"},
        )

    res = solve_standard_form(
        SparseSymRows(mats), b, np.zeros((nk, nk)), lp_rows, np.zeros(len(lp_rows)),
        Afree @ Vr, -(Vr.T @ cfree),
        gap_tol=opts.gap_tol, feas_tol=opts.feas_tol, max_iterations=opts.max_iterations,
        pinv_rtol=pinv_rtol,
    )

    u = Vr @ res.x_u
    F = u[:nF]
    cross = u[nF:].reshape(nk, len(free))
    G = None
    if len(free):
        rec = _recover_free_part(problem, scale, keep, free, res.X, F, cross)
        if rec is not None:
            G, F = rec
    if G is None:
        G = np.zeros((n, n))
        G[np.ix_(keep, keep)] = res.X
        G[np.ix_(keep, free)] = cross
        G[np.ix_(free, keep)] = cross.T
    lam = -res.y * scale
    dual = {con.tag: float(lam[k]) for k, con in enumerate(cons)}
    primal_obj = float(c @ F)
    dual_obj = float(-sum(lam[k] * con.b for k, con in enumerate(cons)))

    viol = [
        max(con.evaluate(G, F), 0.0) if con.sense == LE else abs(con.evaluate(G, F))
        for con in cons
    ]
    S = sum((lam[k] * con.A for k, con in enumerate(cons)), np.zeros((n, n)))
    eq_res = c - sum((lam[k] * con.a for k, con in enumerate(cons)), np.zeros(nF))
    diag = {
        "message": res.message,
        "primal_residual": float(max(viol, default=0.0)),
        "dual_psd_min_eig": float(np.linalg.eigvalsh(S)[0]) if n else 0.0,
        "dual_equality_residual": float(np.abs(eq_res).max(initial=0.0)),
        "gram_min_eig": float(np.linalg.eigvalsh(G)[0]) if n else 0.0,
        "free_gram_indices": free.tolist(),
        "history": res.history,
        "ipm_pobj": res.pobj,
        "ipm_dobj": res.dobj,
    }
    status = res.status
    if status == OPTIMAL and not (np.all(np.isfinite(G)) and np.all(np.isfinite(lam))):
        status = NUMERICAL_FAILURE
    return SdpSolution(G, F, dual, primal_obj, dual_obj, status, res.iterations, diag)


def solve_value(problem: SdpProblem, opts: SolverOptions = SolverOptions()) -> float:
    """Optimal value, raising :class:`SolverError` unless the solve succeeded."""
    sol = solve(problem, opts)
    if sol.status != OPTIMAL:
        raise SolverError(f"solver status {sol.status}: {sol.diagnostics.get('message', '')}")
    return sol.primal_objective
