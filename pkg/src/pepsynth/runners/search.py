"""Line searches, subspace minimization and subgradient selection."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog, minimize, nnls

from .oracles import Oracle


class SearchError(RuntimeError):
    pass


def _dphi(oracle: Oracle, x, d, a):
    """Directional derivative of ``a -> f(x - a d)`` from the oracle's subgradient."""
    return -float(oracle.evaluate(x - a * d)[1] @ d)


def exact_line_search(oracle: Oracle, x, direction, tol: float = 1e-10, max_evals: int = 200) -> float:
    """Return ``a`` minimizing ``f(x - a * direction)`` over the real line.

    Quadratics are handled in closed form.  Otherwise the sign of the
    directional derivative is bisected on a doubling bracket, which also
    lands exactly on kinks of piecewise functions.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    nd = np.linalg.norm(d)
    if nd == 0:
        raise SearchError("line search along a zero direction")
    if oracle.quadratic is not None:
        Q = oracle.quadratic[0]
        g = oracle.evaluate(x)[1]
        curv = float(d @ Q @ d)
        slope = float(g @ d)
        if curv <= 1e-14 * nd**2 * max(1.0, np.abs(Q).max()):
            if abs(slope) <= tol * nd * max(1.0, np.linalg.norm(g)):
                return 0.0
            raise SearchError("function is unbounded below along the search direction")
        return slope / curv

    evals = 0
    g0 = oracle.evaluate(x)[1]
    scale = max(1.0, np.linalg.norm(g0))
    d0 = -float(g0 @ d)
    evals += 1
    if abs(d0) <= tol * nd * scale:
        return 0.0
    sign = 1.0 if d0 < 0 else -1.0
    lo, hi = 0.0, sign * max(1.0, np.linalg.norm(x)) / nd
    while sign * _dphi(oracle, x, d, hi) < 0:
        evals += 1
        lo, hi = hi, 2.0 * hi
        if abs(hi) * nd > 1e12 or evals >= max_evals:
            raise SearchError("line search bracket diverged; function may be unbounded below")
    evals += 1
    # invariant: sign * dphi(lo) < 0 <= sign * dphi(hi)
    while evals < max_evals:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        dm = _dphi(oracle, x, d, mid)
        evals += 1
        if abs(dm) <= tol * nd * scale:
            return mid
        if sign * dm < 0:
            lo = mid
        else:
            hi = mid
    # the minimizer lies in [lo, hi]; pick the better endpoint
    return lo if oracle.value(x - lo * d) <= oracle.value(x - hi * d) else hi


def _coordinate_sweeps(oracle, base, D, tol, max_sweeps):
    c = np.zeros(D.shape[1])
    x = base.copy()
    for _ in range(max_sweeps):
        for k in range(D.shape[1]):
            if np.linalg.norm(D[:, k]) == 0:
                continue
            a = exact_line_search(oracle, x, -D[:, k], tol)
            c[k] += a
            x = base + D @ c
        g = oracle.evaluate(x)[1]
        if np.all(np.abs(D.T @ g) <= tol * np.linalg.norm(D, axis=0) * max(1.0, np.linalg.norm(g))):
            return x, True
    return x, False


def _polyhedral_subspace(oracle, base, D):
    """Exact minimization of ``max(A x + b)`` over ``base + range(D)`` by LP."""
    vals, grads = oracle.pieces(base)
    k = D.shape[1]
    # min t  s.t.  vals + grads D c <= t
    A_ub = np.hstack([grads @ D, -np.ones((len(vals), 1))])
    res = linprog(
        np.r_[np.zeros(k), 1.0], A_ub=A_ub, b_ub=-vals, bounds=[(None, None)] * (k + 1),
        method="highs", options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 3:
        raise SearchError("function is unbounded below on the subspace")
    if res.status != 0:
        raise SearchError(f"subspace LP failed: {res.message}")
    return base + D @ res.x[:k]


def _max_type_subspace(oracle, base, D, tol):
    """Epigraph form ``min t s.t. piece_k(base + D c) <= t`` solved by SLSQP."""
    k = D.shape[1]
    f0 = oracle.value(base)

    def cons(z):
        vals, _ = oracle.pieces(base + D @ z[:k])
        return z[k] - vals

    def cons_jac(z):
        _, grads = oracle.pieces(base + D @ z[:k])
        return np.hstack([-grads @ D, np.ones((grads.shape[0], 1))])

    res = minimize(
        lambda z: z[k], np.r_[np.zeros(k), f0], jac=lambda z: np.r_[np.zeros(k), 1.0],
        constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}], method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 500},
    )
    x = base + D @ res.x[:k]
    if oracle.value(x) > f0:
        return base
    return x


def subspace_minimize(oracle: Oracle, base, dirs, tol: float = 1e-10, max_sweeps: int = 50,
                      cap: int = 6, return_status: bool = False):
    """Minimize ``f`` over ``base + span(dirs)``.

    Quadratics are solved in closed form and polyhedral functions by LP.
    Other max-type functions use an epigraph SQP; anything else falls back
    to coordinate line-search sweeps, limited to ``cap`` directions.
    """
    base = np.asarray(base, dtype=float)
    dirs = [np.asarray(v, dtype=float) for v in dirs]
    if not dirs:
        return (base, True) if return_status else base
    D = np.column_stack(dirs)
    converged = True
    if oracle.quadratic is not None:
        Q, b, _ = oracle.quadratic
        H = D.T @ Q @ D
        rhs = D.T @ (b - Q @ base)
        c = np.linalg.lstsq(H, rhs, rcond=None)[0]
        if np.linalg.norm(H @ c - rhs) > 1e-8 * max(1.0, np.linalg.norm(rhs)):
            raise SearchError("quadratic is unbounded below on the subspace")
        x = base + D @ c
    elif oracle.has_pieces and getattr(oracle, "norm_piece", None) is None:
        x = _polyhedral_subspace(oracle, base, D)
    elif oracle.has_pieces:
        x = _max_type_subspace(oracle, base, D, tol)
    else:
        if D.shape[1] > cap:
            raise SearchError(f"{D.shape[1]} search directions exceed the cap of {cap} for general oracles")
        x, converged = _coordinate_sweeps(oracle, base, D, tol, max_sweeps)
    return (x, converged) if return_status else x


def orthogonality_residual(g, dirs) -> float:
    """``max_k |<g, d_k>| / (||g|| ||d_k||)`` (zero for an empty list or zero ``g``)."""
    g = np.asarray(g, dtype=float)
    ng = np.linalg.norm(g)
    out = 0.0
    for d in dirs:
        d = np.asarray(d, dtype=float)
        nd = np.linalg.norm(d)
        if nd > 0 and ng > 0:
            out = max(out, abs(float(g @ d)) / (ng * nd))
    return out


def select_orthogonal_subgradient(oracle: Oracle, x, dirs, active_tol: float = 1e-8) -> np.ndarray:
    """Subgradient at ``x`` as orthogonal as possible to every direction in ``dirs``.

    For max-type oracles the convex combination of active-piece gradients
    minimizing ``||D^T g||`` is found by nonnegative least squares, with
    the simplex constraint enforced through a heavily weighted row.
    """
    x = np.asarray(x, dtype=float)
    if not oracle.has_pieces or not dirs:
        return oracle.evaluate(x)[1]
    G = oracle.active(x, active_tol)
    if G.shape[0] == 1:
        return G[0].copy()
    D = np.column_stack([d / np.linalg.norm(d) for d in dirs if np.linalg.norm(d) > 0])
    B = D.T @ G.T
    weight = 1e4 * max(1.0, np.abs(B).max())
    A = np.vstack([B, weight * np.ones((1, G.shape[0]))])
    rhs = np.r_[np.zeros(B.shape[0]), weight]
    w, _ = nnls(A, rhs)
    if w.sum() <= 0:
        return oracle.evaluate(x)[1]
    w = w / w.sum()
    g = G.T @ w
    # a combination that vanishes up to rounding certifies 0 in the
    # subdifferential; return it exactly so residuals are not pure noise
    if np.linalg.norm(g) <= 1e-10 * np.linalg.norm(G, axis=1).max():
        return np.zeros_like(g)
    return g
