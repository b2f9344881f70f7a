"""Shared generators for tests."""
from __future__ import annotations

import numpy as np

from pepsynth.basis import STAR
from pepsynth.classes import BoundedSubgradient, SmoothStronglyConvex, Triplet, TripletSet
from pepsynth.runners import GFOM, random_polyhedral, random_quadratic, run_method


def greedy_triplets(cls, N: int, d_active: int, d_extra: int, rng, offset: float = 1.0) -> TripletSet:
    """Triplets of a real function in ``cls`` meeting the projection precondition.

    The function depends on the first ``d_active`` coordinates only; the
    greedy method is run there, after which every point but ``x_0`` gets a
    random offset in the remaining coordinates.  Gradients have no
    component there, so the orthogonality conditions survive while the
    points leave the gradient span.
    """
    if isinstance(cls, BoundedSubgradient):
        f, x0 = random_polyhedral(d_active, cls.M, 1.0, rng)
    else:
        mu = cls.mu if d_extra == 0 else 0.0
        f, x0 = random_quadratic(d_active, mu, cls.L, 1.0, rng)
    traj = run_method(GFOM(), f, x0, N)
    d = d_active + d_extra
    pad = lambda v: np.concatenate([v, np.zeros(d_extra)])
    entries = {}
    for i in range(N + 1):
        x = pad(traj.xs[i])
        if i > 0 and d_extra:
            x[d_active:] = offset * rng.standard_normal(d_extra)
        entries[i] = Triplet(x, pad(traj.gs[i]), traj.fs[i])
    xs = pad(f.x_star)
    if d_extra:
        xs[d_active:] = offset * rng.standard_normal(d_extra)
    entries[STAR] = Triplet(xs, np.zeros(d), f.f_star)
    return TripletSet(N, entries)


def conjugate_gradient(Q, b, x0, N):
    """Plain CG iterates for ``Q x = b``."""
    x = np.array(x0, dtype=float)
    r = b - Q @ x
    p = r.copy()
    out = [x.copy()]
    for _ in range(N):
        rr = r @ r
        if rr == 0:
            out.append(x.copy())
            continue
        a = rr / (p @ Q @ p)
        x = x + a * p
        r_new = r - a * Q @ p
        p = r_new + (r_new @ r_new) / rr * p
        r = r_new
        out.append(x.copy())
    return np.array(out)


SMOOTH = SmoothStronglyConvex(0.0, 1.0)
NONSMOOTH = BoundedSubgradient(1.0)


def cvxopt_value(problem, tol: float = 1e-9):
    """Optimal value of ``problem`` from cvxopt's conic solver (reference route)."""
    from cvxopt import matrix, solvers

    from pepsynth.classes import EQ

    n, nF = problem.psd_side, problem.N + 2
    iu = [(i, j) for j in range(n) for i in range(j, n)]
    nv = len(iu) + nF

    def row(con):
        r = [con.A[i, i] if i == j else 2.0 * con.A[i, j] for i, j in iu]
        return np.array(r + list(con.a))

    le = [c for c in problem.constraints if c.sense != EQ]
    eq = [c for c in problem.constraints if c.sense == EQ]
    Gs = np.zeros((n * n, nv))
    for k, (i, j) in enumerate(iu):
        Gs[i + j * n, k] -= 1.0
        if i != j:
            Gs[j + i * n, k] -= 1.0
    c = np.concatenate([np.zeros(len(iu)), -problem.objective])
    # values only enter through differences; pin f_* = 0 so the
    # constraint matrix has full column rank, as cvxopt requires
    gauge = np.zeros(nv)
    gauge[-1] = 1.0
    Aeq = np.array([row(e) for e in eq] + [gauge])
    beq = np.array([-e.b for e in eq] + [0.0])
    kw = {"A": matrix(Aeq), "b": matrix(beq)}
    solvers.options.update({"show_progress": False, "abstol": tol, "reltol": tol, "feastol": tol,
                            "maxiters": 200})
    res = solvers.sdp(matrix(c), Gl=matrix(np.array([row(e) for e in le])),
                      hl=matrix(np.array([-e.b for e in le])), Gs=[matrix(Gs)], hs=[matrix(np.zeros((n, n)))],
                      **kw)
    return res["status"], -res["primal objective"]
