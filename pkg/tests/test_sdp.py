import os
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import NONSMOOTH, SMOOTH, cvxopt_value, greedy_triplets
from pepsynth.certificates import nonsmooth_certificate, smooth_certificate, theta_sequence
from pepsynth.classes import LE, AffineConstraint, SmoothStronglyConvex
from pepsynth.experiments import fgm_canonical
from pepsynth.pep import OPTIMAL, SdpProblem, build_fixed_step_pep, build_gfom_pep, gram_from_triplets
from pepsynth.sdp import (
    CertificateError,
    DualCertificate,
    SolverOptions,
    extract_certificate,
    free_gram_indices,
    solve,
    solve_value,
    verify_certificate,
)
from pepsynth.sdp import _schur_py
from pepsynth.sdp.ipm import SparseSymRows


class TestSolver:
    def test_capped_objective(self):
        c = np.array([0.0, 1.0, -1.0])
        con = AffineConstraint(np.zeros((4, 4)), c.copy(), 0.0, LE, "cap")
        P = SdpProblem(1, c, [con], 4)
        sol = solve(P)
        assert sol.status == OPTIMAL and abs(sol.value) < 1e-8

    def test_smooth_n1(self):
        assert abs(solve_value(build_gfom_pep(SMOOTH, 1, 1.0)) - 0.125) < 1e-6

    def test_nonsmooth_n3(self):
        assert abs(solve_value(build_gfom_pep(NONSMOOTH, 3, 1.0)) - 0.5) < 1e-6

    def test_unbounded_objective_detected(self):
        c = np.array([1.0, 0.0])
        P = SdpProblem(0, c, [AffineConstraint(np.eye(2), np.zeros(2), -1.0, LE, "t")], 2)
        sol = solve(P)
        assert sol.status != OPTIMAL

    def test_solution_reports_residuals(self):
        P = build_gfom_pep(SMOOTH, 4, 1.0)
        opts = SolverOptions()
        sol = solve(P, opts)
        d = sol.diagnostics
        assert d["primal_residual"] <= opts.feas_tol
        assert d["dual_psd_min_eig"] >= -opts.feas_tol
        assert d["dual_equality_residual"] <= opts.feas_tol
        assert d["gram_min_eig"] >= -opts.feas_tol
        assert set(sol.dual) == {c.tag for c in P.constraints}
        assert abs(sol.primal_objective - sol.dual_objective) <= 1e-8

    def test_le_multipliers_nonnegative(self):
        P = build_gfom_pep(NONSMOOTH, 4, 1.0)
        sol = solve(P)
        for c in P.constraints:
            if c.sense == LE:
                assert sol.dual[c.tag] >= -1e-9

    def test_bounded_gram(self):
        sol = solve(build_gfom_pep(NONSMOOTH, 6, 1.0))
        assert np.abs(sol.G).max() < 10.0

    def test_free_indices_only_for_unconstrained_blocks(self):
        N = 3
        assert list(free_gram_indices(build_gfom_pep(NONSMOOTH, N, 1.0))) == list(range(N + 1, 2 * N + 1))
        assert len(free_gram_indices(build_gfom_pep(SmoothStronglyConvex(0.1, 1.0), N, 1.0))) == 0

    def test_options_validated(self):
        with pytest.raises(ValueError):
            SolverOptions(gap_tol=0.0)
        with pytest.raises(ValueError):
            SolverOptions(max_iterations=0)

    def test_deterministic(self):
        P = build_gfom_pep(SmoothStronglyConvex(0.05, 1.0), 4, 1.0)
        a, b = solve(P), solve(P)
        assert a.value == b.value
        np.testing.assert_array_equal(a.G, b.G)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        for P in (build_gfom_pep(NONSMOOTH, 4, 1.0), build_gfom_pep(SmoothStronglyConvex(0.01, 1.0), 4, 1.0)):
            Q = P.permuted(rng.permutation(len(P.constraints)))
            assert abs(solve(P).value - solve(Q).value) <= 1e-8


PROBLEMS = [
    ("gfom-smooth-3", lambda: build_gfom_pep(SMOOTH, 3, 1.0)),
    ("gfom-nonsmooth-4", lambda: build_gfom_pep(NONSMOOTH, 4, 1.0)),
    ("gfom-strong-3", lambda: build_gfom_pep(SmoothStronglyConvex(0.1, 1.0), 3, 1.0)),
    ("fgm-5", lambda: build_fixed_step_pep(SmoothStronglyConvex(0.01, 1.0), 5, 1.0, fgm_canonical(100.0, 5))),
    ("const-nonsmooth-4", lambda: build_fixed_step_pep(NONSMOOTH, 4, 1.0, np.tril(np.full((5, 5), 0.2), -1))),
]


@pytest.mark.parametrize("name,build", PROBLEMS, ids=[p[0] for p in PROBLEMS])
def test_matches_reference_conic_solver(name, build):
    P = build()
    status, ref = cvxopt_value(P, 1e-8)
    assert status == "optimal"
    assert abs(solve(P).value - ref) <= 1e-6 * max(1.0, abs(ref))


def test_compiled_and_numpy_kernels_agree():
    rng = np.random.default_rng(0)
    P = build_gfom_pep(SMOOTH, 5, 1.0)
    rows = SparseSymRows([c.A for c in P.constraints])
    B = rng.standard_normal((P.psd_side, P.psd_side))
    W = B @ B.T
    ref = _schur_py.schur_complement(W, rows.indptr, rows.rows, rows.cols, rows.vals)
    np.testing.assert_allclose(rows.schur(W), ref, rtol=1e-12, atol=1e-12)
    dense = np.array([[np.sum(Ai * (W @ Aj @ W)) for Aj in (c.A for c in P.constraints)]
                      for Ai in (c.A for c in P.constraints)])
    np.testing.assert_allclose(ref, dense, rtol=1e-10, atol=1e-10)


def test_pure_python_backend_gives_same_value():
    code = (
        "from pepsynth.sdp import BACKEND, solve\n"
        "from pepsynth.pep import build_gfom_pep\n"
        "from pepsynth.classes import BoundedSubgradient\n"
        "print(BACKEND, repr(solve(build_gfom_pep(BoundedSubgradient(1.0), 4, 1.0)).value))\n"
    )
    env = dict(os.environ, PEPSYNTH_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, value = out.stdout.split()
    assert backend == "python"
    assert abs(float(value) - 1 / np.sqrt(5)) < 1e-7


class TestCertificates:
    def test_extract_smooth_n1(self):
        P = build_gfom_pep(SMOOTH, 1, 1.0)
        cert = extract_certificate(P, solve(P))
        assert abs(cert.omega - 0.125) < 1e-5
        ref = smooth_certificate(1.0, 1.0, 1)
        assert abs(cert.tau_x - ref.tau_x) < 1e-5

    def test_extract_nonsmooth_n1_tau(self):
        P = build_gfom_pep(NONSMOOTH, 1, 1.0)
        cert = extract_certificate(P, solve(P))
        assert abs(cert.tau_x - 1 / (2 * np.sqrt(2))) < 1e-5
        assert verify_certificate(P, cert, 1e-7).feasible

    def test_extract_rejects_non_optimal(self):
        P = build_gfom_pep(SMOOTH, 1, 1.0)
        sol = solve(P)
        sol.status = "max-iterations"
        with pytest.raises(CertificateError):
            extract_certificate(P, sol)

    def test_extract_rejects_negative_alpha(self):
        P = build_gfom_pep(SMOOTH, 1, 1.0)
        sol = solve(P)
        sol.dual["ic:0:1"] = -1e-3
        with pytest.raises(CertificateError):
            extract_certificate(P, sol)

    def test_extract_rejects_fixed_step_problem(self):
        P = build_fixed_step_pep(SMOOTH, 1, 1.0, np.array([[0.0, 0.0], [1.0, 0.0]]))
        with pytest.raises(CertificateError):
            extract_certificate(P, solve(P))

    def test_verify_flags_negative_tau(self):
        cert = nonsmooth_certificate(1.0, 1.0, 5)
        bad = replace(cert, tau_x=cert.tau_x - 1.0)
        rep = verify_certificate(build_gfom_pep(NONSMOOTH, 5, 1.0), bad)
        assert rep.sign_violations and not rep.feasible

    def test_json_roundtrip(self):
        cert = smooth_certificate(2.0, 0.5, 4)
        back = DualCertificate.from_json(cert.to_json())
        assert back.omega == cert.omega and back.alpha == cert.alpha and back.cls == cert.cls
        rep = verify_certificate(build_gfom_pep(cert.cls, 4, 0.5), back)
        assert rep.feasible

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**31), N=st.integers(1, 6), which=st.sampled_from(["smooth", "nonsmooth"]))
    def test_weak_duality(self, seed, N, which):
        # feasible primal points come from actual functions run through the
        # greedy method, rescaled to unit initial distance
        rng = np.random.default_rng(seed)
        cls = SMOOTH if which == "smooth" else NONSMOOTH
        S = greedy_triplets(cls, N, N + 2, 1, rng)
        G, F = gram_from_triplets(S)
        P = build_gfom_pep(cls, N, 1.0)
        r2 = P.constraint("init").evaluate(G, F) + 1.0
        cert = smooth_certificate(1.0, 1.0, N) if which == "smooth" else nonsmooth_certificate(1.0, 1.0, N)
        # the objective scales like r for bounded subgradients and r^2 for smooth
        gap = float(P.objective @ F)
        omega = cert.omega * (r2 if which == "smooth" else np.sqrt(r2))
        assert gap <= omega + 1e-8

    def test_solver_certificate_verifies_independently(self):
        for cls in (SMOOTH, NONSMOOTH, SmoothStronglyConvex(0.02, 1.0)):
            P = build_gfom_pep(cls, 5, 1.0)
            sol = solve(P)
            cert = extract_certificate(P, sol)
            rep = verify_certificate(P, cert, 1e-7)
            assert rep.feasible, rep.to_dict()
            assert abs(cert.omega - sol.value) <= 1e-7


def test_theta_values_used_above():
    assert theta_sequence(1).values == (1.0, 2.0)
