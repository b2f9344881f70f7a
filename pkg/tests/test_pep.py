import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import NONSMOOTH, SMOOTH, greedy_triplets
from pepsynth.basis import STAR
from pepsynth.certificates import nonsmooth_certificate
from pepsynth.classes import EQ, LE, SmoothStronglyConvex, check_interpolable
from pepsynth.pep import (
    OPTIMAL,
    SdpProblem,
    SdpSolution,
    build_fixed_step_pep,
    build_gfom_pep,
    build_ssep_pep,
    fixed_step_basis_map,
    gram_from_triplets,
    reconstruct_worst_case,
    worst_case_report,
)
from pepsynth.sdp import solve
from pepsynth.synthesis import StepCoefficients, synthesize_steps


def _count(problem, prefix):
    return sum(c.tag.startswith(prefix) for c in problem.constraints)


class TestBuilders:
    def test_gfom_smooth_n1_shape(self):
        P = build_gfom_pep(SMOOTH, 1, 1.0)
        assert P.psd_side == 4 and len(P.objective) == 3
        assert _count(P, "ic:") == 6
        assert _count(P, "orth:") + _count(P, "span:") == 2
        assert _count(P, "init") == 1
        assert len(P.constraints) == 9

    def test_gfom_nonsmooth_n0_shape(self):
        P = build_gfom_pep(NONSMOOTH, 0, 1.0)
        assert P.psd_side == 2
        assert _count(P, "gb:") == 2 and _count(P, "ic:") == 2
        assert _count(P, "orth:") == 0 and _count(P, "span:") == 0
        assert len(P.constraints) == 5

    def test_objective_is_last_minus_optimal_value(self):
        P = build_gfom_pep(SMOOTH, 3, 1.0)
        np.testing.assert_array_equal(P.objective, [0, 0, 0, 1, -1])

    def test_equality_rows_are_equalities(self):
        P = build_gfom_pep(SMOOTH, 3, 1.0)
        for c in P.constraints:
            assert c.sense == (EQ if c.tag.split(":")[0] in ("orth", "span") else LE)

    def test_init_row_encodes_distance(self):
        P = build_gfom_pep(SMOOTH, 2, 2.0)
        c = P.constraint("init")
        assert c.b == -4.0 and c.A[5, 5] == 1.0

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            build_gfom_pep(SMOOTH, 1, -1.0)

    def test_fixed_step_shape_and_validation(self):
        h = np.zeros((3, 3))
        h[1, 0], h[2, 1] = 1.0, 1.0
        P = build_fixed_step_pep(SMOOTH, 2, 1.0, h)
        assert P.psd_side == 4
        with pytest.raises(ValueError):
            build_fixed_step_pep(SMOOTH, 3, 1.0, h)
        with pytest.raises(ValueError):
            build_fixed_step_pep(SMOOTH, 2, 1.0, h.T)

    def test_ssep_mismatched_N_rejected(self):
        steps = synthesize_steps(nonsmooth_certificate(1.0, 1.0, 2))
        with pytest.raises(ValueError):
            build_ssep_pep(NONSMOOTH, 3, 1.0, steps)

    def test_json_roundtrip(self):
        for P in (build_gfom_pep(NONSMOOTH, 2, 1.0),
                  build_fixed_step_pep(SMOOTH, 2, 1.0, np.tril(np.ones((3, 3)), -1))):
            Q = SdpProblem.from_json(P.to_json())
            assert [c.tag for c in Q.constraints] == [c.tag for c in P.constraints]
            for a, b in zip(P.constraints, Q.constraints):
                np.testing.assert_array_equal(a.A, b.A)
            if P.basis_map is not None:
                np.testing.assert_array_equal(P.basis_map, Q.basis_map)

    def test_duplicate_tags_rejected(self):
        P = build_gfom_pep(SMOOTH, 1, 1.0)
        with pytest.raises(ValueError):
            SdpProblem(P.N, P.objective, P.constraints + P.constraints[:1], P.psd_side)


class TestGramFaithfulness:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31), N=st.integers(1, 4))
    def test_gram_identities(self, seed, N):
        rng = np.random.default_rng(seed)
        S = greedy_triplets(SMOOTH, N, N + 2, 2, rng)
        G, F = gram_from_triplets(S)
        P = build_gfom_pep(SMOOTH, N, 1.0)
        scale = max(1.0, np.abs(G).max())
        for i in range(1, N + 1):
            for j in range(i):
                c = P.constraint(f"orth:{i}:{j}")
                assert abs(c.evaluate(G, F) - S[i].g @ S[j].g) <= 1e-12 * scale
        dist = np.sum((S[0].x - S[STAR].x) ** 2)
        assert abs(P.constraint("init").evaluate(G, F) - (dist - 1.0)) <= 1e-12 * scale

    def test_fixed_step_map_reproduces_points(self):
        rng = np.random.default_rng(0)
        N = 3
        h = np.tril(rng.standard_normal((N + 1, N + 1)), -1)
        T = fixed_step_basis_map(h)
        g = rng.standard_normal((5, N + 1))
        r = rng.standard_normal(5)
        reduced = np.column_stack([g, r])
        full = reduced @ T
        for i in range(1, N + 1):
            np.testing.assert_allclose(full[:, N + i], -g[:, :i] @ h[i, :i], atol=1e-14)
        np.testing.assert_allclose(full[:, 2 * N + 1], r)


class TestKnownValues:
    # values obtained independently: the gradient method bound L R^2/(4N+2)
    # and OGM's 1/(2 theta^2) at N=1
    def test_gradient_step_n1(self):
        h = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert abs(solve(build_fixed_step_pep(SMOOTH, 1, 1.0, h)).value - 1 / 6) < 1e-7

    def test_ogm_step_n1(self):
        h = np.array([[0.0, 0.0], [1.5, 0.0]])
        assert abs(solve(build_fixed_step_pep(SMOOTH, 1, 1.0, h)).value - 1 / 8) < 1e-7

    def test_zero_steps_n1(self):
        assert abs(solve(build_fixed_step_pep(SMOOTH, 1, 1.0, np.zeros((2, 2)))).value - 0.5) < 1e-7

    def test_zero_radius(self):
        for cls in (SMOOTH, NONSMOOTH):
            assert abs(solve(build_gfom_pep(cls, 0, 0.0)).value) < 1e-7

    def test_gradient_method_longer_horizon(self):
        for N in (2, 4):
            h = np.tril(np.ones((N + 1, N + 1)), -1)
            v = solve(build_fixed_step_pep(SMOOTH, N, 1.0, h)).value
            assert abs(v - 1 / (4 * N + 2)) < 1e-7

    def test_ssep_bound_not_above_certificate(self):
        cert = nonsmooth_certificate(1.0, 1.0, 3)
        v = solve(build_ssep_pep(NONSMOOTH, 3, 1.0, synthesize_steps(cert))).value
        assert v <= 0.5 + 1e-6

    def test_span_only_relaxation_dominates_gfom(self):
        N = 2
        beta = np.zeros((N + 1, N + 1))
        gamma = np.eye(N + 1)
        gamma[0, 0] = 0.0
        steps = StepCoefficients(N, beta, gamma)
        relaxed = solve(build_ssep_pep(SMOOTH, N, 1.0, steps)).value
        greedy = solve(build_gfom_pep(SMOOTH, N, 1.0)).value
        assert relaxed >= greedy - 1e-7

    def test_gfom_value_monotone_in_N(self):
        for cls in (SMOOTH, NONSMOOTH, SmoothStronglyConvex(0.1, 1.0)):
            vals = [solve(build_gfom_pep(cls, N, 1.0)).value for N in range(0, 9)]
            assert all(b <= a + 1e-8 for a, b in zip(vals, vals[1:]))


class TestReconstruction:
    def test_n0_smooth_gap_half(self):
        P = build_gfom_pep(SMOOTH, 0, 1.0)
        rep = worst_case_report(P, solve(P))
        S = rep["triplets"]
        assert rep["interpolable"]
        assert abs(rep["objective"] - 0.5) < 1e-7
        assert abs(np.linalg.norm(S[0].x - S[STAR].x) - 1.0) < 1e-6

    def test_zero_gram_gives_coinciding_points(self):
        P = build_gfom_pep(SMOOTH, 1, 1.0)
        sol = SdpSolution(np.zeros((4, 4)), np.zeros(3), {}, 0.0, 0.0, OPTIMAL)
        S = reconstruct_worst_case(P, sol)
        for k in S.keys():
            assert not S[k].x.any() and S[k].f == 0

    def test_nonsmooth_n3_orthogonal_subgradients(self):
        P = build_gfom_pep(NONSMOOTH, 3, 1.0)
        S = reconstruct_worst_case(P, solve(P))
        for i in range(1, 4):
            for j in range(i):
                assert abs(S[i].g @ S[j].g) <= 1e-7

    def test_fixed_step_reconstruction_is_interpolable(self):
        h = np.tril(np.ones((4, 4)), -1)
        P = build_fixed_step_pep(SMOOTH, 3, 1.0, h)
        sol = solve(P)
        S = reconstruct_worst_case(P, sol)
        assert check_interpolable(SMOOTH, S, 1e-7)
        assert abs(S[3].f - S[STAR].f - sol.value) < 1e-6
        for i in range(1, 4):
            np.testing.assert_allclose(S[i].x, S[0].x - sum(h[i, j] * S[j].g for j in range(i)), atol=1e-6)

    def test_non_optimal_rejected(self):
        P = build_gfom_pep(SMOOTH, 1, 1.0)
        sol = SdpSolution(np.zeros((4, 4)), np.zeros(3), {}, 0.0, 0.0, "max-iterations")
        with pytest.raises(ValueError):
            reconstruct_worst_case(P, sol)
