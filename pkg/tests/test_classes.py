import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import NONSMOOTH, SMOOTH, greedy_triplets
from pepsynth.basis import STAR, BasisIndex
from pepsynth.classes import (
    EQ,
    LE,
    BoundedSubgradient,
    SmoothStronglyConvex,
    Triplet,
    TripletSet,
    check_interpolable,
    class_from_dict,
    contract_project,
    interpolation_constraints,
    projection_precondition_residual,
)
from pepsynth.pep import gram_from_triplets

EPS = np.finfo(float).eps


class TestClassSpec:
    def test_smooth_requires_mu_below_L(self):
        with pytest.raises(ValueError):
            SmoothStronglyConvex(1.0, 1.0)
        with pytest.raises(ValueError):
            SmoothStronglyConvex(-0.1, 1.0)
        with pytest.raises(ValueError):
            SmoothStronglyConvex(0.0, np.inf)

    def test_bounded_requires_positive_M(self):
        with pytest.raises(ValueError):
            BoundedSubgradient(0.0)
        with pytest.raises(ValueError):
            BoundedSubgradient(np.inf)

    @pytest.mark.parametrize("cls", [SmoothStronglyConvex(0.1, 2.0), BoundedSubgradient(3.0)])
    def test_dict_roundtrip(self, cls):
        assert class_from_dict(json.loads(json.dumps(cls.to_dict()))) == cls


class TestInterpolationConstraints:
    def test_smooth_n1_has_six_pairs(self):
        cons = interpolation_constraints(SMOOTH, 1)
        assert len(cons) == 6
        assert all(c.sense == LE for c in cons)

    def test_nonsmooth_n0_counts(self):
        cons = interpolation_constraints(NONSMOOTH, 0)
        tags = sorted(c.tag for c in cons)
        assert sum(t.startswith("gb:") for t in tags) == 2
        assert sum(t.startswith("ic:") for t in tags) == 2

    def test_gradient_bound_offset_is_minus_M_squared(self):
        cons = interpolation_constraints(BoundedSubgradient(3.0), 2)
        for c in cons:
            if c.tag.startswith("gb:"):
                assert c.b == -9.0

    @pytest.mark.parametrize("cls", [SMOOTH, SmoothStronglyConvex(0.2, 1.5), NONSMOOTH])
    @pytest.mark.parametrize("N", [0, 1, 4])
    def test_matrices_exactly_symmetric(self, cls, N):
        for c in interpolation_constraints(cls, N):
            assert np.array_equal(c.A, c.A.T)
            assert c.A.shape == (2 * N + 2, 2 * N + 2)

    def test_tags_unique_and_no_diagonal_pairs(self):
        tags = [c.tag for c in interpolation_constraints(SMOOTH, 3)]
        assert len(tags) == len(set(tags)) == 5 * 4
        for t in tags:
            _, i, j = t.split(":")
            assert i != j

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**31), N=st.integers(0, 4), mu=st.sampled_from([0.0, 0.1, 0.5]))
    def test_constraints_reproduce_check_residuals(self, seed, N, mu):
        rng = np.random.default_rng(seed)
        d = 2 * N + 2
        entries = {i: Triplet(rng.standard_normal(d), rng.standard_normal(d), rng.standard_normal())
                   for i in range(N + 1)}
        entries[STAR] = Triplet(rng.standard_normal(d), np.zeros(d), rng.standard_normal())
        S = TripletSet(N, entries)
        G, F = gram_from_triplets(S)
        for cls in (SmoothStronglyConvex(mu, 1.0), BoundedSubgradient(1.3)):
            rep = check_interpolable(cls, S, 0.0)
            for c in interpolation_constraints(cls, N):
                val = c.evaluate(G, F)
                ref = rep.residuals[c.tag]
                assert abs(val - ref) <= 1e-12 * max(1.0, abs(ref), np.abs(G).max())


class TestCheckInterpolable:
    def test_single_triplet_in_bounded_class(self):
        S = TripletSet(0, {0: Triplet([0.0, 0.0], [1.0, 0.0], 5.0)})
        assert check_interpolable(BoundedSubgradient(2.0), S).interpolable

    def test_flat_pair_with_value_jump_fails(self):
        S = TripletSet(1, {0: Triplet([0.0], [0.0], 0.0), 1: Triplet([1.0], [0.0], 1.0)})
        rep = check_interpolable(SMOOTH, S)
        assert not rep.interpolable
        assert any(tag in ("ic:0:1", "ic:1:0") for tag, _ in rep.violations)

    def test_large_gradient_fails(self):
        S = TripletSet(0, {0: Triplet([0.0], [2.0], 0.0)})
        rep = check_interpolable(BoundedSubgradient(1.0), S)
        assert not rep.interpolable and rep.violations[0][0] == "gb:0"

    def test_quadratic_samples_pass(self):
        rng = np.random.default_rng(3)
        Q = np.diag([0.2, 1.0])
        pts = {i: rng.standard_normal(2) for i in range(3)}
        entries = {i: Triplet(x, Q @ x, 0.5 * x @ Q @ x) for i, x in pts.items()}
        entries[STAR] = Triplet(np.zeros(2), np.zeros(2), 0.0)
        S = TripletSet(2, entries)
        assert check_interpolable(SmoothStronglyConvex(0.2, 1.0), S, 1e-12)
        assert not check_interpolable(SmoothStronglyConvex(0.3, 1.0), S, 1e-12)

    def test_triplet_set_json_roundtrip(self):
        S = greedy_triplets(SMOOTH, 2, 4, 1, np.random.default_rng(0))
        T = TripletSet.from_json(S.to_json())
        for k in S.keys():
            np.testing.assert_array_equal(S[k].x, T[k].x)
            np.testing.assert_array_equal(S[k].g, T[k].g)
        assert json.loads(S.to_json())["d"] == 5

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(ValueError):
            TripletSet(1, {0: Triplet([0.0], [0.0], 0.0), 1: Triplet([0.0, 1.0], [0.0, 0.0], 0.0)})


class TestContractProject:
    def test_fixed_point_when_points_in_span(self):
        S = greedy_triplets(SMOOTH, 3, 6, 0, np.random.default_rng(1))
        P = contract_project(S)
        for k in S.keys():
            np.testing.assert_allclose(P[k].x, S[k].x, atol=1e-12)

    def test_hand_example_drops_orthogonal_offset(self):
        x0 = np.zeros(3)
        g0 = np.array([1.0, 0.0, 0.0])
        g1 = np.array([0.0, 1.0, 0.0])
        v = np.array([0.0, 0.0, 0.7])
        S = TripletSet(1, {
            0: Triplet(x0, g0, 1.0),
            1: Triplet(x0 - g0 + v, g1, 0.5),
            STAR: Triplet(np.array([-1.0, -0.5, 0.0]), np.zeros(3), 0.0),
        })
        P = contract_project(S)
        np.testing.assert_allclose(P[1].x, x0 - g0, atol=1e-15)
        assert np.linalg.norm(P[1].x - P[0].x) < np.linalg.norm(S[1].x - S[0].x)

    def test_precondition_enforced(self):
        S = TripletSet(1, {
            0: Triplet([0.0, 0.0], [1.0, 0.0], 1.0),
            1: Triplet([-1.0, 0.0], [1.0, 1.0], 0.5),
            STAR: Triplet([-2.0, 0.0], [0.0, 0.0], 0.0),
        })
        with pytest.raises(ValueError):
            contract_project(S)

    @settings(max_examples=150, deadline=None)
    @given(seed=st.integers(0, 2**31), N=st.integers(1, 5), extra=st.integers(1, 4),
           which=st.sampled_from(["smooth", "nonsmooth"]))
    def test_projection_contracts_and_preserves_interpolability(self, seed, N, extra, which):
        cls = SMOOTH if which == "smooth" else NONSMOOTH
        rng = np.random.default_rng(seed)
        S = greedy_triplets(cls, N, int(rng.integers(N + 1, 8)), extra, rng)
        P = contract_project(S)
        keys = S.keys()
        scale = max(1.0, max(np.abs(S[k].x).max() + np.abs(S[k].g).max() for k in keys)) ** 2
        for i in keys:
            for j in keys:
                assert np.linalg.norm(P[i].x - P[j].x) <= np.linalg.norm(S[i].x - S[j].x) + 1e-12 * scale
                lhs = S[j].g @ (P[i].x - P[j].x)
                rhs = S[j].g @ (S[i].x - S[j].x)
                assert abs(lhs - rhs) <= 1e-9 * scale
        # interpolability survives up to rounding: no residual grows by more
        # than 10 eps times the magnitude scale of the whole set
        set_scale = max(max(1.0, abs(S[k].f), S[k].g @ S[k].g, S[k].x @ S[k].x) for k in keys)
        before = check_interpolable(cls, S, 0.0).residuals
        after = check_interpolable(cls, P, 0.0).residuals
        for tag, r in after.items():
            assert r - max(before[tag], 0.0) <= 10 * EPS * set_scale
        assert projection_precondition_residual(P) <= 1e-8


def test_basis_layout():
    b = BasisIndex(2)
    assert b.gram_side == 6 and b.value_len == 4
    assert not b.x(0).any() and not b.g(STAR).any()
    assert b.g(0)[0] == 1 and b.x(1)[3] == 1 and b.x(STAR)[5] == 1
    assert b.f(STAR)[3] == 1
    assert EQ != LE
