"""Geometric-median solver tests against closed-form and derivative-free oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.optimize import minimize

from robustmed import (
    MedianOptions,
    PointSet,
    c_alpha,
    coordinatewise_median,
    geometric_median,
    lemma_witness,
    objective,
    psi,
    select_nemirovski,
    select_nemirovski_adaptive,
    thresholded_median,
)

# 40-digit mpmath evaluations of the closed forms, trimmed to float64
PSI_OPERATING = 0.2915882625129285  # psi(7/18, 0.1)
PSI_HALF = 0.4309012732950427  # psi(1/2, 0.12)
C_OPERATING = 1.296362432175337  # c_alpha(7/18)
FERMAT_T = (3.0 - math.sqrt(3.0)) / 6.0  # Fermat point of the unit right triangle


def test_psi_matches_reference_values():
    assert_allclose(psi(7.0 / 18.0, 0.1), PSI_OPERATING, rtol=1e-14)
    assert_allclose(psi(0.5, 0.12), PSI_HALF, rtol=1e-14)


def test_c_alpha_banach_closed_form():
    # 2*(11/18)/(4/18) = 11/2
    assert_allclose(c_alpha(7.0 / 18.0, "banach"), 5.5, rtol=1e-15)


def test_psi_increases_in_alpha_and_vanishes_at_p():
    grid = np.linspace(0.15, 0.5, 30)
    vals = [psi(a, 0.1) for a in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert psi(0.1 + 1e-9, 0.1) < 1e-15


@pytest.mark.parametrize("alpha,p", [(0.3, 0.0), (0.3, 0.3), (0.3, 0.4), (0.6, 0.1), (0.0, -0.1)])
def test_psi_rejects_bad_domain(alpha, p):
    with pytest.raises(ValueError):
        psi(alpha, p)


def test_c_alpha_values():
    assert_allclose(c_alpha(7.0 / 18.0), C_OPERATING, rtol=1e-14)
    # alpha = 6 sqrt(2) - 8 solves (1-a)/sqrt(1-2a) = 3
    assert abs(c_alpha(6.0 * math.sqrt(2.0) - 8.0) - 3.0) < 1e-9


def test_c_alpha_limits_and_monotonicity():
    assert abs(c_alpha(1e-9) - 1.0) < 1e-6
    assert abs(c_alpha(1e-9, "banach") - 2.0) < 1e-6
    grid = np.linspace(0.01, 0.49, 25)
    for space in ("hilbert", "banach"):
        vals = [c_alpha(a, space) for a in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("alpha", [0.0, 0.5, -0.1, 1.0])
def test_c_alpha_rejects_bad_alpha(alpha):
    with pytest.raises(ValueError):
        c_alpha(alpha)


def test_c_alpha_rejects_unknown_space():
    with pytest.raises(ValueError):
        c_alpha(0.3, "l1")


def test_objective_hand_value():
    ps = PointSet([[0.0, 0.0]])
    assert objective(ps, [3.0, 4.0]) == 5.0


def test_objective_rejects_wrong_shape():
    ps = PointSet([[0.0, 0.0]])
    with pytest.raises(ValueError):
        objective(ps, [1.0, 2.0, 3.0])


def test_point_set_validation():
    with pytest.raises(ValueError):
        PointSet(np.empty((0, 2)))
    with pytest.raises(ValueError):
        PointSet([[np.nan, 0.0]])
    with pytest.raises(ValueError):
        PointSet([[0.0], [1.0]], weights=[0.5])
    with pytest.raises(ValueError):
        PointSet([[0.0], [1.0]], weights=[-0.1, 1.1])
    with pytest.raises(ValueError):
        PointSet([[0.0], [1.0]], weights=[0.6, 0.6])


def test_point_set_promotes_scalars_and_freezes():
    ps = PointSet([1.0, 2.0, 3.0])
    assert ps.points.shape == (3, 1)
    assert ps.uniform
    with pytest.raises(ValueError):
        ps.points[0, 0] = 5.0


def test_median_options_validation():
    with pytest.raises(ValueError):
        MedianOptions(tol=0.0)
    with pytest.raises(ValueError):
        MedianOptions(max_iter=0)
    with pytest.raises(ValueError):
        MedianOptions(relaxation=0.5)


def test_symmetric_square_center():
    ps = PointSet([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    res = geometric_median(ps)
    assert np.array_equal(res.point, np.zeros(2))
    assert_allclose(res.weights, np.full(4, 0.25), rtol=0, atol=0)
    assert res.converged
    assert res.iterations == 1


def test_fermat_point_of_right_triangle():
    ps = PointSet([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    res = geometric_median(ps)
    assert_allclose(res.point, [FERMAT_T, FERMAT_T], atol=1e-7)
    # solver objective no worse than the closed-form optimum
    opt = objective(ps, np.array([FERMAT_T, FERMAT_T]))
    assert res.objective <= opt + 1e-10


def test_vertex_certified_exactly():
    ps = PointSet([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    res = geometric_median(ps)
    assert np.array_equal(res.point, np.zeros(2))
    assert np.array_equal(res.weights, np.array([1.0, 0.0, 0.0, 0.0, 0.0]))
    assert res.converged


def test_dominant_weight_pins_the_vertex():
    ps = PointSet([[0.0, 0.0], [10.0, 0.0]], weights=[0.8, 0.2])
    res = geometric_median(ps)
    assert np.array_equal(res.point, np.zeros(2))
    assert res.objective == 2.0


def test_all_points_equal():
    ps = PointSet([[2.0, -3.0]] * 4)
    res = geometric_median(ps)
    assert np.array_equal(res.point, np.array([2.0, -3.0]))
    assert res.objective == 0.0


def test_single_point():
    ps = PointSet([[4.0, 5.0, 6.0]])
    res = geometric_median(ps)
    assert np.array_equal(res.point, np.array([4.0, 5.0, 6.0]))
    assert res.converged
    assert res.iterations == 0
    assert res.objective == 0.0


def test_reconstruction_is_exact():
    rng = np.random.default_rng(7)
    for _ in range(20):
        k = int(rng.integers(2, 13))
        d = int(rng.integers(1, 4))
        ps = PointSet(rng.normal(size=(k, d)) * 10.0)
        res = geometric_median(ps)
        assert np.array_equal(res.point, res.weights @ ps.points)
        assert np.all(res.weights >= 0.0)
        assert abs(res.weights.sum() - 1.0) < 1e-12


def test_objective_trace_is_monotone():
    rng = np.random.default_rng(11)
    for _ in range(25):
        k = int(rng.integers(2, 15))
        ps = PointSet(rng.normal(size=(k, 3)) * rng.uniform(0.1, 50.0))
        res = geometric_median(ps)
        assert res.converged
        tr = np.asarray(res.objective_trace)
        slack = 1e-9 * (1.0 + tr[0])
        assert np.all(np.diff(tr) <= slack)
        assert res.objective == tr[-1]


def test_isometry_equivariance():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(8, 3)) * 4.0
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    b = rng.normal(size=3)
    base = geometric_median(PointSet(X)).point
    moved = geometric_median(PointSet(X @ q.T + b)).point
    assert_allclose(moved, q @ base + b, atol=1e-8)


def test_scaling_equivariance():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(7, 2))
    base = geometric_median(PointSet(X)).point
    scaled = geometric_median(PointSet(X * 37.0)).point
    assert_allclose(scaled, base * 37.0, atol=1e-7)


def test_relaxed_iteration_reaches_the_same_point():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(9, 3))
    plain = geometric_median(PointSet(X)).point
    relaxed = geometric_median(PointSet(X), MedianOptions(relaxation=1.5)).point
    assert_allclose(relaxed, plain, atol=1e-8)


def test_matches_derivative_free_oracle_on_small_instances():
    rng = np.random.default_rng(17)
    for _ in range(12):
        k = int(rng.integers(3, 11))
        d = int(rng.integers(1, 4))
        X = rng.normal(size=(k, d)) * rng.uniform(0.5, 20.0)
        ps = PointSet(X)
        res = geometric_median(ps)
        scale = max(1.0, float(np.max(np.linalg.norm(X, axis=1))))
        best = min(
            minimize(
                lambda y: objective(ps, y),
                X[int(rng.integers(0, k))] + rng.normal(size=d) * 0.1,
                method="Nelder-Mead",
                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000},
            ).fun
            for _ in range(5)
        )
        assert res.objective <= best + 1e-6 * scale


def test_integer_weights_match_duplication():
    X = np.array([[0.0, 0.0], [4.0, 1.0], [1.0, 5.0]])
    weighted = geometric_median(PointSet(X, weights=[0.5, 0.25, 0.25]))
    duplicated = geometric_median(PointSet(np.vstack([X[0], X])))
    assert_allclose(weighted.point, duplicated.point, atol=1e-8)


def test_coordinatewise_median_examples():
    ps = PointSet([[1.0, 20.0], [2.0, 10.0], [3.0, 30.0]])
    assert np.array_equal(coordinatewise_median(ps), np.array([2.0, 20.0]))
    even = PointSet([[0.0, 7.0], [1.0, 3.0]])
    # even count takes the lower middle per coordinate
    assert np.array_equal(coordinatewise_median(even), np.array([0.0, 3.0]))


def test_coordinatewise_median_needs_uniform_weights():
    ps = PointSet([[0.0], [1.0]], weights=[0.3, 0.7])
    with pytest.raises(ValueError):
        coordinatewise_median(ps)


def test_thresholded_zero_nu_is_identity():
    rng = np.random.default_rng(13)
    ps = PointSet(rng.normal(size=(6, 2)))
    res = geometric_median(ps)
    point, w = thresholded_median(ps, 0.0)
    assert np.array_equal(point, res.weights @ ps.points)
    assert np.array_equal(w, res.weights)


def test_thresholded_drops_the_outlier_weight():
    rng = np.random.default_rng(21)
    cluster = rng.normal(size=(6, 2)) * 0.5
    pts = np.vstack([cluster, [1e6, 1e6]])
    ps = PointSet(pts)
    plain = geometric_median(ps)
    # nu sits between the outlier's near-zero weight and the cluster weights
    point, w = thresholded_median(ps, 0.01)
    assert w[-1] == 0.0
    assert abs(w.sum() - 1.0) < 1e-12
    assert np.array_equal(point, w @ pts)
    kept = plain.weights[:-1]
    assert_allclose(w[:-1], kept / kept.sum(), rtol=1e-12)
    center = cluster.mean(axis=0)
    assert np.linalg.norm(point - center) <= np.linalg.norm(plain.point - center)


def test_thresholded_keeps_symmetric_weights():
    ps = PointSet([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    point, w = thresholded_median(ps, 1.0)
    assert np.array_equal(point, np.zeros(2))
    assert_allclose(w, np.full(4, 0.25), rtol=0, atol=0)


def test_thresholded_rejects_empty_survivor_set():
    ps = PointSet([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        thresholded_median(ps, 4.0)
    with pytest.raises(ValueError):
        thresholded_median(ps, -0.5)


def test_selector_examples():
    assert select_nemirovski(PointSet([0.0, 0.1, 10.0]), 0.2) == 0
    # nothing qualifies at this radius, falls back to index 0
    assert select_nemirovski(PointSet([0.0, 10.0, 20.0]), 0.1) == 0
    with pytest.raises(ValueError):
        select_nemirovski(PointSet([0.0, 1.0]), 0.0)
    with pytest.raises(ValueError):
        select_nemirovski(PointSet([0.0, 1.0], weights=[0.3, 0.7]), 1.0)


def test_selector_prefers_the_cluster():
    rng = np.random.default_rng(2)
    pts = np.vstack([rng.normal(size=(5, 2)) * 0.1 + 5.0, [[50.0, 0.0], [0.0, 50.0]]])
    j = select_nemirovski(PointSet(pts), 1.0)
    assert j < 5


def test_adaptive_selector_examples():
    assert select_nemirovski_adaptive(PointSet([0.0, 0.1, 10.0])) == (0, 0.05)
    assert select_nemirovski_adaptive(PointSet([2.0, 2.0])) == (0, 0.0)
    assert select_nemirovski_adaptive(PointSet([0.0, 2.0, 4.0])) == (0, 1.0)
    with pytest.raises(ValueError):
        select_nemirovski_adaptive(PointSet([1.0]))


def test_adaptive_radius_reproduces_the_choice():
    rng = np.random.default_rng(4)
    for _ in range(10):
        ps = PointSet(rng.normal(size=(7, 2)))
        j, eps = select_nemirovski_adaptive(ps)
        assert eps >= 0.0
        if eps > 0.0:
            assert select_nemirovski(ps, eps) == j


def test_lemma_witness_flags_everything_far_from_z():
    rng = np.random.default_rng(6)
    ps = PointSet(rng.normal(size=(4, 2)) * 0.2 + np.array([10.0, 0.0]))
    for space in ("hilbert", "banach"):
        J = lemma_witness(ps, np.zeros(2), 1.0, 7.0 / 18.0, space)
        assert np.array_equal(J, np.arange(4))


def test_lemma_witness_rejects_near_z():
    ps = PointSet([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        lemma_witness(ps, np.zeros(2), 1.0, 7.0 / 18.0)


def test_lemma_witness_argument_errors():
    ps = PointSet([[10.0, 0.0], [11.0, 0.0], [10.5, 1.0]])
    with pytest.raises(ValueError):
        lemma_witness(ps, np.zeros(2), -1.0, 0.3)
    with pytest.raises(ValueError):
        lemma_witness(ps, np.zeros(2), 1.0, 0.6)
    with pytest.raises(ValueError):
        lemma_witness(PointSet([[10.0], [11.0]], weights=[0.4, 0.6]), np.zeros(1), 1.0, 0.3)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.lists(st.floats(-100.0, 100.0), min_size=2, max_size=2),
        min_size=1,
        max_size=6,
    )
)
def test_median_never_beaten_by_a_vertex(points):
    ps = PointSet(points)
    res = geometric_median(ps)
    best_vertex = min(objective(ps, x) for x in ps.points)
    assert res.objective <= best_vertex + 1e-9 * (1.0 + best_vertex)
