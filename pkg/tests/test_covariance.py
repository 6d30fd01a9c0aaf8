"""Covariance median, eigenprojectors, spectral gaps, PCA radii."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import svdvals

from robustmed import (
    AggregationPlan,
    block_second_moments,
    pca_gap_threshold,
    pca_radius,
    projector_distance,
    robust_covariance,
    spectral_gap,
    top_projector,
)
from robustmed.samplers import pca_mixing_diagonal


def test_block_second_moments_hand_case():
    data = np.array([[1.0, 0.0], [1.0, 0.0], [3.0, 0.0], [5.0, 0.0]])
    mats = block_second_moments(data, 2)
    assert mats.shape == (2, 2, 2)
    assert_allclose(mats[0], [[1.0, 0.0], [0.0, 0.0]])
    assert_allclose(mats[1], [[17.0, 0.0], [0.0, 0.0]])
    centered = block_second_moments(data, 2, centered=False)
    assert_allclose(centered[0], np.zeros((2, 2)))
    assert_allclose(centered[1], [[1.0, 0.0], [0.0, 0.0]])


def test_repeated_point_gives_its_outer_product():
    e1 = np.zeros(3)
    e1[0] = 1.0
    data = np.tile(e1, (12, 1))
    res = robust_covariance(data, AggregationPlan(k=3))
    assert np.array_equal(res.point, np.outer(e1, e1))


def test_single_block_is_the_sample_second_moment():
    rng = np.random.default_rng(23)
    data = rng.normal(size=(50, 4))
    res = robust_covariance(data, AggregationPlan(k=1))
    expected = data.T @ data / 50
    assert_allclose(res.point, 0.5 * (expected + expected.T), rtol=0, atol=1e-15)
    uncentered = robust_covariance(data, AggregationPlan(k=1), centered=False)
    shifted = data - data.mean(axis=0)
    expected = shifted.T @ shifted / 50
    assert_allclose(uncentered.point, 0.5 * (expected + expected.T), rtol=0, atol=1e-15)


def test_estimates_identity_on_standard_normal():
    hits = 0
    for seed in range(20):
        data = np.random.default_rng(seed).normal(size=(10**4, 10))
        err = np.linalg.norm(robust_covariance(data).point - np.eye(10), "fro")
        hits += err <= 0.15
    assert hits >= 19  # target: at least 95% of seeded runs


def test_result_is_psd_and_reconstructs():
    rng = np.random.default_rng(29)
    data = rng.standard_t(df=3, size=(300, 5))
    for centered in (True, False):
        res = robust_covariance(data, AggregationPlan(k=6), centered=centered)
        mats = block_second_moments(data, 6, centered=centered)
        combo = np.tensordot(res.weights, mats, axes=1)
        assert_allclose(res.point, combo, atol=1e-8)
        assert np.linalg.eigvalsh(res.point).min() >= -1e-8
        assert_allclose(res.point, res.point.T, atol=1e-12)


def test_orthogonal_equivariance():
    rng = np.random.default_rng(31)
    data = rng.normal(size=(240, 4)) * np.array([3.0, 1.0, 0.5, 0.2])
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    plan = AggregationPlan(k=8)
    for centered in (True, False):
        S = robust_covariance(data, plan, centered=centered).point
        S_rot = robust_covariance(data @ q.T, plan, centered=centered).point
        assert_allclose(S_rot, q @ S @ q.T, atol=1e-6)


def test_top_projector_hand_cases():
    P = top_projector(np.diag([3.0, 2.0, 1.0]), 2)
    assert_allclose(P.matrix, np.diag([1.0, 1.0, 0.0]), atol=1e-12)
    assert P.rank == 2
    assert not P.ill_posed
    P = top_projector(np.eye(4), 4)
    assert_allclose(P.matrix, np.eye(4), atol=1e-12)


def test_top_projector_flags_tied_gap():
    assert top_projector(np.diag([2.0, 1.0, 1.0]), 2).ill_posed
    assert not top_projector(np.diag([2.0, 1.0, 1.0]), 1).ill_posed


def test_top_projector_domain():
    with pytest.raises(ValueError):
        top_projector(np.diag([1.0, 2.0]), 0)
    with pytest.raises(ValueError):
        top_projector(np.diag([1.0, 2.0]), 3)
    with pytest.raises(ValueError):
        top_projector(np.array([[0.0, 1.0], [0.0, 0.0]]), 1)


def test_projection_preserves_top_eigenvalues():
    rng = np.random.default_rng(37)
    A = rng.normal(size=(6, 6))
    S = 0.5 * (A + A.T)
    P = top_projector(S, 2).matrix
    projected = np.sort(np.linalg.eigvalsh(P @ S @ P))[::-1][:2]
    top = np.sort(np.linalg.eigvalsh(S))[::-1][:2]
    assert_allclose(projected, top, atol=1e-8)


def test_complementary_projectors_sum_to_identity():
    rng = np.random.default_rng(41)
    A = rng.normal(size=(5, 5))
    S = 0.5 * (A + A.T)
    P = top_projector(S, 2).matrix
    Q = top_projector(-S, 3).matrix
    assert_allclose(P + Q, np.eye(5), atol=1e-8)


def test_projector_distance_hand_cases():
    P = np.diag([1.0, 0.0])
    Q = np.diag([0.0, 1.0])
    assert projector_distance(P, P) == 0.0
    assert_allclose(projector_distance(P, Q, "frobenius"), math.sqrt(2.0), rtol=1e-12)
    assert_allclose(projector_distance(P, Q, "operator"), 1.0, rtol=1e-12)
    with pytest.raises(ValueError):
        projector_distance(P, np.eye(3))
    with pytest.raises(ValueError):
        projector_distance(P, Q, "nuclear")


def test_projector_distance_matches_svd_oracle():
    rng = np.random.default_rng(43)
    A = rng.normal(size=(6, 6))
    B = rng.normal(size=(6, 6))
    P = top_projector(0.5 * (A + A.T), 2)
    Q = top_projector(0.5 * (B + B.T), 2)
    diff = P.matrix - Q.matrix
    sv = svdvals(diff)
    assert abs(projector_distance(P, Q, "frobenius") - math.sqrt((sv**2).sum())) < 1e-10
    assert abs(projector_distance(P, Q, "operator") - sv.max()) < 1e-10
    # equal-rank projectors stay within the stated ranges
    assert projector_distance(P, Q, "operator") <= 1.0
    assert projector_distance(P, Q, "frobenius") <= 2.0


def test_spectral_gap_hand_cases():
    assert spectral_gap(np.diag([9.0, 8.0, 7.0, 1.0]), 3) == 6.0
    assert abs(spectral_gap(np.eye(5), 2)) <= 1e-12
    with pytest.raises(ValueError):
        spectral_gap(np.eye(3), 3)


def test_spectral_gap_of_the_spiked_scale_matrix():
    # sqrt(5) - 1/sqrt(120) = 2.144780884582262, 40-digit mpmath;
    # the truncated display 2.14477 sits 1.09e-5 away
    A = np.diag(pca_mixing_diagonal(120, 5))
    assert abs(spectral_gap(A, 5) - 2.14477) <= 2e-5
    assert_allclose(spectral_gap(A, 5), 2.144780884582262, rtol=1e-12)


def test_pca_radius_values():
    assert pca_radius(0.0, 1.0, 100, 0.1) == 0.0
    assert_allclose(pca_radius(1.0, 0.0, 10**4, 0.01), 0.24452785794991249, rtol=1e-12)
    L = math.log(1.4 / 0.05)
    expected = 15.2 * math.sqrt(3.0 * L / 500) + 178.0 * 7.0 * L / 500
    assert_allclose(pca_radius(3.0, 7.0, 500, 0.05, centered=False), expected, rtol=1e-14)
    assert pca_gap_threshold(3.0, 7.0, 500, 0.05) == 4.0 * pca_radius(3.0, 7.0, 500, 0.05)


def test_pca_radius_domain():
    with pytest.raises(ValueError):
        pca_radius(-1.0, 1.0, 100, 0.1)
    with pytest.raises(ValueError):
        pca_radius(1.0, -1.0, 100, 0.1)
    with pytest.raises(ValueError):
        pca_radius(1.0, 1.0, 0, 0.1)
    with pytest.raises(ValueError):
        pca_radius(1.0, 1.0, 100, 0.0)


def test_projector_stability_obeys_gap_inequality():
    # perturbations small against the gap keep the projector within
    # 2 ||E||_F / gap, checked numerically on simple spectra
    rng = np.random.default_rng(47)
    base = np.diag([5.0, 4.0, 3.0, 0.5, 0.2])
    m, gap = 3, 2.5
    for _ in range(10):
        E = rng.normal(size=(5, 5))
        E = 0.5 * (E + E.T)
        E *= (gap / 4.0) * rng.uniform(0.05, 0.95) / np.linalg.norm(E, "fro")
        dist = projector_distance(top_projector(base + E, m), top_projector(base, m),
                                  "frobenius")
        assert dist <= 2.0 * np.linalg.norm(E, "fro") / gap
