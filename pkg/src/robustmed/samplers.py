"""Random draws for the simulation studies.

Everything routes through counter-based Philox generators keyed by
(seed, stream), one stream per repetition, so results are reproducible
and independent of how repetitions are scheduled across workers.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "rng_stream",
    "HEAVY_TAIL_VAR",
    "sample_heavy_tail",
    "heavy_tail_pdf",
    "MIXTURE_SPIKE",
    "MIXTURE_SPIKE_PROB",
    "MIXTURE_BULK_STD",
    "MIXTURE_STD",
    "sample_mixture_noise",
    "sample_outliers",
    "ISOTROPIC_KINDS",
    "sample_isotropic_matrices",
    "sample_isotropic_matrix",
    "pca_mixing_diagonal",
]


def rng_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for one (seed, stream) pair."""
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=(stream,))))


# per-coordinate variance of the cubic-tail law below, 4 pi / (3 sqrt(3));
# precomputed so radius formulas never depend on a quadrature step
HEAVY_TAIL_VAR = 4.0 * math.pi / (3.0 * math.sqrt(3.0))


def sample_heavy_tail(rng: np.random.Generator, size) -> np.ndarray:
    """Symmetric density 3|y|^2 / (2 (1 + |y|^3)^2): tails like |y|^-4.

    Inverse-CDF transform y = sign(v) (|v|/(1 - |v|))^{1/3} of
    v = 2u - 1, u uniform on [0, 1); |v| is clipped to 1 - 1e-16 so every
    draw is finite. Second moments exist, third absolute moments do not.
    """
    u = rng.random(size)
    v = 2.0 * u - 1.0
    v = np.clip(v, -1.0 + 1e-16, 1.0 - 1e-16)
    a = np.abs(v)
    return np.sign(v) * np.cbrt(a / (1.0 - a))


def heavy_tail_pdf(y) -> np.ndarray:
    """Density of the cubic-tail law, for audits against quadrature."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    return 1.5 * a ** 2 / (1.0 + a ** 3) ** 2


MIXTURE_SPIKE = 250.0 / math.sqrt(2.0)
MIXTURE_SPIKE_PROB = 1.0 / 500.0
MIXTURE_BULK_STD = math.sqrt(0.125)
# total std of the mixture: sqrt((1 - 1/500)/8 + (1/500) * (250/sqrt(2))^2)
MIXTURE_STD = math.sqrt((1.0 - MIXTURE_SPIKE_PROB) * 0.125
                        + MIXTURE_SPIKE_PROB * MIXTURE_SPIKE ** 2)


def sample_mixture_noise(rng: np.random.Generator, size,
                         prob: float = MIXTURE_SPIKE_PROB) -> np.ndarray:
    """Gaussian N(0, 1/8) contaminated by rare symmetric spikes at 250/sqrt(2).

    The Gaussian branch, the spike signs, and the branch selector are all
    drawn unconditionally in that order and combined with where(), so the
    stream layout does not depend on how many spikes fire. prob overrides
    the spike frequency; the magnitude is fixed.
    """
    gauss = rng.normal(0.0, MIXTURE_BULK_STD, size)
    signs = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    fire = rng.random(size) < prob
    return np.where(fire, signs * MIXTURE_SPIKE, gauss)


def sample_outliers(rng: np.random.Generator, count: int, dim: int,
                    half_width: float = 20.0) -> np.ndarray:
    """Uniform draws from the centered cube [-half_width, half_width]^dim."""
    if count < 0 or dim < 1:
        raise ValueError("need count >= 0 and dim >= 1")
    if half_width <= 0.0:
        raise ValueError("half_width must be positive")
    return rng.uniform(-half_width, half_width, (count, dim))


ISOTROPIC_KINDS = ("gauss_sym", "rademacher_sym", "diag_gauss", "diag_rademacher")


def sample_isotropic_matrices(rng: np.random.Generator, count: int, dim: int,
                              kind: str = "gauss_sym") -> np.ndarray:
    """Stack of symmetric design matrices with E <A, X> <A, X'> matching <A, A'>.

    gauss_sym: N(0,1) diagonal, N(0, 1/2) off-diagonal entries.
    rademacher_sym: +-1 diagonal, +-1/sqrt(2) off-diagonal.
    diag_gauss / diag_rademacher: diagonal-only variants. Off-diagonal
    scaling by 1/sqrt(2) compensates each entry appearing twice. Diagonal
    then upper-triangle values are drawn in a fixed order per batch.
    """
    if kind not in ISOTROPIC_KINDS:
        raise ValueError(f"unknown kind {kind!r}, expected one of {ISOTROPIC_KINDS}")
    if count < 1 or dim < 1:
        raise ValueError("need count >= 1 and dim >= 1")
    n_off = dim * (dim - 1) // 2
    if kind == "gauss_sym":
        diag = rng.normal(0.0, 1.0, (count, dim))
        off = rng.normal(0.0, math.sqrt(0.5), (count, n_off))
    elif kind == "rademacher_sym":
        diag = np.where(rng.random((count, dim)) < 0.5, -1.0, 1.0)
        off = np.where(rng.random((count, n_off)) < 0.5, -1.0, 1.0) / math.sqrt(2.0)
    elif kind == "diag_gauss":
        diag = rng.normal(0.0, 1.0, (count, dim))
        off = None
    else:
        diag = np.where(rng.random((count, dim)) < 0.5, -1.0, 1.0)
        off = None
    out = np.zeros((count, dim, dim))
    ii = np.arange(dim)
    out[:, ii, ii] = diag
    if off is not None and n_off:
        iu, ju = np.triu_indices(dim, k=1)
        out[:, iu, ju] = off
        out[:, ju, iu] = off
    return out


def sample_isotropic_matrix(rng: np.random.Generator, dim: int,
                            kind: str = "gauss_sym") -> np.ndarray:
    """Single draw; see sample_isotropic_matrices."""
    return sample_isotropic_matrices(rng, 1, dim, kind)[0]


def pca_mixing_diagonal(dim: int, m: int) -> np.ndarray:
    """Diagonal of the spiked mixing matrix used by the PCA study.

    m leading entries sqrt(4 + m) down to sqrt(5) (so sqrt(9)..sqrt(5)
    at m = 5), then a flat 1/sqrt(dim) tail. Squaring gives the spiked
    covariance the study estimates.
    """
    if not (1 <= m < dim):
        raise ValueError(f"need 1 <= m < dim, got m={m}, dim={dim}")
    spikes = np.sqrt(np.arange(4 + m, 4, -1, dtype=float))
    return np.concatenate([spikes, np.full(dim - m, 1.0 / math.sqrt(dim))])
