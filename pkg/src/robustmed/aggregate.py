"""Confidence boosting by block aggregation.

Split a sample into k disjoint blocks, estimate on each block, take the
geometric median of the block estimates. A block estimate only needs to
land within r of the truth with probability a bit over 1/2; the median
then lands within c_alpha * r except with probability e^{-k psi}, which
is what turns a weakly concentrated estimator into a subgaussian-style
one. This module provides the block bookkeeping, the aggregation step,
the failure-probability budget, and the mean/trace/confidence-ball
estimators built on it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import mean_factor_sharp
from .median import MedianOptions, MedianResult, PointSet, geometric_median, psi

__all__ = [
    "AggregationPlan",
    "BlockPartition",
    "DeviationBudget",
    "block_count",
    "partition_blocks",
    "boost",
    "boost_bound",
    "robust_mean",
    "mean_radius",
    "robust_trace",
    "ball_radius",
    "confidence_ball",
]


@dataclass
class AggregationPlan:
    """Operating point of the construction.

    alpha and p are the median level and per-block failure probability,
    delta the target overall failure probability. k, when given, overrides
    the count derived from delta. norm selects how block estimates are
    compared: plain Euclidean, or Frobenius for matrix-valued blocks.
    """

    alpha: float = 7.0 / 18.0
    p: float = 0.1
    delta: float = 0.05
    k: int | None = None
    norm: str = "euclidean"

    def __post_init__(self):
        if not (0.0 < self.p < self.alpha < 0.5):
            raise ValueError("need 0 < p < alpha < 1/2")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be at least 1 when given")
        if self.norm not in ("euclidean", "frobenius"):
            raise ValueError(f"unknown norm {self.norm!r}")

    def resolve_k(self, n: int) -> int:
        """Block count for an n-sample: explicit k, else derived from delta.

        The guarantees assume k <= n/2 (blocks of at least two samples).
        A derived count that breaks the assumption is an error: the
        requested confidence is not reachable at this sample size. An
        explicit k is the caller's problem and only draws the partition
        warning downstream.
        """
        k = self.k if self.k is not None else block_count(self.delta, self.alpha, self.p)
        if k > n:
            raise ValueError(f"k={k} exceeds the sample size n={n}")
        if self.k is None and 2 * k > n:
            raise ValueError(
                f"delta={self.delta} needs k={k} blocks but the k <= n/2 standing "
                f"assumption fails at n={n}; collect more data or relax delta"
            )
        return k


@dataclass
class BlockPartition:
    """Disjoint contiguous index blocks plus whatever the split discarded."""

    groups: list
    discarded: np.ndarray

    @property
    def k(self) -> int:
        return len(self.groups)


@dataclass
class DeviationBudget:
    """Failure-probability bound and the contamination level it tolerates."""

    bound: float
    tau_max: float


def block_count(delta: float, alpha: float = 7.0 / 18.0, p: float = 0.1) -> int:
    """Blocks needed for overall failure probability at most delta.

    k = floor(log(1/delta) / psi(alpha; p)) + 1, which makes e^{-k psi}
    <= delta with the smallest integer k.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    ratio = math.log(1.0 / delta) / psi(alpha, p)
    # a hair of slack so deltas sitting exactly on e^{-m psi} floor to m
    # as in exact arithmetic; floor(x + eps) + 1 > x keeps the guarantee
    return int(math.floor(ratio + 1e-12)) + 1


def partition_blocks(n: int, k: int) -> BlockPartition:
    """Split indices 0..n-1 into k contiguous blocks of floor(n/k).

    The remainder n - k*floor(n/k) is discarded (reported, never silently
    folded into a block: equal block sizes keep the per-block failure
    probability uniform). k > n/2 draws a warning since the aggregation
    guarantees assume blocks of at least two samples.
    """
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if 2 * k > n and n > 1:
        warnings.warn(f"k={k} blocks of an n={n} sample breaks the k <= n/2 assumption")
    m = n // k
    groups = [np.arange(i * m, (i + 1) * m) for i in range(k)]
    return BlockPartition(groups, np.arange(k * m, n))


def boost(block_estimates, plan: AggregationPlan | None = None,
          opts: MedianOptions | None = None) -> MedianResult:
    """Geometric median of block estimates, the aggregation step itself.

    Accepts a uniform PointSet, a (k, D) array, or for plan.norm
    'frobenius' a (k, D, D) stack of square matrices, which are compared
    in Frobenius distance by flattening (an isometry) and whose median is
    reshaped back to a matrix. The result's weights are the solver's
    convex coefficients over the blocks.
    """
    if plan is None:
        plan = AggregationPlan()
    matrix_shape = None
    if isinstance(block_estimates, PointSet):
        if not block_estimates.uniform:
            raise ValueError("block estimates carry uniform weights")
        ps = block_estimates
    else:
        arr = np.asarray(block_estimates, dtype=float)
        if plan.norm == "frobenius":
            if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
                raise ValueError("frobenius aggregation expects a (k, D, D) stack")
            matrix_shape = arr.shape[1:]
            arr = arr.reshape(arr.shape[0], -1)
        ps = PointSet(arr)
    res = geometric_median(ps, opts)
    if matrix_shape is not None:
        res.point = res.point.reshape(matrix_shape)
    return res


def boost_bound(k: int, alpha: float = 7.0 / 18.0, p: float = 0.1,
                tau: float = 0.0) -> DeviationBudget:
    """Failure probability of the aggregation with a tau-fraction replaced.

    exp(-k (1 - tau) psi((alpha - tau)/(1 - tau); p)); tau = 0 recovers
    the clean bound e^{-k psi}. Valid for 0 <= tau < tau_max =
    (alpha - p)/(1 - p), beyond which the effective level drops to p.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    tau_max = (alpha - p) / (1.0 - p)
    if not (0.0 <= tau < tau_max):
        raise ValueError(f"tau must lie in [0, {tau_max}), got {tau!r}")
    eff = (alpha - tau) / (1.0 - tau)
    bound = math.exp(-k * (1.0 - tau) * psi(eff, p))
    return DeviationBudget(bound, tau_max)


def _as_sample(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("data must be a nonempty (n, D) array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("data must be finite")
    return arr


def robust_mean(data, plan: AggregationPlan | None = None,
                opts: MedianOptions | None = None) -> MedianResult:
    """Median of block sample means.

    With k = 1 this is the sample mean, bit for bit. Block boundaries are
    contiguous; the trailing remainder is discarded by the partition.
    """
    if plan is None:
        plan = AggregationPlan()
    data = _as_sample(data)
    k = plan.resolve_k(data.shape[0])
    part = partition_blocks(data.shape[0], k)
    means = np.stack([data[g].mean(axis=0) for g in part.groups])
    return geometric_median(PointSet(means), opts)


def mean_radius(trace_sigma: float, n: int, delta: float, variant: str = "c11") -> float:
    """Deviation radius of the median-of-means at confidence 1 - delta.

    c11: 11 sqrt(tr(Sigma) log(1.4/delta) / n), the headline display.
    sharp: the exact constant 7.5918 with the block-count correction in
    the denominator, n - 3.5 log(1.4/delta), valid while that is positive.
    """
    if trace_sigma < 0.0:
        raise ValueError("trace_sigma must be nonnegative")
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    L = math.log(1.4 / delta)
    if variant == "c11":
        return 11.0 * math.sqrt(trace_sigma * L / n)
    if variant == "sharp":
        denom = n - 3.5 * L
        if denom <= 0.0:
            raise ValueError("sharp radius needs n > 3.5 log(1.4/delta)")
        return mean_factor_sharp() * math.sqrt(trace_sigma * L / denom)
    raise ValueError(f"unknown variant {variant!r}")


def _scalar_lower_median(values: np.ndarray) -> float:
    # lower middle for even counts, consistent with the coordinatewise rule
    return float(np.sort(values)[(values.size - 1) // 2])


def robust_trace(data, plan: AggregationPlan | None = None) -> float:
    """Median of block second-moment traces around the block means.

    T_j = mean_i ||X_i - mu_j||^2 within block j (no Bessel correction;
    the bias is what the theory prices in), aggregated by the scalar
    lower median. Needs n >= 2k so every block holds two samples.
    """
    if plan is None:
        plan = AggregationPlan()
    data = _as_sample(data)
    n = data.shape[0]
    k = plan.resolve_k(n)
    if n < 2 * k:
        raise ValueError(f"robust_trace needs n >= 2k, got n={n}, k={k}")
    part = partition_blocks(n, k)
    traces = np.empty(k)
    for j, g in enumerate(part.groups):
        block = data[g]
        mu = block.mean(axis=0)
        traces[j] = float(np.mean(np.sum((block - mu) ** 2, axis=1)))
    return _scalar_lower_median(traces)


def ball_radius(trace_hat: float, n: int, delta: float) -> float:
    """Data-driven ball radius 11 sqrt(2) sqrt(T log(1.4/delta) / n)."""
    if trace_hat < 0.0:
        raise ValueError("trace_hat must be nonnegative")
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    return 11.0 * math.sqrt(2.0) * math.sqrt(trace_hat * math.log(1.4 / delta) / n)


def confidence_ball(data, plan: AggregationPlan | None = None,
                    opts: MedianOptions | None = None):
    """Fully data-driven confidence ball: (center, radius).

    Center is the median of block means, radius plugs the robust trace
    into ball_radius at the plan's delta. Covers the mean with
    probability 1 - 2 delta under a finite fourth moment.
    """
    if plan is None:
        plan = AggregationPlan()
    data = _as_sample(data)
    center = robust_mean(data, plan, opts).point
    trace_hat = robust_trace(data, plan)
    return center, ball_radius(trace_hat, data.shape[0], plan.delta)
