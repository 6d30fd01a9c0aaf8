"""Geometric median of weighted point sets in Euclidean space.

The geometric median of x_1..x_k with weights w_j minimizes
F(y) = sum_j w_j ||y - x_j||. Unlike the coordinatewise median it is
equivariant under isometries, and it moves by a bounded factor when a
minority of the points is corrupted, which is what makes it a good
aggregator of independent block estimates.

The solver is Weiszfeld's fixed-point iteration with Ostresh's handling
of iterates that land on a data point, so it converges from any start
and can certify a vertex as the exact minimizer. The returned point is
always the convex combination of the inputs given by the reported
weights, bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PointSet",
    "MedianOptions",
    "MedianResult",
    "psi",
    "c_alpha",
    "objective",
    "geometric_median",
    "coordinatewise_median",
    "thresholded_median",
    "select_nemirovski",
    "select_nemirovski_adaptive",
    "lemma_witness",
]

# iterates within this relative distance of a data point take the vertex branch
VERTEX_TOL = 1e-13


def psi(alpha: float, p: float) -> float:
    """Binomial large-deviation exponent at level alpha for head probability p.

    psi(alpha; p) = (1 - alpha) log((1 - alpha)/(1 - p)) + alpha log(alpha/p),
    the rate at which P(Bin(k, p) >= alpha k) decays in k. Needs
    0 < p < alpha <= 1/2; the right endpoint is included because the
    majority-vote constants evaluate it at alpha = 1/2.
    """
    if not (0.0 < p < alpha <= 0.5):
        raise ValueError(f"psi needs 0 < p < alpha <= 1/2, got alpha={alpha!r}, p={p!r}")
    return (1.0 - alpha) * math.log((1.0 - alpha) / (1.0 - p)) + alpha * math.log(alpha / p)


def c_alpha(alpha: float, space: str = "hilbert") -> float:
    """Blow-up constant of the median under an alpha-minority of bad points.

    hilbert: (1 - alpha) sqrt(1/(1 - 2 alpha)); banach: 2(1 - alpha)/(1 - 2 alpha).
    Both are increasing on (0, 1/2), with limits 1 and 2 at alpha -> 0.
    """
    if not (0.0 < alpha < 0.5):
        raise ValueError(f"c_alpha needs alpha in (0, 1/2), got {alpha!r}")
    if space == "hilbert":
        return (1.0 - alpha) * math.sqrt(1.0 / (1.0 - 2.0 * alpha))
    if space == "banach":
        return 2.0 * (1.0 - alpha) / (1.0 - 2.0 * alpha)
    raise ValueError(f"space must be 'hilbert' or 'banach', got {space!r}")


class PointSet:
    """Ordered collection of k points in R^D with optional weights.

    Points are a (k, D) float array; a 1-D input is treated as k scalars.
    Weights are nonnegative and must sum to 1 within 1e-12; omitting them
    means uniform. Both arrays are copied and frozen.
    """

    def __init__(self, points, weights=None):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (k, D) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        self.uniform = weights is None
        if weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.array(weights, dtype=float)
            if w.shape != (pts.shape[0],):
                raise ValueError("weights must be one per point")
            if not np.all(np.isfinite(w)) or np.any(w < 0.0):
                raise ValueError("weights must be finite and nonnegative")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("weights must sum to 1")
        pts.setflags(write=False)
        w.setflags(write=False)
        self.points = pts
        self.weights = w

    @property
    def k(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __repr__(self):
        tag = "uniform" if self.uniform else "weighted"
        return f"PointSet(k={self.k}, dim={self.dim}, {tag})"


@dataclass
class MedianOptions:
    """Solver knobs: step tolerance, iteration cap, Ostresh relaxation."""

    tol: float = 1e-10
    max_iter: int = 10_000
    relaxation: float = 1.0

    def __post_init__(self):
        if not (self.tol > 0.0):
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not (1.0 <= self.relaxation <= 2.0):
            raise ValueError("relaxation must lie in [1, 2]")


@dataclass
class MedianResult:
    """Solver output. point == weights @ points of the input, exactly."""

    point: np.ndarray
    weights: np.ndarray
    iterations: int
    converged: bool
    objective: float
    objective_trace: list = field(default_factory=list, repr=False)


def objective(ps: PointSet, y) -> float:
    """Weighted sum of distances F(y) = sum_j w_j ||y - x_j||."""
    y = np.asarray(y, dtype=float)
    if y.shape != (ps.dim,):
        raise ValueError(f"y must have shape ({ps.dim},), got {y.shape}")
    return float(ps.weights @ np.linalg.norm(ps.points - y, axis=1))


def _colmedian(X: np.ndarray) -> np.ndarray:
    # lower-middle order statistic per coordinate, deterministic for even k
    return np.sort(X, axis=0)[(X.shape[0] - 1) // 2].copy()


def _one_hot(k: int, j: int) -> np.ndarray:
    w = np.zeros(k)
    w[j] = 1.0
    return w


def _vertex_result(ps: PointSet, j: int, iterations: int, trace: list) -> MedianResult:
    xj = ps.points[j].copy()
    obj = float(ps.weights @ np.linalg.norm(ps.points - xj, axis=1))
    trace.append(obj)
    return MedianResult(xj, _one_hot(ps.k, j), iterations, True, obj, trace)


def geometric_median(ps: PointSet, opts: MedianOptions | None = None) -> MedianResult:
    """Minimize the weighted sum of Euclidean distances over R^D.

    Starts at the coordinatewise median and applies the Weiszfeld map,
    relaxed by opts.relaxation. An iterate within VERTEX_TOL (relative to
    the data scale) of a data point is tested for vertex optimality: with
    R the weighted unit-vector sum over the far points and W0 the weight
    sitting on the near cluster, ||R|| <= W0 certifies the vertex, which
    is then returned exactly with a one-hot weight vector. Otherwise the
    iterate steps off the vertex along R.

    Stops when the step is at most tol * max(1, ||z||). The result's
    point is the convex combination weights @ points computed at the last
    iterate, so reconstruction holds exactly; objective_trace records
    F at every iterate (a nonincreasing sequence, up to vertex-size
    wiggle of order VERTEX_TOL).
    """
    if opts is None:
        opts = MedianOptions()
    X, w = ps.points, ps.weights
    k = ps.k
    if k == 1:
        return MedianResult(X[0].copy(), np.ones(1), 0, True, 0.0, [0.0])

    scale = max(1.0, float(np.max(np.linalg.norm(X, axis=1))))
    vtol = VERTEX_TOL * scale
    zeta = opts.relaxation
    z = _colmedian(X)
    trace: list = []
    iterations = 0
    converged = False

    while iterations < opts.max_iter:
        iterations += 1
        diff = X - z
        d = np.linalg.norm(diff, axis=1)
        trace.append(float(w @ d))
        near = d <= vtol
        if near.any():
            far = ~near
            j = int(np.argmin(d))
            if not far.any():
                return _vertex_result(ps, j, iterations, trace)
            inv = w[far] / d[far]
            R = inv @ diff[far]
            Rn = float(np.linalg.norm(R))
            W0 = float(w[near].sum())
            if Rn <= W0:
                return _vertex_result(ps, j, iterations, trace)
            # step off the vertex along the residual pull
            step = (Rn - W0) / float(inv.sum())
            znew = z + zeta * step * (R / Rn)
        else:
            inv = w / d
            t_pt = (inv / inv.sum()) @ X
            znew = t_pt if zeta == 1.0 else z + zeta * (t_pt - z)
        if float(np.linalg.norm(znew - z)) <= opts.tol * max(1.0, float(np.linalg.norm(z))):
            z = znew
            converged = True
            break
        z = znew

    # one plain Weiszfeld application at the accepted iterate yields the
    # convex combination that is returned verbatim
    diff = X - z
    d = np.linalg.norm(diff, axis=1)
    near = d <= vtol
    if near.any():
        far = ~near
        j = int(np.argmin(d))
        if not far.any():
            return _vertex_result(ps, j, iterations, trace)
        inv = w[far] / d[far]
        R = inv @ diff[far]
        if float(np.linalg.norm(R)) <= float(w[near].sum()):
            return _vertex_result(ps, j, iterations, trace)
    inv = w / np.maximum(d, vtol)
    alpha = inv / inv.sum()
    point = alpha @ X
    obj = float(w @ np.linalg.norm(X - point, axis=1))
    trace.append(obj)
    return MedianResult(point, alpha, iterations, converged, obj, trace)


def coordinatewise_median(ps: PointSet) -> np.ndarray:
    """Per-coordinate median, lower middle of the two for even k.

    Uniform weights only; weighted sets have no agreed-on convention here.
    """
    if not ps.uniform:
        raise ValueError("coordinatewise median is defined for uniform weights only")
    return _colmedian(ps.points)


def thresholded_median(ps: PointSet, nu: float, opts: MedianOptions | None = None):
    """Geometric median with small convex weights zeroed out.

    Solves for the median, drops coefficients below nu/k, renormalizes
    the survivors and returns (point, weights) for the reweighted
    combination. nu = 0 returns the solver's combination unchanged.
    """
    if nu < 0.0:
        raise ValueError("nu must be nonnegative")
    res = geometric_median(ps, opts)
    keep = res.weights >= nu / ps.k
    if not keep.any():
        raise ValueError("threshold nu/k removed every weight")
    if keep.all():
        return res.point, res.weights
    w = np.where(keep, res.weights, 0.0)
    w = w / w.sum()
    return w @ ps.points, w


def _pairwise_distances(X: np.ndarray) -> np.ndarray:
    return np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)


def select_nemirovski(ps: PointSet, epsilon: float) -> int:
    """First index whose 2*epsilon ball holds a strict majority of the points.

    The ball count includes the center itself. Returns the smallest
    qualifying 0-based index, or 0 when no point qualifies (the caller's
    radius was too optimistic; any fixed choice is as good as another).
    """
    if not ps.uniform:
        raise ValueError("selector is defined for uniform weights only")
    if not (epsilon > 0.0):
        raise ValueError("epsilon must be positive")
    d = _pairwise_distances(ps.points)
    need = ps.k // 2 + 1
    for j in range(ps.k):
        if int(np.count_nonzero(d[j] <= 2.0 * epsilon)) >= need:
            return j
    return 0


def select_nemirovski_adaptive(ps: PointSet):
    """Smallest radius at which some point captures a majority, and that point.

    For each candidate j take half its (floor(k/2) + 1)-th smallest distance
    to the set (self included); the minimizer wins, ties to the smallest
    index. Returns (index, epsilon_star); running select_nemirovski at
    epsilon_star returns the same index. Needs k >= 2.
    """
    if not ps.uniform:
        raise ValueError("selector is defined for uniform weights only")
    if ps.k < 2:
        raise ValueError("adaptive selector needs at least two points")
    d = _pairwise_distances(ps.points)
    need = ps.k // 2 + 1
    eps = np.sort(d, axis=1)[:, need - 1] / 2.0
    j = int(np.argmin(eps))
    return j, float(eps[j])


def lemma_witness(ps: PointSet, z, r: float, alpha: float, space: str = "hilbert") -> np.ndarray:
    """Indices pushed beyond r from z when z sits far from the median.

    Precondition: ||median - z|| > c_alpha(alpha, space) * r. The
    aggregation lemma then forces more than alpha * k of the points
    outside the radius-r ball around z; the returned 0-based index array
    is that witness set, J = {j : ||x_j - z|| > r}. Uniform weights only.
    A witness set with |J| <= alpha * k means the solver and the lemma
    disagree, which is reported as a RuntimeError rather than bad data.
    """
    if not ps.uniform:
        raise ValueError("lemma_witness is defined for uniform weights only")
    if not (0.0 < alpha < 0.5):
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha!r}")
    if not (r > 0.0):
        raise ValueError("r must be positive")
    z = np.asarray(z, dtype=float)
    if z.shape != (ps.dim,):
        raise ValueError(f"z must have shape ({ps.dim},), got {z.shape}")
    med = geometric_median(ps).point
    if float(np.linalg.norm(med - z)) <= c_alpha(alpha, space) * r:
        raise ValueError("z is within c_alpha * r of the median; no witness is implied")
    d = np.linalg.norm(ps.points - z, axis=1)
    J = np.flatnonzero(d > r)
    if J.size <= alpha * ps.k:
        raise RuntimeError("witness set no larger than alpha * k; median solve is inconsistent")
    return J
