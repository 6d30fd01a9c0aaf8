"""Sparse and low-rank regression blocks for median aggregation.

Two penalized least-squares solvers live here: an l1 coordinate-descent
Lasso and a nuclear-norm FISTA solver over a symmetric trace-norm ball.
Both come with block-median wrappers that fit each block separately at
the same penalty and aggregate by geometric median, and with the
penalty-level calculators the theory prescribes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .constants import p_star
from .median import MedianOptions, MedianResult, PointSet, geometric_median

__all__ = [
    "LassoOptions",
    "LassoResult",
    "BlockRegressionResult",
    "lasso",
    "kkt_residuals",
    "lasso_penalty",
    "median_lasso",
    "restricted_eigenvalue",
    "NuclearOptions",
    "NuclearResult",
    "svt",
    "nuclear_ls",
    "median_matrix_regression",
    "MatrixPenaltyParams",
    "matrix_penalty",
]


def _soft(x: float, thr: float) -> float:
    if x > thr:
        return x - thr
    if x < -thr:
        return x + thr
    return 0.0


@dataclass
class LassoOptions:
    """Coordinate-descent knobs. tol bounds the largest coordinate move per sweep."""

    tol: float = 1e-8
    max_sweeps: int = 100_000
    track_objective: bool = False

    def __post_init__(self):
        if not (self.tol > 0.0):
            raise ValueError("tol must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")


@dataclass
class LassoResult:
    coef: np.ndarray
    sweeps: int
    converged: bool
    objective: float
    objective_trace: list = field(default_factory=list, repr=False)


def _lasso_objective(X, y, w, penalty):
    r = y - X @ w
    return float(r @ r) / y.size + penalty * float(np.abs(w).sum())


def lasso(X, y, penalty: float, opts: LassoOptions | None = None, init=None) -> LassoResult:
    """Minimize (1/n)||y - X w||^2 + penalty ||w||_1 by cyclic coordinate descent.

    Full cyclic sweeps with residual updates, no active-set shortcuts:
    every coordinate is visited every sweep. A zero column keeps a zero
    coefficient. init warm-starts the coefficients (useful along a
    penalty path); the default start is zero.
    """
    if opts is None:
        opts = LassoOptions()
    if penalty < 0.0:
        raise ValueError("penalty must be nonnegative")
    X = np.asfortranarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, D) with y of length n")
    if X.shape[0] == 0:
        raise ValueError("need at least one sample")
    n, D = X.shape
    col_sq = (2.0 / n) * np.einsum("ij,ij->j", X, X)
    if init is None:
        w = np.zeros(D)
        r = y.copy()
    else:
        w = np.array(init, dtype=float)
        if w.shape != (D,):
            raise ValueError("init must have one entry per column")
        r = y - X @ w

    trace: list = []
    if opts.track_objective:
        trace.append(_lasso_objective(X, y, w, penalty))
    two_over_n = 2.0 / n
    sweeps = 0
    converged = False
    while sweeps < opts.max_sweeps:
        sweeps += 1
        delta_max = 0.0
        for i in range(D):
            a = col_sq[i]
            if a == 0.0:
                continue
            xi = X[:, i]
            z = two_over_n * float(xi @ r) + a * w[i]
            wi = _soft(z, penalty) / a
            d = wi - w[i]
            if d != 0.0:
                w[i] = wi
                r -= d * xi
                ad = abs(d)
                if ad > delta_max:
                    delta_max = ad
        if opts.track_objective:
            trace.append(_lasso_objective(X, y, w, penalty))
        if delta_max <= opts.tol:
            converged = True
            break
    obj = _lasso_objective(X, y, w, penalty)
    return LassoResult(w, sweeps, converged, obj, trace)


def kkt_residuals(X, y, coef, penalty: float):
    """Stationarity residuals of a Lasso candidate.

    Returns (inactive, active): the worst overshoot of |g_i| beyond the
    penalty over zero coefficients, and the worst |g_i - penalty *
    sign(w_i)| over nonzero ones, where g = (2/n) X^T (y - X w). Both
    vanish (to solver precision) at the exact optimum.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(coef, dtype=float)
    g = (2.0 / y.size) * (X.T @ (y - X @ w))
    active = w != 0.0
    inactive_res = 0.0
    if (~active).any():
        inactive_res = float(np.max(np.maximum(np.abs(g[~active]) - penalty, 0.0)))
    active_res = 0.0
    if active.any():
        active_res = float(np.max(np.abs(g[active] - penalty * np.sign(w[active]))))
    return inactive_res, active_res


def lasso_penalty(sigma: float, n: int, D: int, t: float, variant: str = "gaussian",
                  M: float | None = None) -> float:
    """Penalty level for noise scale sigma at confidence parameter t.

    gaussian: 4 sigma t sqrt(log(D)/n). robust: 95 M sigma
    sqrt((t + 2/7)/n * log(2D)) for block medians of designs bounded by M.
    """
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    if n < 1 or D < 2:
        raise ValueError("need n >= 1 and D >= 2")
    if t <= 0.0:
        raise ValueError("t must be positive")
    if variant == "gaussian":
        return 4.0 * sigma * t * math.sqrt(math.log(D) / n)
    if variant == "robust":
        if M is None:
            raise ValueError("robust variant needs the design bound M")
        return 95.0 * M * sigma * math.sqrt((t + 2.0 / 7.0) / n * math.log(2.0 * D))
    raise ValueError(f"unknown variant {variant!r}")


@dataclass
class BlockRegressionResult:
    """Median-aggregated block fits. median.point is the aggregate estimate."""

    median: MedianResult
    block_estimates: np.ndarray
    block_converged: np.ndarray

    @property
    def point(self) -> np.ndarray:
        return self.median.point


def median_lasso(X, y, penalty: float, k: int, opts: LassoOptions | None = None,
                 median_opts: MedianOptions | None = None) -> BlockRegressionResult:
    """Lasso on k contiguous blocks at one penalty, aggregated by median.

    Blocks are size floor(n/k) with the trailing remainder dropped. With
    k = 1 the aggregate equals the plain Lasso fit exactly.
    """
    from .aggregate import partition_blocks

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, D) with y of length n")
    part = partition_blocks(X.shape[0], k)
    fits = [lasso(X[g], y[g], penalty, opts) for g in part.groups]
    coefs = np.stack([f.coef for f in fits])
    med = geometric_median(PointSet(coefs), median_opts)
    return BlockRegressionResult(med, coefs, np.array([f.converged for f in fits]))


def _project_l1(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball of the given radius."""
    if radius < 0.0:
        raise ValueError("radius must be nonnegative")
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    if radius == 0.0:
        return np.zeros_like(v)
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, u.size + 1)
    rho = int(np.nonzero(u > (css - radius) / idx)[0][-1])
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def restricted_eigenvalue(X, s: int, c0: float = 3.0, restarts: int = 10, seed: int = 0,
                          iters: int = 200):
    """Brute-force restricted eigenvalue audit of a design matrix.

    Searches min ||X u|| / (sqrt(n) ||u_J||) over supports |J| <= s and
    the cone ||u_{J^c}||_1 <= c0 ||u_J||_1, by projected gradient descent
    on the Rayleigh ratio from seeded restarts plus the support-restricted
    bottom eigenvector. Deliberately small-scale (D <= 20, s <= 3).

    Returns (upper, lower): the best ratio found, an upper bound on the
    true constant since every candidate is feasible, and the unrestricted
    floor sqrt(max(lambda_min(X^T X / n), 0)).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be an (n, D) matrix")
    n, D = X.shape
    if D > 20 or s > 3:
        raise ValueError("brute-force audit is capped at D <= 20, s <= 3")
    if not (1 <= s <= D):
        raise ValueError(f"need 1 <= s <= D, got s={s}")
    if c0 < 0.0:
        raise ValueError("c0 must be nonnegative")
    G = X.T @ X / n
    evals = np.linalg.eigvalsh(G)
    lower = math.sqrt(max(float(evals[0]), 0.0))
    lam_max = max(float(evals[-1]), 1e-300)
    eta = 0.5 / lam_max
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))

    def ratio(u, J):
        nJ = float(np.linalg.norm(u[J]))
        if nJ == 0.0:
            return math.inf
        return float(u @ (G @ u)) / nJ ** 2

    best = math.inf
    for size in range(1, s + 1):
        for J in combinations(range(D), size):
            J = list(J)
            comp = np.ones(D, dtype=bool)
            comp[J] = False
            # support-restricted bottom eigenvector is always feasible
            sub = np.linalg.eigh(G[np.ix_(J, J)])[1][:, 0]
            seeds = [None] * restarts
            u0 = np.zeros(D)
            u0[J] = sub
            candidates = [u0] + [rng.normal(size=D) for _ in seeds]
            for u in candidates:
                u = u / max(np.linalg.norm(u), 1e-300)
                for _ in range(iters):
                    nJ2 = float(u[J] @ u[J])
                    if nJ2 <= 1e-28:
                        break
                    rho = float(u @ (G @ u)) / nJ2
                    grad = G @ u
                    grad[J] -= rho * u[J]
                    u = u - eta * grad
                    capJ = c0 * float(np.abs(u[J]).sum())
                    if float(np.abs(u[comp]).sum()) > capJ:
                        u[comp] = _project_l1(u[comp], capJ)
                    nrm = float(np.linalg.norm(u))
                    if nrm == 0.0:
                        break
                    u = u / nrm
                r = ratio(u, J)
                if r < best:
                    best = r
    upper = math.sqrt(max(best, 0.0)) if math.isfinite(best) else math.inf
    return upper, lower


@dataclass
class NuclearOptions:
    """Accelerated proximal-gradient knobs for the nuclear solver."""

    tol: float = 1e-9
    max_iter: int = 2000

    def __post_init__(self):
        if not (self.tol > 0.0):
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class NuclearResult:
    matrix: np.ndarray
    iterations: int
    converged: bool
    objective: float
    objective_trace: list = field(default_factory=list, repr=False)
    restarts: int = 0


def svt(M, threshold: float) -> np.ndarray:
    """Singular-value (here eigenvalue) soft-thresholding of a symmetric matrix."""
    M = np.asarray(M, dtype=float)
    if threshold < 0.0:
        raise ValueError("threshold must be nonnegative")
    e, V = np.linalg.eigh(0.5 * (M + M.T))
    e = np.sign(e) * np.maximum(np.abs(e) - threshold, 0.0)
    out = (V * e) @ V.T
    return 0.5 * (out + out.T)


def _power_opnorm(G: np.ndarray) -> float:
    # deterministic start, generic enough to see the top eigenspace
    v = np.linspace(1.0, 2.0, G.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(200):
        w = G @ v
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        new = float(v @ (G @ v))
        if abs(new - lam) <= 1e-12 * max(1.0, abs(new)):
            return new
        lam = new
    return lam


def _check_design_stack(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 3 or xs.shape[1] != xs.shape[2]:
        raise ValueError("designs must be a (n, D, D) stack")
    if not np.all(np.isfinite(xs)):
        raise ValueError("designs must be finite")
    return xs


def nuclear_ls(xs, ys, penalty: float, radius: float,
               opts: NuclearOptions | None = None) -> NuclearResult:
    """Trace regression (1/n)||y - <X_i, A>||^2 + penalty ||A||_nuc over a ball.

    The feasible set is symmetric matrices with nuclear norm at most
    radius. FISTA on the flattened problem: the gradient step uses half
    of step = 1/Q with Q the power-iteration estimate of the quadratic
    term's operator norm (inflated 5 percent so the majorization is
    genuine), the prox soft-thresholds eigenvalues by penalty * step / 2
    and then projects the spectrum onto the l1 ball. Momentum restarts
    whenever the objective would increase, falling back to the plain
    proximal step from the last accepted iterate, so the recorded
    objective trace is nonincreasing.
    """
    if opts is None:
        opts = NuclearOptions()
    if penalty < 0.0:
        raise ValueError("penalty must be nonnegative")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    xs = _check_design_stack(xs)
    ys = np.asarray(ys, dtype=float)
    n, D, _ = xs.shape
    if ys.shape != (n,):
        raise ValueError("ys must have one response per design")
    if n == 0:
        raise ValueError("need at least one sample")

    Xmat = xs.reshape(n, D * D)
    G = Xmat.T @ Xmat / n
    b = Xmat.T @ ys / n
    c0 = float(ys @ ys) / n
    Q = 1.05 * _power_opnorm(G)
    if Q <= 0.0:
        raise ArithmeticError("design operator is numerically zero")
    step = 1.0 / Q
    shrink = penalty * step / 2.0

    def prox(v: np.ndarray):
        M = v.reshape(D, D)
        e, V = np.linalg.eigh(0.5 * (M + M.T))
        e = np.sign(e) * np.maximum(np.abs(e) - shrink, 0.0)
        e = _project_l1(e, radius)
        A = (V * e) @ V.T
        A = 0.5 * (A + A.T)
        return A.reshape(-1), e

    def objective(a: np.ndarray, e: np.ndarray) -> float:
        return float(a @ (G @ a) - 2.0 * (b @ a)) + c0 + penalty * float(np.abs(e).sum())

    x = np.zeros(D * D)
    Fx = c0 + 0.0
    yk = x
    t = 1.0
    trace = [Fx]
    restarts = 0
    iterations = 0
    converged = False
    for _ in range(opts.max_iter):
        iterations += 1
        x_new, e_new = prox(yk - step * (G @ yk - b))
        F_new = objective(x_new, e_new)
        if F_new > Fx:
            # momentum overshot; restart from the last accepted iterate
            restarts += 1
            t = 1.0
            x_new, e_new = prox(x - step * (G @ x - b))
            F_new = objective(x_new, e_new)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        yk = x_new + ((t - 1.0) / t_next) * (x_new - x)
        move = float(np.linalg.norm(x_new - x))
        stop = move <= opts.tol * (1.0 + float(np.linalg.norm(x)))
        x = x_new
        Fx = F_new
        t = t_next
        trace.append(Fx)
        if stop:
            converged = True
            break

    A = x.reshape(D, D)
    return NuclearResult(0.5 * (A + A.T), iterations, converged, Fx, trace, restarts)


def median_matrix_regression(xs, ys, penalty: float, t: float, radius: float,
                             opts: NuclearOptions | None = None,
                             median_opts: MedianOptions | None = None) -> BlockRegressionResult:
    """Nuclear solver on floor(t) + 1 contiguous blocks, Frobenius median.

    t >= 1 is the confidence parameter driving the block count
    k = floor(t) + 1; all blocks share the penalty and the ball radius.
    """
    from .aggregate import partition_blocks

    if t < 1.0:
        raise ValueError("t must be at least 1")
    xs = _check_design_stack(xs)
    ys = np.asarray(ys, dtype=float)
    n = ys.shape[0]
    k = int(math.floor(t)) + 1
    if 2 * k > n:
        raise ValueError(f"k={k} blocks need n >= 2k, got n={n}")
    part = partition_blocks(n, k)
    fits = [nuclear_ls(xs[g], ys[g], penalty, radius, opts) for g in part.groups]
    mats = np.stack([f.matrix for f in fits])
    med = geometric_median(PointSet(mats.reshape(k, -1)), median_opts)
    med.point = med.point.reshape(mats.shape[1:])
    return BlockRegressionResult(med, mats, np.array([f.converged for f in fits]))


@dataclass
class MatrixPenaltyParams:
    """Inputs of the matrix-regression penalty level.

    t drives the block count, n and D the problem size, radius the
    nuclear ball. B bounds the design entries, xi_norm21 the noise
    interaction norm. alpha is the median level; its p_star is the
    largest per-block failure probability with a unit exponent.
    """

    t: float
    n: int
    D: int
    radius: float
    alpha: float = 7.0 / 18.0
    B: float = 1.0
    xi_norm21: float = 1.0

    def __post_init__(self):
        if self.t < 1.0:
            raise ValueError("t must be at least 1")
        if self.n < 1 or self.D < 1:
            raise ValueError("n and D must be positive")
        if self.radius <= 0.0 or self.D * self.radius <= 1.0:
            raise ValueError("need radius > 0 with D * radius > 1")
        if not (0.0 < self.alpha <= 0.5):
            raise ValueError("alpha must lie in (0, 1/2]")
        if self.B <= 0.0 or self.xi_norm21 <= 0.0:
            raise ValueError("B and xi_norm21 must be positive")

    @property
    def p_star(self) -> float:
        return p_star(self.alpha)

    @property
    def kappa(self) -> float:
        return math.log(math.log2(self.D * self.radius))

    @property
    def entropy_term(self) -> float:
        """s_{n,t,D} = (log(2/p*) + kappa) log(n/t) + log(2D)."""
        return ((math.log(2.0 / self.p_star) + self.kappa) * math.log(self.n / self.t)
                + math.log(2.0 * self.D))


def matrix_penalty(params: MatrixPenaltyParams) -> float:
    """Penalty level (B/p*) xi_21 sqrt(D t / n) log(2D)."""
    return (params.B / params.p_star * params.xi_norm21
            * math.sqrt(params.D * params.t / params.n) * math.log(2.0 * params.D))
