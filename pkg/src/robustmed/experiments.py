"""Simulation studies: aggregation Monte Carlo, mean coverage, PCA, Lasso,
matrix regression.

Every repetition owns the Philox stream (seed, rep) and repetitions are
merged by index, so a report is a pure function of its config: same
config and seed give bit-identical reports whatever the worker count.
The defaults of each kind are the desk-scale study setups; smoke-scale
overrides are just smaller configs.
"""

from __future__ import annotations

import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import partial

import numpy as np

from .aggregate import (AggregationPlan, ball_radius, block_count, boost_bound,
                        mean_radius, partition_blocks, robust_mean, robust_trace)
from .covariance import block_second_moments, projector_distance, top_projector
from .median import PointSet, c_alpha, geometric_median, thresholded_median
from .regression import (LassoOptions, NuclearOptions, lasso, lasso_penalty,
                         median_lasso, median_matrix_regression, nuclear_ls)
from .reporting import ExperimentReport, build_report
from .samplers import (HEAVY_TAIL_VAR, MIXTURE_BULK_STD, MIXTURE_STD, ISOTROPIC_KINDS,
                       pca_mixing_diagonal, rng_stream, sample_heavy_tail,
                       sample_isotropic_matrices, sample_mixture_noise, sample_outliers)

__all__ = [
    "ExperimentConfig",
    "default_config",
    "paper_pca_config",
    "paper_lasso_config",
    "run_boost_mc",
    "run_mean_coverage",
    "run_pca_experiment",
    "run_lasso_experiment",
    "run_matreg_experiment",
    "run_experiment",
]

KINDS = ("boost", "coverage", "pca", "lasso", "matreg")

# boost trials are drawn and solved in fixed-size chunks; the constant is
# part of the result's definition, never adapted to the worker count
BOOST_CHUNK = 2048

GROSS_OUTLIER_SCALE = 1e6


@dataclass
class ExperimentConfig:
    """Flat bag of experiment knobs; the kind decides which ones matter.

    Fields left at None are filled with the kind's study-scale defaults
    by default_config / resolution, so an echoed config is always fully
    concrete.
    """

    kind: str
    reps: int | None = None
    seed: int = 42
    dim: int | None = None
    n: int | None = None
    k: int | None = None
    alpha: float = 7.0 / 18.0
    p: float = 0.1
    delta: float = 0.05
    # boost
    eps: float = 1.0
    tau: float = 0.0
    shape: str = "far"
    # coverage and the pca inlier law
    law: str = "heavy_tail"
    n_outliers: int | None = None
    outlier_half_width: float = 20.0
    # pca
    m: int | None = None
    nu: float = 0.5
    # lasso
    sparsity: int = 10
    signal_half_width: float = 15.0
    cv_folds: int = 4
    cv_grid_size: int = 20
    cv_lo: float = 0.01
    cv_hi: float = 10.0
    noise: str = "mixture"
    penalty: float | None = None
    # matreg (t also feeds the lasso penalty anchor)
    t: float = 1.0
    rank: int = 2
    radius_mult: float = 2.0
    penalty_scale: float = 2.0
    matrix_kind: str = "gauss_sym"
    spike_prob: float = 2.5e-5


_KIND_DEFAULTS = {
    "boost": dict(reps=100_000, dim=2, k=16, n=0, n_outliers=0, m=0),
    "coverage": dict(reps=500, dim=20, n=2000, n_outliers=0, m=0),
    "pca": dict(reps=100, dim=120, n=156, n_outliers=4, k=10, m=5),
    "lasso": dict(reps=50, dim=1000, n=300, k=4, n_outliers=0, m=0),
    "matreg": dict(reps=50, dim=20, n=4000, k=0, n_outliers=0, m=0),
}

_ECHO_FIELDS = {
    "boost": ("kind", "reps", "seed", "k", "alpha", "p", "eps", "dim", "shape", "tau"),
    "coverage": ("kind", "reps", "seed", "law", "dim", "n", "delta", "alpha", "p", "k",
                 "n_outliers"),
    "pca": ("kind", "reps", "seed", "law", "dim", "n", "n_outliers", "outlier_half_width",
            "k", "m", "nu"),
    "lasso": ("kind", "reps", "seed", "dim", "n", "sparsity", "signal_half_width", "k",
              "cv_folds", "cv_grid_size", "cv_lo", "cv_hi", "noise", "penalty", "t"),
    "matreg": ("kind", "reps", "seed", "dim", "n", "rank", "t", "radius_mult",
               "penalty_scale", "matrix_kind", "spike_prob"),
}


def default_config(kind: str, **overrides) -> ExperimentConfig:
    """Config of a kind at its study-scale defaults, with overrides applied."""
    if kind not in KINDS:
        raise ValueError(f"unknown experiment kind {kind!r}, expected one of {KINDS}")
    cfg = ExperimentConfig(kind=kind)
    for name, value in _KIND_DEFAULTS[kind].items():
        if getattr(cfg, name) is None:
            setattr(cfg, name, value)
    cfg = replace(cfg, **overrides)
    _validate(cfg)
    return cfg


def paper_pca_config(**overrides) -> ExperimentConfig:
    """The spiked-covariance study: D=120, 156 inliers + 4 outliers, k=10, m=5."""
    return default_config("pca", **overrides)


def paper_lasso_config(**overrides) -> ExperimentConfig:
    """The sparse-recovery study: D=1000, s=10, n=300, k=4, mixture noise."""
    return default_config("lasso", **overrides)


def _resolved(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.kind not in KINDS:
        raise ValueError(f"unknown experiment kind {cfg.kind!r}, expected one of {KINDS}")
    fills = {name: value for name, value in _KIND_DEFAULTS[cfg.kind].items()
             if getattr(cfg, name) is None}
    cfg = replace(cfg, **fills)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.reps is None or cfg.reps < 1:
        raise ValueError("reps must be at least 1")
    if not (0.0 <= cfg.p < cfg.alpha < 0.5):
        raise ValueError("need 0 <= p < alpha < 1/2")
    if not (0.0 < cfg.delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if cfg.kind == "boost":
        if cfg.k is None or cfg.k < 1 or cfg.dim is None or cfg.dim < 1:
            raise ValueError("boost needs k >= 1 and dim >= 1")
        if cfg.eps <= 0.0:
            raise ValueError("eps must be positive")
        if cfg.shape not in ("far", "ring"):
            raise ValueError(f"unknown stress shape {cfg.shape!r}")
        tau_max = (cfg.alpha - cfg.p) / (1.0 - cfg.p)
        if not (0.0 <= cfg.tau < tau_max):
            raise ValueError(f"tau must lie in [0, {tau_max})")
        if cfg.tau > 0.0 and cfg.p == 0.0:
            raise ValueError("contaminated runs need p > 0")
        return
    if cfg.dim is None or cfg.dim < 1 or cfg.n is None or cfg.n < 1:
        raise ValueError("experiment needs positive dim and n")
    if cfg.kind == "coverage":
        if cfg.law not in ("heavy_tail", "gaussian"):
            raise ValueError(f"unknown law {cfg.law!r}")
        if cfg.n_outliers < 0 or cfg.n_outliers >= cfg.n:
            raise ValueError("n_outliers must lie in [0, n)")
        if cfg.p == 0.0:
            raise ValueError("coverage needs p > 0")
    elif cfg.kind == "pca":
        if cfg.law not in ("heavy_tail", "gaussian"):
            raise ValueError(f"unknown law {cfg.law!r}")
        if cfg.k is None or cfg.k < 1:
            raise ValueError("pca needs a block count k")
        if cfg.m is None or not (1 <= cfg.m < cfg.dim):
            raise ValueError("pca needs 1 <= m < dim")
        if cfg.nu < 0.0:
            raise ValueError("nu must be nonnegative")
        if cfg.n_outliers < 0:
            raise ValueError("n_outliers must be nonnegative")
        if cfg.outlier_half_width <= 0.0:
            raise ValueError("outlier_half_width must be positive")
    elif cfg.kind == "lasso":
        if cfg.k is None or cfg.k < 1:
            raise ValueError("lasso needs a block count k")
        if not (1 <= cfg.sparsity <= cfg.dim):
            raise ValueError("sparsity must lie in [1, dim]")
        if cfg.signal_half_width <= 0.0:
            raise ValueError("signal_half_width must be positive")
        if cfg.cv_folds < 2:
            raise ValueError("cv_folds must be at least 2")
        if cfg.cv_grid_size < 1:
            raise ValueError("cv_grid_size must be at least 1")
        if not (0.0 < cfg.cv_lo < cfg.cv_hi):
            raise ValueError("need 0 < cv_lo < cv_hi")
        if cfg.noise not in ("mixture", "gaussian", "none"):
            raise ValueError(f"unknown noise {cfg.noise!r}")
        if cfg.penalty is not None and cfg.penalty < 0.0:
            raise ValueError("penalty must be nonnegative")
        if cfg.t <= 0.0:
            raise ValueError("t must be positive")
    elif cfg.kind == "matreg":
        if cfg.rank < 1 or cfg.rank > cfg.dim:
            raise ValueError("rank must lie in [1, dim]")
        if cfg.t < 1.0:
            raise ValueError("t must be at least 1")
        if cfg.radius_mult <= 0.0 or cfg.penalty_scale <= 0.0:
            raise ValueError("radius_mult and penalty_scale must be positive")
        if cfg.matrix_kind not in ISOTROPIC_KINDS:
            raise ValueError(f"unknown matrix kind {cfg.matrix_kind!r}")
        if not 0.0 <= cfg.spike_prob < 1.0:
            raise ValueError("spike_prob must lie in [0, 1)")


def _echo(cfg: ExperimentConfig) -> dict:
    full = asdict(cfg)
    return {name: full[name] for name in _ECHO_FIELDS[cfg.kind]}


def _map_indexed(fn, count: int, workers: int) -> list:
    """fn(i) for i in range(count), serial or on a fork pool, order kept."""
    if workers <= 1:
        return [fn(i) for i in range(count)]
    ctx = multiprocessing.get_context("fork")
    chunk = max(1, count // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, range(count), chunksize=chunk))


def _unit_rows(v: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.maximum(norms, 1e-300)


def _merge_records(rows: list) -> dict:
    out: dict = {name: [] for name in rows[0]}
    for row in rows:
        for name, value in row.items():
            out[name].append(value)
    return out


# --- aggregation Monte Carlo -------------------------------------------------

def _weiszfeld_batch(P: np.ndarray, tol: float = 1e-9, max_iter: int = 300) -> np.ndarray:
    """Plain Weiszfeld across a (T, k, D) stack, all trials iterated together."""
    z = np.sort(P, axis=1)[:, (P.shape[1] - 1) // 2, :]
    for _ in range(max_iter):
        diff = P - z[:, None, :]
        d = np.maximum(np.linalg.norm(diff, axis=2), 1e-300)
        inv = 1.0 / d
        w = inv / inv.sum(axis=1, keepdims=True)
        znew = np.einsum("tk,tkd->td", w, P)
        steps = np.linalg.norm(znew - z, axis=1)
        scale = np.maximum(1.0, np.linalg.norm(z, axis=1))
        z = znew
        if np.all(steps <= tol * scale):
            break
    return z


def _boost_chunk(cfg: ExperimentConfig, chunk: int) -> dict:
    start = chunk * BOOST_CHUNK
    stop = min(start + BOOST_CHUNK, cfg.reps)
    count = stop - start
    k, dim = cfg.k, cfg.dim
    threshold = c_alpha(cfg.alpha) * cfg.eps
    bad_radius = GROSS_OUTLIER_SCALE if cfg.shape == "far" else threshold * 1.01
    forced = int(math.floor(cfg.tau * k))
    pts = np.empty((count, k, dim))
    for i in range(count):
        rng = rng_stream(cfg.seed, start + i)
        good = _unit_rows(rng.normal(size=(k, dim)))
        bad = _unit_rows(rng.normal(size=(k, dim)))
        is_bad = rng.random(k) < cfg.p
        if forced:
            is_bad[:forced] = True
        pts[i] = np.where(is_bad[:, None], bad_radius * bad, cfg.eps * good)
    med = _weiszfeld_batch(pts)
    return {"deviation": np.linalg.norm(med, axis=1)}


def run_boost_mc(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Monte Carlo check of the aggregation failure bound.

    Each trial plants k block estimates: with probability 1 - p a block
    lands on the sphere of radius eps around the truth (the worst
    placement a good block is allowed), otherwise at the configured
    adversarial shape. tau > 0 additionally forces the first floor(tau k)
    blocks bad. The recorded deviation is ||median - truth||; a failure
    is a deviation beyond c_alpha * eps.
    """
    t0 = time.monotonic()
    cfg = _resolved(cfg)
    if cfg.kind != "boost":
        raise ValueError("run_boost_mc needs a boost config")
    chunks = (cfg.reps + BOOST_CHUNK - 1) // BOOST_CHUNK
    parts = _map_indexed(partial(_boost_chunk, cfg), chunks, workers)
    dev = np.concatenate([p["deviation"] for p in parts])
    threshold = c_alpha(cfg.alpha) * cfg.eps
    if cfg.p == 0.0:
        bound, tau_max = 0.0, (cfg.alpha - cfg.p) / (1.0 - cfg.p)
    else:
        budget = boost_bound(cfg.k, cfg.alpha, cfg.p, cfg.tau)
        bound, tau_max = budget.bound, budget.tau_max
    rates = {
        "empirical_rate": float(np.mean(dev > threshold)),
        "theoretical_bound": bound,
        "threshold_radius": threshold,
        "tau_max": tau_max,
    }
    return build_report("boost", _echo(cfg), {"deviation": dev}, rates,
                        wall_clock=time.monotonic() - t0)


# --- mean coverage -----------------------------------------------------------

def _coverage_rep(cfg: ExperimentConfig, rep: int) -> dict:
    rng = rng_stream(cfg.seed, rep)
    n, D = cfg.n, cfg.dim
    n_in = n - cfg.n_outliers
    if cfg.law == "heavy_tail":
        data = sample_heavy_tail(rng, (n_in, D))
    else:
        data = rng.normal(0.0, 1.0, (n_in, D))
    if cfg.n_outliers:
        spikes = GROSS_OUTLIER_SCALE * _unit_rows(rng.normal(size=(cfg.n_outliers, D)))
        data = np.concatenate([data, spikes])[rng.permutation(n)]
    plan = AggregationPlan(alpha=cfg.alpha, p=cfg.p, delta=cfg.delta, k=cfg.k)
    center = robust_mean(data, plan).point
    trace_hat = robust_trace(data, plan)
    rad = ball_radius(trace_hat, n, cfg.delta)
    err = float(np.linalg.norm(center))
    return {
        "error": err,
        "trace_hat": trace_hat,
        "ball_radius": rad,
        "ball_hit": 1.0 if err <= rad else 0.0,
    }


def run_mean_coverage(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Coverage of the known-trace radius and of the data-driven ball.

    The truth is mu = 0; tr(Sigma) is known by construction (D times the
    per-coordinate variance of the law). Optional gross outliers replace
    n_outliers rows at distance 1e6, after which the sample is shuffled.
    """
    t0 = time.monotonic()
    cfg = _resolved(cfg)
    if cfg.kind != "coverage":
        raise ValueError("run_mean_coverage needs a coverage config")
    rows = _map_indexed(partial(_coverage_rep, cfg), cfg.reps, workers)
    records = _merge_records(rows)
    trace_sigma = cfg.dim * (HEAVY_TAIL_VAR if cfg.law == "heavy_tail" else 1.0)
    radius = mean_radius(trace_sigma, cfg.n, cfg.delta, "c11")
    err = np.asarray(records["error"])
    k_eff = cfg.k if cfg.k is not None else block_count(cfg.delta, cfg.alpha, cfg.p)
    rates = {
        "radius": radius,
        "trace_sigma": trace_sigma,
        "radius_coverage": float(np.mean(err <= radius)),
        "ball_coverage": float(np.mean(np.asarray(records["ball_hit"]) > 0.5)),
        "k": k_eff,
        "discarded": cfg.n - k_eff * (cfg.n // k_eff),
    }
    echo = _echo(cfg)
    echo["k"] = k_eff
    return build_report("coverage", echo, records, rates,
                        wall_clock=time.monotonic() - t0)


# --- spiked-covariance PCA ---------------------------------------------------

def _pca_rep(cfg: ExperimentConfig, rep: int) -> dict:
    rng = rng_stream(cfg.seed, rep)
    D, m = cfg.dim, cfg.m
    mix = pca_mixing_diagonal(D, m)
    if cfg.law == "heavy_tail":
        Y = sample_heavy_tail(rng, (cfg.n, D))
    else:
        Y = rng.normal(0.0, 1.0, (cfg.n, D))
    inliers = Y * mix
    if cfg.n_outliers:
        outliers = sample_outliers(rng, cfg.n_outliers, D, cfg.outlier_half_width)
        data = np.concatenate([inliers, outliers])
    else:
        data = inliers
    data = data[rng.permutation(data.shape[0])]

    N = data.shape[0]
    sample_cov = data.T @ data / N
    sample_cov = 0.5 * (sample_cov + sample_cov.T)
    mats = block_second_moments(data, cfg.k, centered=True)
    ps = PointSet(mats.reshape(cfg.k, -1))
    median_cov = geometric_median(ps).point.reshape(D, D)
    thresh_cov = thresholded_median(ps, cfg.nu)[0].reshape(D, D)

    truth = np.zeros((D, D))
    truth[np.arange(m), np.arange(m)] = 1.0
    errs = {}
    for name, S in (("sample_error", sample_cov), ("median_error", median_cov),
                    ("thresholded_error", thresh_cov)):
        errs[name] = projector_distance(top_projector(S, m), truth, "operator")
    return errs


def run_pca_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Spiked-covariance principal subspace recovery under outliers.

    Inliers are X = A Y with A the spiked mixing diagonal and Y a product
    law (heavy-tailed by default); a handful of cube outliers is appended
    and the sample shuffled. Per repetition the top-m projector errors
    (operator norm, against the known spiked subspace) of the sample
    covariance, the median covariance, and the weight-thresholded median
    covariance are recorded.
    """
    t0 = time.monotonic()
    cfg = _resolved(cfg)
    if cfg.kind != "pca":
        raise ValueError("run_pca_experiment needs a pca config")
    rows = _map_indexed(partial(_pca_rep, cfg), cfg.reps, workers)
    records = _merge_records(rows)
    sample = np.asarray(records["sample_error"])
    med = np.asarray(records["median_error"])
    thr = np.asarray(records["thresholded_error"])
    rates = {
        "median_beats_sample_frac": float(np.mean(med < sample)),
        "sample_error_median": float(np.median(sample)),
        "median_error_median": float(np.median(med)),
        "thresholded_error_median": float(np.median(thr)),
    }
    return build_report("pca", _echo(cfg), records, rates,
                        wall_clock=time.monotonic() - t0)


# --- sparse recovery ---------------------------------------------------------

_CV_TOL = 1e-4
_CV_MAX_ITER = 1000
_FIT_OPTS = LassoOptions(tol=1e-7, max_sweeps=2000)


def _block_lasso_path(Xb: np.ndarray, yb: np.ndarray, grid: np.ndarray,
                      tol: float, max_iter: int) -> np.ndarray:
    """Penalty path over a stack of same-size blocks, warm-started downward.

    Accelerated proximal gradient on the same objective as lasso(), with
    per-block step sizes from the design's spectral norm. The deployed fits
    stay on the cyclic solver; this variant exists because CV solves every
    fold, block, and grid point, and a per-column loop at that volume costs
    more than the experiment itself. Stops a grid point once an iterate
    moves at most tol in every coordinate. Returns (grid, B, D)
    coefficients indexed like the (ascending) grid.
    """
    B, n, D = Xb.shape
    two_over_n = 2.0 / n
    sig = np.linalg.svd(Xb, compute_uv=False)[:, 0]
    step = 1.0 / np.maximum(two_over_n * sig * sig, 1e-300)
    w = np.zeros((B, D))
    coefs = np.empty((grid.size, B, D))
    for gi in range(grid.size - 1, -1, -1):
        thr = float(grid[gi]) * step[:, None]
        v = w.copy()
        t_acc = 1.0
        for _ in range(max_iter):
            r = np.einsum("bnd,bd->bn", Xb, v) - yb
            u = v - step[:, None] * (two_over_n * np.einsum("bnd,bn->bd", Xb, r))
            fresh = np.sign(u) * np.maximum(np.abs(u) - thr, 0.0)
            move = float(np.max(np.abs(fresh - w)))
            if np.vdot(v - fresh, fresh - w) > 0.0:
                t_acc = 1.0
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_acc * t_acc))
            v = fresh + ((t_acc - 1.0) / t_next) * (fresh - w)
            w = fresh
            t_acc = t_next
            if move <= tol:
                break
        coefs[gi] = w
    return coefs


def _cv_penalty(cfg: ExperimentConfig, X: np.ndarray, y: np.ndarray) -> float:
    """Pick the penalty by k-fold CV of the block-median pipeline itself.

    The anchor uses the mixture's std as a config-level constant, not an
    estimate. Validation loss is mean squared prediction error of the
    median-aggregated block fits: cross-validating the plain Lasso
    instead lets a single giant noise spike in a training fold drag the
    whole grid toward over-regularized penalties, which the block median
    is specifically built to ignore. The path runs from the largest
    penalty down with warm starts; ties resolve to the smaller penalty.
    """
    n = y.size
    anchor = lasso_penalty(MIXTURE_STD, n, cfg.dim, cfg.t, "gaussian")
    ratios = cfg.cv_lo * (cfg.cv_hi / cfg.cv_lo) ** np.linspace(0.0, 1.0, cfg.cv_grid_size)
    grid = ratios * anchor
    folds = np.array_split(np.arange(n), cfg.cv_folds)
    mse = np.zeros(cfg.cv_grid_size)
    for fold in folds:
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        Xt, yt = X[mask], y[mask]
        Xv, yv = X[fold], y[fold]
        part = partition_blocks(Xt.shape[0], cfg.k)
        Xb = np.stack([Xt[g] for g in part.groups])
        yb = np.stack([yt[g] for g in part.groups])
        path = _block_lasso_path(Xb, yb, grid, _CV_TOL, _CV_MAX_ITER)
        for g in range(cfg.cv_grid_size):
            point = geometric_median(PointSet(path[g])).point
            resid = yv - Xv @ point
            mse[g] += float(resid @ resid) / yv.size
    return float(grid[int(np.argmin(mse))])


def _lasso_rep(cfg: ExperimentConfig, rep: int) -> dict:
    rng = rng_stream(cfg.seed, rep)
    n, D, s = cfg.n, cfg.dim, cfg.sparsity
    support = rng.choice(D, size=s, replace=False)
    target = np.zeros(D)
    target[support] = rng.uniform(-cfg.signal_half_width, cfg.signal_half_width, s)
    X = rng.normal(0.0, 1.0, (n, D))
    if cfg.noise == "mixture":
        xi = sample_mixture_noise(rng, n)
    elif cfg.noise == "gaussian":
        xi = rng.normal(0.0, MIXTURE_STD, n)
    else:
        xi = np.zeros(n)
    y = X @ target + xi
    penalty = cfg.penalty if cfg.penalty is not None else _cv_penalty(cfg, X, y)
    plain = lasso(X, y, penalty, _FIT_OPTS)
    med = median_lasso(X, y, penalty, cfg.k, _FIT_OPTS)
    denom = max(float(np.linalg.norm(target)), 1e-300)
    return {
        "plain_rel_error": float(np.linalg.norm(plain.coef - target)) / denom,
        "median_rel_error": float(np.linalg.norm(med.point - target)) / denom,
        "penalty": penalty,
    }


def run_lasso_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Sparse recovery under spiky noise: plain Lasso vs median of block fits.

    Per repetition a fresh sparse target, Gaussian design, and noise draw;
    the penalty comes from cross-validating the block-median pipeline on
    the full sample unless the config pins one, and the same penalty
    serves both estimators. Errors are relative to the target norm. The
    headline rates are the count of plain fits with error beyond 0.15 and
    the worst median-fit error.
    """
    t0 = time.monotonic()
    cfg = _resolved(cfg)
    if cfg.kind != "lasso":
        raise ValueError("run_lasso_experiment needs a lasso config")
    rows = _map_indexed(partial(_lasso_rep, cfg), cfg.reps, workers)
    records = _merge_records(rows)
    plain = np.asarray(records["plain_rel_error"])
    med = np.asarray(records["median_rel_error"])
    rates = {
        "plain_above_015_count": int(np.sum(plain > 0.15)),
        "median_above_015_count": int(np.sum(med > 0.15)),
        "median_le_010_frac": float(np.mean(med <= 0.10)),
        "max_median_error": float(med.max()),
        "max_plain_error": float(plain.max()),
    }
    return build_report("lasso", _echo(cfg), records, rates,
                        wall_clock=time.monotonic() - t0)


# --- low-rank matrix regression ----------------------------------------------

_MATREG_OPTS = NuclearOptions(tol=1e-7, max_iter=600)


def _matreg_rep(cfg: ExperimentConfig, rep: int) -> dict:
    rng = rng_stream(cfg.seed, rep)
    D, n = cfg.dim, cfg.n
    basis = rng.normal(size=(D, cfg.rank))
    target = basis @ basis.T
    target *= 5.0 / np.linalg.norm(target, "fro")
    xs = sample_isotropic_matrices(rng, n, D, cfg.matrix_kind)
    signal = np.einsum("nij,ij->n", xs, target)
    rough = sample_mixture_noise(rng, n, prob=cfg.spike_prob)
    clean = rng.normal(0.0, MIXTURE_BULK_STD, n)

    radius = cfg.radius_mult * float(np.abs(np.linalg.eigvalsh(target)).sum())
    k = int(math.floor(cfg.t)) + 1
    # penalties track the bulk scale on purpose: absorbing the spikes into
    # sigma would inflate both fits equally and hide what the median buys
    sigma = MIXTURE_BULK_STD
    pen_full = cfg.penalty_scale * sigma * math.sqrt(D * math.log(2.0 * D) / n)
    pen_block = cfg.penalty_scale * sigma * math.sqrt(D * math.log(2.0 * D) / (n // k))

    out = {}
    for label, xi in (("", rough), ("clean_", clean)):
        y = signal + xi
        full = nuclear_ls(xs, y, pen_full, radius, _MATREG_OPTS)
        med = median_matrix_regression(xs, y, pen_block, cfg.t, radius, _MATREG_OPTS)
        out[label + "full_error"] = float(np.linalg.norm(full.matrix - target, "fro"))
        out[label + "median_error"] = float(np.linalg.norm(med.point - target, "fro"))
    return out


def run_matreg_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Low-rank trace regression: one solver on all data vs a block median.

    Per repetition a rank-constrained symmetric target (Frobenius norm 5),
    isotropic designs, and paired noise draws on the same target and
    designs: the spike-contaminated mixture at rate spike_prob, and its
    bulk Gaussian alone. The bulk-only twin is the clean baseline the
    contaminated-arm median errors are compared against. At the default
    rate most runs see no spike at all; the ones that do lose a single
    response far enough to wreck whichever solver's sample it lands in,
    which is the regime the block median is built for. Penalties scale
    as sigma sqrt(D log(2D) / m) with m the per-solver sample count and
    sigma the bulk scale in both arms.
    """
    t0 = time.monotonic()
    cfg = _resolved(cfg)
    if cfg.kind != "matreg":
        raise ValueError("run_matreg_experiment needs a matreg config")
    if cfg.n < 2 * (int(math.floor(cfg.t)) + 1):
        raise ValueError("matreg needs n >= 2k for k = floor(t) + 1")
    rows = _map_indexed(partial(_matreg_rep, cfg), cfg.reps, workers)
    records = _merge_records(rows)
    med = np.asarray(records["median_error"])
    full = np.asarray(records["full_error"])
    baseline = float(np.median(np.asarray(records["clean_median_error"])))
    p95 = float(np.quantile(full, 0.95))
    rates = {
        "full_error_p95": p95,
        "median_below_full_p95_frac": float(np.mean(med <= p95)),
        "clean_baseline": baseline,
        "max_median_to_baseline_ratio": float(med.max() / baseline),
    }
    return build_report("matreg", _echo(cfg), records, rates,
                        wall_clock=time.monotonic() - t0)


_RUNNERS = {
    "boost": run_boost_mc,
    "coverage": run_mean_coverage,
    "pca": run_pca_experiment,
    "lasso": run_lasso_experiment,
    "matreg": run_matreg_experiment,
}


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Dispatch a config to its driver."""
    if cfg.kind not in _RUNNERS:
        raise ValueError(f"unknown experiment kind {cfg.kind!r}, expected one of {KINDS}")
    return _RUNNERS[cfg.kind](cfg, workers)
