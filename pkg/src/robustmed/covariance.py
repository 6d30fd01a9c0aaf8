"""Robust covariance estimation and principal subspace extraction.

Block second-moment (or centered covariance) matrices are aggregated by
their Frobenius geometric median; the top eigenspace of the aggregate is
the robust principal subspace. Matrices travel flattened through the
median solver since flattening is a Frobenius isometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .aggregate import AggregationPlan, boost, partition_blocks
from .median import MedianOptions, MedianResult

__all__ = [
    "Projector",
    "block_second_moments",
    "robust_covariance",
    "top_projector",
    "projector_distance",
    "spectral_gap",
    "pca_radius",
    "pca_gap_threshold",
]


@dataclass
class Projector:
    """Orthogonal projector onto a principal subspace."""

    matrix: np.ndarray
    rank: int
    ill_posed: bool = False


def _check_square_symmetric(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("expected a square matrix")
    scale = 1.0 + float(np.max(np.abs(S))) if S.size else 1.0
    if float(np.max(np.abs(S - S.T))) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric to working precision")
    return S


def block_second_moments(data, k: int, centered: bool = True) -> np.ndarray:
    """Per-block (D, D) second-moment matrices, explicitly symmetrized.

    centered=True takes X^T X / m per block (the mean is assumed known to
    be zero and is not subtracted); centered=False subtracts each block's
    own mean first. Symmetrization guards against BLAS writing X^T X with
    asymmetry at the last bit, which would otherwise leak into medians.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be an (n, D) array")
    part = partition_blocks(data.shape[0], k)
    D = data.shape[1]
    mats = np.empty((k, D, D))
    for j, g in enumerate(part.groups):
        block = data[g]
        if not centered:
            block = block - block.mean(axis=0)
        S = block.T @ block / block.shape[0]
        mats[j] = 0.5 * (S + S.T)
    return mats


def robust_covariance(data, plan: AggregationPlan | None = None, centered: bool = True,
                      opts: MedianOptions | None = None) -> MedianResult:
    """Frobenius median of block second-moment matrices.

    The result's point is the (D, D) aggregate, exactly the convex
    combination of the block matrices under the reported weights. With
    k = 1 it reduces to the plain (co)variance matrix of the sample.
    """
    if plan is None:
        plan = AggregationPlan()
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("data must be a nonempty (n, D) array")
    if not np.all(np.isfinite(data)):
        raise ValueError("data must be finite")
    k = plan.resolve_k(data.shape[0])
    mats = block_second_moments(data, k, centered=centered)
    return boost(mats, replace(plan, norm="frobenius"), opts)


def top_projector(S, m: int) -> Projector:
    """Projector onto the span of the top-m eigenvectors of a symmetric S.

    Flags ill_posed when the defining eigengap lambda_m - lambda_{m+1}
    falls below 1e-12: the subspace is then arbitrary within the tied
    eigenspace and downstream distances are not meaningful.
    """
    S = _check_square_symmetric(S)
    D = S.shape[0]
    if not (1 <= m <= D):
        raise ValueError(f"need 1 <= m <= D, got m={m}, D={D}")
    evals, evecs = np.linalg.eigh(0.5 * (S + S.T))
    V = evecs[:, D - m:]
    P = V @ V.T
    P = 0.5 * (P + P.T)
    ill = bool(m < D and evals[D - m] - evals[D - m - 1] <= 1e-12)
    return Projector(P, m, ill)


def _as_projector_matrix(P) -> np.ndarray:
    if isinstance(P, Projector):
        return P.matrix
    return _check_square_symmetric(P)


def projector_distance(P, Q, norm: str = "operator") -> float:
    """Operator or Frobenius distance between two projectors."""
    A = _as_projector_matrix(P)
    B = _as_projector_matrix(Q)
    if A.shape != B.shape:
        raise ValueError("projectors must act on the same space")
    diff = A - B
    if norm == "frobenius":
        return float(np.linalg.norm(diff, "fro"))
    if norm == "operator":
        return float(np.max(np.abs(np.linalg.eigvalsh(diff))))
    raise ValueError(f"unknown norm {norm!r}")


def spectral_gap(S, m: int) -> float:
    """Gap lambda_m - lambda_{m+1} between the m-th and (m+1)-th eigenvalues."""
    S = _check_square_symmetric(S)
    D = S.shape[0]
    if not (1 <= m < D):
        raise ValueError(f"need 1 <= m < D, got m={m}, D={D}")
    evals = np.sort(np.linalg.eigvalsh(S))[::-1]
    return float(evals[m - 1] - evals[m])


def pca_radius(fourth_moment_term: float, trace_sigma: float, n: int, delta: float,
               centered: bool = True) -> float:
    """Deviation radius of the covariance median in Frobenius norm.

    centered: 11 sqrt(q log(1.4/delta) / n) with q = E||X||^4 - tr(Sigma^2)
    (mean known to be zero). uncentered adds the trace correction:
    15.2 sqrt(q' log(1.4/delta) / n) + 178 tr(Sigma) log(1.4/delta) / n
    with q' = E||X - mu||^4 - tr(Sigma^2).
    """
    if fourth_moment_term < 0.0:
        raise ValueError("fourth_moment_term must be nonnegative")
    if trace_sigma < 0.0:
        raise ValueError("trace_sigma must be nonnegative")
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    L = math.log(1.4 / delta)
    if centered:
        return 11.0 * math.sqrt(fourth_moment_term * L / n)
    return (15.2 * math.sqrt(fourth_moment_term * L / n)
            + 178.0 * trace_sigma * L / n)


def pca_gap_threshold(fourth_moment_term: float, trace_sigma: float, n: int, delta: float,
                      centered: bool = True) -> float:
    """Eigengap below which the projector guarantee goes vacuous: 4x the radius."""
    return 4.0 * pca_radius(fourth_moment_term, trace_sigma, n, delta, centered=centered)
