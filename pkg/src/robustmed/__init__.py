"""Median-aggregated robust estimation.

Split a sample into blocks, estimate on each block, take the geometric
median of the block estimates: a weakly concentrated estimator becomes
one with exponential deviation bounds. The package provides the median
solver, the aggregation bookkeeping and its constants, robust mean /
covariance / sparse and low-rank regression estimators built on it, and
the seeded simulation studies with a deterministic CLI.
"""

from .aggregate import (AggregationPlan, BlockPartition, DeviationBudget, ball_radius,
                        block_count, boost, boost_bound, confidence_ball, mean_radius,
                        partition_blocks, robust_mean, robust_trace)
from .constants import (block_cap, coordinatewise_factor, gap_factor, mean_factor,
                        mean_factor_sharp, p_star, projector_factor, selector_block_cap,
                        selector_factor, trace_linear_factor, trace_sqrt_factor)
from .covariance import (Projector, block_second_moments, pca_gap_threshold, pca_radius,
                         projector_distance, robust_covariance, spectral_gap,
                         top_projector)
from .median import (MedianOptions, MedianResult, PointSet, c_alpha,
                     coordinatewise_median, geometric_median, lemma_witness, objective,
                     psi, select_nemirovski, select_nemirovski_adaptive,
                     thresholded_median)
from .regression import (BlockRegressionResult, LassoOptions, LassoResult,
                         MatrixPenaltyParams, NuclearOptions, NuclearResult,
                         kkt_residuals, lasso, lasso_penalty, matrix_penalty,
                         median_lasso, median_matrix_regression, nuclear_ls,
                         restricted_eigenvalue, svt)
from .experiments import (ExperimentConfig, default_config, paper_lasso_config,
                          paper_pca_config, run_boost_mc, run_experiment,
                          run_lasso_experiment, run_matreg_experiment,
                          run_mean_coverage, run_pca_experiment)
from .reporting import ExperimentReport, histogram_csv, serialize_report

__version__ = "0.1.0"

__all__ = [
    "AggregationPlan", "BlockPartition", "DeviationBudget", "ball_radius",
    "block_count", "boost", "boost_bound", "confidence_ball", "mean_radius",
    "partition_blocks", "robust_mean", "robust_trace",
    "block_cap", "coordinatewise_factor", "gap_factor", "mean_factor",
    "mean_factor_sharp", "p_star", "projector_factor", "selector_block_cap",
    "selector_factor", "trace_linear_factor", "trace_sqrt_factor",
    "Projector", "block_second_moments", "pca_gap_threshold", "pca_radius",
    "projector_distance", "robust_covariance", "spectral_gap", "top_projector",
    "MedianOptions", "MedianResult", "PointSet", "c_alpha", "coordinatewise_median",
    "geometric_median", "lemma_witness", "objective", "psi", "select_nemirovski",
    "select_nemirovski_adaptive", "thresholded_median",
    "BlockRegressionResult", "LassoOptions", "LassoResult", "MatrixPenaltyParams",
    "NuclearOptions", "NuclearResult", "kkt_residuals", "lasso", "lasso_penalty",
    "matrix_penalty", "median_lasso", "median_matrix_regression", "nuclear_ls",
    "restricted_eigenvalue", "svt",
    "ExperimentConfig", "default_config", "paper_lasso_config", "paper_pca_config",
    "run_boost_mc", "run_experiment", "run_lasso_experiment", "run_matreg_experiment",
    "run_mean_coverage", "run_pca_experiment",
    "ExperimentReport", "histogram_csv", "serialize_report",
    "__version__",
]
