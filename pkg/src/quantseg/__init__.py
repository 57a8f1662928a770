"""Adaptive-LASSO quantile regression with change-point segmentation."""

from __future__ import annotations

__version__ = "0.1.0"

from .adaptive import (AdaptiveConfig, KktReport, PowerRule, adaptive_penalty, compute_weights,
                       fit_adaptive, kkt_verify, parse_lambda_rule, pilot_fit)
from .baselines import (ScadConfig, fit_lad_lasso_type, fit_ls_adaptive_lasso, fit_qlasso_pilot,
                        fit_scad_quantile, scad_penalty, scad_penalty_derivative)
from .core import (DataError, Dataset, FitResult, PenaltySpec, check_loss, objective_value,
                   read_csv, write_csv)
from .experiment import ExperimentConfig, Report, load_config, run_experiment
from .metrics import SelectionRates, SpreadStats, selection_rates, spread_stats
from .segmentation import (Segmentation, SegmentationConfig, SegmentCostTable, best_segmentation,
                           refit_at_breaks, segment_cost)
from .selection import CriterionTrace, criterion_value, select_k
from .simulation import Design, ErrorLaw, GroundTruth, PhaseSpec, generate
from .solver import LpSolution, SolverError, fit, fit_subsample, solve_lp

__all__ = [
    "AdaptiveConfig", "CriterionTrace", "DataError", "Dataset", "Design", "ErrorLaw",
    "ExperimentConfig", "FitResult", "GroundTruth", "KktReport", "LpSolution", "PenaltySpec",
    "PhaseSpec", "PowerRule", "Report", "ScadConfig", "Segmentation", "SegmentationConfig",
    "SegmentCostTable", "SelectionRates", "SolverError", "SpreadStats", "adaptive_penalty",
    "best_segmentation", "check_loss", "compute_weights", "criterion_value", "fit",
    "fit_adaptive", "fit_lad_lasso_type", "fit_ls_adaptive_lasso", "fit_qlasso_pilot",
    "fit_scad_quantile", "fit_subsample", "generate", "kkt_verify", "load_config",
    "objective_value", "parse_lambda_rule", "pilot_fit", "read_csv", "refit_at_breaks",
    "run_experiment", "scad_penalty", "scad_penalty_derivative", "segment_cost", "select_k",
    "selection_rates", "solve_lp", "spread_stats", "write_csv",
]
