"""Randomized harness for the analytic estimates: fitted constants and their stability."""
from .registry import (DRIFT_LIMIT, EXACT_SLACK, REGISTRY, Entry, InequalityReport, SuiteResult, full_suite,
                       run_check)
from .sampling import FIELD_CLASSES, Level, TrialSpec, VerifyGrids, sample_field, sample_scalar, solver_trial

__all__ = ["REGISTRY", "Entry", "InequalityReport", "SuiteResult", "full_suite", "run_check", "TrialSpec",
           "VerifyGrids", "Level", "FIELD_CLASSES", "sample_field", "sample_scalar", "solver_trial",
           "EXACT_SLACK", "DRIFT_LIMIT"]
