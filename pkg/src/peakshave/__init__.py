"""Online peak-demand shaving with energy storage.

The core pieces are the offline optimum (:func:`solve_offline`), the
optimal competitive ratio (:func:`optimal_cr`), and the online pursuit
policies (:func:`run_pcr`, :func:`run_adaptive`) with their baselines.
"""

from .core import (
    DischargeSchedule,
    OfflineSolution,
    ProblemInstance,
    evaluate_schedule,
    peak_reduction,
    reference_profile,
    solve_offline,
    validate_instance,
    water_level,
)
from .crcomp import CrCompSpec, OptimalCr, cr_comp_value, optimal_cr
from .estimators import AdaptivePcrScheduler, BaselineScheduler, OfflineScheduler, PcrScheduler
from .online import BaselinePolicy, OnlineState, adaptive_cr, pcr_step, run_adaptive, run_baseline, run_pcr

__version__ = "0.1.0"

__all__ = [
    "AdaptivePcrScheduler", "BaselinePolicy", "BaselineScheduler", "CrCompSpec", "DischargeSchedule",
    "OfflineScheduler", "OfflineSolution", "OnlineState", "OptimalCr", "PcrScheduler", "ProblemInstance",
    "adaptive_cr", "cr_comp_value", "evaluate_schedule", "optimal_cr", "pcr_step", "peak_reduction",
    "reference_profile", "run_adaptive", "run_baseline", "run_pcr", "solve_offline", "validate_instance",
    "water_level",
]
