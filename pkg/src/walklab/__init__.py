"""walklab: Monte Carlo laboratory for the two-dimensional excited random walk.

Core pieces: seeded walkers (simple, excited, and the coupled pair),
tan-point counting with a brute-force reference and an O(1) incremental
detector, statistics (speed, exponent fits, envelopes, exact binomial
tails), and a reproducible parallel experiment harness.
"""

from .util import ARTIFACT_VERSION as __version__
from .lattice import EMPTY_REGION, InitialRegion, LatticePoint, VisitedSet
from .rng import RngSpec, derive_stream_seed
from .walks import (CapacityError, CoupledTrajectory, DriftVariant, ErwRun,
                    StepDistribution, VariantError, WalkParams, dyadic_epsilon,
                    fresh_site_times, is_drift_site, run_coupled, run_erw,
                    run_erw_detailed, run_srw, step_distribution)
from .tanpoints import (RowMaxIndex, TanCountResult, TanPointRecord, WindowSpec,
                        best_window_tan_count, count_tan_points,
                        is_tan_point_brute, is_tan_point_indexed, lemma_horizon)
from .stats import (EnsembleSummary, EnvelopeReport, ExponentFit, GapAudit,
                    MetricSummary, RunSummary, SpeedEstimate, WindowedProgress,
                    bernoulli_tail_bound, envelope_violations,
                    exact_binomial_tail, exponent_fit, gap_audit,
                    speed_estimate, windowed_progress)
from .config import ConfigError, ExperimentConfig, parse_config
from .runner import ExperimentResult, run_experiment

__all__ = [
    "__version__",
    "EMPTY_REGION", "InitialRegion", "LatticePoint", "VisitedSet",
    "RngSpec", "derive_stream_seed",
    "CapacityError", "CoupledTrajectory", "DriftVariant", "ErwRun",
    "StepDistribution", "VariantError", "WalkParams", "dyadic_epsilon",
    "fresh_site_times", "is_drift_site", "run_coupled", "run_erw",
    "run_erw_detailed", "run_srw", "step_distribution",
    "RowMaxIndex", "TanCountResult", "TanPointRecord", "WindowSpec",
    "best_window_tan_count", "count_tan_points", "is_tan_point_brute",
    "is_tan_point_indexed", "lemma_horizon",
    "EnsembleSummary", "EnvelopeReport", "ExponentFit", "GapAudit",
    "MetricSummary", "RunSummary", "SpeedEstimate", "WindowedProgress",
    "bernoulli_tail_bound", "envelope_violations", "exact_binomial_tail",
    "exponent_fit", "gap_audit", "speed_estimate", "windowed_progress",
    "ConfigError", "ExperimentConfig", "parse_config",
    "ExperimentResult", "run_experiment",
]
