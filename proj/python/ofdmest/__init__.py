"""Sequential ML/MAP multipath parameter estimation for uplink OFDM."""

from ._core import (
    ConfigError,
    DomainError,
    EstimationResult,
    GeomPath,
    MatchReport,
    OptimizerConfig,
    PathParams,
    SystemConfig,
    TrigSeries,
    default_environment_json,
    estimate_params,
    evaluate,
    greedy_match,
    model_mean,
    neg_log_likelihood,
    roots,
    run_scenario,
    select_path_count,
    steering,
    sweep_precoder_pilots,
    synthesize_received,
    trace_paths,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "EstimationResult",
    "GeomPath",
    "MatchReport",
    "OptimizerConfig",
    "PathParams",
    "SystemConfig",
    "TrigSeries",
    "default_environment_json",
    "estimate_params",
    "evaluate",
    "greedy_match",
    "model_mean",
    "neg_log_likelihood",
    "roots",
    "run_scenario",
    "select_path_count",
    "steering",
    "sweep_precoder_pilots",
    "synthesize_received",
    "trace_paths",
]
