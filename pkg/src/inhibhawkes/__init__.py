"""Exact likelihood inference for multivariate exponential Hawkes processes with inhibition."""
from .core import (
    INFEASIBLE,
    EventSequence,
    HawkesError,
    HawkesModel,
    IntervalState,
    NumericalError,
    SpectralReport,
    approx_compensator,
    approx_log_likelihood,
    compensator,
    conditional_intensity,
    identifiability_diagnostic,
    interval_states,
    is_feasible,
    log_likelihood,
    restart_time,
    spectral_radius,
    underlying_intensity,
)
from .estimate import (
    DEFAULT_EPS_GRID,
    FitConfig,
    FitResult,
    SupportSelection,
    choose_epsilon,
    confidence_select,
    epsilon_sweep,
    fit,
    relative_squared_errors,
    resample_concatenate,
    split_windows,
    threshold_select,
    threshold_support,
)
from .estimators import ExpHawkesMLE, SupportSelector
from .formats import read_events, read_model, write_events, write_model
from .gof import TOTAL, GofReport, gof_report, ks_exp_test, time_rescale
from .multitest import benjamini_hochberg
from .sim import SCENARIOS, SimConfig, scenario, simulate

__version__ = "0.1.0"
