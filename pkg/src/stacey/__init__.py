"""Stochastic lp steepest descent and its accelerated (linearly coupled) variants."""

from .errors import (
    ConfigError,
    DimensionMismatchError,
    DivergenceError,
    InvalidVectorError,
    StaceyError,
    UnsupportedExponentError,
)
from .geometry import (
    INF,
    PNorm,
    dual_exponent,
    lp_norm,
    mirror_grad,
    scale_map,
    scale_map_eps,
    stationarity_measure,
)
from .optimizers import (
    STEPPERS,
    HyperParams,
    Optimizer,
    OptimizerState,
    adam_step,
    adamw_step,
    first_step_closed_form,
    init_state,
    lion_step,
    lp_descent_step,
    sgd_momentum_step,
    stacey_p2_step,
    stacey_pp_step,
)
from .schedules import Schedule

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DimensionMismatchError", "DivergenceError", "InvalidVectorError",
    "StaceyError", "UnsupportedExponentError",
    "INF", "PNorm", "dual_exponent", "lp_norm", "mirror_grad", "scale_map", "scale_map_eps",
    "stationarity_measure",
    "STEPPERS", "HyperParams", "Optimizer", "OptimizerState", "adam_step", "adamw_step",
    "first_step_closed_form", "init_state", "lion_step", "lp_descent_step", "sgd_momentum_step",
    "stacey_p2_step", "stacey_pp_step",
    "Schedule",
]
