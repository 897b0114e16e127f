"""Frank-Wolfe optimization over the L1 ball, from a 2-D quadratic up to a small MLP."""

from fwdeep.errors import InvalidInputError, NumericalError, ParseError
from fwdeep.fw_core import (
    FwState,
    L1Ball,
    LineSearchConfig,
    LmoVertex,
    StepKind,
    StepSizeRule,
    brute_force_lmo,
    duality_gap,
    fw_run,
    fw_step,
    gamma_decreasing,
    gamma_proportional,
    l1_lmo,
    line_search_gamma,
)
from fwdeep.objective import Objective, QuadraticObjective

__all__ = [
    "FwState",
    "InvalidInputError",
    "L1Ball",
    "LineSearchConfig",
    "LmoVertex",
    "NumericalError",
    "Objective",
    "ParseError",
    "QuadraticObjective",
    "StepKind",
    "StepSizeRule",
    "brute_force_lmo",
    "duality_gap",
    "fw_run",
    "fw_step",
    "gamma_decreasing",
    "gamma_proportional",
    "l1_lmo",
    "line_search_gamma",
]

__version__ = "0.1.0"
