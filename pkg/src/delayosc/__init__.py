"""Oscillation tests for first-order delay differential equations.

The library decides oscillation of

    x'(t) + sum_i p_i(t) x(tau_i(t)) = 0,   tau_i(t) <= t,

with periodic piecewise-linear coefficients p_i >= 0 and lags
d_i(t) = t - tau_i(t) > 0 that need not be monotone.  Six numeric
criteria are evaluated (see `criteria.check_all`), and a method-of-steps
simulator (`sim.integrate`) provides an independent cross-check.
"""

from .criteria import (
    CRITERIA_ORDER,
    CheckReport,
    CriterionVerdict,
    ScanExtremum,
    alpha,
    alpha_over_envelope,
    check_all,
    hunt_yorke_liminf,
    kwong_limsup,
    lambda0,
    limsup_envelope_integral,
)
from .envelope import EnvelopeFunction, combined_envelope, running_sup, tau_max, tau_min
from .kernel import (
    KernelCache,
    decay_kernel,
    inner_criterion_integral,
    outer_criterion_integral,
    term_integral,
)
from .model import DelayEquation, PiecewisePeriodic
from .sim import (
    EnvelopeRatioReport,
    History,
    KernelBoundReport,
    Trajectory,
    check_envelope_ratio,
    check_kernel_bound,
    count_sign_changes,
    integrate,
)

__version__ = "0.1.0"

__all__ = [
    "PiecewisePeriodic",
    "DelayEquation",
    "EnvelopeFunction",
    "running_sup",
    "combined_envelope",
    "tau_max",
    "tau_min",
    "KernelCache",
    "decay_kernel",
    "inner_criterion_integral",
    "outer_criterion_integral",
    "term_integral",
    "alpha",
    "alpha_over_envelope",
    "hunt_yorke_liminf",
    "kwong_limsup",
    "lambda0",
    "limsup_envelope_integral",
    "check_all",
    "CheckReport",
    "CriterionVerdict",
    "ScanExtremum",
    "CRITERIA_ORDER",
    "History",
    "Trajectory",
    "integrate",
    "count_sign_changes",
    "check_kernel_bound",
    "check_envelope_ratio",
    "KernelBoundReport",
    "EnvelopeRatioReport",
    "__version__",
]
