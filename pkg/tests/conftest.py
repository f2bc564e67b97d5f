"""Shared fixtures and independent numeric oracles.

The oracles here deliberately avoid the library's own quadrature and
root-finding code paths: characteristic roots come from a plain bisection,
fixed points from direct iteration, and reference integrals from midpoint
refinement, so test expectations are not self-fulfilling.
"""

import math

import numpy as np
import pytest

from delayosc import DelayEquation, PiecewisePeriodic

# -- regression equations --------------------------------------------------


def make_demo_equation() -> DelayEquation:
    """Two-term equation with sawtooth lags, period 3.

    Constant coefficients 0.135 each; the second lag is the first shifted
    by +0.1, so the delay arguments differ by a constant 0.1.
    """
    d1 = PiecewisePeriodic(period=3.0, breakpoints=((0.0, 1.0), (1.0, 1.0), (2.0, 5.0)))
    d2 = PiecewisePeriodic(
        period=3.0, breakpoints=((0.0, 1.0), (1.0, 1.0), (2.0, 5.0)), offset=0.1
    )
    p = PiecewisePeriodic(period=3.0, breakpoints=((0.0, 0.135),))
    return DelayEquation(coefficients=(p, p), lags=(d1, d2))


def make_constant_equation(p: float, lag: float, period: float = 1.0) -> DelayEquation:
    coeff = PiecewisePeriodic(period=period, breakpoints=((0.0, p),))
    delay = PiecewisePeriodic(period=period, breakpoints=((0.0, lag),))
    return DelayEquation(coefficients=(coeff,), lags=(delay,))


@pytest.fixture(scope="session")
def demo_eq() -> DelayEquation:
    return make_demo_equation()


@pytest.fixture(scope="session")
def control_eq() -> DelayEquation:
    """p = 0.2, lag 1: nonoscillatory, closed-form exponential solution."""
    return make_constant_equation(0.2, 1.0)


@pytest.fixture(scope="session")
def control_eq_p3() -> DelayEquation:
    return make_constant_equation(0.3, 1.0)


@pytest.fixture(scope="session")
def zero_eq() -> DelayEquation:
    return make_constant_equation(0.0, 1.0)


def make_random_equation(rng: np.random.Generator) -> DelayEquation:
    """Random admissible equation: shared period, 1..3 terms.

    Coefficient values scale with 1/m so deep kernel values stay finite;
    lag breakpoints keep a 5% minimum spacing so pieces are well separated.
    """
    period = float(rng.uniform(1.0, 4.0))
    m = int(rng.integers(1, 4))

    def knot_times(n_max: int) -> list[float]:
        n = int(rng.integers(1, n_max + 1))
        ts = [0.0] + sorted(float(t) for t in rng.uniform(0.0, period, n - 1))
        keep = [ts[0]]
        for t in ts[1:]:
            if t - keep[-1] > 0.05 * period:
                keep.append(t)
        return keep

    coeffs = []
    lags = []
    for _ in range(m):
        ts = knot_times(3)
        vals = rng.uniform(0.0, 0.3 / m, len(ts))
        coeffs.append(
            PiecewisePeriodic(
                period=period, breakpoints=tuple(zip(ts, (float(v) for v in vals)))
            )
        )
        ts = knot_times(4)
        vals = rng.uniform(0.4, 3.0, len(ts))
        lags.append(
            PiecewisePeriodic(
                period=period, breakpoints=tuple(zip(ts, (float(v) for v in vals)))
            )
        )
    return DelayEquation(coefficients=tuple(coeffs), lags=tuple(lags))


# -- oracles ----------------------------------------------------------------


def char_root(p: float) -> float:
    """Smaller root of mu = p * e^mu by bisection, for p in (0, 1/e).

    x(t) = e^{-mu t} then solves x'(t) + p x(t - 1) = 0 exactly.
    """
    assert 0.0 < p < math.exp(-1.0)
    lo, hi = 0.0, math.log(1.0 / p)
    f = lambda mu: p * math.exp(mu) - mu
    assert f(lo) > 0.0 > f(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fixed_point_lambda(alpha: float, iters: int = 20000) -> float:
    """Smaller root of lam = e^{alpha lam} by direct fixed-point iteration.

    The iteration map is a contraction at the smaller root for
    alpha < 1/e, and converges monotonically from lam = 1.
    """
    lam = 1.0
    for _ in range(iters):
        nxt = math.exp(alpha * lam)
        if abs(nxt - lam) < 1e-15:
            return nxt
        lam = nxt
    return lam


def midpoint_integral(f, a: float, b: float, n_start: int = 64) -> float:
    """Midpoint-rule integral with refinement until two levels agree."""
    prev = None
    n = n_start
    for _ in range(14):
        xs = a + (b - a) * (np.arange(n) + 0.5) / n
        val = float(np.sum(f(xs)) * (b - a) / n)
        if prev is not None and abs(val - prev) < 1e-10 * (1.0 + abs(val)):
            return val
        prev = val
        n *= 2
    return prev


# -- acceptance reporting ---------------------------------------------------

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
