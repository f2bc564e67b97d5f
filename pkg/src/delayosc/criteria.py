"""Oscillation criteria evaluated as exact extrema over one period.

All limit inferior / limit superior quantities reduce to extrema of
periodic profiles once transients have passed, so they are computed by
scanning one steady-state period on a dense grid seeded with every
geometric breakpoint, then refining each local extremum by golden-section
search.  A criterion counts as satisfied only when its margin clears
10 * tol; anything closer is marginal and reported as not satisfied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import envelope as env_mod
from .envelope import EnvelopeFunction, combined_envelope, tau_max_polyline
from .kernel import (
    DEFAULT_TOL,
    KernelCache,
    inner_criterion_integral,
    outer_criterion_integral,
)
from .model import DelayEquation, breakpoint_times

__all__ = [
    "CRITERIA_ORDER",
    "CheckReport",
    "CriterionVerdict",
    "ScanExtremum",
    "alpha",
    "alpha_over_envelope",
    "check_all",
    "hunt_yorke_liminf",
    "kwong_limsup",
    "lambda0",
    "limsup_envelope_integral",
]

CRITERIA_ORDER = (
    "ladde_1_3",
    "hunt_yorke_1_4",
    "kwong_1_5",
    "bcs_1_8",
    "bcs_1_9",
    "main_2_8",
)

INV_E = math.exp(-1.0)
_GOLDEN_XTOL = 1e-10
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


# -- root finding ----------------------------------------------------------


def lambda0(alpha_value: float, *, xtol: float = 1e-12) -> float:
    """Smaller root of lambda = exp(alpha * lambda), by bisection.

    Exists for alpha in (0, 1/e]; anything outside raises.
    """
    a = float(alpha_value)
    if not (0.0 < a <= INV_E):
        raise ValueError(
            f"the fixed point lambda = exp(alpha*lambda) needs alpha in (0, 1/e], "
            f"got {a}"
        )

    def f(lam):
        return math.exp(a * lam) - lam

    # f(1) > 0 and the stationary point -ln(a)/a is past the smaller root
    lo = 1.0
    hi = -math.log(a) / a
    if f(hi) >= 0.0:
        # tangency at alpha == 1/e (up to rounding)
        return hi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- extremum scanning -----------------------------------------------------


def _golden_min(f, a: float, b: float, xtol: float):
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = f(c)
    fd = f(d)
    while b - a > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _scan_extremum(f_scalar, w0, w1, knots, n_grid, mode, f_vec=None, xtol=_GOLDEN_XTOL):
    """Extremum of f over [w0, w1]: dense grid + seeded knots, then
    golden-section refinement of every local extremum bracket."""
    cand = np.unique(
        np.concatenate(
            [np.linspace(w0, w1, n_grid + 1), np.asarray(list(knots), dtype=float)]
        )
    )
    cand = cand[(cand >= w0) & (cand <= w1)]
    if f_vec is not None:
        vals = np.asarray(f_vec(cand), dtype=float)
    else:
        vals = np.array([f_scalar(t) for t in cand])

    sign = 1.0 if mode == "min" else -1.0
    g = sign * vals

    def refine_target(x):
        return sign * f_scalar(x)

    n = len(cand)
    best_val = float(g.min())
    best_t = float(cand[int(np.argmin(g))])

    reps = []
    for j in range(n):
        gl = g[j - 1] if j > 0 else math.inf
        gr = g[j + 1] if j < n - 1 else math.inf
        if g[j] <= gl and g[j] <= gr:
            if reps and reps[-1][1] == j - 1 and g[j] == g[j - 1]:
                reps[-1] = (reps[-1][0], j)  # extend a flat run
            else:
                reps.append((j, j))
    for j0, j1 in reps:
        lo = cand[max(j0 - 1, 0)]
        hi = cand[min(j1 + 1, n - 1)]
        if hi <= lo:
            continue
        x, gx = _golden_min(refine_target, float(lo), float(hi), xtol)
        if gx < best_val:
            best_val = gx
            best_t = x
    return sign * best_val, best_t


def _window_start(eq: DelayEquation, env: EnvelopeFunction, depth: int) -> float:
    """Period-aligned start of the steady-state scan window; generous enough
    that ``depth`` nested kernel lookups never reach back before t = 0."""
    span = (depth + 2) * (eq.max_lag + eq.period)
    t0 = env.t_stab + span
    per = eq.period
    return per * math.ceil(t0 / per - 1e-9)


def _preimages(poly, targets):
    out = []
    for (t0, y0), (t1, y1) in zip(poly, poly[1:]):
        if y1 == y0:
            continue
        lo, hi = (y0, y1) if y0 < y1 else (y1, y0)
        for y in targets:
            if lo <= y <= hi:
                t = t0 + (y - y0) * (t1 - t0) / (y1 - y0)
                if t0 <= t <= t1:
                    out.append(t)
    return out


def _integral_profile_knots(eq, poly, w0, w1):
    """Kinks of t -> integral_{lower(t)}^t coeff-sum, where ``poly`` is the
    polyline of the lower limit over [w0, w1]: coefficient breakpoints hit by
    either integration limit, plus kinks of the lower limit itself."""
    knots = set(breakpoint_times(eq.coefficients, w0, w1))
    knots.update(t for t, _ in poly)
    ys = [y for _, y in poly]
    targets = breakpoint_times(eq.coefficients, min(ys), max(ys))
    knots.update(_preimages(poly, targets))
    return sorted(t for t in knots if w0 <= t <= w1)


def _refine_xtol(tol: float) -> float:
    return min(float(tol), _GOLDEN_XTOL)


def _liminf_coeff_integral(eq, lower_values, poly, w0, w1, n_grid, mode, xtol):
    anti = eq.coeff_sum_antiderivative

    def f_vec(ts):
        return anti(ts) - anti(lower_values(ts))

    def f_scalar(t):
        return float(f_vec(np.asarray([t], dtype=float))[0])

    knots = _integral_profile_knots(eq, poly, w0, w1)
    return _scan_extremum(f_scalar, w0, w1, knots, n_grid, mode, f_vec=f_vec, xtol=xtol)


# -- liminf quantities -----------------------------------------------------


def alpha(
    eq: DelayEquation,
    *,
    tol: float = DEFAULT_TOL,
    n_grid: int = 2000,
    env: EnvelopeFunction | None = None,
) -> float:
    """liminf of integral over [tau_max(t), t] of the coefficient sum."""
    env = env if env is not None else combined_envelope(eq)
    w0 = _window_start(eq, env, 0)
    w1 = w0 + eq.period
    poly = tau_max_polyline(eq, w0, w1)
    value, _ = _liminf_coeff_integral(
        eq,
        lambda ts: env_mod.tau_max_values(eq, ts),
        poly,
        w0,
        w1,
        n_grid,
        "min",
        _refine_xtol(tol),
    )
    return value


def alpha_over_envelope(
    eq: DelayEquation,
    *,
    tol: float = DEFAULT_TOL,
    n_grid: int = 2000,
    env: EnvelopeFunction | None = None,
) -> float:
    """liminf of integral over [h(t), t]; equals ``alpha`` in the limit
    because the envelope only flattens the delay argument where it dips."""
    env = env if env is not None else combined_envelope(eq)
    w0 = _window_start(eq, env, 0)
    w1 = w0 + eq.period
    poly = env.polyline(w0, w1)
    value, _ = _liminf_coeff_integral(
        eq, env.values, poly, w0, w1, n_grid, "min", _refine_xtol(tol)
    )
    return value


def kwong_limsup(
    eq: DelayEquation,
    *,
    tol: float = DEFAULT_TOL,
    n_grid: int = 2000,
    env: EnvelopeFunction | None = None,
) -> float:
    """limsup of integral over [tau_max(t), t] of the coefficient sum."""
    env = env if env is not None else combined_envelope(eq)
    w0 = _window_start(eq, env, 0)
    w1 = w0 + eq.period
    poly = tau_max_polyline(eq, w0, w1)
    value, _ = _liminf_coeff_integral(
        eq,
        lambda ts: env_mod.tau_max_values(eq, ts),
        poly,
        w0,
        w1,
        n_grid,
        "max",
        _refine_xtol(tol),
    )
    return value


def hunt_yorke_liminf(
    eq: DelayEquation,
    *,
    tol: float = DEFAULT_TOL,
    n_grid: int = 2000,
    env: EnvelopeFunction | None = None,
) -> float:
    """liminf of sum_i p_i(t) * d_i(t) (coefficients weighted by their lags)."""
    env = env if env is not None else combined_envelope(eq)
    w0 = _window_start(eq, env, 0)
    w1 = w0 + eq.period

    def f_vec(ts):
        acc = None
        for c, d in zip(eq.coefficients, eq.lags):
            term = c.values(ts) * d.values(ts)
            acc = term if acc is None else acc + term
        return acc

    def f_scalar(t):
        return sum(c(t) * d(t) for c, d in zip(eq.coefficients, eq.lags))

    knots = breakpoint_times(list(eq.coefficients) + list(eq.lags), w0, w1)
    value, _ = _scan_extremum(
        f_scalar, w0, w1, knots, n_grid, "min", f_vec=f_vec, xtol=_refine_xtol(tol)
    )
    return value


# -- limsup of the criterion integrals -------------------------------------


@dataclass(frozen=True)
class ScanExtremum:
    value: float
    t: float


def limsup_envelope_integral(
    eq: DelayEquation,
    r: int,
    kind: str = "inner",
    *,
    tol: float = DEFAULT_TOL,
    n_grid: int = 500,
    cache: KernelCache | None = None,
    env: EnvelopeFunction | None = None,
) -> ScanExtremum:
    """limsup over t of the criterion integral, with its maximiser.

    ``kind`` selects the sliding-envelope ("inner") or frozen-envelope
    ("outer") integrand.
    """
    if kind not in ("inner", "outer"):
        raise ValueError(f"kind must be 'inner' or 'outer', got {kind!r}")
    env = env if env is not None else combined_envelope(eq)
    cache = cache if cache is not None else KernelCache()
    w0 = _window_start(eq, env, r)
    w1 = w0 + eq.period
    fn = inner_criterion_integral if kind == "inner" else outer_criterion_integral

    def f_scalar(t):
        return fn(eq, r, t, tol=tol, cache=cache, env=env)

    knots = set(breakpoint_times(list(eq.coefficients) + list(eq.lags), w0, w1))
    knots.update(env.knots(w0, w1))
    value, t_at = _scan_extremum(
        f_scalar, w0, w1, sorted(knots), n_grid, "max", xtol=_refine_xtol(tol)
    )
    return ScanExtremum(value=value, t=t_at)


# -- verdicts --------------------------------------------------------------


@dataclass(frozen=True)
class CriterionVerdict:
    name: str
    value: float | None
    threshold: float | None
    satisfied: bool
    applicable: bool
    marginal: bool
    params: dict = field(compare=False)

    @property
    def margin(self) -> float | None:
        if self.value is None or self.threshold is None:
            return None
        return self.value - self.threshold


@dataclass(frozen=True)
class CheckReport:
    alpha: float
    lambda0: float | None
    verdicts: tuple[CriterionVerdict, ...]
    overall: str
    witness: str | None
    notes: tuple[str, ...] = ()

    def __getitem__(self, name: str) -> CriterionVerdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)


def _is_monotone_delay(eq: DelayEquation) -> bool:
    """tau(t) = t - d(t) nondecreasing <=> every lag segment has slope <= 1."""
    return all(d.max_slope <= 1.0 + 1e-12 for d in eq.lags)


def check_all(
    eq: DelayEquation,
    r: int = 1,
    *,
    tol: float = DEFAULT_TOL,
    n_grid: int = 500,
    n_grid_liminf: int = 2000,
) -> CheckReport:
    """Evaluate every criterion and aggregate an overall verdict.

    The witness is the first satisfied criterion in the fixed order
    ``CRITERIA_ORDER``.  Margins within 10 * tol of a threshold are treated
    as marginal and never count as satisfied.
    """
    env = combined_envelope(eq)
    cache = KernelCache()
    strict = 10.0 * tol

    a_val = alpha(eq, tol=tol, n_grid=n_grid_liminf, env=env)
    lam = lambda0(a_val) if 0.0 < a_val <= INV_E else None
    hy = hunt_yorke_liminf(eq, tol=tol, n_grid=n_grid_liminf, env=env)
    kw = kwong_limsup(eq, tol=tol, n_grid=n_grid_liminf, env=env)
    inner = limsup_envelope_integral(
        eq, r, "inner", tol=tol, n_grid=n_grid, cache=cache, env=env
    )
    outer = limsup_envelope_integral(
        eq, r, "outer", tol=tol, n_grid=n_grid, cache=cache, env=env
    )

    w_liminf = _window_start(eq, env, 0)
    w_kernel = _window_start(eq, env, r)
    base_params = {"tol": tol, "r": None}

    def params_liminf():
        return dict(
            base_params, n_grid=n_grid_liminf, window=(w_liminf, w_liminf + eq.period)
        )

    def params_kernel():
        return dict(
            base_params,
            r=r,
            n_grid=n_grid,
            window=(w_kernel, w_kernel + eq.period),
        )

    lam_threshold = (1.0 + math.log(lam)) / lam if lam is not None else None
    sqrt_arg = 1.0 - 2.0 * a_val - a_val * a_val
    bcs19_threshold = (
        1.0 - (1.0 - a_val - math.sqrt(sqrt_arg)) / 2.0
        if (lam is not None and sqrt_arg >= 0.0)
        else None
    )

    def verdict(name, value, threshold, applicable, params):
        margin = None if (value is None or threshold is None) else value - threshold
        ok = bool(applicable and margin is not None and margin > strict)
        marginal = bool(
            applicable and margin is not None and abs(margin) <= strict
        )
        return CriterionVerdict(
            name=name,
            value=value,
            threshold=threshold,
            satisfied=ok,
            applicable=applicable,
            marginal=marginal,
            params=params,
        )

    verdicts = (
        verdict("ladde_1_3", a_val, INV_E, True, params_liminf()),
        verdict("hunt_yorke_1_4", hy, INV_E, True, params_liminf()),
        verdict(
            "kwong_1_5",
            kw,
            lam_threshold,
            eq.m == 1 and _is_monotone_delay(eq) and lam is not None,
            params_liminf(),
        ),
        verdict("bcs_1_8", outer.value, 1.0, True, params_kernel()),
        verdict("bcs_1_9", outer.value, bcs19_threshold, lam is not None, params_kernel()),
        verdict("main_2_8", inner.value, lam_threshold, lam is not None, params_kernel()),
    )

    witness = next((v.name for v in verdicts if v.satisfied), None)
    overall = "oscillatory" if witness is not None else "inconclusive"

    notes = []
    by_name = {v.name: v for v in verdicts}
    if by_name["bcs_1_9"].satisfied and not by_name["bcs_1_8"].satisfied:
        notes.append(
            "bcs_1_9 is satisfied although bcs_1_8 is not: the frozen-envelope "
            "limsup clears the alpha-derived threshold "
            f"{by_name['bcs_1_9'].threshold:.6f} but stays below 1."
        )
    for v in verdicts:
        if v.marginal:
            notes.append(
                f"{v.name} is marginal: its margin {v.margin:.3e} is within "
                f"{strict:.1e} of the threshold, so it is not counted as satisfied."
            )

    return CheckReport(
        alpha=a_val,
        lambda0=lam,
        verdicts=verdicts,
        overall=overall,
        witness=witness,
        notes=tuple(notes),
    )
