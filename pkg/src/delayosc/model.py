"""Periodic piecewise-linear functions and the delay equation container.

Everything downstream works with one representation: a periodic function
given by breakpoints over a single period plus a constant offset.  Both the
coefficients and the lags of the delay equation

    x'(t) + sum_i p_i(t) * x(t - d_i(t)) = 0,   t >= 0

are stored this way (lags d_i, so the delay argument is tau_i(t) = t - d_i(t)).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

__all__ = ["PiecewisePeriodic", "DelayEquation", "breakpoint_times"]

# Lags have to close up continuously at the wrap point; a mismatch above this
# is rejected.  Coefficients may jump there (sawtooth and piecewise-constant
# profiles are legitimate).
WRAP_TOL = 1e-12


@dataclass(frozen=True)
class PiecewisePeriodic:
    """Periodic piecewise-linear function  f(t) = interp(t mod period) + offset.

    ``breakpoints`` is a sequence of (t_j, v_j) pairs with
    0 = t_0 < t_1 < ... <= period.  On [t_j, t_{j+1}) the value is the linear
    interpolant between consecutive pairs.  The last segment runs to
    (period, v_0) unless a closing pair with t == period is given explicitly,
    which pins the left limit at the wrap point instead; that is how jump
    discontinuities are written down.  The value AT the wrap point is always
    v_0, so breakpoint evaluation is exact.
    """

    period: float
    breakpoints: tuple[tuple[float, float], ...]
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "offset", float(self.offset))
        bps = tuple((float(t), float(v)) for t, v in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)

        if not (math.isfinite(self.period) and self.period > 0.0):
            raise ValueError(f"period must be positive and finite, got {self.period}")
        if not math.isfinite(self.offset):
            raise ValueError(f"offset must be finite, got {self.offset}")
        if not bps:
            raise ValueError("breakpoints must be non-empty")
        for t, v in bps:
            if not (math.isfinite(t) and math.isfinite(v)):
                raise ValueError(f"non-finite breakpoint ({t}, {v})")
        if bps[0][0] != 0.0:
            raise ValueError(f"first breakpoint must sit at t=0, got t={bps[0][0]}")
        for (a, _), (b, _) in zip(bps, bps[1:]):
            if not b > a:
                raise ValueError(
                    f"breakpoint times must be strictly increasing, got {a} then {b}"
                )
        if bps[-1][0] > self.period:
            raise ValueError(
                f"breakpoint t={bps[-1][0]} lies beyond the period {self.period}"
            )

        # Knot arrays covering the closed period [0, period].  A trailing pair
        # at t == period, when present, supplies the closing value; otherwise
        # the last segment interpolates back to v_0 (continuous wraparound).
        if bps[-1][0] == self.period:
            if len(bps) == 1:
                raise ValueError("a lone breakpoint cannot sit at t=period")
            ts = [t for t, _ in bps]
            vs = [v for _, v in bps]
        else:
            ts = [t for t, _ in bps] + [self.period]
            vs = [v for _, v in bps] + [bps[0][1]]

        ts_arr = np.asarray(ts, dtype=float)
        vs_arr = np.asarray(vs, dtype=float)
        seg_len = np.diff(ts_arr)
        slopes = np.diff(vs_arr) / seg_len
        # exact running integral of the interpolant at each knot
        seg_int = 0.5 * (vs_arr[:-1] + vs_arr[1:]) * seg_len
        cum = np.concatenate(([0.0], np.cumsum(seg_int)))

        object.__setattr__(self, "_ts", ts_arr)
        object.__setattr__(self, "_vs", vs_arr)
        object.__setattr__(self, "_slopes", slopes)
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "_period_integral", float(cum[-1]))
        object.__setattr__(self, "_ts_list", ts)
        object.__setattr__(self, "_vs_list", vs)
        object.__setattr__(self, "_slopes_list", slopes.tolist())
        object.__setattr__(self, "_nseg", len(ts) - 1)

    # -- basic queries -----------------------------------------------------

    @property
    def closing_value(self) -> float:
        """Left limit of the interpolant at the wrap point (before offset)."""
        return self._vs_list[-1]

    @property
    def wrap_jump(self) -> float:
        """Jump at the wrap point: f(period-) minus f(period)."""
        return self._vs_list[-1] - self._vs_list[0]

    @property
    def min_value(self) -> float:
        """Minimum over one period (attained at a knot: pieces are linear)."""
        return min(self._vs_list) + self.offset

    @property
    def max_value(self) -> float:
        return max(self._vs_list) + self.offset

    @property
    def max_slope(self) -> float:
        return max(self._slopes_list)

    @property
    def interior_times(self) -> tuple[float, ...]:
        """Breakpoint times inside [0, period), wrap-closing pair excluded."""
        return tuple(self._ts_list[: self._nseg])

    # -- evaluation --------------------------------------------------------

    def __call__(self, t: float) -> float:
        u = math.fmod(t, self.period)
        if u < 0.0:
            u += self.period
        j = bisect_right(self._ts_list, u) - 1
        if j >= self._nseg:
            j = self._nseg - 1
        return (
            self._vs_list[j]
            + self._slopes_list[j] * (u - self._ts_list[j])
            + self.offset
        )

    def values(self, ts) -> np.ndarray:
        """Vectorised evaluation."""
        x = np.asarray(ts, dtype=float)
        u = np.mod(x, self.period)
        u = np.where(u >= self.period, u - self.period, u)
        j = np.clip(np.searchsorted(self._ts, u, side="right") - 1, 0, self._nseg - 1)
        return self._vs[j] + self._slopes[j] * (u - self._ts[j]) + self.offset

    # -- exact integration -------------------------------------------------

    def _cum_scalar(self, x: float) -> float:
        k = math.floor(x / self.period)
        u = x - k * self.period
        if u < 0.0:
            u += self.period
            k -= 1
        elif u >= self.period:
            u -= self.period
            k += 1
        j = bisect_right(self._ts_list, u) - 1
        if j >= self._nseg:
            j = self._nseg - 1
        du = u - self._ts_list[j]
        part = self._cum[j] + (self._vs_list[j] + 0.5 * self._slopes_list[j] * du) * du
        return k * self._period_integral + part + self.offset * x

    def antiderivative(self, ts) -> np.ndarray:
        """Vectorised exact antiderivative  x -> integral of f over [0, x]."""
        x = np.asarray(ts, dtype=float)
        k = np.floor(x / self.period)
        u = x - k * self.period
        low = u < 0.0
        if low.any():
            u = np.where(low, u + self.period, u)
            k = np.where(low, k - 1.0, k)
        high = u >= self.period
        if high.any():
            u = np.where(high, u - self.period, u)
            k = np.where(high, k + 1.0, k)
        j = np.clip(np.searchsorted(self._ts, u, side="right") - 1, 0, self._nseg - 1)
        du = u - self._ts[j]
        part = self._cum[j] + (self._vs[j] + 0.5 * self._slopes[j] * du) * du
        return k * self._period_integral + part + self.offset * x

    def integrate(self, a: float, b: float) -> float:
        """Exact integral over [a, b]; requires a <= b."""
        if a > b:
            raise ValueError(f"integration bounds out of order: {a} > {b}")
        return self._cum_scalar(b) - self._cum_scalar(a)


@dataclass(frozen=True)
class DelayEquation:
    """Coefficients p_i and lags d_i sharing one period.

    Admissibility is enforced on construction: coefficients are nonnegative,
    lags are strictly positive and continuous (including at the wrap point),
    and all functions share the same period exactly.
    """

    coefficients: tuple[PiecewisePeriodic, ...]
    lags: tuple[PiecewisePeriodic, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(self.coefficients))
        object.__setattr__(self, "lags", tuple(self.lags))
        if not self.coefficients:
            raise ValueError("at least one coefficient/lag pair is required")
        if len(self.coefficients) != len(self.lags):
            raise ValueError(
                f"got {len(self.coefficients)} coefficients but {len(self.lags)} lags"
            )
        period = self.coefficients[0].period
        for i, c in enumerate(self.coefficients):
            if c.period != period:
                raise ValueError(
                    f"coefficients[{i}]: period {c.period} differs from {period}"
                )
            if c.min_value < 0.0:
                raise ValueError(
                    f"coefficients[{i}]: negative value {c.min_value} over a period"
                )
        for i, d in enumerate(self.lags):
            if d.period != period:
                raise ValueError(f"lags[{i}]: period {d.period} differs from {period}")
            if not d.min_value > 0.0:
                raise ValueError(
                    f"lags[{i}]: lag must stay positive, minimum over a period is "
                    f"{d.min_value}"
                )
            if abs(d.wrap_jump) > WRAP_TOL:
                raise ValueError(
                    f"lags[{i}]: discontinuous at the wrap point "
                    f"(jump {d.wrap_jump:.3e}); lags must be continuous"
                )

    @property
    def m(self) -> int:
        return len(self.coefficients)

    @property
    def period(self) -> float:
        return self.coefficients[0].period

    @property
    def min_lag(self) -> float:
        return min(d.min_value for d in self.lags)

    @property
    def max_lag(self) -> float:
        return max(d.max_value for d in self.lags)

    # -- pointwise helpers -------------------------------------------------

    def coeff_sum(self, t: float) -> float:
        return sum(c(t) for c in self.coefficients)

    def coeff_sum_values(self, ts) -> np.ndarray:
        out = self.coefficients[0].values(ts)
        for c in self.coefficients[1:]:
            out = out + c.values(ts)
        return out

    def coeff_sum_antiderivative(self, ts) -> np.ndarray:
        out = self.coefficients[0].antiderivative(ts)
        for c in self.coefficients[1:]:
            out = out + c.antiderivative(ts)
        return out

    def lag(self, i: int, t: float) -> float:
        return self.lags[i](t)

    def tau(self, i: int, t: float) -> float:
        """Delay argument of term i: tau_i(t) = t - d_i(t) < t."""
        return t - self.lags[i](t)

    def tau_values(self, i: int, ts) -> np.ndarray:
        x = np.asarray(ts, dtype=float)
        return x - self.lags[i].values(x)

    # -- exact integral of the coefficient sum ------------------------------

    def integrate_coeff_sum(self, s: float, t: float) -> float:
        """Integral of sum_i p_i over [s, t], exact for the representation.

        Periodicity and additivity hold to rounding; s > t is rejected.
        """
        if s > t:
            raise ValueError(f"integration bounds out of order: {s} > {t}")
        return sum(c._cum_scalar(t) - c._cum_scalar(s) for c in self.coefficients)


def breakpoint_times(funcs, a: float, b: float) -> list[float]:
    """All absolute times in [a, b] where any of the periodic functions has a
    breakpoint (the periodic lattice k*period + t_j).  Sorted, deduplicated."""
    out = set()
    for f in funcs:
        period = f.period
        for t_j in f.interior_times:
            k = math.floor((a - t_j) / period)
            t = k * period + t_j
            while t <= b:
                if t >= a:
                    out.add(t)
                t += period
    return sorted(out)
