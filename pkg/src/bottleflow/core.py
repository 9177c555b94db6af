"""Exact propagation of the switched bottleneck ``x' = sigma(t)(1 - x) - lam x``.

With a piecewise-constant inflow every arc is a scalar affine ODE
``x' = a - b x`` whose solution is a closed-form exponential, so the entrained
periodic orbit, its average and the periodic gain are all computed without
numerical quadrature.  Only rounding error enters.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

__all__ = [
    "ArcLevel",
    "BottleneckParams",
    "AffineMap",
    "PeriodicOrbit",
    "Trajectory",
    "DegenerateLoopWarning",
    "scalar_step_exact",
    "segment_integral",
    "segment_affine_map",
    "compose_signal_map",
    "contraction_factor",
    "periodic_fixed_point",
    "average_outflow",
    "periodic_gain",
    "dual_gain",
    "simulate_transient",
    "throughput_upper_bound",
    "decay_inequality_sides",
    "two_arc_loop",
    "loop_gap",
    "loop_gap_bound",
    "level_gap",
]


class ArcLevel(enum.Enum):
    """Inflow level of an arc, ``sigma = sigma_bar + alpha * epsilon``."""

    MINUS = -1
    ZERO = 0
    PLUS = 1

    @property
    def alpha(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value) -> "ArcLevel":
        """Accept an ArcLevel, its lower-case name, or the integer alpha."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.upper()]
            except KeyError:
                raise DomainError(f"unknown arc level {value!r}") from None
        try:
            return cls(int(value))
        except (TypeError, ValueError):
            raise DomainError(f"unknown arc level {value!r}") from None


@dataclass(frozen=True)
class BottleneckParams:
    """Exit rate ``lam``, mean inflow ``sigma_bar`` and switching amplitude ``epsilon``.

    The two switched inflows are ``sigma_low = sigma_bar - epsilon`` and
    ``sigma_high = sigma_bar + epsilon``.
    """

    lam: float
    sigma_bar: float
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("lam", "sigma_bar", "epsilon"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v}")
        if self.lam <= 0:
            raise DomainError(f"lam must be positive, got {self.lam}")
        if self.sigma_bar <= 0:
            raise DomainError(f"sigma_bar must be positive, got {self.sigma_bar}")
        if not 0 <= self.epsilon < self.sigma_bar:
            raise DomainError(
                f"epsilon must satisfy 0 <= epsilon < sigma_bar, got {self.epsilon}"
            )

    @classmethod
    def from_levels(cls, lam: float, sigma_low: float, sigma_high: float) -> "BottleneckParams":
        if not sigma_high >= sigma_low:
            raise DomainError("sigma_high must not be below sigma_low")
        return cls(lam, 0.5 * (sigma_low + sigma_high), 0.5 * (sigma_high - sigma_low))

    @property
    def sigma_low(self) -> float:
        return self.sigma_bar - self.epsilon

    @property
    def sigma_high(self) -> float:
        return self.sigma_bar + self.epsilon

    def inflow(self, level: ArcLevel) -> float:
        return self.sigma_bar + level.alpha * self.epsilon

    def rates(self, level: ArcLevel) -> tuple[float, float]:
        """Return ``(a, b)`` such that the arc obeys ``x' = a - b x``."""
        a = self.inflow(level)
        return a, a + self.lam

    def level_fixed_point(self, level: ArcLevel) -> float:
        a, b = self.rates(level)
        return a / b

    @property
    def fixed_point(self) -> float:
        """Steady occupancy under the constant inflow ``sigma_bar``."""
        return self.sigma_bar / (self.sigma_bar + self.lam)

    @property
    def constant_outflow(self) -> float:
        """Outflow ``lam * sigma_bar / (lam + sigma_bar)`` of the constant inflow."""
        return self.lam * self.sigma_bar / (self.lam + self.sigma_bar)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "sigma_bar": self.sigma_bar, "epsilon": self.epsilon}

    @classmethod
    def from_dict(cls, d: dict) -> "BottleneckParams":
        try:
            lam = d["lambda"] if "lambda" in d else d["lam"]
            return cls(float(lam), float(d["sigma_bar"]), float(d.get("epsilon", 0.0)))
        except KeyError as exc:
            raise DomainError(f"missing bottleneck parameter {exc}") from None


def _check_rate(b: float) -> None:
    if not b > 0:
        raise DomainError(f"decay rate b must be positive, got {b}")


def _check_dt(dt: float) -> None:
    if not dt >= 0:
        raise DomainError(f"duration must be nonnegative, got {dt}")


def scalar_step_exact(a: float, b: float, x0: float, dt: float) -> float:
    """Solve ``x' = a - b x`` from ``x0`` over ``dt``.

    >>> scalar_step_exact(0.0, 1.0, 1.0, math.log(2))
    0.5
    """
    _check_rate(b)
    _check_dt(dt)
    m = math.exp(-b * dt)
    return m * x0 + (a / b) * -math.expm1(-b * dt)


def segment_integral(a: float, b: float, x0: float, dt: float) -> float:
    """Integral of the solution of ``x' = a - b x`` over ``[0, dt]``.

    Equal to ``(a dt + x0 - x1) / b``; evaluated as
    ``c dt + (x0 - c)(1 - exp(-b dt)) / b`` with ``c = a / b`` to avoid
    cancellation for short arcs.
    """
    _check_rate(b)
    _check_dt(dt)
    c = a / b
    return c * dt + (x0 - c) * (-math.expm1(-b * dt)) / b


@dataclass(frozen=True)
class AffineMap:
    """The map ``x -> m x + q`` with ``m = exp(-decay)``.

    ``decay`` is kept so that ``1 - m`` can be evaluated without cancellation
    after many compositions.
    """

    m: float
    q: float
    decay: float = field(default=float("nan"), compare=False)

    def __call__(self, x):
        return self.m * x + self.q

    def then(self, other: "AffineMap") -> "AffineMap":
        """Apply ``self`` first, then ``other``."""
        return AffineMap(other.m * self.m, other.m * self.q + other.q, self.decay + other.decay)

    @property
    def one_minus_m(self) -> float:
        if math.isnan(self.decay):
            return 1.0 - self.m
        return -math.expm1(-self.decay)

    @property
    def fixed_point(self) -> float:
        return self.q / self.one_minus_m

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(1.0, 0.0, 0.0)


def segment_affine_map(level: ArcLevel, params: BottleneckParams, dt: float) -> AffineMap:
    if not dt > 0:
        raise DomainError(f"segment duration must be positive, got {dt}")
    a, b = params.rates(level)
    decay = b * dt
    return AffineMap(math.exp(-decay), (a / b) * -math.expm1(-decay), decay)


def compose_signal_map(signal, params: BottleneckParams) -> AffineMap:
    """One-period map ``x(0) -> x(T)`` of a switching signal."""
    total = AffineMap.identity()
    for level, dt in signal.segments:
        total = total.then(segment_affine_map(level, params, dt))
    return total


def contraction_factor(signal, params: BottleneckParams) -> float:
    """Per-period contraction ``prod exp(-b_z dt_z)`` of the period map."""
    decay = sum(params.rates(level)[1] * dt for level, dt in signal.segments)
    return math.exp(-decay)


@dataclass(frozen=True)
class PeriodicOrbit:
    """The entrained T-periodic solution of the bottleneck.

    ``segment_endpoints[k]`` is the occupancy at the k-th switch instant, so
    the first and last entries both equal ``x0``.
    """

    x0: float
    segment_endpoints: tuple[float, ...]
    segment_integrals: tuple[float, ...]
    average_occupancy: float
    period: float
    contraction: float
    signal: object = field(repr=False, compare=False, default=None)

    @property
    def integral(self) -> float:
        return math.fsum(self.segment_integrals)


def _check_signal(signal) -> None:
    if not signal.segments:
        raise DomainError("signal has no segments")
    if not signal.period > 0:
        raise DomainError("signal period must be positive")


def periodic_fixed_point(signal, params: BottleneckParams) -> PeriodicOrbit:
    """Solve ``x(T) = x(0)`` exactly and integrate the orbit arc by arc."""
    _check_signal(signal)
    period_map = compose_signal_map(signal, params)
    x0 = period_map.fixed_point
    endpoints = [x0]
    integrals = []
    x = x0
    for level, dt in signal.segments:
        a, b = params.rates(level)
        integrals.append(segment_integral(a, b, x, dt))
        x = scalar_step_exact(a, b, x, dt)
        endpoints.append(x)
    endpoints[-1] = x0
    average = math.fsum(integrals) / signal.period
    return PeriodicOrbit(
        x0=x0,
        segment_endpoints=tuple(endpoints),
        segment_integrals=tuple(integrals),
        average_occupancy=average,
        period=signal.period,
        contraction=period_map.m,
        signal=signal,
    )


def average_outflow(orbit: PeriodicOrbit, params: BottleneckParams) -> float:
    return params.lam * orbit.average_occupancy


def _admissible_orbit(signal, params: BottleneckParams) -> PeriodicOrbit:
    from .signals import check_admissible
    from .exceptions import InadmissibleSignalError

    orbit = periodic_fixed_point(signal, params)
    report = check_admissible(signal, params, orbit=orbit)
    if not report.member:
        raise InadmissibleSignalError(report)
    return orbit


def periodic_gain(signal, params: BottleneckParams, check: bool = True) -> float:
    """Averaged outflow of the entrained orbit relative to the constant inflow.

    Parameters
    ----------
    signal : SwitchingSignal
    params : BottleneckParams
    check : bool
        If True (default) the signal must be admissible; an
        :class:`~bottleflow.exceptions.InadmissibleSignalError` is raised
        otherwise.

    Returns
    -------
    float
        ``J``; exactly 1 when ``epsilon == 0`` since every level is then the
        constant inflow.
    """
    if params.epsilon == 0:
        _check_signal(signal)
        return 1.0
    orbit = _admissible_orbit(signal, params) if check else periodic_fixed_point(signal, params)
    return orbit.average_occupancy / params.fixed_point


def dual_gain(signal, params: BottleneckParams, check: bool = True) -> float:
    """Gain of the vacancy output ``lam (1 - x)`` relative to the constant inflow."""
    if params.epsilon == 0:
        _check_signal(signal)
        return 1.0
    orbit = _admissible_orbit(signal, params) if check else periodic_fixed_point(signal, params)
    return (1.0 - orbit.average_occupancy) / (1.0 - params.fixed_point)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    occupancy: np.ndarray
    period_values: np.ndarray  # x(kT), k = 0..n_periods


def _segment_tables(signal, params):
    levels = [lvl for lvl, _ in signal.segments]
    durations = np.array([dt for _, dt in signal.segments])
    starts = np.concatenate(([0.0], np.cumsum(durations)[:-1]))
    ab = np.array([params.rates(lvl) for lvl in levels])
    return starts, durations, ab[:, 0], ab[:, 1]


def simulate_transient(
    signal,
    params: BottleneckParams,
    x_init: float,
    n_periods: int,
    samples_per_period: int = 100,
) -> Trajectory:
    """Exact trajectory from ``x_init`` sampled on a uniform grid.

    Every sample is evaluated in closed form from the state at the start of
    its arc, so no error accumulates between samples.
    """
    _check_signal(signal)
    if not 0.0 <= x_init <= 1.0:
        raise DomainError(f"x_init must lie in [0, 1], got {x_init}")
    if n_periods < 1 or samples_per_period < 1:
        raise DomainError("n_periods and samples_per_period must be >= 1")

    starts, durations, a, b = _segment_tables(signal, params)
    T = signal.period
    c = a / b
    offsets = np.arange(samples_per_period) * (T / samples_per_period)
    seg_idx = np.searchsorted(starts, offsets, side="right") - 1
    tau = offsets - starts[seg_idx]

    times, values, period_values = [], [], [x_init]
    x = x_init
    for k in range(n_periods):
        seg_start = np.empty(len(durations))
        for i, dt in enumerate(durations):
            seg_start[i] = x
            x = scalar_step_exact(a[i], b[i], x, dt)
        decay = np.exp(-b[seg_idx] * tau)
        values.append(c[seg_idx] + (seg_start[seg_idx] - c[seg_idx]) * decay)
        times.append(k * T + offsets)
        period_values.append(x)
    times.append([n_periods * T])
    values.append([x])
    return Trajectory(
        np.concatenate(times), np.concatenate(values), np.asarray(period_values)
    )


def throughput_upper_bound(signal, params: BottleneckParams) -> float:
    """Upper bound on ``int_0^T x dt`` from the averaged-arc argument.

    With ``mu+``, ``mu-``, ``mu0`` the total times spent on each level and
    ``mu+ = mu- = (T - mu0) / 2`` this is
    ``c0 mu0 + c+ mu+ + c- mu- + (c+ - c-)(b+ - b-)(mu+ + mu-) / (4 b0)``.
    """
    if params.epsilon > 0:
        _admissible_orbit(signal, params)
    else:
        _check_signal(signal)
    T = signal.period
    mu_zero = sum(dt for lvl, dt in signal.segments if lvl is ArcLevel.ZERO)
    mu_pm = 0.5 * (T - mu_zero)
    c = {lvl: params.level_fixed_point(lvl) for lvl in ArcLevel}
    b = {lvl: params.rates(lvl)[1] for lvl in ArcLevel}
    c_gap = c[ArcLevel.PLUS] - c[ArcLevel.MINUS]
    b_gap = b[ArcLevel.PLUS] - b[ArcLevel.MINUS]
    return (
        c[ArcLevel.ZERO] * mu_zero
        + (c[ArcLevel.PLUS] + c[ArcLevel.MINUS]) * mu_pm
        + c_gap * b_gap * (2.0 * mu_pm) / (4.0 * b[ArcLevel.ZERO])
    )


def decay_inequality_sides(a: float, b: float) -> tuple[float, float]:
    """Both sides of ``(1-e^-a)(1-e^-b)/(1-e^-(a+b)) < ab/(a+b)``."""
    if not (a > 0 and b > 0):
        raise DomainError("both arguments must be positive")
    lhs = math.expm1(-a) * math.expm1(-b) / -math.expm1(-(a + b))
    return lhs, a * b / (a + b)


class DegenerateLoopWarning(RuntimeWarning):
    """Raised as a warning when a two-arc loop collapses to a point (epsilon = 0)."""


def two_arc_loop(params: BottleneckParams, t_plus: float, t_minus: float) -> tuple[float, float]:
    """Closed loop of a Plus arc ``v -> w`` followed by a Minus arc ``w -> v``.

    Returns ``(v, w)``.
    """
    if not (t_plus > 0 and t_minus > 0):
        raise DomainError("arc durations must be positive")
    if params.epsilon == 0:
        warnings.warn("epsilon = 0: both arcs coincide and the loop is a point",
                      DegenerateLoopWarning, stacklevel=2)
    up = segment_affine_map(ArcLevel.PLUS, params, t_plus)
    down = segment_affine_map(ArcLevel.MINUS, params, t_minus)
    v = up.then(down).fixed_point
    return v, up(v)


def level_gap(params: BottleneckParams) -> float:
    """``c+ - c- = 2 lam eps / ((sigma_bar + lam + eps)(sigma_bar + lam - eps))``."""
    s, lam, eps = params.sigma_bar, params.lam, params.epsilon
    return 2.0 * lam * eps / ((s + lam + eps) * (s + lam - eps))


def loop_gap(params: BottleneckParams, t_plus: float, t_minus: float) -> float:
    """Closed-form loop height ``w - v`` of :func:`two_arc_loop`."""
    b_plus = params.rates(ArcLevel.PLUS)[1] * t_plus
    b_minus = params.rates(ArcLevel.MINUS)[1] * t_minus
    lhs, _ = decay_inequality_sides(b_plus, b_minus)
    return level_gap(params) * lhs


def loop_gap_bound(params: BottleneckParams, t_plus: float, t_minus: float) -> float:
    """Strict upper bound ``(c+ - c-) b+t+ b-t- / (b+t+ + b-t-)`` on the loop height."""
    b_plus = params.rates(ArcLevel.PLUS)[1] * t_plus
    b_minus = params.rates(ArcLevel.MINUS)[1] * t_minus
    return level_gap(params) * b_plus * b_minus / (b_plus + b_minus)
