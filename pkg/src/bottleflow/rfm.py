"""Ribosome flow model with a switched initiation rate, and its linear reduction.

Site ``k`` of the n-site model obeys
``x_k' = l_{k-1} x_{k-1} (1 - x_k) - l_k x_k (1 - x_{k+1})`` with
``x_0 = 1`` and ``x_{n+1} = 0``; the initiation rate ``l_0`` is the switched
inflow.  When ``l_i >> l_0`` for ``i >= 1`` the downstream sites stay nearly
empty and the model reduces to the bottleneck feeding a linear chain.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .cascade import cascade_periodic_orbit, chain_system
from .core import ArcLevel, BottleneckParams, periodic_fixed_point
from .exceptions import DomainError, NumericalError

__all__ = [
    "RfmParams",
    "RfmSimulation",
    "ReductionReport",
    "rfm_rhs",
    "rfm_steady_state",
    "simulate_rfm",
    "compare_reduction",
    "write_trajectory_csv",
]

ENTRAINMENT_TOL = 1e-10
MAX_PERIODS = 10_000
CUBE_TOL = 1e-9
DEFAULT_STEP_RATE_PRODUCT = 0.05


@dataclass(frozen=True)
class RfmParams:
    """Rates ``(l_0, l_1, ..., l_n)``; the initiation rate switches as ``l_0 + alpha * epsilon``."""

    rates: tuple[float, ...]
    epsilon: float = 0.0

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if len(rates) < 2:
            raise DomainError("an RFM needs at least one site (two rates)")
        if any(not (r > 0 and math.isfinite(r)) for r in rates):
            raise DomainError("all RFM rates must be positive and finite")
        if not 0 <= self.epsilon < rates[0]:
            raise DomainError("epsilon must satisfy 0 <= epsilon < initiation rate")

    @property
    def n(self) -> int:
        return len(self.rates) - 1

    def inflow(self, level: ArcLevel) -> float:
        return self.rates[0] + level.alpha * self.epsilon

    def bottleneck(self) -> BottleneckParams:
        """Parameters of the first site viewed as a bottleneck."""
        return BottleneckParams(self.rates[1], self.rates[0], self.epsilon)


def rfm_rhs(state, params: RfmParams, sigma_t: float) -> np.ndarray:
    x = np.asarray(state, dtype=float)
    lam = np.asarray(params.rates[1:])
    flow = lam * x * (1.0 - np.append(x[1:], 0.0))  # flow out of each site
    inflow = np.empty_like(x)
    inflow[0] = sigma_t * (1.0 - x[0])
    inflow[1:] = flow[:-1]
    return inflow - flow


def rfm_steady_state(params: RfmParams, tol: float = 1e-14) -> np.ndarray:
    """Equilibrium under the constant initiation rate ``l_0``.

    Solved by bisection on the steady flow ``R``: sweeping from the exit,
    ``x_n = R / l_n`` and ``x_k = R / (l_k (1 - x_{k+1}))``; the correct ``R``
    makes the entry balance ``l_0 (1 - x_1) = R``.
    """
    lam = params.rates

    def residual(R):
        x_next = 0.0
        xs = []
        for k in range(params.n, 0, -1):
            xk = R / (lam[k] * (1.0 - x_next))
            if not 0 <= xk < 1:
                return None
            xs.append(xk)
            x_next = xk
        return lam[0] * (1.0 - x_next) - R, xs[::-1]

    lo, hi = 0.0, min(lam)
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if r is None or r[0] < 0:
            hi = mid
        else:
            lo = mid
    return np.asarray(residual(lo)[1])


@dataclass(frozen=True, eq=False)
class RfmSimulation:
    """RK4 run of the RFM.

    ``times``/``states`` cover the last simulated period, taken as the
    estimate of the entrained orbit; ``period_states[k]`` is ``x(kT)``.
    """

    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    period_states: np.ndarray = field(repr=False)
    periods: int
    entrained: bool
    residual: float
    average_output: float
    average_occupancy: np.ndarray
    switch_states: np.ndarray = field(repr=False)


def _segment_plan(signal, step):
    plan = []
    for level, dt in signal.segments:
        k = max(1, math.ceil(dt / step - 1e-12))
        plan.append((level, dt / k, k))
    return plan


def simulate_rfm(
    params: RfmParams,
    signal,
    x_init,
    n_periods: int = 1,
    step: float | None = None,
    until_entrained: bool = True,
    max_periods: int = MAX_PERIODS,
) -> RfmSimulation:
    """Integrate the RFM by classical RK4 with steps aligned to the switches.

    Runs at least ``n_periods`` periods; with ``until_entrained`` it keeps
    going until ``max |x((k+1)T) - x(kT)| < 1e-10`` and raises
    :class:`NumericalError` if ``max_periods`` is reached first.  The
    averages are RK4 quadratures of the output ``l_n x_n`` and of the
    occupancies over the last period.

    The default step is ``min(T / 200, 0.05 / r)`` with ``r`` the largest
    rate in the model, which keeps ``r * step`` well inside the RK4
    stability region.
    """
    T = signal.period
    if step is None:
        # resolve the fastest rate as well as the period
        fastest = max(params.rates) + params.epsilon
        step = min(T / 200, DEFAULT_STEP_RATE_PRODUCT / fastest)
    if not 0 < step <= T / 100 * (1 + 1e-12):
        raise DomainError("step must satisfy 0 < step <= T / 100")
    x = np.asarray(x_init, dtype=float).copy()
    n = params.n
    if x.shape != (n,):
        raise DomainError(f"x_init must have length {n}")
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError("x_init must lie in the unit cube")

    lam = np.asarray(params.rates[1:])
    lam_n = lam[-1]
    plan = _segment_plan(signal, step)

    # augmented state: occupancies then their running integrals
    def f(u, sigma):
        du = np.empty_like(u)
        du[:n] = rfm_rhs(u[:n], params, sigma)
        du[n:] = u[:n]
        return du

    period_states = [x.copy()]
    entrained = False
    residual = math.inf
    k = 0
    while True:
        u = np.concatenate((x, np.zeros(n)))
        times, states, switches = [0.0], [x.copy()], [x.copy()]
        t = 0.0
        for level, h, m in plan:
            sigma = params.inflow(level)
            # an unstable step blows up; the cube check below reports it
            with np.errstate(over="ignore", invalid="ignore"):
                for _ in range(m):
                    k1 = f(u, sigma)
                    k2 = f(u + 0.5 * h * k1, sigma)
                    k3 = f(u + 0.5 * h * k2, sigma)
                    k4 = f(u + h * k3, sigma)
                    u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                    t += h
                    times.append(t)
                    states.append(u[:n].copy())
            xs = u[:n]
            seg = np.asarray(states[-m:])
            if not np.all((seg >= -CUBE_TOL) & (seg <= 1 + CUBE_TOL)):
                raise NumericalError("state left the unit cube; reduce the step")
            switches.append(xs.copy())
        k += 1
        residual = float(np.max(np.abs(xs - x)))
        x = xs.copy()
        period_states.append(x.copy())
        if residual < ENTRAINMENT_TOL:
            entrained = True
        if k >= n_periods and (entrained or not until_entrained):
            break
        if k >= max_periods:
            raise NumericalError(f"no entrainment after {max_periods} periods (residual {residual:.3g})")

    avg = u[n:] / T
    return RfmSimulation(
        times=np.asarray(times),
        states=np.asarray(states),
        period_states=np.asarray(period_states),
        periods=k,
        entrained=entrained,
        residual=residual,
        average_output=float(lam_n * avg[-1]),
        average_occupancy=avg,
        switch_states=np.asarray(switches),
    )


@dataclass(frozen=True, eq=False)
class ReductionReport:
    rate_ratio: float
    average_output_full: float
    average_output_reduced: float
    site_average_full: np.ndarray
    site_average_reduced: np.ndarray
    switch_discrepancy: np.ndarray  # per site, max over switch instants

    @property
    def output_discrepancy(self) -> float:
        return abs(self.average_output_full - self.average_output_reduced)

    @property
    def relative_output_discrepancy(self) -> float:
        return self.output_discrepancy / abs(self.average_output_reduced)


def compare_reduction(
    params: RfmParams, signal, n_periods: int = 1, step: float | None = None
) -> ReductionReport:
    """Compare the full RFM with the bottleneck + linear-chain reduction.

    The full model is integrated by :func:`simulate_rfm`; the reduction is
    solved exactly (scalar bottleneck and, for ``n >= 2``, the chain of the
    remaining sites through the cascade solver).  Both are compared on
    their entrained orbits.
    """
    bparams = params.bottleneck()
    full = simulate_rfm(params, signal, np.zeros(params.n), n_periods=n_periods, step=step)
    orbit = periodic_fixed_point(signal, bparams)
    switch_x1 = np.asarray(orbit.segment_endpoints)
    if params.n == 1:
        avg_reduced = np.array([orbit.average_occupancy])
        out_reduced = bparams.lam * orbit.average_occupancy
        switch_reduced = switch_x1[:, None]
    else:
        chain = chain_system(params.rates[2:])
        casc = cascade_periodic_orbit(signal, bparams, chain, samples_per_segment=1)
        avg_reduced = np.concatenate(([orbit.average_occupancy], casc.average_state))
        out_reduced = casc.trajectory_average_output
        # with one sample per segment the cascade samples are the switch instants
        switch_reduced = np.column_stack((switch_x1, casc.z))
    rate_ratio = min(params.rates[1:]) / max(params.inflow(lvl) for lvl, _ in signal.segments)
    return ReductionReport(
        rate_ratio=rate_ratio,
        average_output_full=full.average_output,
        average_output_reduced=float(out_reduced),
        site_average_full=full.average_occupancy,
        site_average_reduced=avg_reduced,
        switch_discrepancy=np.max(np.abs(full.switch_states - switch_reduced), axis=0),
    )


def write_trajectory_csv(path, times, states) -> None:
    """Write ``t, x1, ..., xn`` with a header row and LF line endings."""
    states = np.atleast_2d(np.asarray(states))
    if states.shape[0] != len(times):
        states = states.T
    n = states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)])
        for t, row in zip(times, states):
            w.writerow([f"{t:.15g}"] + [f"{v:.15g}" for v in row])
