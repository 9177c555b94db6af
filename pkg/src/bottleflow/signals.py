"""T-periodic piecewise-constant switching schedules.

A schedule is an ordered list of ``(level, duration)`` arcs.  Storing
durations instead of switch instants keeps the period an exact sum and
matches the arc-by-arc structure of the exact solver.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.optimize import brentq

from .core import ArcLevel, BottleneckParams, PeriodicOrbit, periodic_fixed_point, scalar_step_exact
from .exceptions import DomainError

__all__ = [
    "SwitchingSignal",
    "AdmissibilityReport",
    "build_signal",
    "constant_signal",
    "check_admissible",
    "random_signal",
    "fast_switching_family",
    "excursion_signal",
    "load_signal",
    "save_signal",
]

MEAN_RTOL = 1e-12
ZERO_ARC_ATOL = 1e-9


@dataclass(frozen=True)
class SwitchingSignal:
    segments: tuple[tuple[ArcLevel, float], ...]
    period: float

    def measure(self, level: ArcLevel) -> float:
        return math.fsum(dt for lvl, dt in self.segments if lvl is level)

    @property
    def measures(self) -> dict[ArcLevel, float]:
        return {lvl: self.measure(lvl) for lvl in ArcLevel}

    @property
    def switch_times(self) -> np.ndarray:
        """Start time of every arc followed by ``period``."""
        return np.concatenate(([0.0], np.cumsum([dt for _, dt in self.segments])))

    @property
    def is_constant(self) -> bool:
        return all(lvl is ArcLevel.ZERO for lvl, _ in self.segments)

    def mean_inflow(self, params: BottleneckParams) -> float:
        return math.fsum(params.inflow(lvl) * dt for lvl, dt in self.segments) / self.period

    def rotate(self, k: int) -> "SwitchingSignal":
        """Shift the phase by ``k`` arcs."""
        k %= len(self.segments)
        return build_signal(self.segments[k:] + self.segments[:k])

    def inflow_at(self, t, params: BottleneckParams):
        t = np.mod(np.asarray(t, dtype=float), self.period)
        idx = np.searchsorted(self.switch_times[1:], t, side="right")
        idx = np.minimum(idx, len(self.segments) - 1)
        values = np.array([params.inflow(lvl) for lvl, _ in self.segments])
        return values[idx]

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "segments": [{"level": lvl.label, "duration": dt} for lvl, dt in self.segments],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SwitchingSignal":
        try:
            segs = [(s["level"], s["duration"]) for s in d["segments"]]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed signal document: {exc}") from None
        signal = build_signal(segs)
        if "period" in d and not math.isclose(d["period"], signal.period, rel_tol=1e-12):
            raise DomainError(
                f"declared period {d['period']} does not match durations ({signal.period})"
            )
        return signal


def build_signal(segments: Iterable) -> SwitchingSignal:
    """Canonicalize ``(level, duration)`` pairs, merging adjacent equal levels.

    Raises
    ------
    DomainError
        If the list is empty or any duration is not strictly positive.
    """
    merged: list[list] = []
    for level, dt in segments:
        level = ArcLevel.parse(level)
        dt = float(dt)
        if not (dt > 0 and math.isfinite(dt)):
            raise DomainError(f"arc durations must be positive and finite, got {dt}")
        if merged and merged[-1][0] is level:
            merged[-1][1] += dt
        else:
            merged.append([level, dt])
    if not merged:
        raise DomainError("a switching signal needs at least one arc")
    segs = tuple((lvl, dt) for lvl, dt in merged)
    return SwitchingSignal(segs, math.fsum(dt for _, dt in segs))


def constant_signal(T: float) -> SwitchingSignal:
    return build_signal([(ArcLevel.ZERO, T)])


@dataclass(frozen=True)
class AdmissibilityReport:
    mean_ok: bool
    zero_arc_ok: bool
    diagnostics: tuple[str, ...] = field(default=())

    @property
    def member(self) -> bool:
        return self.mean_ok and self.zero_arc_ok

    @property
    def verdict(self) -> str:
        return "member" if self.member else "not member"


def check_admissible(
    signal: SwitchingSignal, params: BottleneckParams, orbit: PeriodicOrbit | None = None
) -> AdmissibilityReport:
    """Check membership of the admissible set for ``params``.

    Two conditions: the inflow averages to ``sigma_bar`` (equivalently the
    Plus and Minus arcs have equal total length), and the entrained
    occupancy sits at ``sigma_bar / (sigma_bar + lam)`` at the start of every
    Zero arc.  Violations are reported, never raised.
    """
    diagnostics = []
    T = signal.period
    imbalance = signal.measure(ArcLevel.PLUS) - signal.measure(ArcLevel.MINUS)
    mean_ok = params.epsilon == 0 or abs(imbalance) <= MEAN_RTOL * T
    if not mean_ok:
        diagnostics.append(
            f"mean inflow {signal.mean_inflow(params):.15g} != sigma_bar {params.sigma_bar:.15g}"
            f" (time on Plus minus time on Minus = {imbalance:.3g})"
        )

    zero_arc_ok = True
    if any(lvl is ArcLevel.ZERO for lvl, _ in signal.segments):
        if orbit is None:
            orbit = periodic_fixed_point(signal, params)
        target = params.fixed_point
        for k, (lvl, _) in enumerate(signal.segments):
            if lvl is not ArcLevel.ZERO:
                continue
            x = orbit.segment_endpoints[k]
            if abs(x - target) > ZERO_ARC_ATOL:
                zero_arc_ok = False
                diagnostics.append(
                    f"zero arc {k}: occupancy {x:.12g} != fixed point {target:.12g}"
                )
    return AdmissibilityReport(mean_ok, zero_arc_ok, tuple(diagnostics))


def _balanced_partition(rng: np.random.Generator, n: int, total: float) -> np.ndarray:
    # normalized exponential spacings: a uniform point on the simplex
    w = rng.exponential(size=n)
    parts = total * w / w.sum()
    parts[-1] = total - math.fsum(parts[:-1])
    return parts


def random_signal(params: BottleneckParams, T: float, n_pairs: int, seed) -> SwitchingSignal:
    """Random alternating Plus/Minus schedule with ``T / 2`` total time on each level.

    Plus and Minus durations are independent uniform points of the simplex
    scaled to ``T / 2`` each, so the mean constraint holds by construction.
    The result depends only on ``seed``.
    """
    if n_pairs < 1:
        raise DomainError("n_pairs must be >= 1")
    if not T > 0:
        raise DomainError("T must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    plus = _balanced_partition(rng, n_pairs, 0.5 * T)
    minus = _balanced_partition(rng, n_pairs, 0.5 * T)
    if np.any(plus <= 0) or np.any(minus <= 0):
        # cancellation in the last part; astronomically rare
        return random_signal(params, T, n_pairs, rng)
    segs = []
    for p, m in zip(plus, minus):
        segs += [(ArcLevel.PLUS, p), (ArcLevel.MINUS, m)]
    return build_signal(segs)


def fast_switching_family(params: BottleneckParams, T: float, N: int) -> SwitchingSignal:
    """``N`` equal Plus/Minus pairs of length ``T / (2N)`` each."""
    if N < 1:
        raise DomainError("N must be >= 1")
    if not T > 0:
        raise DomainError("T must be positive")
    h = T / (2 * N)
    segs = []
    for _ in range(N):
        segs += [(ArcLevel.PLUS, h), (ArcLevel.MINUS, h)]
    return build_signal(segs)


def _return_time(params: BottleneckParams, level: ArcLevel, x_from: float, x_to: float) -> float:
    a, b = params.rates(level)
    c = a / b
    return math.log((x_from - c) / (x_to - c)) / b


def excursion_signal(params: BottleneckParams, t_up: float, rest: float) -> SwitchingSignal:
    """Admissible schedule that leaves and re-enters the fixed point.

    Starting from ``sigma_bar / (sigma_bar + lam)`` the schedule runs a Plus
    arc of length ``t_up`` and the Minus arc that brings the occupancy back,
    then a Minus-first excursion sized so that Plus and Minus time balance,
    and finally a Zero arc of length ``rest``.  Both excursions close at the
    fixed point, so the Zero arc satisfies the admissibility condition.
    """
    if params.epsilon <= 0:
        raise DomainError("excursions need epsilon > 0")
    if not (t_up > 0 and rest > 0):
        raise DomainError("t_up and rest must be positive")
    x_star = params.fixed_point
    P, M = ArcLevel.PLUS, ArcLevel.MINUS

    def excursion(first, second, t_first):
        x = scalar_step_exact(*params.rates(first), x_star, t_first)
        return t_first, _return_time(params, second, x, x_star)

    t1, t2 = excursion(P, M, t_up)
    first_excess = t1 - t2

    def imbalance(t3):
        _, t4 = excursion(M, P, t3)
        return first_excess + (t4 - t3)

    # Plus-first excursions spend longer going up than coming down; Minus-first
    # ones the reverse, with a deficit growing without bound in t3
    if not first_excess > 0:
        raise DomainError("Plus-first excursion has no excess Plus time to balance")
    hi = t_up
    while imbalance(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise DomainError("could not balance the excursions")
    t3 = brentq(imbalance, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    t3, t4 = excursion(M, P, t3)
    return build_signal([(P, t1), (M, t2), (M, t3), (P, t4), (ArcLevel.ZERO, rest)])


def load_signal(path) -> SwitchingSignal:
    with open(path) as fh:
        return SwitchingSignal.from_dict(json.load(fh))


def save_signal(signal: SwitchingSignal, path) -> None:
    Path(path).write_text(json.dumps(signal.to_dict(), indent=2) + "\n")
