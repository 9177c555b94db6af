"""Derivative-free search for the best balanced Plus/Minus schedule.

Schedules with ``n_pairs`` alternations are parametrized by two positive
weight vectors, normalized separately so that the Plus and Minus arcs each
fill exactly half the period.  Every candidate is therefore admissible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ArcLevel, BottleneckParams, periodic_gain
from .exceptions import DomainError
from .signals import SwitchingSignal, build_signal

__all__ = ["ScheduleTemplate", "SearchResult", "search_schedule"]


@dataclass(frozen=True)
class ScheduleTemplate:
    period: float
    plus: tuple[float, ...]
    minus: tuple[float, ...]

    @classmethod
    def from_weights(cls, T: float, log_plus, log_minus) -> "ScheduleTemplate":
        def scale(logw):
            w = np.exp(np.asarray(logw) - np.max(logw))
            parts = 0.5 * T * w / w.sum()
            parts[-1] = 0.5 * T - math.fsum(parts[:-1])
            return tuple(float(p) for p in parts)

        return cls(T, scale(log_plus), scale(log_minus))

    @property
    def n_pairs(self) -> int:
        return len(self.plus)

    def to_signal(self) -> SwitchingSignal:
        segs = []
        for p, m in zip(self.plus, self.minus):
            segs += [(ArcLevel.PLUS, p), (ArcLevel.MINUS, m)]
        return build_signal(segs)


@dataclass(frozen=True, eq=False)
class SearchResult:
    best_signal: SwitchingSignal
    best_gain: float
    trace: np.ndarray = field(repr=False)  # best gain after each evaluation
    evaluations: int
    restarts: int


def search_schedule(
    params: BottleneckParams,
    T: float,
    n_pairs: int,
    budget: int,
    seed=0,
    initial_step: float = 0.5,
    min_step: float = 1e-3,
) -> SearchResult:
    """Maximize the periodic gain over balanced schedules with ``n_pairs`` alternations.

    Coordinate descent on the log-weights of the arc durations: each
    coordinate is moved by ``+-step``, improvements are kept, and the step is
    halved after a sweep without improvement.  When the step falls below
    ``min_step`` the search restarts from a random point.  The first
    evaluation is always the equal-duration schedule.

    Returns
    -------
    SearchResult
        ``trace[i]`` is the best gain after ``i + 1`` evaluations, so it is
        nondecreasing.  Ties between restarts keep the earlier one.
    """
    if budget < 1:
        raise DomainError("budget must be >= 1")
    if n_pairs < 1:
        raise DomainError("n_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    dim = 2 * n_pairs
    trace: list[float] = []
    best = (-math.inf, None)

    def evaluate(logw):
        nonlocal best
        signal = ScheduleTemplate.from_weights(T, logw[:n_pairs], logw[n_pairs:]).to_signal()
        J = periodic_gain(signal, params)
        if J > best[0]:
            best = (J, signal)
        trace.append(best[0])
        return J

    restarts = 0
    point = np.zeros(dim)
    value = evaluate(point)
    # with one pair the normalization leaves no free parameter
    while n_pairs > 1 and len(trace) < budget:
        step = initial_step
        while step >= min_step and len(trace) < budget:
            improved = False
            for i in range(dim):
                for sign in (1.0, -1.0):
                    if len(trace) >= budget:
                        break
                    trial = point.copy()
                    trial[i] += sign * step
                    v = evaluate(trial)
                    if v > value:
                        point, value, improved = trial, v, True
                        break
            if not improved:
                step *= 0.5
        if len(trace) >= budget:
            break
        restarts += 1
        point = rng.normal(scale=1.0, size=dim)
        value = evaluate(point)

    return SearchResult(best[1], best[0], np.asarray(trace), len(trace), restarts)
