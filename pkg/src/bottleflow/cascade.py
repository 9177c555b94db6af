"""Positive linear system ``z' = A z + b w, y = c.z`` driven by the bottleneck outflow.

Each arc of the cascade is an affine ODE in ``(z, x)``; appending a constant
coordinate makes it linear, so a single matrix exponential propagates a whole
arc exactly.  The periodic state follows from one linear solve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .core import BottleneckParams, periodic_fixed_point
from .exceptions import DomainError, NumericalError

__all__ = [
    "PositiveLinearSystem",
    "SystemReport",
    "CascadeOrbit",
    "AverageResponseCheck",
    "validate_positive_system",
    "dc_gain",
    "chain_system",
    "random_positive_system",
    "cascade_periodic_orbit",
    "verify_average_response",
    "load_system",
    "save_system",
]

HURWITZ_MARGIN = 1e-10


@dataclass(frozen=True)
class SystemReport:
    metzler: bool
    hurwitz: bool
    b_nonnegative: bool
    c_nonnegative: bool
    spectral_abscissa: float
    diagnostics: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return self.metzler and self.hurwitz and self.b_nonnegative and self.c_nonnegative


def _as_arrays(A, b, c):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    n = A.shape[0]
    if A.shape != (n, n):
        raise DomainError(f"A must be square, got shape {A.shape}")
    if b.shape != (n,) or c.shape != (n,):
        raise DomainError(f"b and c must have length {n}, got {b.shape[0]} and {c.shape[0]}")
    return A, b, c


def validate_positive_system(A, b, c) -> SystemReport:
    """Check the Metzler, Hurwitz and sign conditions.

    The Metzler test is an exact sign test on the off-diagonal entries; the
    Hurwitz test requires a spectral abscissa below ``-1e-10``.
    """
    A, b, c = _as_arrays(A, b, c)
    diag = []
    off = A[~np.eye(A.shape[0], dtype=bool)]
    metzler = bool(np.all(off >= 0))
    if not metzler:
        diag.append(f"A is not Metzler: smallest off-diagonal entry {off.min():.6g}")
    abscissa = float(np.max(np.linalg.eigvals(A).real))
    hurwitz = abscissa < -HURWITZ_MARGIN
    if not hurwitz:
        diag.append(f"A is not Hurwitz: spectral abscissa {abscissa:.6g}")
    b_ok = bool(np.all(b >= 0))
    c_ok = bool(np.all(c >= 0))
    if not b_ok:
        diag.append("b has negative entries")
    if not c_ok:
        diag.append("c has negative entries")
    return SystemReport(metzler, hurwitz, b_ok, c_ok, abscissa, tuple(diag))


@dataclass(frozen=True, eq=False)
class PositiveLinearSystem:
    """Hurwitz Metzler system with nonnegative input and output vectors.

    ``require_positive=False`` keeps only the Hurwitz requirement, which is
    all the averaged-output identity needs.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    require_positive: bool = True

    def __post_init__(self):
        A, b, c = _as_arrays(self.A, self.b, self.c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        report = validate_positive_system(A, b, c)
        failed = not report.hurwitz if not self.require_positive else not report.valid
        if failed:
            raise DomainError("invalid linear system: " + "; ".join(report.diagnostics))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "c": self.c.tolist()}

    @classmethod
    def from_dict(cls, d: dict, require_positive: bool = True) -> "PositiveLinearSystem":
        try:
            return cls(d["A"], d["b"], d["c"], require_positive=require_positive)
        except KeyError as exc:
            raise DomainError(f"missing system field {exc}") from None


def dc_gain(sys: PositiveLinearSystem) -> float:
    """``H(0) = -c^T A^{-1} b``."""
    try:
        return float(-sys.c @ np.linalg.solve(sys.A, sys.b))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"A is singular: {exc}") from None


def chain_system(rates) -> PositiveLinearSystem:
    """Linear chain ``z_i' = r_{i-1} z_{i-1} - r_i z_i`` fed at the first site.

    ``rates`` are the exit rates of the linear sites; the input enters the
    first site with unit gain and the output is ``rates[-1] * z_last``.
    """
    rates = np.asarray(rates, dtype=float)
    if rates.ndim != 1 or rates.size == 0 or np.any(rates <= 0):
        raise DomainError("chain rates must be a nonempty vector of positive numbers")
    m = rates.size
    A = np.diag(-rates) + np.diag(rates[:-1], k=-1)
    b = np.zeros(m)
    b[0] = 1.0
    c = np.zeros(m)
    c[-1] = rates[-1]
    return PositiveLinearSystem(A, b, c)


def random_positive_system(n: int, rng, density: float = 0.6) -> PositiveLinearSystem:
    """Random Hurwitz Metzler system with strictly negative column sums."""
    rng = np.random.default_rng(rng)
    off = rng.uniform(0.0, 1.0, size=(n, n)) * (rng.uniform(size=(n, n)) < density)
    np.fill_diagonal(off, 0.0)
    A = off - np.diag(off.sum(axis=0) + rng.uniform(0.1, 2.0, size=n))
    b = rng.uniform(0.0, 1.0, size=n)
    c = rng.uniform(0.0, 1.0, size=n)
    b[rng.integers(n)] += 0.1
    c[rng.integers(n)] += 0.1
    return PositiveLinearSystem(A, b, c)


@dataclass(frozen=True, eq=False)
class CascadeOrbit:
    """Entrained orbit of bottleneck plus linear system.

    ``average_output`` uses the algebraic route ``H(0) * average_input``;
    ``trajectory_average_output`` integrates ``y`` along the propagated
    orbit and is kept as an independent cross-check.
    """

    z0: np.ndarray
    x0: float
    average_input: float
    average_output: float
    trajectory_average_output: float
    dc_gain: float
    bound: float
    period: float
    average_state: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    @property
    def margin(self) -> float:
        return self.bound - self.average_output


def _arc_generator(sys: PositiveLinearSystem, lam: float, a: float, beta: float) -> np.ndarray:
    # state: [z (n), x, 1, int z (n), int x]
    n = sys.n
    G = np.zeros((2 * n + 3, 2 * n + 3))
    G[:n, :n] = sys.A
    G[:n, n] = lam * sys.b
    G[n, n] = -beta
    G[n, n + 1] = a
    G[n + 2:2 * n + 2, :n] = np.eye(n)
    G[2 * n + 2, n] = 1.0
    return G


def cascade_periodic_orbit(
    signal, params: BottleneckParams, sys: PositiveLinearSystem, samples_per_segment: int = 20
) -> CascadeOrbit:
    """Periodic orbit of the cascade for a switching signal.

    The bottleneck occupancy ``x0`` comes from the exact scalar solve; the
    linear part solves ``(I - exp(A T)) z0 = offset``.
    """
    if samples_per_segment < 1:
        raise DomainError("samples_per_segment must be >= 1")
    orbit = periodic_fixed_point(signal, params)
    n = sys.n
    steps = []
    for level, dt in signal.segments:
        a, beta = params.rates(level)
        G = _arc_generator(sys, params.lam, a, beta)
        steps.append((expm(G * dt), expm(G * (dt / samples_per_segment)), dt))

    # propagate z0 = 0 and z0 = e_j together; x0 from the scalar solve
    S = np.zeros((2 * n + 3, n + 1))
    S[n, 0] = orbit.x0
    S[n + 1, 0] = 1.0
    S[:n, 1:] = np.eye(n)
    for full, _, _ in steps:
        S = full @ S
    phi = S[:n, 1:]
    offset = S[:n, 0]
    try:
        z0 = np.linalg.solve(np.eye(n) - phi, offset)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"periodic boundary solve failed: {exc}") from None
    if not np.all(np.isfinite(z0)):
        raise NumericalError("periodic boundary solve produced non-finite values")

    state = np.concatenate((z0, [orbit.x0, 1.0], np.zeros(n + 1)))
    times, xs, zs = [0.0], [orbit.x0], [z0.copy()]
    t = 0.0
    for full, sub, dt in steps:
        s = state
        for k in range(1, samples_per_segment + 1):
            s = sub @ s
            times.append(t + dt * k / samples_per_segment)
            xs.append(s[n])
            zs.append(s[:n].copy())
        state = full @ state
        t += dt
    T = signal.period
    traj_avg = float(sys.c @ state[n + 2:2 * n + 2]) / T

    h0 = dc_gain(sys)
    avg_in = params.lam * orbit.average_occupancy
    return CascadeOrbit(
        z0=z0,
        x0=orbit.x0,
        average_input=avg_in,
        average_output=h0 * avg_in,
        trajectory_average_output=traj_avg,
        dc_gain=h0,
        bound=params.constant_outflow * h0,
        period=T,
        average_state=state[n + 2:2 * n + 2] / T,
        times=np.asarray(times),
        x=np.asarray(xs),
        z=np.asarray(zs),
        y=np.asarray(zs) @ sys.c,
    )


@dataclass(frozen=True)
class AverageResponseCheck:
    average_output: float
    dc_gain_times_average_input: float
    residual: float

    @property
    def relative_residual(self) -> float:
        return abs(self.residual) / max(abs(self.average_output), np.finfo(float).tiny)


def verify_average_response(sys: PositiveLinearSystem, times, values) -> AverageResponseCheck:
    """Compare the averaged periodic response with ``H(0)`` times the averaged input.

    The input is the piecewise-linear interpolant of ``values`` sampled at
    ``times`` (from 0 to the period ``T = times[-1]``).  The periodic
    response to it is computed exactly by block exponentials, its average
    from the propagated integral of ``z``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.ndim != 1 or times.shape != values.shape or times.size < 2:
        raise DomainError("times and values must be 1-d arrays of equal length >= 2")
    h = np.diff(times)
    if times[0] != 0.0 or np.any(h <= 0):
        raise DomainError("times must start at 0 and increase strictly")
    if not np.all(np.isfinite(values)):
        raise DomainError("input samples must be finite")
    n = sys.n
    # state: [z (n), int z (n), u, u']
    G = np.zeros((2 * n + 2, 2 * n + 2))
    G[:n, :n] = sys.A
    G[:n, 2 * n] = sys.b
    G[n:2 * n, :n] = np.eye(n)
    G[2 * n, 2 * n + 1] = 1.0
    cache: dict[float, np.ndarray] = {}

    S = np.zeros((2 * n + 2, n + 1))
    S[:n, 1:] = np.eye(n)
    for k, hk in enumerate(h):
        E = cache.get(hk)
        if E is None:
            E = cache[hk] = expm(G * hk)
        S[2 * n:, :] = 0.0
        S[2 * n, 0] = values[k]
        S[2 * n + 1, 0] = (values[k + 1] - values[k]) / hk
        S = E @ S
    phi = S[:n, 1:]
    z0 = np.linalg.solve(np.eye(n) - phi, S[:n, 0])
    int_z = S[n:2 * n, 0] + S[n:2 * n, 1:] @ z0

    T = times[-1]
    ave_y = float(sys.c @ int_z) / T
    ave_w = float(np.sum(0.5 * (values[1:] + values[:-1]) * h)) / T
    rhs = dc_gain(sys) * ave_w
    return AverageResponseCheck(ave_y, rhs, ave_y - rhs)


def load_system(path, require_positive: bool = True) -> PositiveLinearSystem:
    with open(path) as fh:
        return PositiveLinearSystem.from_dict(json.load(fh), require_positive=require_positive)


def save_system(sys: PositiveLinearSystem, path) -> None:
    Path(path).write_text(json.dumps(sys.to_dict(), indent=2) + "\n")
