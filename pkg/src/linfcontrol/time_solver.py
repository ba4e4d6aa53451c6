"""Minimal time to the origin under a sup-norm bound ``M``.

``T -> N(T, y0)`` is continuous and strictly decreasing on the range where
it exceeds ``N(inf, y0)``, so ``T(M, y0)`` is the root of ``N(T, y0) = M``
and is found by bisection. The control is the minimal-norm control at that
horizon; extended by zero afterwards it keeps the state at the origin.
"""

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

from .lti import ControlSignal, LtiSystem, _vector, propagate
from .norm_solver import (
    NormLimit,
    NormOptions,
    NormProblem,
    NotConverged,
    Status,
    _fmt,
    check_bangbang,
    minimal_norm,
    norm_at_infinity,
)

__all__ = [
    "TimeStatus",
    "TimeProblem",
    "TimeSolution",
    "minimal_time",
    "roundtrip_check",
    "time_sweep",
    "write_time_csv",
]


class TimeStatus(str, enum.Enum):
    SOLVED = "Solved"
    NO_ADMISSIBLE = "NoAdmissibleControl"


@dataclass(frozen=True, eq=False)
class TimeProblem:
    sys: LtiSystem
    y0: np.ndarray
    M: float

    def __post_init__(self):
        y0 = _vector(self.y0, self.sys.n)
        if not np.any(y0):
            raise ValueError("y0 must be nonzero")
        if not (math.isfinite(self.M) and self.M > 0):
            raise ValueError(f"control bound must be finite and positive, got {self.M}")
        y0.setflags(write=False)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "M", float(self.M))


@dataclass(frozen=True, eq=False)
class TimeSolution:
    status: TimeStatus
    value: float
    control: ControlSignal | None
    residual: float = math.nan
    limit: NormLimit | None = None
    bisections: int = 0
    bound: float = math.nan

    @property
    def bb_fraction(self):
        if self.status is not TimeStatus.SOLVED:
            return math.nan
        return check_bangbang(self.control, self.bound, 1e-3).fraction_on_boundary


def _no_control(limit):
    return TimeSolution(TimeStatus.NO_ADMISSIBLE, math.inf, None, limit=limit)


def minimal_time(prob, opts=None, rtol=1e-6, max_doublings=60, limit=None):
    """Solve the minimal-time problem for ``prob``.

    ``NoAdmissibleControl`` is returned when ``y0`` is unreachable or
    ``M <= N(inf, y0)``; an unconverged limit estimate never blocks a solve
    and the bracket search decides instead. ``limit`` may pass a
    precomputed :func:`norm_at_infinity` result.

    Raises
    ------
    NotConverged
        If no horizon with ``N(T, y0) < M`` is found after ``max_doublings``.
    """
    opts = opts or NormOptions()
    sys, y0, M = prob.sys, prob.y0, prob.M
    if limit is None:
        limit = norm_at_infinity(sys, y0, opts)
    if limit.status is Status.INFEASIBLE:
        return _no_control(limit)
    if limit.converged and M <= limit.value * (1 + 1e-9):
        return _no_control(limit)

    def N(T):
        sol = minimal_norm(NormProblem(sys, y0, T), opts)
        return sol.value, sol

    T_hi, (n_hi, sol_hi) = 1.0, N(1.0)
    for _ in range(max_doublings):
        if n_hi < M:
            break
        T_hi *= 2.0
        n_hi, sol_hi = N(T_hi)
    else:
        raise NotConverged(f"N(T) stayed above M={M} up to T={T_hi}", best_lower=T_hi)
    # after a doubling, T_hi / 2 is already known to satisfy N > M
    T_lo = T_hi / 2.0
    n_lo = math.inf if T_hi > 1.0 else N(T_lo)[0]
    while not n_lo > M:
        T_lo /= 2.0
        n_lo = N(T_lo)[0]
        if T_lo < 1e-12:
            raise NotConverged("could not find a horizon with N(T) > M", best_lower=T_lo)
    steps = 0
    while T_hi - T_lo > rtol * T_hi:
        mid = 0.5 * (T_lo + T_hi)
        if N(mid)[0] > M:
            T_lo = mid
        else:
            T_hi = mid
        steps += 1
    T = 0.5 * (T_lo + T_hi)
    sol = N(T)[1]
    residual = float(np.linalg.norm(propagate(sys, y0, sol.control)))
    return TimeSolution(TimeStatus.SOLVED, T, sol.control, residual, limit, steps, M)


def roundtrip_check(sys, y0, T, opts=None, rtol=1e-6):
    """``|T(N(T, y0), y0) - T| / T``."""
    sol = minimal_norm(NormProblem(sys, y0, T), opts)
    if sol.status is not Status.SOLVED:
        raise ValueError(f"roundtrip needs a solvable horizon, got {sol.status.value}")
    back = minimal_time(TimeProblem(sys, y0, sol.value), opts, rtol=rtol)
    if back.status is not TimeStatus.SOLVED:
        raise ValueError("T lies outside the strictly decreasing range of N")
    return abs(back.value - T) / T


def time_sweep(sys, y0, M_values, opts=None, rtol=1e-6):
    """Minimal-time solutions for several bounds, sharing one limit estimate."""
    opts = opts or NormOptions()
    limit = norm_at_infinity(sys, y0, opts)
    return [minimal_time(TimeProblem(sys, y0, M), opts, rtol, limit=limit) for M in M_values]


TIME_CSV_FIELDS = ("M", "T", "status", "bb_fraction")


def write_time_csv(path_or_file, M_values, solutions):
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIME_CSV_FIELDS)
        for M, sol in zip(M_values, solutions):
            w.writerow([_fmt(float(M)), _fmt(float(sol.value)), sol.status.value, _fmt(float(sol.bb_fraction))])
    finally:
        if own:
            fh.close()
