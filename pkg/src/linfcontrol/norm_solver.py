"""Minimal sup-norm null controls at a fixed horizon.

The minimal norm ``N(T, y0)`` is the smallest ``sup_t |v(t)|`` over controls
that bring ``y0`` to the origin exactly at time ``T``. It is computed from
the dual side,

    N(T, y0) = sup_z <e^{AT} y0, z> / int_0^T |B^T e^{A^T (T-t)} z| dt,

on a grid of ``K`` panels, and the optimal control is read off the
maximizing dual vector: on each panel it points against the adjoint kernel
with magnitude ``N``.
"""

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._panel import PanelProblem
from .lti import ControlSignal, LtiSystem, TimeGrid, _vector, expm, kernel_at, propagate

__all__ = [
    "Status",
    "NotConverged",
    "NormOptions",
    "NormProblem",
    "DualCertificate",
    "NormSolution",
    "BangBangReport",
    "NormLimit",
    "CostEstimate",
    "gauge",
    "adaptive_gauge",
    "minimal_norm",
    "synthesize_control",
    "check_bangbang",
    "norm_at_infinity",
    "null_control_cost",
    "norm_sweep",
    "write_norm_csv",
]


class Status(str, enum.Enum):
    SOLVED = "Solved"
    INFEASIBLE = "Infeasible"
    ZERO_NORM = "ZeroNorm"


class NotConverged(RuntimeError):
    """The dual/primal bracket did not close; ``best_lower`` is still valid."""

    def __init__(self, message, best_lower=None):
        super().__init__(message)
        self.best_lower = best_lower


@dataclass(frozen=True)
class NormOptions:
    """Numerical knobs shared by the norm and time solvers.

    ``feas_tol``, ``bb_tol`` and ``gap_tol`` are relative; a solve is
    accepted when ``upper - lower <= accept_gap * (1 + lower)``. ``max_panels``
    caps the horizon-dependent refinement used on long horizons.
    """

    K: int = 512
    feas_tol: float = 1e-6
    bb_tol: float = 1e-3
    gap_tol: float = 1e-9
    accept_gap: float = 1e-4
    reach_tol: float = 1e-9
    member_tol: float = 1e-8
    zero_tol: float = 1e-14
    gauge_rtol: float = 1e-8
    gauge_max_panels: int = 2**16
    max_newton: int = 60
    max_panels: int = 2**17

    def ladder_panels(self, k):
        """Panel count at rung ``k`` of a doubling horizon ladder.

        Doubling the panels with the horizon keeps the step fixed, so each
        grid contains the previous one and the discrete values stay exactly
        monotone until the cap is reached.
        """
        return int(min(self.max_panels, self.K * 2**k))


@dataclass(frozen=True, eq=False)
class NormProblem:
    sys: LtiSystem
    y0: np.ndarray
    T: float

    def __post_init__(self):
        y0 = _vector(self.y0, self.sys.n)
        if not np.any(y0):
            raise ValueError("y0 must be nonzero")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"horizon must be finite and positive, got {self.T}")
        y0.setflags(write=False)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "T", float(self.T))


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """Dual vector ``z`` with its L1 kernel gauge and the resulting ratio.

    ``ratio`` is a lower bound for ``N(T, y0)`` up to the quadrature error
    of ``gauge``.
    """

    z: np.ndarray
    gauge: float
    ratio: float


@dataclass(frozen=True, eq=False)
class NormSolution:
    status: Status
    value: float
    certificate: DualCertificate | None
    control: ControlSignal | None
    residual: float
    upper: float = math.nan
    flagged_panels: tuple = ()
    newton_steps: int = 0

    @property
    def bb_fraction(self):
        if self.status is not Status.SOLVED:
            return math.nan
        return check_bangbang(self.control, self.value, 1e-3).fraction_on_boundary


@dataclass(frozen=True)
class BangBangReport:
    fraction_on_boundary: float
    max_dev: float


@dataclass(frozen=True)
class NormLimit:
    """Estimate of ``lim_{T->inf} N(T, y0)`` from a doubling horizon ladder."""

    value: float
    converged: bool
    ladder: tuple = ()
    status: Status = Status.SOLVED
    zero_limit: bool = False


@dataclass(frozen=True)
class CostEstimate:
    """Lower estimate of ``sup_{|y0|=1, y0 reachable} N(T, y0)``."""

    value: float
    maximizer: np.ndarray = field(repr=False)
    is_lower_bound: bool = True


def gauge(prob, z, quad):
    """Midpoint-rule value of ``int_0^T |B^T e^{A^T(T-t)} z| dt`` on ``quad``.

    ``z`` may also be an ``(n, d)`` array of dual vectors; the result is
    then an array of ``d`` gauges.
    """
    if abs(quad.T - prob.T) > 1e-12 * prob.T:
        raise ValueError("quadrature grid must span the problem horizon")
    z = np.asarray(z, dtype=float)
    f = kernel_at(prob.sys, quad, z)
    g = np.linalg.norm(f, axis=1).sum(axis=0) * quad.dt
    return float(g) if z.ndim == 1 else g


def adaptive_gauge(prob, z, K=512, rtol=1e-8, max_panels=2**16):
    """:func:`gauge` with the panel count doubled until it settles to ``rtol``."""
    prev = gauge(prob, z, TimeGrid(prob.T, K))
    while K < max_panels:
        K *= 2
        cur = gauge(prob, z, TimeGrid(prob.T, K))
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return prev


def _infeasible(prob):
    return NormSolution(Status.INFEASIBLE, math.inf, None, None, math.nan)


def _zero_norm(prob, K):
    grid = TimeGrid(prob.T, K)
    u = ControlSignal.zeros(grid, prob.sys.m)
    res = float(np.linalg.norm(propagate(prob.sys, prob.y0, u)))
    return NormSolution(Status.ZERO_NORM, 0.0, None, u, res, upper=0.0)


def _exp_is_negligible(prob, tol):
    sys = prob.sys
    if sys.spectral_abscissa * prob.T > 0:
        return False
    with np.errstate(under="ignore"):
        end = expm(sys.A, prob.T) @ prob.y0
    return float(np.linalg.norm(end)) <= tol * float(np.linalg.norm(prob.y0))


def minimal_norm(prob, opts=None, K=None, _panel=None):
    """Solve the minimal-norm problem for ``prob``.

    Returns a :class:`NormSolution` whose status is ``Infeasible`` when
    ``y0`` lies outside the reachable subspace (no control works at any
    horizon), ``ZeroNorm`` when the free flow already lands on the origin
    numerically, and ``Solved`` otherwise. In the solved case ``value`` is
    the dual ratio of the discretized problem and ``control`` a piecewise
    constant control that reaches the origin with sup-norm ``upper``
    (``upper - value`` is the remaining duality gap).

    Raises
    ------
    NotConverged
        If the duality gap stays above ``opts.accept_gap * (1 + value)``.
    """
    opts = opts or NormOptions()
    K = K or opts.K
    pp = _panel or PanelProblem(prob.sys, prob.T, K, opts.reach_tol)
    if not pp.reach.contains(prob.y0, opts.member_tol):
        return _infeasible(prob)
    if _exp_is_negligible(prob, opts.zero_tol):
        return _zero_norm(prob, K)
    out = pp.solve(prob.y0, gap_tol=opts.gap_tol, max_newton=opts.max_newton)
    if not out["upper"] - out["lower"] <= opts.accept_gap * (1.0 + out["lower"]):
        raise NotConverged(
            f"duality gap {out['gap']:.2e} after {out['newton_steps']} Newton steps",
            best_lower=out["lower"],
        )
    grid = TimeGrid(prob.T, K)
    control = ControlSignal(grid, out["controls"])
    residual = float(np.linalg.norm(propagate(prob.sys, prob.y0, control)))
    z = pp.Zmap @ out["w"]
    g = adaptive_gauge(prob, z, K, opts.gauge_rtol, opts.gauge_max_panels)
    # <e^{AT} y0, z> equals the panel dual value by construction of w.
    cert = DualCertificate(z=z, gauge=g, ratio=out["lower"] / g if g > 0 else math.nan)
    f = np.linalg.norm(kernel_at(prob.sys, grid, z), axis=1)
    flagged = tuple(int(k) for k in np.flatnonzero(f <= 1e-12 * f.max()))
    return NormSolution(
        Status.SOLVED,
        out["lower"],
        cert,
        control,
        residual,
        upper=out["upper"],
        flagged_panels=flagged,
        newton_steps=out["newton_steps"],
    )


def synthesize_control(prob, cert, value, grid, zero_tol=1e-12):
    """Pointwise maximizer of the dual kernel, sampled at panel midpoints.

    On each panel ``v_k = -value * f(t_k) / |f(t_k)|`` with
    ``f(t) = B^T e^{A^T(T-t)} z``. Panels where ``|f|`` falls below
    ``zero_tol`` times its maximum are returned in the flag list and keep
    the direction of the preceding panel.

    Returns
    -------
    (ControlSignal, list of int)
    """
    if not cert.gauge > 0:
        raise ValueError("certificate has a vanishing kernel")
    if not value > 0:
        raise ValueError("value must be positive")
    f = kernel_at(prob.sys, grid, cert.z)
    mags = np.linalg.norm(f, axis=1)
    flagged = np.flatnonzero(mags <= zero_tol * mags.max())
    dirs = np.zeros_like(f)
    ok = mags > zero_tol * mags.max()
    dirs[ok] = f[ok] / mags[ok, None]
    good = np.flatnonzero(ok)
    for k in flagged:
        prev = good[good < k]
        dirs[k] = dirs[prev[-1]] if prev.size else dirs[good[0]]
    return ControlSignal(grid, -value * dirs), [int(k) for k in flagged]


def check_bangbang(control, value, tol=1e-3):
    """Share of panels with ``| |v_k| - value | <= tol * value``, and the worst deviation."""
    if not value > 0:
        raise ValueError("value must be positive")
    dev = np.abs(control.magnitudes() - value)
    return BangBangReport(float(np.mean(dev <= tol * value)), float(dev.max()))


def norm_at_infinity(sys, y0, opts=None, T0=1.0, rtol=1e-6, k_max=14, zero_rungs=6):
    """Limit of ``N(T, y0)`` as ``T -> inf`` along ``T_k = T0 * 2^k``.

    The ladder stops when consecutive values agree to ``rtol``. When ``y0``
    has no component along the unstable spectral subspace of the reachable
    dynamics the limit is exactly zero; the ladder then runs only until the
    value has dropped by three decades (or for ``zero_rungs`` doublings), as
    evidence.
    """
    opts = opts or NormOptions()
    y0 = _vector(y0, sys.n)
    pp = PanelProblem(sys, T0, opts.K, opts.reach_tol)
    if not pp.reach.contains(y0, opts.member_tol):
        return NormLimit(math.inf, True, (), Status.INFEASIBLE)
    unstable = float(np.linalg.norm(pp.unstable_part(y0)))
    zero_limit = unstable <= 1e-9 * float(np.linalg.norm(y0))
    ladder = []
    first = prev = None
    converged = False
    alpha = max(sys.spectral_abscissa, 0.0)
    for k in range(k_max + 1):
        T = T0 * 2.0**k
        if alpha * T > 600.0:
            break
        K = opts.ladder_panels(k)
        sol = minimal_norm(NormProblem(sys, y0, T), opts, K=K)
        val = sol.value
        ladder.append((T, val))
        # nested grids give exact monotonicity; past the cap allow discretization slack
        slack = 1e-7 if K == opts.K * 2**k else 1e-3
        if prev is not None and val > prev * (1 + slack) + 1e-12:
            raise RuntimeError(f"minimal norm increased along the ladder at T={T}: {prev} -> {val}")
        if first is None:
            first = val
        if zero_limit and (val <= 1e-3 * first or k >= zero_rungs):
            break
        if not zero_limit and prev is not None and abs(prev - val) <= rtol * val:
            converged = True
            break
        prev = val
    if zero_limit:
        return NormLimit(0.0, True, tuple(ladder), Status.SOLVED, zero_limit=True)
    return NormLimit(ladder[-1][1], converged, tuple(ladder), Status.SOLVED)


def null_control_cost(sys, T, opts=None, samples=32, iters=40, seed=0):
    """Estimate ``sup`` of ``N(T, y0)`` over unit reachable ``y0``.

    Random starting directions in the reachable subspace are pushed uphill
    by the fixed-point map ``y <- grad N(y) / |grad N(y)|``, which never
    decreases a convex, positively homogeneous function. The result is a
    lower bound for the true supremum.
    """
    opts = opts or NormOptions()
    pp = PanelProblem(sys, T, opts.K, opts.reach_tol)
    P = pp.P
    rng = np.random.default_rng(seed)
    starts = [P[:, j] for j in range(P.shape[1])]
    starts += [P @ rng.standard_normal(P.shape[1]) for _ in range(samples)]
    best_val, best_y = -math.inf, None
    for y in starts:
        y = y / np.linalg.norm(y)
        val, y_val = -math.inf, y
        for _ in range(iters):
            out = pp.solve(y, gap_tol=opts.gap_tol, max_newton=opts.max_newton)
            if out["lower"] <= val * (1 + 1e-12):
                break
            val, y_val = out["lower"], y
            grad = P @ (P.T @ (pp.D.T @ out["w"]))
            y = grad / np.linalg.norm(grad)
        if val > best_val:
            best_val, best_y = val, y_val
    return CostEstimate(best_val, best_y)


def norm_sweep(sys, y0, T_values, opts=None):
    """Minimal-norm solutions along a list of horizons."""
    return [minimal_norm(NormProblem(sys, y0, T), opts) for T in T_values]


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


NORM_CSV_FIELDS = ("T", "N", "status", "dual_ratio", "residual", "bb_fraction")


def write_norm_csv(path_or_file, T_values, solutions):
    """Write ``(T, N, status, dual_ratio, residual, bb_fraction)`` rows."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NORM_CSV_FIELDS)
        for T, sol in zip(T_values, solutions):
            ratio = sol.certificate.ratio if sol.certificate else math.nan
            w.writerow([_fmt(float(T)), _fmt(float(sol.value)), sol.status.value,
                        _fmt(float(ratio)), _fmt(float(sol.residual)), _fmt(float(sol.bb_fraction))])
    finally:
        if own:
            fh.close()
