"""Brute-force validators kept independent of the main solver.

* ``scalar_closed_form``: exact minimal norm in one dimension.
* ``dual_grid_search``: the dual ratio maximized over a fixed grid of unit
  directions (``n <= 3``), a lower bound.
* ``primal_grid_upper_bound``: the discretized primal problem
  ``min max_k |u_k|`` subject to hitting the origin, solved as a linear
  program (``m = 1``) or a second-order cone program (``m > 1``), an upper
  bound.

Only the matrix exponential and the gauge quadrature are shared with the
solver.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .lti import ControlSignal, TimeGrid, propagate
from .matrix_core import expm
from .norm_solver import _fmt, gauge

__all__ = [
    "OracleBracket",
    "DualGridResult",
    "DegenerateSystemError",
    "OracleInfeasible",
    "scalar_closed_form",
    "direction_grid",
    "dual_grid_search",
    "primal_grid_upper_bound",
    "oracle_bracket",
    "write_bracket_csv",
]


class DegenerateSystemError(RuntimeError):
    pass


class OracleInfeasible(RuntimeError):
    """The discretized primal program has no feasible point."""


@dataclass(frozen=True)
class OracleBracket:
    lower: float
    upper: float

    @property
    def gap(self):
        return self.upper - self.lower

    @property
    def rel_gap(self):
        return self.gap / self.upper if self.upper > 0 else math.inf

    def contains(self, x, slack=0.0):
        return self.lower - slack <= x <= self.upper + slack


@dataclass(frozen=True, eq=False)
class DualGridResult:
    """Best ratio over the direction grid.

    ``unbounded`` is set when some direction has a vanishing gauge but a
    positive numerator, which means ``y0`` cannot be steered to 0.
    """

    lower: float
    z: np.ndarray
    unbounded: bool = False


def scalar_closed_form(a, y0, T, b=1.0):
    """Minimal norm for ``y' = a y + b u`` in one dimension."""
    if y0 == 0 or b == 0 or not T > 0:
        raise ValueError("need y0 != 0, b != 0 and T > 0")
    if a == 0:
        return abs(y0) / (abs(b) * T)
    # a |y0| / (|b| (1 - e^{-aT})), written to stay accurate for small aT
    return a * abs(y0) / (abs(b) * -math.expm1(-a * T))


def direction_grid(n, count):
    """Deterministic unit directions: ``{+1, -1}``, uniform angles, or a Fibonacci sphere."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(th), np.sin(th)])
    if n == 3:
        i = np.arange(count) + 0.5
        phi = np.arccos(1 - 2 * i / count)
        th = np.pi * (1 + 5**0.5) * i
        return np.column_stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)])
    raise ValueError("direction grids are only available for n <= 3")


def dual_grid_search(prob, directions, quad):
    """Maximize the dual ratio over a grid of unit directions.

    Each finite ratio is attained by an admissible dual vector, so the
    maximum is a lower bound for ``N(T, y0)`` up to the quadrature error of
    ``quad``.
    """
    n = prob.sys.n
    if n > 3:
        raise ValueError("dual grid search is limited to n <= 3")
    if directions < 100:
        raise ValueError("use at least 100 directions")
    Z = direction_grid(n, directions)
    end = expm(prob.sys.A, prob.T) @ prob.y0
    num = Z @ end
    g = np.concatenate([gauge(prob, Z[i:i + 512].T, quad) for i in range(0, len(Z), 512)])
    if not np.any(g > 0):
        raise DegenerateSystemError("every direction has a vanishing gauge")
    tiny = 1e-12 * g.max()
    unbounded = bool(np.any((g <= tiny) & (num > 1e-9 * np.linalg.norm(end))))
    ok = g > tiny
    ratio = np.full(len(Z), -np.inf)
    ratio[ok] = num[ok] / g[ok]
    j = int(np.argmax(ratio))
    return DualGridResult(float(ratio[j]), Z[j].copy(), unbounded)


def _endpoint_maps(sys, grid):
    """``H[k]`` with ``y(T) = e^{AT} y0 + sum_k H[k] u_k``, built panel by panel."""
    n, m = sys.n, sys.m
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = sys.A
    aug[:n, n:] = sys.B
    G = expm(aug, grid.dt)[:n, n:]
    nodes = grid.nodes
    return np.stack([expm(sys.A, grid.T - nodes[k + 1]) @ G for k in range(grid.K)])


def primal_grid_upper_bound(prob, grid, iters=10_000, feas_tol=1e-6):
    """Cheapest piecewise-constant control on ``grid`` that hits the origin.

    Returns ``(upper, control)``. A least-squares polish after the solve
    brings the endpoint residual below ``feas_tol * |y0|``; the reported
    bound is the sup-norm of the polished control.

    Raises
    ------
    OracleInfeasible
        If the program has no feasible point (``y0`` is not reachable).
    """
    if abs(grid.T - prob.T) > 1e-12 * prob.T:
        raise ValueError("grid must span the problem horizon")
    sys, K = prob.sys, grid.K
    n, m = sys.n, sys.m
    H = _endpoint_maps(sys, grid)
    target = -expm(sys.A, prob.T) @ prob.y0
    Hmat = H.transpose(1, 0, 2).reshape(n, K * m)
    # rescale rows so the equality constraints are comparable
    rs = np.linalg.norm(Hmat, axis=1)
    rs[rs == 0] = 1.0
    Aeq, beq = Hmat / rs[:, None], target / rs
    if m == 1:
        # variables (u_0..u_{K-1}, s): min s, -s <= u_k <= s
        c = np.zeros(K + 1)
        c[-1] = 1.0
        I = np.eye(K)
        A_ub = np.block([[I, -np.ones((K, 1))], [-I, -np.ones((K, 1))]])
        res = linprog(
            c,
            A_ub=A_ub,
            b_ub=np.zeros(2 * K),
            A_eq=np.hstack([Aeq, np.zeros((n, 1))]),
            b_eq=beq,
            bounds=[(None, None)] * K + [(0, None)],
            method="highs",
            options={"maxiter": iters, "primal_feasibility_tolerance": 1e-10},
        )
        if res.status == 2:
            raise OracleInfeasible(res.message)
        if res.status != 0:
            raise RuntimeError(f"linear program failed: {res.message}")
        u = res.x[:K].reshape(K, 1)
    else:
        import cvxpy as cp

        U = cp.Variable((K, m))
        prob_c = cp.Problem(
            cp.Minimize(cp.max(cp.norm(U, 2, axis=1))),
            [Aeq @ cp.reshape(U, (K * m,), order="C") == beq],
        )
        prob_c.solve(solver=cp.CLARABEL, max_iter=min(iters, 500))
        if prob_c.status in ("infeasible", "infeasible_inaccurate"):
            raise OracleInfeasible(prob_c.status)
        if U.value is None:
            raise RuntimeError(f"cone program failed: {prob_c.status}")
        u = np.asarray(U.value)
    flat = u.reshape(-1)
    r = target - Hmat @ flat
    flat = flat + np.linalg.lstsq(Hmat, r, rcond=None)[0]
    control = ControlSignal(grid, flat.reshape(K, m))
    resid = np.linalg.norm(propagate(sys, prob.y0, control))
    if resid > feas_tol * np.linalg.norm(prob.y0):
        raise OracleInfeasible(f"endpoint residual {resid:.2e} after polishing")
    return control.sup_norm(), control


def oracle_bracket(prob, directions=10_000, K_primal=256, quad_panels=None):
    """``OracleBracket`` from the direction grid and the primal program."""
    quad = TimeGrid(prob.T, quad_panels or 8 * 512)
    lo = dual_grid_search(prob, directions, quad)
    up, _ = primal_grid_upper_bound(prob, TimeGrid(prob.T, K_primal))
    return OracleBracket(lo.lower, up)


def write_bracket_csv(path, rows):
    """Rows of ``(label, T, lower, upper, gap)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("case", "T", "lower", "upper", "gap"))
        for label, T, br in rows:
            w.writerow((label, _fmt(float(T)), _fmt(br.lower), _fmt(br.upper), _fmt(br.gap)))
