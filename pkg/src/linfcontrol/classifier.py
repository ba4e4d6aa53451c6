"""Bang-bang decomposition cells for the minimal-norm and minimal-time problems.

Every ``(T, y0)`` falls in exactly one cell ``W11 .. W34`` and every
``(M, y0)`` in exactly one of ``V1, V21 .. V33``. The cell depends only on
four boundary numbers of ``y0``:

``t0``  infimum of horizons at which ``y0`` can be steered to 0,
``t1``  infimum of times at which the free flow annihilates ``y0``,
``n_at_t0``, ``n_at_t1``  the minimal norm at those horizons.

Each cell comes with a predicted solution structure. Extended reals are
plain floats with ``math.inf``; all comparisons below are total.
"""

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .lti import _vector
from .norm_solver import NormOptions, NormSolution, Status, norm_at_infinity
from .time_solver import TimeSolution, TimeStatus

__all__ = [
    "Prediction",
    "BoundaryDataError",
    "BoundaryData",
    "CellLabel",
    "W_CELLS",
    "V_CELLS",
    "PREDICTIONS",
    "consistency_violations",
    "classify_norm_pair",
    "classify_time_pair",
    "finite_dim_boundary_data",
    "classify_finite_dim",
    "ValidationReport",
    "cross_validate",
    "classification_record",
]

INF = math.inf


class Prediction(str, enum.Enum):
    BANG_BANG = "BangBang"
    BANG_BANG_NULL_OPTIMAL = "BangBangNullOptimal"
    BANG_BANG_NULL_NOT_OPTIMAL = "BangBangNullNotOptimal"
    NO_ADMISSIBLE = "NoAdmissibleControl"
    EXISTS_ONLY = "ExistsOnly"
    INFINITELY_MANY_NO_BB = "InfinitelyManyNoBB"
    BOUNDARY_UNCERTAIN = "BoundaryUncertain"


P = Prediction
PREDICTIONS = {
    "W11": P.NO_ADMISSIBLE,
    "W12": P.BANG_BANG_NULL_OPTIMAL,
    "W21": P.NO_ADMISSIBLE,
    "W22": P.EXISTS_ONLY,
    "W23": P.BANG_BANG_NULL_NOT_OPTIMAL,
    "W24": P.BANG_BANG_NULL_OPTIMAL,
    "W31": P.NO_ADMISSIBLE,
    "W32": P.BANG_BANG_NULL_NOT_OPTIMAL,
    "W33": P.BANG_BANG_NULL_OPTIMAL,
    "W34": P.NO_ADMISSIBLE,
    # V1 admits infinitely many minimal time controls, the null control among them
    "V1": P.INFINITELY_MANY_NO_BB,
    "V21": P.NO_ADMISSIBLE,
    "V22": P.BANG_BANG,
    "V23": P.EXISTS_ONLY,
    "V24": P.INFINITELY_MANY_NO_BB,
    "V31": P.NO_ADMISSIBLE,
    "V32": P.BANG_BANG,
    "V33": P.NO_ADMISSIBLE,
}
del P
W_CELLS = tuple(c for c in PREDICTIONS if c[0] == "W")
V_CELLS = tuple(c for c in PREDICTIONS if c[0] == "V")


class BoundaryDataError(ValueError):
    pass


def consistency_violations(t0, t1, n0, n1):
    """Relations between ``(t0, t1, N(t0), N(t1))`` that a tuple breaks.

    Empty list means the tuple can arise from some initial state.
    """
    vals = (t0, t1, n0, n1)
    if any(math.isnan(v) for v in vals):
        return ["NaN entry"]
    out = []
    if t0 < 0 or n0 < 0 or n1 < 0:
        out.append("negative entry")
    if t1 <= 0:
        out.append("t1 must be positive")
    if t0 > t1:
        out.append("t0 > t1")
    if t0 == 0 and n0 != INF:
        out.append("t0 = 0 requires N(t0) = inf")
    if t1 < INF and n1 != 0:
        out.append("t1 < inf requires N(t1) = 0")
    if n0 < n1:
        out.append("N(t0) < N(t1) contradicts monotonicity")
    if (n0 == 0) != (t0 == t1 < INF):
        out.append("N(t0) = 0 exactly when t0 = t1 < inf")
    if n0 == INF and not (t0 < t1 or t0 == t1 == INF):
        out.append("N(t0) = inf requires t0 < t1 or t0 = t1 = inf")
    if t0 == INF and n0 != INF:
        out.append("t0 = inf requires N(t0) = inf")
    if 0 < n0 < INF and not t0 < t1:
        out.append("0 < N(t0) < inf requires t0 < t1")
    if (t0 < INF) != (n1 < INF):
        out.append("N(t1) is finite exactly when t0 is")
    return out


@dataclass(frozen=True)
class BoundaryData:
    """Boundary numbers of one initial state.

    ``n1_converged`` is False when ``n_at_t1`` comes from an unconverged
    numerical limit; classification close to it is then marked uncertain.
    """

    t0: float
    t1: float
    n_at_t0: float
    n_at_t1: float
    n1_converged: bool = True

    def __post_init__(self):
        for f in ("t0", "t1", "n_at_t0", "n_at_t1"):
            object.__setattr__(self, f, float(getattr(self, f)))
        bad = consistency_violations(self.t0, self.t1, self.n_at_t0, self.n_at_t1)
        if bad:
            raise BoundaryDataError("; ".join(bad))

    def to_dict(self):
        return {k: _json_num(v) for k, v in asdict(self).items()}


@dataclass(frozen=True)
class CellLabel:
    family: str
    cell: str
    prediction: Prediction
    uncertain: bool = False
    note: str = ""


def _label(cell, uncertain=False, note=""):
    pred = Prediction.BOUNDARY_UNCERTAIN if uncertain else PREDICTIONS[cell]
    return CellLabel(cell[0], cell, pred, uncertain, note)


def classify_norm_pair(bd, T):
    """Cell of ``(T, y0)`` given the boundary data of ``y0``."""
    T = float(T)
    if not (0 < T < INF):
        raise ValueError("T must be finite and positive")
    t0, t1, n0 = bd.t0, bd.t1, bd.n_at_t0
    if n0 == 0:
        return _label("W11" if T < t0 else "W12")
    if n0 < INF:
        if T < t0:
            return _label("W21")
        if T == t0:
            return _label("W22")
        if T < t1:
            return _label("W23")
        return _label("W24")
    if t0 == INF:
        return _label("W34")
    if T <= t0:
        return _label("W31")
    if T < t1:
        return _label("W32")
    return _label("W33")


def classify_time_pair(bd, M, rtol=0.0, uncertain_rtol=1e-3):
    """Cell of ``(M, y0)`` given the boundary data of ``y0``.

    ``M`` within ``rtol`` above ``n_at_t1`` counts as equal to it. When
    ``n_at_t1`` is unconverged and ``M`` lies within ``uncertain_rtol`` of
    it, the label is flagged uncertain instead of predicting.
    """
    M = float(M)
    if not (0 < M < INF):
        raise ValueError("M must be finite and positive")
    n0, n1 = bd.n_at_t0, bd.n_at_t1
    above_n1 = M > n1 * (1 + rtol)
    near = (not bd.n1_converged) and n1 < INF and abs(M - n1) <= uncertain_rtol * max(n1, M)
    if n0 == 0:
        return _label("V1")
    if n0 < INF:
        if not above_n1:
            cell = "V21"
        elif M < n0:
            cell = "V22"
        elif M == n0:
            cell = "V23"
        else:
            cell = "V24"
        return _label(cell, near and cell in ("V21", "V22"))
    if bd.t0 == INF:
        return _label("V33")
    cell = "V32" if above_n1 else "V31"
    return _label(cell, near, "unconverged limit near M" if near else "")


def finite_dim_boundary_data(sys, y0, opts=None, limit=None):
    """Boundary data of ``y0`` for a matrix pair.

    Reachable states have ``t0 = 0`` and ``N(t0) = inf``; unreachable ones
    ``t0 = inf``. Matrix exponentials are invertible, so ``t1 = inf`` and
    ``N(t1)`` is the large-horizon limit of the minimal norm.
    """
    y0 = _vector(y0, sys.n)
    if not np.any(y0):
        raise ValueError("y0 must be nonzero")
    if limit is None:
        limit = norm_at_infinity(sys, y0, opts or NormOptions())
    if limit.status is Status.INFEASIBLE:
        return BoundaryData(INF, INF, INF, INF)
    return BoundaryData(0.0, INF, INF, limit.value, limit.converged)


def classify_finite_dim(sys, y0, T=None, M=None, opts=None, limit=None):
    """Classify ``(T, y0)`` (pass ``T``) or ``(M, y0)`` (pass ``M``) for a matrix pair."""
    if (T is None) == (M is None):
        raise ValueError("pass exactly one of T and M")
    bd = finite_dim_boundary_data(sys, y0, opts, limit)
    if T is not None:
        return classify_norm_pair(bd, T)
    return classify_time_pair(bd, M, rtol=1e-9)


@dataclass(frozen=True)
class ValidationReport:
    agreements: tuple
    violations: tuple
    skipped: bool = False

    @property
    def ok(self):
        return not self.violations


_BANG_BANG = {
    Prediction.BANG_BANG,
    Prediction.BANG_BANG_NULL_NOT_OPTIMAL,
}


def cross_validate(label, sol, bb_threshold=0.99, zero_tol=1e-9):
    """Compare a solver outcome with the prediction of its cell."""
    if label.uncertain:
        return ValidationReport((), (), skipped=True)
    agree, viol = [], []

    def check(ok, what):
        (agree if ok else viol).append(what)

    if isinstance(sol, NormSolution):
        no_control = sol.status is Status.INFEASIBLE
        value = sol.value
    elif isinstance(sol, TimeSolution):
        no_control = sol.status is TimeStatus.NO_ADMISSIBLE
        value = sol.value
    else:
        raise TypeError(f"cannot validate {type(sol).__name__}")
    pred = label.prediction
    check(no_control == (pred is Prediction.NO_ADMISSIBLE),
          f"{label.cell}: admissibility ({'none' if no_control else 'solved'})")
    if no_control:
        return ValidationReport(tuple(agree), tuple(viol))
    if pred is Prediction.BANG_BANG_NULL_OPTIMAL:
        check(value <= zero_tol, f"{label.cell}: null control optimal (value {value:.3g})")
    if pred is Prediction.BANG_BANG_NULL_NOT_OPTIMAL:
        check(value > zero_tol, f"{label.cell}: null control not optimal (value {value:.3g})")
    if pred in _BANG_BANG:
        frac = sol.bb_fraction
        check(frac >= bb_threshold, f"{label.cell}: bang-bang fraction {frac:.4f}")
    return ValidationReport(tuple(agree), tuple(viol))


def _json_num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(f"{v:.9g}")


def classification_record(label, bd, inputs, truncated=False):
    """JSON-ready record ``{cell, prediction, inputs, boundary_data, uncertain}``.

    Infinite values are written as the string ``"inf"``. ``truncated``
    adds ``"model": "truncated-model"`` for Galerkin truncations.
    """
    rec = {
        "family": label.family,
        "cell": label.cell,
        "prediction": label.prediction.value,
        "inputs": {k: (_json_num(v) if np.isscalar(v) else [_json_num(x) for x in v])
                   for k, v in inputs.items()},
        "boundary_data": bd.to_dict(),
        "uncertain": bool(label.uncertain),
    }
    if truncated:
        rec["model"] = "truncated-model"
    return rec
