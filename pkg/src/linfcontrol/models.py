"""Model builders: scalar systems, the double integrator, diagonal spectral
models and their Galerkin truncations, including the point-controlled heat
equation on ``(0, pi)``.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .lti import LtiSystem, system_from_dict
from .norm_solver import NormProblem, Status, minimal_norm

__all__ = [
    "SpectralModel",
    "scalar_system",
    "double_integrator",
    "truncate",
    "heat_point_control",
    "spectral_model",
    "t0_blowup_profile",
    "load_model",
    "model_from_dict",
]


def scalar_system(a, b=1.0):
    """``y' = a y + b u`` in one dimension."""
    if b == 0:
        raise ValueError("b must be nonzero")
    return LtiSystem([[float(a)]], [[float(b)]])


def double_integrator():
    return LtiSystem([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]])


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Diagonal generator ``-sum_j lambda_j <x, psi_j> phi_j`` with a scalar
    control entering mode ``j`` through ``b_j``.

    Only the first ``J`` entries of ``lambdas`` and ``control_coeffs`` are
    stored. ``tail_sum`` is the analytic value of ``sum_j 1/lambda_j`` over
    the full sequence, which must be finite.
    """

    lambdas: np.ndarray
    control_coeffs: np.ndarray
    tail_sum: float
    name: str = "spectral"

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float).ravel()
        b = np.asarray(self.control_coeffs, dtype=float).ravel()
        if lam.size < 1 or lam.size != b.size:
            raise ValueError("lambdas and control_coeffs must have the same nonzero length")
        if not np.all(np.isfinite(lam)) or not np.all(np.isfinite(b)):
            raise ValueError("non-finite spectral data")
        if lam[0] <= 0 or np.any(np.diff(lam) <= 0):
            raise ValueError("lambdas must be positive and strictly increasing")
        if not np.any(b):
            raise ValueError("at least one control coefficient must be nonzero")
        if not (math.isfinite(self.tail_sum) and self.tail_sum > 0):
            raise ValueError("sum of 1/lambda_j must be finite")
        lam.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "control_coeffs", b)

    @property
    def truncation_order(self):
        return self.lambdas.size

    @property
    def partial_sum(self):
        """``sum_{j <= J} 1/lambda_j``."""
        return float(np.sum(1.0 / self.lambdas))


def spectral_model(lambda_fn, coeff_fn, J, tail_sum, name="spectral"):
    """Build a :class:`SpectralModel` from index functions ``j -> lambda_j``, ``j -> b_j``."""
    if J < 1:
        raise ValueError("J must be at least 1")
    js = np.arange(1, J + 1)
    return SpectralModel(
        np.array([lambda_fn(j) for j in js], float),
        np.array([coeff_fn(j) for j in js], float),
        tail_sum,
        name,
    )


def truncate(model):
    """Galerkin truncation: ``A = diag(-lambda_1..J)``, ``B = (b_1..J)^T``."""
    return LtiSystem(np.diag(-model.lambdas), model.control_coeffs[:, None])


def heat_point_control(x0, J):
    """Dirichlet heat equation on ``(0, pi)`` controlled at the point ``x0``.

    Eigenvalues ``j^2`` with sine eigenfunctions, so ``b_j = sin(j x0)``.
    Coefficients below ``1e-14`` in magnitude are set to zero (e.g. even
    modes when ``x0 = pi/2``).
    """
    if not 0 < x0 < math.pi:
        raise ValueError("x0 must lie in (0, pi)")

    def coeff(j):
        v = math.sin(j * x0)
        return 0.0 if abs(v) < 1e-14 else v

    return spectral_model(lambda j: float(j * j), coeff, J, math.pi**2 / 6, name="heat_point")


def t0_blowup_profile(model, y0, T_list, opts=None):
    """``(T, N(T, y0))`` along a decreasing list of horizons for the truncation.

    Unreachable ``y0`` yields ``inf`` at every horizon. The profile only
    shows how fast the truncated cost grows as ``T`` shrinks; it says
    nothing definite about the untruncated model.
    """
    T_list = [float(T) for T in T_list]
    if any(T <= 0 for T in T_list) or any(b >= a for a, b in zip(T_list, T_list[1:])):
        raise ValueError("T_list must be positive and strictly decreasing")
    sys = model if isinstance(model, LtiSystem) else truncate(model)
    out = []
    for T in T_list:
        sol = minimal_norm(NormProblem(sys, y0, T), opts)
        out.append((T, math.inf if sol.status is Status.INFEASIBLE else sol.value))
    return out


def model_from_dict(d):
    """Build an :class:`LtiSystem` (and the spectral model, if any) from a model record.

    Accepted kinds: ``spectral`` (``lambdas``, ``coeffs``, optional ``J`` and
    ``tail_sum``), ``heat_point`` (``x0``, ``J``) and ``matrix`` (the plain
    system schema). Returns ``(system, model_or_None)``.
    """
    kind = d.get("kind", "matrix")
    if kind == "matrix":
        return system_from_dict(d), None
    if kind == "heat_point":
        model = heat_point_control(float(d["x0"]), int(d["J"]))
    elif kind == "spectral":
        lam = [float(x) for x in d["lambdas"]]
        b = [float(x) for x in d["coeffs"]]
        J = int(d.get("J", len(lam)))
        if J > len(lam) or J > len(b):
            raise ValueError("J exceeds the supplied sequence length")
        tail = float(d.get("tail_sum", sum(1.0 / x for x in lam[:J])))
        model = SpectralModel(lam[:J], b[:J], tail)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return truncate(model), model


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
