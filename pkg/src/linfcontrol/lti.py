"""Linear time-invariant pairs ``y' = Ay + Bu`` and their basic maps.

Controls are piecewise constant on a uniform grid, so propagation is exact
panel by panel: with ``E = e^{A dt}`` and ``G = (int_0^dt e^{As} ds) B``
(both read off one augmented exponential) the state obeys
``y_{k+1} = E y_k + G u_k`` with no quadrature error.
"""

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .matrix_core import DimensionError, as_matrix, expm, orth_complement

__all__ = [
    "LtiSystem",
    "TimeGrid",
    "ControlSignal",
    "ReachableSubspace",
    "propagate",
    "observation_kernel",
    "kernel_at",
    "panel_operators",
    "power_orbit",
    "reachable_subspace",
    "kalman_decomposition",
    "system_from_dict",
    "system_to_dict",
    "load_system",
    "DEFAULT_REACH_TOL",
]

# Relative tolerance for reachability decisions; well above rounding noise of
# the orthogonal staircase, far below any physically meaningful coupling.
DEFAULT_REACH_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """The pair ``(A, B)`` with ``A`` n x n and ``B`` n x m, ``B != 0``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise DimensionError(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
        if not np.any(B):
            raise ValueError("B must be nonzero")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def flow(self, t):
        """Uncontrolled propagator ``e^{At}``."""
        return expm(self.A, t)

    @cached_property
    def spectral_abscissa(self):
        return float(np.max(np.linalg.eigvals(self.A).real))

    def __repr__(self):
        return f"LtiSystem(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of ``[0, T]`` into ``K`` panels."""

    T: float
    K: int

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"horizon must be finite and positive, got {self.T}")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"panel count must be a positive integer, got {self.K}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "K", int(self.K))

    @property
    def dt(self):
        return self.T / self.K

    @property
    def nodes(self):
        return np.linspace(0.0, self.T, self.K + 1)

    @property
    def midpoints(self):
        return (np.arange(self.K) + 0.5) * self.dt


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Piecewise-constant control: ``values[k]`` acts on panel ``k``."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2 or v.shape[0] != self.grid.K:
            raise DimensionError(f"expected {self.grid.K} control values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("control values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def zeros(cls, grid, m):
        return cls(grid, np.zeros((grid.K, m)))

    @property
    def m(self):
        return self.values.shape[1]

    def magnitudes(self):
        """Euclidean norm of the control on each panel."""
        return np.linalg.norm(self.values, axis=1)

    def sup_norm(self):
        return float(self.magnitudes().max())

    def extend(self, T_new):
        """Zero extension to ``[0, T_new]``; needs ``T_new`` on the same panel lattice."""
        extra = (T_new - self.grid.T) / self.grid.dt
        k = int(round(extra))
        if k < 0 or abs(extra - k) > 1e-9 * max(1.0, extra):
            raise ValueError("T_new must extend the grid by whole panels")
        vals = np.vstack([self.values, np.zeros((k, self.m))])
        return ControlSignal(TimeGrid(self.grid.T + k * self.grid.dt, self.grid.K + k), vals)


@dataclass(frozen=True, eq=False)
class ReachableSubspace:
    """Orthonormal basis of ``B + AB + ... + A^n B``."""

    basis: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    def project(self, y):
        P = self.basis
        return P @ (P.T @ np.asarray(y, dtype=float))

    def distance(self, y):
        """Norm of the component of ``y`` orthogonal to the subspace."""
        y = np.asarray(y, dtype=float)
        return float(np.linalg.norm(y - self.project(y)))

    def contains(self, y, tol=DEFAULT_REACH_TOL):
        y = np.asarray(y, dtype=float)
        return self.distance(y) <= tol * max(float(np.linalg.norm(y)), np.finfo(float).tiny)


def _vector(y, n, name="y0"):
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != n:
        raise DimensionError(f"{name} has length {y.shape[0]}, expected {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} must be finite")
    return y


def _step_maps(sys, dt):
    """``(e^{A dt}, int_0^dt e^{As} ds B)`` from one augmented exponential."""
    n, m = sys.n, sys.m
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = sys.A
    aug[:n, n:] = sys.B
    F = scipy.linalg.expm(aug * dt)
    return F[:n, :n], F[:n, n:]


def propagate(sys, y0, u):
    """End state ``y(T; y0, u)`` for a piecewise-constant control ``u``."""
    y = _vector(y0, sys.n)
    if u.m != sys.m:
        raise DimensionError(f"control has {u.m} channels, system has {sys.m}")
    E, G = _step_maps(sys, u.grid.dt)
    for uk in u.values:
        y = E @ y + G @ uk
    return y


def power_orbit(M, X, count):
    """Stack ``[X, M X, M^2 X, ...]`` (``count`` terms) using repeated squaring of ``M``."""
    X = np.asarray(X, dtype=float)
    out = X[None]
    Mp = np.asarray(M, dtype=float)
    while out.shape[0] < count:
        out = np.concatenate([out, np.einsum("ij,kjl->kil", Mp, out)])
        Mp = Mp @ Mp
    return out[:count]


def panel_operators(sys, grid):
    """Per-panel input-to-endpoint maps.

    Returns an array ``H`` of shape ``(K, n, m)`` with
    ``H[k] = e^{A(T - t_{k+1})} int_0^dt e^{As} ds B`` so that
    ``y(T) = e^{AT} y0 + sum_k H[k] @ u_k``.
    """
    E, G = _step_maps(sys, grid.dt)
    return power_orbit(E, G, grid.K)[::-1].copy()


def observation_kernel(sys, T, z, t):
    """Adjoint kernel ``B^T e^{A^T (T - t)} z`` for ``0 <= t <= T``."""
    z = _vector(z, sys.n, "z")
    if not 0.0 <= t <= T:
        raise ValueError(f"t={t} outside [0, {T}]")
    return sys.B.T @ (expm(sys.A.T, T - t) @ z)


def kernel_at(sys, grid, Z):
    """Kernel ``B^T e^{A^T(T - t_mid)} z`` at every panel midpoint.

    ``Z`` is ``(n,)`` or ``(n, d)`` for ``d`` dual vectors at once; the
    result has shape ``(K, m)`` or ``(K, m, d)``.
    """
    Z = np.asarray(Z, dtype=float)
    single = Z.ndim == 1
    Z = Z.reshape(sys.n, -1)
    start = expm(sys.A, 0.5 * grid.dt) @ sys.B
    # orbit[j] = e^{A (j + 1/2) dt} B belongs to t = T - (j + 1/2) dt, i.e. panel K-1-j
    orbit = power_orbit(expm(sys.A, grid.dt), start, grid.K)[::-1]
    K, n, m = orbit.shape
    out = (orbit.transpose(0, 2, 1).reshape(K * m, n) @ Z).reshape(K, m, -1)
    return out[:, :, 0] if single else out


def reachable_subspace(sys, tol=DEFAULT_REACH_TOL):
    """Orthonormal basis of ``span[B, AB, ..., A^n B]`` by an orthogonal staircase.

    Each round maps the newest basis block through ``A``, strips what is
    already spanned, and keeps directions whose residual exceeds
    ``tol`` relative to the mapped block. ``n`` rounds are taken.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, B = sys.A, sys.B
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    basis = U[:, s > tol * s[0]]
    new = basis
    for _ in range(sys.n):
        if new.shape[1] == 0 or basis.shape[1] == sys.n:
            break
        W = A @ new
        scale = np.linalg.norm(W, 2)
        if scale == 0.0:
            break
        for _ in range(2):
            W = W - basis @ (basis.T @ W)
        U, s, _ = np.linalg.svd(W, full_matrices=False)
        new = U[:, s > tol * scale]
        if new.shape[1]:
            new = new - basis @ (basis.T @ new)
            new, _ = np.linalg.qr(new)
        basis = np.hstack([basis, new])
    return ReachableSubspace(_frozen(basis))


def kalman_decomposition(sys, tol=DEFAULT_REACH_TOL):
    """Orthogonal ``K`` whose first ``p`` columns span the reachable subspace.

    In the new coordinates ``K^T A K`` is block upper triangular and
    ``K^T B`` vanishes below its first ``p`` rows.
    """
    P = reachable_subspace(sys, tol).basis
    Kmat = np.hstack([P, orth_complement(P)])
    return Kmat, P.shape[1]


def system_to_dict(sys):
    return {
        "n": sys.n,
        "m": sys.m,
        "A": sys.A.reshape(-1).tolist(),
        "B": sys.B.reshape(-1).tolist(),
    }


def system_from_dict(d):
    """Build a system from ``{"n", "m", "A", "B"}`` with row-major arrays.

    ``A`` and ``B`` may be flat row-major lists or nested row lists.
    """
    try:
        n, m = int(d["n"]), int(d["m"])
        A = np.asarray(d["A"], dtype=float).reshape(n, n)
        B = np.asarray(d["B"], dtype=float).reshape(n, m)
    except KeyError as exc:
        raise ValueError(f"system definition is missing field {exc}") from None
    except ValueError as exc:
        raise DimensionError(f"system definition has inconsistent sizes: {exc}") from None
    return LtiSystem(A, B)


def load_system(path):
    with open(path) as fh:
        return system_from_dict(json.load(fh))
