"""Discretized minimal-norm problem on a uniform panel grid.

For piecewise-constant controls on ``K`` panels the endpoint condition is
``e^{AT} y0 + sum_k H_k u_k = 0`` exactly, and the smallest admissible
``max_k |u_k|`` equals

    sup_w  <d, w> / sum_k |H_k^T w|

(the panel-integrated version of the dual ratio). Coordinates are chosen so
that every number stays O(1) on long horizons: the problem is restricted to
the reachable subspace, the restricted generator is split along its
stable/centre and unstable spectral subspaces, and the unstable rows of the
endpoint condition are pulled back to time zero by ``e^{-A_u T}``.

The supremum is computed by Newton's method on a smoothed gauge
``sum_k sqrt(|V_k xi|^2 + eps^2)`` with ``eps`` driven to zero. Its
stationarity condition is exactly an admissible control
``u_k = -(1/lam) V_k xi / s_k``, so every iterate carries a certified
bracket: the dual ratio from below, the control's sup-norm from above.
"""

import warnings

import numpy as np
import scipy.linalg

from .lti import power_orbit, reachable_subspace
from .matrix_core import orth_complement

# Eigenvalues with real part above this (times the spectral radius) count
# as unstable.
_UNSTABLE_REL = 1e-9


def _split_spectrum(Ar):
    """Real Schur form of ``Ar`` with the stable/centre block leading.

    Returns ``(S_inv_Zt, T11, T22, ns)`` where ``S_inv_Zt`` maps reduced
    coordinates to block-diagonal ones.
    """
    p = Ar.shape[0]
    rho = max(np.max(np.abs(np.linalg.eigvals(Ar))), 1e-300)
    thr = _UNSTABLE_REL * rho
    T, Z, ns = scipy.linalg.schur(Ar, output="real", sort=lambda re, im: re <= thr)
    T11, T12, T22 = T[:ns, :ns], T[:ns, ns:], T[ns:, ns:]
    X = np.zeros((ns, p - ns))
    if 0 < ns < p:
        # T11 X - X T22 = -T12 decouples the blocks.
        X = scipy.linalg.solve_sylvester(T11, -T22, -T12)
    S_inv = np.eye(p)
    S_inv[:ns, ns:] = -X
    return S_inv @ Z.T, T11, T22, ns


def _step(Ablk, Bblk, dt):
    k, m = Bblk.shape
    aug = np.zeros((k + m, k + m))
    aug[:k, :k] = Ablk
    aug[:k, k:] = Bblk
    F = scipy.linalg.expm(aug * dt)
    return F[:k, :k], F[:k, k:]


class PanelProblem:
    """Everything about ``(sys, T, K)`` that does not depend on ``y0``.

    Attributes
    ----------
    P : (n, p) reachable basis
    D : (p, n) map ``y0 -> d`` (transformed endpoint target)
    H : (K, p, m) transformed panel operators
    Zmap : (n, p) map from transformed dual vectors to state-space duals
    """

    def __init__(self, sys, T, K, reach_tol):
        self.sys, self.T, self.K = sys, float(T), int(K)
        self.reach = reachable_subspace(sys, reach_tol)
        P = self.reach.basis
        self.P = P
        p = P.shape[1]
        Ar = P.T @ sys.A @ P
        Br = P.T @ sys.B
        W, T11, T22, ns = _split_spectrum(Ar)
        self.n_stable = ns
        Bz = W @ Br
        dt = self.T / self.K
        H = np.empty((self.K, p, sys.m))
        D = np.empty((p, sys.n))
        Zmap = np.empty((sys.n, p))
        if ns:
            Es, Gs = _step(T11, Bz[:ns], dt)
            # forward: e^{A_s (T - t_{k+1})} G_s, k = K-1 ... 0
            H[:, :ns] = power_orbit(Es, Gs, self.K)[::-1]
            eT = scipy.linalg.expm(T11 * self.T)
            D[:ns] = eT @ W[:ns] @ P.T
            Zmap[:, :ns] = P @ W[:ns].T
        if ns < p:
            Eu, Gu = _step(T22, Bz[ns:], dt)
            Fu = scipy.linalg.expm(-T22 * dt)
            # pulled back: e^{-A_u t_{k+1}} G_u, k = 0 ... K-1
            H[:, ns:] = power_orbit(Fu, Fu @ Gu, self.K)
            D[ns:] = W[ns:] @ P.T
            with np.errstate(under="ignore"):
                back = scipy.linalg.expm(-T22 * self.T)
            Zmap[:, ns:] = P @ W[ns:].T @ back.T
        self.H, self.D, self.Zmap = H, D, Zmap
        # Unstable-block rows of W, for the zero-limit test at T -> infinity.
        self._W_unstable = W[ns:] @ P.T
        S = H.transpose(1, 0, 2).reshape(p, -1)
        U, s, Vt = np.linalg.svd(S, full_matrices=False)
        if s[-1] <= 1e-15 * s[0]:
            warnings.warn("panel operators are numerically rank deficient; refine the grid",
                          RuntimeWarning, stacklevel=3)
        self._U, self._s = U, s
        self.V = Vt.T.reshape(self.K, sys.m, p)

    @property
    def p(self):
        return self.P.shape[1]

    def unstable_part(self, y0):
        """Coordinates of ``y0`` along the unstable spectral subspace."""
        return self._W_unstable @ y0

    def solve(self, y0, gap_tol=1e-9, max_newton=60):
        """Solve the panel problem for one initial state in the reachable subspace.

        Returns a dict with ``lower``, ``upper``, ``controls`` (K, m),
        ``w`` (transformed dual vector normalised to unit panel gauge) and
        ``newton_steps``.
        """
        d = self.D @ y0
        delta = (self._U.T @ d) / self._s
        return _smoothed_dual(self.V, delta, gap_tol=gap_tol, max_newton=max_newton,
                              to_w=lambda xi: self._U @ (xi / self._s))


def _vertex_polish(V, delta, G):
    """Primal control with the sign pattern of the dual kernel ``G``.

    Panels follow ``-G_k/|G_k|`` at a common magnitude ``c``; only the
    panels with the smallest kernel, enough to leave ``p - 1`` free
    unknowns, are solved for. Returns ``(c, controls)`` when the result is
    feasible, else ``None``.
    """
    K, m, p = V.shape
    nf = min(K, -(-(p - 1) // m))
    g = np.linalg.norm(G, axis=1)
    free = np.argsort(g, kind="stable")[:nf]
    sat = np.ones(K, bool)
    sat[free] = False
    if not np.all(g[sat] > 0):
        return None
    d = -G[sat] / g[sat][:, None]
    cols = [np.einsum("kmp,km->p", V[sat], d)[:, None]]
    if nf:
        cols.append(V[free].transpose(2, 0, 1).reshape(p, nf * m))
    M = np.hstack(cols)
    x = np.linalg.lstsq(M, -delta, rcond=None)[0]
    if np.linalg.norm(M @ x + delta) > 1e-12 * np.linalg.norm(delta):
        return None
    c = float(x[0])
    controls = np.empty((K, m))
    controls[sat] = c * d
    controls[free] = x[1:].reshape(nf, m)
    if not c > 0 or np.linalg.norm(controls[free], axis=1).max(initial=0.0) > c * (1 + 1e-12):
        return None
    return c, controls


def _smoothed_dual(V, delta, gap_tol, max_newton, to_w):
    K, m, p = V.shape
    nd = float(delta @ delta)
    xi0 = delta / nd
    Q = orth_complement((delta / np.sqrt(nd)).reshape(-1, 1)) if p > 1 else np.zeros((p, 0))
    VQ = np.einsum("kmp,pq->kmq", V, Q)
    G0 = V @ xi0

    def parts(v, eps):
        G = G0 + VQ @ v
        s = np.sqrt(np.einsum("km,km->k", G, G) + eps * eps)
        return G, s

    v = np.zeros(Q.shape[1])
    scale = float(np.mean(np.linalg.norm(G0, axis=1)))
    steps = 0
    best_lo = best_up = None
    # Smoothing error in the value is at most K*eps/gauge ~ eps/scale; below
    # ~1e-10 the switching panels make the Newton system too stiff to trust.
    for level in range(10):
        eps = 0.1 * scale * 10.0 ** (-level)
        for _ in range(max_newton):
            if Q.shape[1] == 0:
                break
            G, s = parts(v, eps)
            f = s.sum()
            grad = np.einsum("kmq,km->q", VQ, G / s[:, None])
            VtG = np.einsum("kmq,km->kq", VQ, G) / s[:, None] ** 1.5
            hess = np.einsum("kmq,kmr,k->qr", VQ, VQ, 1.0 / s) - VtG.T @ VtG
            try:
                step = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            dec = -float(grad @ step)
            steps += 1
            if not dec > 1e-15 * f:
                break
            t = 1.0
            while t > 1e-12:
                _, s_new = parts(v + t * step, eps)
                if s_new.sum() <= f - 0.25 * t * dec:
                    break
                t *= 0.5
            v = v + t * step
        G, s = parts(v, eps)
        xi = xi0 + Q @ v
        Gs = G / s[:, None]
        lam = float(delta @ np.einsum("kmp,km->p", V, Gs)) / nd
        controls = -Gs / lam
        # Exact endpoint repair; sum_k V_k^T V_k = I so the minimum-norm
        # correction is V_k r on every panel.
        r = -delta - np.einsum("kmp,km->p", V, controls)
        controls = controls + V @ r
        lower = 1.0 / float(np.linalg.norm(G, axis=1).sum())
        upper = float(np.linalg.norm(controls, axis=1).max())
        # both bounds are valid at every level; keep the tightest of each
        if best_lo is None or lower > best_lo[0]:
            best_lo = (lower, xi)
        if best_up is None or upper < best_up[0]:
            best_up = (upper, controls)
        if best_up[0] - best_lo[0] <= gap_tol * best_up[0]:
            break
    (lower, xi), (upper, controls) = best_lo, best_up
    polished = _vertex_polish(V, delta, V @ xi)
    if polished is not None and polished[0] <= upper * (1 + 1e-12):
        upper, controls = polished
    w = to_w(xi) * lower
    return {"lower": lower, "upper": upper, "controls": controls, "w": w,
            "newton_steps": steps, "gap": (upper - lower) / upper}
