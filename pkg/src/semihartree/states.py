"""Semiclassical trajectory-coherent states.

A `GermState` bundles the trajectory data (Z, S) and the frame data
(B, C, tracked log det C, D0) at one time, and evaluates the Gaussian
vacuum

    psi_0(x) = N_h / sqrt(det C) * exp{(i/hbar)[S + <P,dx> + 1/2 <dx,Q dx>]},
    N_h = [(pi hbar)^{-n} det D0]^{1/4},

and, in one dimension, the ladder-generated states

    psi_k = psi_0 * (i C*/|C|)^k / sqrt(2^k k!) * H_k(dx sqrt(D0/hbar)/|C|).

The ladder algebra is also exposed on coefficient vectors and as finite
matrices (Dx, Dp over the Fock basis), which makes centered Weyl moments of
any coefficient state exact finite-matrix computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.integrate import simpson

from .moments import MomentSet, moment_indices
from .oracle import Grid1D, GridWaveFunction

__all__ = [
    "GermState",
    "germ_state",
    "ladder_lower",
    "ladder_raise",
    "ladder_matrices",
    "dx_dp_matrices",
    "weyl_ordered",
    "class_state_moments",
    "action_phase",
    "phi1_phase",
]


@dataclass
class GermState:
    t: float
    hbar: float
    mass: float
    Z: np.ndarray            # (2n,)
    S: float
    B: np.ndarray            # (n, n) complex
    C: np.ndarray
    logdetC: complex         # branch-tracked
    D0: np.ndarray

    @property
    def n(self):
        return self.Z.size // 2

    @property
    def P(self):
        return self.Z[: self.n]

    @property
    def X(self):
        return self.Z[self.n :]

    @property
    def Q(self):
        return self.B @ np.linalg.inv(self.C)

    @property
    def norm_const(self):
        detD0 = float(np.real(np.linalg.det(self.D0)))
        return ((math.pi * self.hbar) ** (-self.n) * detD0) ** 0.25

    def vacuum(self, x):
        """Vacuum value at positions x: shape (m,) for n=1 or (m, n)."""
        x = np.asarray(x, dtype=float)
        if self.n == 1:
            dx = np.atleast_1d(x) - self.X[0]
            phase = self.S + self.P[0] * dx + 0.5 * self.Q[0, 0] * dx**2
        else:
            dx = np.atleast_2d(x) - self.X
            phase = self.S + dx @ self.P + 0.5 * np.einsum(
                "mi,ij,mj->m", dx, self.Q, dx
            )
        imq = np.linalg.eigvalsh(self.Q.imag)
        if imq.min() <= 0:
            raise ValueError("Im Q must be positive definite")
        pref = self.norm_const * np.exp(-0.5 * self.logdetC)
        return pref * np.exp(1j * phase / self.hbar)

    def fock(self, k, x):
        """k-th ladder state at positions x (n = 1 only)."""
        if self.n != 1:
            raise ValueError("the Fock ladder is implemented in one dimension")
        if k < 0:
            raise ValueError("k must be nonnegative")
        c = self.C[0, 0]
        d0 = float(np.real(self.D0[0, 0]))
        dx = np.atleast_1d(np.asarray(x, dtype=float)) - self.X[0]
        xi = dx * math.sqrt(d0 / self.hbar) / abs(c)
        h_prev = np.ones_like(xi)
        h = 2.0 * xi
        if k == 0:
            hk = h_prev
        elif k == 1:
            hk = h
        else:
            for j in range(2, k + 1):
                h_prev, h = h, 2.0 * xi * h - 2.0 * (j - 1) * h_prev
            hk = h
        phase = (1j * np.conj(c) / abs(c)) ** k
        return self.vacuum(x) * phase * hk / math.sqrt(2.0**k * math.factorial(k))

    def coefficient_state(self, coeffs, x):
        """sum_k c_k psi_k at positions x (n = 1)."""
        out = np.zeros(np.atleast_1d(x).shape, dtype=complex)
        for k, ck in enumerate(coeffs):
            if ck:
                out = out + ck * self.fock(k, x)
        return out

    def to_grid(self, grid, coeffs=None, k=0):
        """Sample on a Grid1D as a GridWaveFunction (oracle format)."""
        if coeffs is None:
            psi = self.fock(k, grid.x)
        else:
            psi = self.coefficient_state(coeffs, grid.x)
        return GridWaveFunction(grid, psi, self.hbar, self.mass, self.t)


def germ_state(traj, frame, t):
    """Snapshot of trajectory + frame data at time t."""
    B, C, logdetC = frame.at(t)
    st = traj.state_at(t)
    return GermState(
        t=float(t), hbar=traj.hbar, mass=traj.model.mass, Z=st.Z, S=st.S,
        B=B, C=C, logdetC=logdetC, D0=frame.D0,
    )


# ---------------------------------------------------------------------------
# ladder algebra


def ladder_lower(coeffs):
    """a |psi>: (a c)_k = sqrt(k+1) c_{k+1}; shrinks the vector by one."""
    c = np.asarray(coeffs, dtype=complex)
    if c.size <= 1:
        return np.zeros(1, dtype=complex)
    return np.sqrt(np.arange(1, c.size)) * c[1:]


def ladder_raise(coeffs):
    """a+ |psi>: (a+ c)_k = sqrt(k) c_{k-1}; grows the vector by one."""
    c = np.asarray(coeffs, dtype=complex)
    out = np.zeros(c.size + 1, dtype=complex)
    out[1:] = np.sqrt(np.arange(1, c.size + 1)) * c
    return out


def ladder_matrices(K):
    """(a, a+) as (K, K) matrices over |0..K-1>."""
    a = np.zeros((K, K), dtype=complex)
    for k in range(1, K):
        a[k - 1, k] = math.sqrt(k)
    return a, a.conj().T


def dx_dp_matrices(B, C, D0, hbar, K):
    """Centered position/momentum operators over the Fock basis.

    Dx = -i sqrt(hbar/2 D0) (C a+ - C* a),  Dp likewise with B.
    """
    a, ad = ladder_matrices(K)
    s = -1j * math.sqrt(hbar / (2.0 * D0))
    return s * (C * ad - np.conj(C) * a), s * (B * ad - np.conj(B) * a)


def weyl_ordered(factors):
    """Symmetrized (Weyl) product of a sequence of matrices."""
    mats = list(factors)
    if not mats:
        raise ValueError("empty product")
    seen = set()
    total = None
    count = 0
    for perm in permutations(range(len(mats))):
        if perm in seen:
            continue
        seen.add(perm)
        prod = mats[perm[0]]
        for i in perm[1:]:
            prod = prod @ mats[i]
        total = prod if total is None else total + prod
        count += 1
    return total / count


def class_state_moments(coeffs, B, C, D0, hbar, N):
    """Exact centered Weyl moments of sum_k c_k |k> up to order N (n = 1)."""
    c = np.asarray(coeffs, dtype=complex)
    c = c / np.linalg.norm(c)
    K = c.size + N + 2
    cp = np.zeros(K, dtype=complex)
    cp[: c.size] = c
    dxm, dpm = dx_dp_matrices(B, C, D0, hbar, K)
    out = MomentSet()
    for alpha in moment_indices(1, N):
        a, b = alpha
        M = weyl_ordered([dpm] * a + [dxm] * b)
        out[alpha] = float(np.real(np.conj(cp) @ (M @ cp)))
    return out


# ---------------------------------------------------------------------------
# phases


def action_phase(traj, t, n_samples=801):
    """S(t) by composite quadrature of <P,Xdot> - H - interaction scalar.

    Independent of the S column integrated with the trajectory; used to
    cross-check it.
    """
    ts = np.linspace(traj.t[0], float(t), n_samples)
    vals = np.empty(n_samples)
    for i, tau in enumerate(ts):
        st = traj.state_at(tau)
        zdot = traj.rhs_at(tau)
        n = traj.n
        from .moments import _interaction_scalar  # local import avoids a cycle

        vals[i] = st.Z[:n] @ zdot[n : 2 * n] - traj.model.eval_symbol(
            "H", st.Z, t=tau
        ) - _interaction_scalar(traj.model, st.Z, st.moments, traj.kappa_eff,
                                traj.order, tau)
    return float(simpson(vals, x=ts))


def phi1_phase(frame, t, n_samples=801):
    """Real first-correction phase Im(1/2 int Sp[h_px + h_pp Q] dtau).

    The real part of the same integral is the Liouville modulus factor
    1/2 ln|det C / det C(0)|; both are checked against the tracked
    log det C in the tests.
    """
    t0 = frame.t[0]
    ts = np.linspace(t0, float(t), n_samples)
    n = frame.n
    vals = np.empty(n_samples, dtype=complex)
    for i, tau in enumerate(ts):
        hz = frame.traj.hzz_at(tau)
        hpp, hpx = hz[:n, :n], hz[:n, n:]
        vals[i] = 0.5 * np.trace(hpx + hpp @ frame.Q_at(tau))
    val = simpson(vals.real, x=ts) + 1j * simpson(vals.imag, x=ts)
    return float(val.imag)
