"""Short-wave Green kernel of the linearized equation and the first
sqrt(hbar) correction.

The order-0 kernel over a caustic-free window [s, t] is

    G(x, y) = det(2 pi i hbar Ct)^{-1/2}
              exp{(i/hbar)[S(t) - S(s) + <P(t),dx> - <P(s),dy>
                           + 1/2 <dx, Bt Ct^-1 dx> - <dx, (Ct^T)^-1 dy>
                           + 1/2 <dy, Ct^-1 Ch dy>]},

where (Bt, Ct) and (Bh, Ch) solve the equations in variations over [s, t]
with Cauchy data (I, 0) and (0, I).  The prefactor branch is fixed by
unwrapping arg det Ct continuously from the short-time limit.  The same
propagator is also available as the truncated ladder-state sum
sum_k psi_k(x,t) conj(psi_k(y,s)), which is the convergence cross-check.

The first correction is integrated over Fock coefficients:

    d_nu(t) = -(i/hbar) int_0^t <nu,tau| W(tau) |Phi0(tau)> dtau,

with W the cubic part of the expanded Hamiltonian (third z-derivatives of H
plus the kernel terms weighted by third/second moments), expressed through
finite ladder matrices.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .oracle import GridWaveFunction
from .states import dx_dp_matrices, germ_state, weyl_ordered

__all__ = [
    "CausticError",
    "Order0Kernel",
    "make_kernel_order0",
    "apply_kernel",
    "compose_residual",
    "spectral_kernel_matrix",
    "kernel_matrix",
    "CorrectionState",
    "phi1_correction_1d",
    "corrected_coefficients",
]

_CAUSTIC_RTOL = 1e-8


class CausticError(RuntimeError):
    """det(lambda3) too small: the window touches a caustic."""


@dataclass
class Order0Kernel:
    hbar: float
    s: float
    t: float
    Zs: np.ndarray
    Zt: np.ndarray
    Ss: float
    St: float
    Bt: np.ndarray          # momentum-Cauchy frame (I,0) at t
    Ct: np.ndarray
    Bh: np.ndarray          # position-Cauchy frame (0,I) at t
    Ch: np.ndarray
    logdetCt: complex       # branch-tracked

    @property
    def n(self):
        return self.Zs.size // 2

    # matriciant blocks in the convention of the variations module
    @property
    def lam1(self):
        return self.Ch.T

    @property
    def lam2(self):
        return -self.Bh.T

    @property
    def lam3(self):
        return -self.Ct.T

    @property
    def lam4(self):
        return self.Bt.T

    def _check_caustic(self):
        det = np.linalg.det(self.Ct)
        scale = np.linalg.norm(self.Ct, ord=2) ** self.n
        if abs(det) < _CAUSTIC_RTOL * max(scale, 1e-300):
            raise CausticError(
                f"|det lambda3| = {abs(det):.2e} below threshold on [{self.s}, {self.t}]"
            )

    def evaluate(self, x, y):
        """Kernel values; broadcasts x (rows) against y (columns) for n=1."""
        self._check_caustic()
        n = self.n
        if n != 1:
            raise NotImplementedError("grid evaluation is one-dimensional")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        dx = (x - self.Zt[1])[:, None]
        dy = (y - self.Zs[1])[None, :]
        ct = self.Ct[0, 0]
        a = self.Bt[0, 0] / ct
        b = -1.0 / ct
        c = self.Ch[0, 0] / ct
        phase = (
            self.St - self.Ss
            + self.Zt[0] * dx - self.Zs[0] * dy
            + 0.5 * a * dx**2 + b * dx * dy + 0.5 * c * dy**2
        )
        log2pi = math.log(2.0 * math.pi * self.hbar) + 0.5j * math.pi
        pref = np.exp(-0.5 * (log2pi + self.logdetCt))
        return pref * np.exp(1j * phase / self.hbar)


def make_kernel_order0(traj, s, t, rtol=1e-11, atol=1e-11, n_track=512):
    """Integrate the two frame Cauchy problems over [s, t] and assemble the kernel."""
    n = traj.n
    d = n * n

    def rhs(tau, y):
        Bt = y[:d].reshape(n, n)
        Ct = y[d : 2 * d].reshape(n, n)
        Bh = y[2 * d : 3 * d].reshape(n, n)
        Ch = y[3 * d :].reshape(n, n)
        h = traj.hzz_at(tau)
        hpp, hpx, hxp, hxx = h[:n, :n], h[:n, n:], h[n:, :n], h[n:, n:]
        out = np.concatenate([
            (-hxp @ Bt - hxx @ Ct).ravel(),
            (hpp @ Bt + hpx @ Ct).ravel(),
            (-hxp @ Bh - hxx @ Ch).ravel(),
            (hpp @ Bh + hpx @ Ch).ravel(),
        ])
        return out

    eye = np.eye(n, dtype=complex)
    zero = np.zeros((n, n), dtype=complex)
    y0 = np.concatenate([eye.ravel(), zero.ravel(), zero.ravel(), eye.ravel()])
    sol = solve_ivp(rhs, (s, t), y0, method="RK45", rtol=rtol, atol=atol,
                    dense_output=True)
    if not sol.success:
        raise RuntimeError(f"kernel frame integration failed: {sol.message}")

    # branch-track log det Ct from the short-time limit
    delta = 1e-6 * (t - s)
    taus = np.concatenate([[s + delta], np.linspace(s + 10 * delta, t, n_track)])
    dets = np.array([np.linalg.det(sol.sol(tau)[d : 2 * d].reshape(n, n)) for tau in taus])
    if np.any(np.abs(dets) == 0.0):
        raise CausticError("det lambda3 vanished inside the window")
    args = np.unwrap(np.angle(dets))
    steps = np.abs(np.diff(args))
    if steps.max(initial=0.0) > 0.5 * math.pi:
        raise RuntimeError("branch tracking failed: arg det C jumps faster than sampling")
    logdet = math.log(abs(dets[-1])) + 1j * args[-1]

    yt = sol.sol(t)
    st_s = traj.state_at(s)
    st_t = traj.state_at(t)
    kern = Order0Kernel(
        hbar=traj.hbar, s=float(s), t=float(t),
        Zs=st_s.Z, Zt=st_t.Z, Ss=st_s.S, St=st_t.S,
        Bt=yt[:d].reshape(n, n), Ct=yt[d : 2 * d].reshape(n, n),
        Bh=yt[2 * d : 3 * d].reshape(n, n), Ch=yt[3 * d :].reshape(n, n),
        logdetCt=logdet,
    )
    kern._check_caustic()
    return kern


def apply_kernel(kern, psi_wf, chunk=256):
    """Quadrature of int G(x,y) psi(y) dy on the wavefunction's grid."""
    grid = psi_wf.grid
    rho = np.abs(psi_wf.psi) ** 2
    edge = (rho[:2].sum() + rho[-2:].sum()) * grid.dx
    if edge > 1e-8 * psi_wf.norm2:
        raise ValueError("support reaches the grid edge; the convolution would alias")
    out = np.empty(grid.n, dtype=complex)
    x = grid.x
    for i0 in range(0, grid.n, chunk):
        block = kern.evaluate(x[i0 : i0 + chunk], x)
        out[i0 : i0 + chunk] = block @ psi_wf.psi * grid.dx
    return GridWaveFunction(grid, out, psi_wf.hbar, psi_wf.mass, kern.t)


def compose_residual(kern_ab, kern_bc, kern_ac, test_states):
    """||(G_bc o G_ab - G_ac) psi|| / ||psi||, max over the test states."""
    worst = 0.0
    for psi in test_states:
        lhs = apply_kernel(kern_bc, apply_kernel(kern_ab, psi))
        rhs = apply_kernel(kern_ac, psi)
        num = math.sqrt(float(np.sum(np.abs(lhs.psi - rhs.psi) ** 2) * psi.grid.dx))
        worst = max(worst, num / psi.norm)
    return worst


def kernel_matrix(kern, x, y):
    return kern.evaluate(x, y)


def spectral_kernel_matrix(traj, frame, s, t, K, x, y):
    """Truncated ladder-state sum  sum_{k<=K} psi_k(x,t) conj(psi_k(y,s)).

    The pointwise sum converges only distributionally (the squeeze factor
    between the two germs is unimodular); use `spectral_apply` for the
    operator-action comparison against the closed-form kernel.
    """
    if s == t:
        raise ValueError("the equal-time spectral sum is a delta function")
    gs_t = germ_state(traj, frame, t)
    gs_s = germ_state(traj, frame, s)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.zeros((x.size, y.size), dtype=complex)
    for k in range(K + 1):
        fx = gs_t.fock(k, x)
        fy = gs_s.fock(k, y)
        out += fx[:, None] * np.conj(fy)[None, :]
    return out


def spectral_apply(traj, frame, s, t, K, psi_wf):
    """Apply the K-truncated spectral propagator to a grid state at time s."""
    gs_t = germ_state(traj, frame, t)
    gs_s = germ_state(traj, frame, s)
    x = psi_wf.grid.x
    out = np.zeros(x.size, dtype=complex)
    for k in range(K + 1):
        ck = np.sum(np.conj(gs_s.fock(k, x)) * psi_wf.psi) * psi_wf.grid.dx
        out += ck * gs_t.fock(k, x)
    return GridWaveFunction(psi_wf.grid, out, psi_wf.hbar, psi_wf.mass, float(t))


# ---------------------------------------------------------------------------
# first correction (1-d)


@dataclass
class CorrectionState:
    t: float
    c0: np.ndarray          # principal-term coefficients (frozen)
    d: np.ndarray           # correction coefficients over the same basis
    tail_mass: float

    def corrected(self):
        return self.c0 + self.d


def _h1_matrix(model, Z, moments, kappa_eff, dxm, dpm, t):
    """Cubic part of the expanded Hamiltonian as a ladder-basis matrix.

    Includes the linear counter-term: the trajectory's drift already carries
    the second-moment correction 1/2 <dz, D2 dz> grad(H + kV), so the same
    contraction must be subtracted from the linear part of the expansion.
    """
    K = dxm.shape[0]
    H1 = np.zeros((K, K), dtype=complex)

    def d3(mu):
        v = model.eval_derivative("H", mu, z=Z, t=t)
        if model.kernel is not None and kappa_eff:
            v += kappa_eff * model.eval_derivative("V", mu, (0, 0), z=Z, w=Z, t=t)
        return v

    third = [(3, 0), (2, 1), (1, 2), (0, 3)]
    for a, b in third:
        coeff = d3((a, b)) / (math.factorial(a) * math.factorial(b))
        if coeff:
            H1 += coeff * weyl_ordered([dpm] * a + [dxm] * b)

    D2 = moments.delta2(1)
    for i, op in enumerate([dpm, dxm]):
        coeff = 0.0
        for j in range(2):
            for k in range(2):
                if D2[j, k] == 0.0:
                    continue
                mu = [0, 0]
                mu[i] += 1
                mu[j] += 1
                mu[k] += 1
                coeff += D2[j, k] * d3(tuple(mu))
        if coeff:
            H1 -= 0.5 * coeff * op
    if model.kernel is not None and kappa_eff:
        # moment-weighted kernel terms with |alpha + beta| = 3, |beta| >= 1
        for (a, b), alphas in {
            (1, 0): [(2, 0), (1, 1), (0, 2)],
            (0, 1): [(2, 0), (1, 1), (0, 2)],
        }.items():
            op = dpm if a else dxm
            for alpha in alphas:
                mom = moments.moment(alpha)
                if not mom:
                    continue
                coeff = kappa_eff * model.eval_derivative(
                    "V", (a, b), alpha, z=Z, w=Z, t=t
                ) * mom / _fact2(alpha)
                if coeff:
                    H1 += coeff * op
        # |beta| = 0, |alpha| = 3: scalar (global phase) term
        scal = 0.0
        for alpha in [(3, 0), (2, 1), (1, 2), (0, 3)]:
            mom = moments.moment(alpha)
            if mom:
                scal += kappa_eff * model.eval_derivative(
                    "V", (0, 0), alpha, z=Z, w=Z, t=t
                ) * mom / _fact2(alpha)
        if scal:
            H1 += scal * np.eye(K)
    return H1


def _fact2(alpha):
    return math.factorial(alpha[0]) * math.factorial(alpha[1])


def phi1_correction_1d(model, traj, frame, c0, t, K=16, n_samples=401):
    """First-correction Fock coefficients d_nu(t) for Phi0 = sum c0_nu |nu,t>.

    Needs third moments along the trajectory; when the trajectory was
    integrated at order 2 they are taken as zero (warned once).
    """
    if model.n != 1:
        raise ValueError("the correction is implemented in one dimension")
    c0 = np.asarray(c0, dtype=complex)
    Kb = max(K + 1, c0.size + 3)
    cpad = np.zeros(Kb, dtype=complex)
    cpad[: c0.size] = c0
    if traj.order < 3 and model.kernel is not None and traj.kappa_eff:
        warnings.warn(
            "third moments unavailable at order 2; kernel moment terms use zeros",
            stacklevel=2,
        )
    d0 = float(np.real(frame.D0[0, 0]))
    ts = np.linspace(traj.t[0], float(t), n_samples)
    integrand = np.zeros((n_samples, Kb), dtype=complex)
    for i, tau in enumerate(ts):
        st = traj.state_at(tau)
        B, C, _ = frame.at(tau)
        dxm, dpm = dx_dp_matrices(B[0, 0], C[0, 0], d0, traj.hbar, Kb)
        H1 = _h1_matrix(model, st.Z, st.moments, traj.kappa_eff, dxm, dpm, tau)
        integrand[i] = H1 @ cpad
    from scipy.integrate import simpson

    d = -1j / traj.hbar * (
        simpson(integrand.real, x=ts, axis=0) + 1j * simpson(integrand.imag, x=ts, axis=0)
    )
    tail = float(np.sum(np.abs(d[K - 2 :]) ** 2)) if K >= 2 else 0.0
    return CorrectionState(t=float(t), c0=cpad, d=d, tail_mass=tail)


def corrected_coefficients(corr):
    return corr.corrected()
