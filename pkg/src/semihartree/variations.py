"""Linearized dynamics along a Hamilton-Ehrenfest trajectory.

The complex frame (B(t), C(t)) solves

    Bdot = -h_xp B - h_xx C,      Cdot = h_pp B + h_px C,

with h_zz(t) the effective second-derivative matrix on the trajectory.  The
frame generates the Riccati solution Q = B C^{-1}, carries the conserved
pairings D0 = (C+B - B+C)/2i and D0~ = Ct B - Bt C, and its log-determinant
is integrated alongside so that sqrt(det C) never leaves its branch.

The real fundamental matrix A(t) of the same linear system supplies the
blocks entering the short-wave Green kernel; block extraction follows the
convention fixed by the free-particle kernel (lambda3 = -t/m there).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson, solve_ivp

from .symbols import symplectic_matrix

__all__ = [
    "skew_product",
    "FrameTrajectory",
    "integrate_variations",
    "conserved_invariants",
    "q_and_riccati_residual",
    "MatriciantResult",
    "matriciant_and_liouville",
]


def skew_product(a1, a2):
    """{a1, a2} = <a1, J a2>, bilinear (no conjugation)."""
    a1 = np.asarray(a1)
    a2 = np.asarray(a2)
    if a1.shape != a2.shape or a1.size % 2:
        raise ValueError("arguments must be equal-length 2n vectors")
    n = a1.size // 2
    J = symplectic_matrix(n)
    return complex(a1 @ (J @ a2))


class FrameTrajectory:
    """Dense solution of the equations in variations with tracked log det C."""

    def __init__(self, traj, B0, C0, sol, n):
        self.traj = traj
        self.n = n
        self.sol = sol
        self.t = sol.t
        self.B0 = B0
        self.C0 = C0
        self.D0 = (C0.conj().T @ B0 - B0.conj().T @ C0) / 2j
        self.D0_tilde = C0.T @ B0 - B0.T @ C0
        self.hbar = traj.hbar

    def _unpack(self, y):
        n = self.n
        B = y[: n * n].reshape(n, n)
        C = y[n * n : 2 * n * n].reshape(n, n)
        return B, C, y[2 * n * n]

    def at(self, t):
        """(B, C, logdetC) at time t."""
        return self._unpack(self.sol.sol(float(t)))

    def B_at(self, t):
        return self.at(t)[0]

    def C_at(self, t):
        return self.at(t)[1]

    def logdetC_at(self, t):
        return self.at(t)[2]

    def Q_at(self, t):
        B, C, _ = self.at(t)
        return B @ np.linalg.inv(C)

    def columns_at(self, t):
        """Solutions a_k(t) of the variational system as 2n-vectors."""
        B, C, _ = self.at(t)
        return [np.concatenate([B[:, k], C[:, k]]) for k in range(self.n)]


def integrate_variations(traj, B0, C0, t_span, rtol=1e-11, atol=1e-11, t_eval=None):
    """Integrate the frame over t_span along the given trajectory."""
    n = traj.n
    B0 = np.atleast_2d(np.asarray(B0, dtype=complex))
    C0 = np.atleast_2d(np.asarray(C0, dtype=complex))

    def rhs(t, y):
        B = y[: n * n].reshape(n, n)
        C = y[n * n : 2 * n * n].reshape(n, n)
        h = traj.hzz_at(t)
        hpp, hpx, hxp, hxx = h[:n, :n], h[:n, n:], h[n:, :n], h[n:, n:]
        Bdot = -hxp @ B - hxx @ C
        Cdot = hpp @ B + hpx @ C
        ldot = np.trace(Cdot @ np.linalg.inv(C))
        return np.concatenate([Bdot.ravel(), Cdot.ravel(), [ldot]])

    logdet0 = np.log(np.linalg.det(C0).astype(complex))
    y0 = np.concatenate([B0.ravel(), C0.ravel(), [logdet0]])
    sol = solve_ivp(
        rhs, t_span, y0, method="RK45", rtol=rtol, atol=atol,
        dense_output=True, t_eval=t_eval,
    )
    if not sol.success:
        raise RuntimeError(f"frame integration failed: {sol.message}")
    frame = FrameTrajectory(traj, B0, C0, sol, n)
    # branch guard: det C near zero breaks sqrt(det C) tracking; with positive
    # definite D0 it also contradicts the germ nondegeneracy
    ts = np.linspace(t_span[0], t_span[1], 257)
    dets = np.array([np.linalg.det(frame.C_at(t)) for t in ts])
    if np.min(np.abs(dets)) < 1e-8 * np.median(np.abs(dets)):
        posdef = bool(np.all(np.linalg.eigvalsh(frame.D0) > 0))
        raise RuntimeError(
            "det C(t) passes through zero"
            + (" despite positive definite D0" if posdef else " (D0 not positive definite)")
        )
    return frame


def conserved_invariants(frame, times):
    """Recompute D0, D0~ along the frame and report their worst drift."""
    d0_drift = 0.0
    d0t_drift = 0.0
    for t in times:
        B, C, _ = frame.at(t)
        D0 = (C.conj().T @ B - B.conj().T @ C) / 2j
        D0t = C.T @ B - B.T @ C
        d0_drift = max(d0_drift, float(np.max(np.abs(D0 - frame.D0))))
        d0t_drift = max(d0t_drift, float(np.max(np.abs(D0t - frame.D0_tilde))))
    return {"D0": frame.D0, "D0_tilde": frame.D0_tilde,
            "D0_drift": d0_drift, "D0_tilde_drift": d0t_drift}


def q_and_riccati_residual(frame, times, fd_step=None):
    """Max Riccati residual ||Qdot + h_xx + Q h_px + h_xp Q + Q h_pp Q||.

    Qdot comes from 4th-order central differences of frame samples; the
    returned dict also reports the worst symmetry violation of Q and the
    Im Q = (C+)^{-1} D0 C^{-1} identity.
    """
    times = np.asarray(times, dtype=float)
    h = fd_step if fd_step is not None else min(np.diff(times).min() / 4.0, 1e-3)
    n = frame.n
    worst = 0.0
    sym = 0.0
    imq_id = 0.0
    min_imq_eig = np.inf
    for t in times:
        Qm2, Qm1 = frame.Q_at(t - 2 * h), frame.Q_at(t - h)
        Qp1, Qp2 = frame.Q_at(t + h), frame.Q_at(t + 2 * h)
        Q = frame.Q_at(t)
        Qdot = (-Qp2 + 8 * Qp1 - 8 * Qm1 + Qm2) / (12 * h)
        hz = frame.traj.hzz_at(t)
        hpp, hpx, hxp, hxx = hz[:n, :n], hz[:n, n:], hz[n:, :n], hz[n:, n:]
        res = Qdot + hxx + Q @ hpx + hxp @ Q + Q @ hpp @ Q
        worst = max(worst, float(np.max(np.abs(res))))
        sym = max(sym, float(np.max(np.abs(Q - Q.T))))
        B, C, _ = frame.at(t)
        Cinv = np.linalg.inv(C)
        imq_id = max(imq_id, float(np.max(np.abs(
            Q.imag - (Cinv.conj().T @ frame.D0 @ Cinv).real
        ))))
        min_imq_eig = min(min_imq_eig, float(np.linalg.eigvalsh(Q.imag).min()))
    return {"riccati_residual": worst, "q_symmetry": sym,
            "imq_identity": imq_id, "min_imq_eigenvalue": min_imq_eig}


@dataclass
class MatriciantResult:
    t: np.ndarray
    A: np.ndarray            # (nt, 2n, 2n)
    lam1: np.ndarray
    lam2: np.ndarray
    lam3: np.ndarray
    lam4: np.ndarray
    symplectic_residual: float
    identity_residual: float     # lam1^T lam4 - lam3^T lam2 - I
    commut_residual: float       # lam3 lam4^T - lam4 lam3^T
    liouville_mismatch: float
    b15_residual: float
    b16_residual: float
    b24_residual: float
    b28_residual: float


def _blocks(A, n):
    return A[:n, :n], A[:n, n:], A[n:, :n], A[n:, n:]


def matriciant_and_liouville(traj, frame, t_span, n_samples=33, rtol=1e-11, atol=1e-11):
    """Integrate A(t) (A(s)=I) and check the block identities and the
    Liouville prefactor relation against the frame's tracked log det C."""
    n = traj.n
    d = 2 * n
    J = symplectic_matrix(n)
    s0, t1 = t_span

    def rhs(t, y):
        A = y.reshape(d, d)
        return (J @ traj.hzz_at(t) @ A).ravel()

    sol = solve_ivp(rhs, t_span, np.eye(d).ravel(), method="RK45",
                    rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"matriciant integration failed: {sol.message}")

    ts = np.linspace(s0, t1, n_samples)
    A = np.array([sol.sol(t).reshape(d, d) for t in ts])
    m_pp = A[:, :n, :n]
    m_px = A[:, :n, n:]
    m_xp = A[:, n:, :n]
    m_xx = A[:, n:, n:]
    lam4 = np.transpose(m_pp, (0, 2, 1))
    lam1 = np.transpose(m_xx, (0, 2, 1))
    lam2 = -np.transpose(m_px, (0, 2, 1))
    lam3 = -np.transpose(m_xp, (0, 2, 1))

    eye = np.eye(n)
    sympl = max(float(np.max(np.abs(a.T @ J @ a - J))) for a in A)
    ident = max(
        float(np.max(np.abs(l1.T @ l4 - l3.T @ l2 - eye)))
        for l1, l2, l3, l4 in zip(lam1, lam2, lam3, lam4)
    )
    commut = max(
        float(np.max(np.abs(l3 @ l4.T - l4 @ l3.T)))
        for l3, l4 in zip(lam3, lam4)
    )

    # Liouville: exp(-1/2 int Sp[h_pp Q + h_px]) = sqrt(det C(s0)/det C(t))
    tq = np.linspace(s0, t1, 8 * n_samples + 1)
    integ = np.empty(tq.size, dtype=complex)
    for i, t in enumerate(tq):
        hz = traj.hzz_at(t)
        hpp, hpx = hz[:n, :n], hz[:n, n:]
        integ[i] = np.trace(hpp @ frame.Q_at(t) + hpx)
    cum = (cumulative_simpson(integ.real, x=tq, initial=0.0)
           + 1j * cumulative_simpson(integ.imag, x=tq, initial=0.0))
    logdet0 = frame.logdetC_at(s0)
    liou = max(
        float(abs(np.exp(-0.5 * cum[i]) - np.exp(-0.5 * (frame.logdetC_at(t) - logdet0))))
        for i, t in enumerate(tq)
    )

    # (B.15)/(B.16) hold for D0 > 0 and D0~ = 0
    b15 = b16 = 0.0
    if np.all(np.linalg.eigvalsh(frame.D0) > 0) and np.max(np.abs(frame.D0_tilde)) < 1e-12:
        D0inv = np.linalg.inv(frame.D0)
        for t in ts:
            B, C, _ = frame.at(t)
            r1 = C.conj() @ D0inv @ B.T - C @ D0inv @ B.conj().T - 2j * eye
            r1b = B @ D0inv @ C.conj().T - B.conj() @ D0inv @ C.T - 2j * eye
            r2 = C.conj() @ D0inv @ C.T - C @ D0inv @ C.conj().T
            r2b = B @ D0inv @ B.conj().T - B.conj() @ D0inv @ B.T
            b15 = max(b15, float(np.max(np.abs(r1))), float(np.max(np.abs(r1b))))
            b16 = max(b16, float(np.max(np.abs(r2))), float(np.max(np.abs(r2b))))

    # (B.24): 2i B^-1 h_xx (B^-1)^t = d/dt [D0^-1 B+ (B^t)^-1]
    b24 = 0.0
    if np.all(np.linalg.eigvalsh(frame.D0) > 0):
        D0inv = np.linalg.inv(frame.D0)
        hfd = (t1 - s0) / (8.0 * n_samples)

        def rhs_b24(t):
            B = frame.B_at(t)
            return D0inv @ B.conj().T @ np.linalg.inv(B.T)

        for t in ts[1:-1]:
            B = frame.B_at(t)
            if abs(np.linalg.det(B)) < 1e-10:
                continue
            Binv = np.linalg.inv(B)
            hz = traj.hzz_at(t)
            lhs = 2j * Binv @ hz[n:, n:] @ Binv.T
            der = (-rhs_b24(t + 2 * hfd) + 8 * rhs_b24(t + hfd)
                   - 8 * rhs_b24(t - hfd) + rhs_b24(t - 2 * hfd)) / (12 * hfd)
            b24 = max(b24, float(np.max(np.abs(lhs - der))))

    # (B.28) with B0 = I: int_s^t Bt^-1 h_xx (Bt^-1)^t = lam2 lam4^-1
    vals = np.empty((tq.size, n, n), dtype=float)
    ok = True
    for i, t in enumerate(tq):
        Abt = sol.sol(t).reshape(d, d)
        Bt = Abt[:n, :n]  # = lam4^T = the (I,0)-Cauchy frame B
        if abs(np.linalg.det(Bt)) < 1e-12:
            ok = False
            break
        Binv = np.linalg.inv(Bt)
        vals[i] = Binv @ traj.hzz_at(t)[n:, n:] @ Binv.T
    b28 = 0.0
    if ok:
        lhs = simpson(vals, x=tq, axis=0)
        rhs_v = lam2[-1] @ np.linalg.inv(lam4[-1])
        b28 = float(np.max(np.abs(lhs - rhs_v)))

    return MatriciantResult(
        t=ts, A=A, lam1=lam1, lam2=lam2, lam3=lam3, lam4=lam4,
        symplectic_residual=sympl, identity_residual=ident,
        commut_residual=commut, liouville_mismatch=liou,
        b15_residual=b15, b16_residual=b16, b24_residual=b24, b28_residual=b28,
    )
