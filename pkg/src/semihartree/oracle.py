"""Brute-force reference solver: split-step Fourier integration of the 1-d
nonlocal (Hartree) Schrodinger equation

    i hbar d_t psi = [ -hbar^2/(2m) d_xx + V_ext(x) + kappa (K * |psi|^2)(x) ] psi

plus grid diagnostics: centered Weyl moments, fidelity, and the hbar-scaled
momentum representation.  The interaction is evaluated by Fourier convolution
with the analytic kernel transform; the effective coupling is frozen at the
initial norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid1D",
    "GridWaveFunction",
    "SplitStepConfig",
    "OracleResolutionError",
    "GridSupportError",
    "coherent_packet",
    "propagate_split_step",
    "grid_moments",
    "weyl_moment",
    "mean_phase_point",
    "fidelity",
    "momentum_representation",
]


class OracleResolutionError(RuntimeError):
    """Norm drift or momentum support indicates an under-resolved grid."""


class GridSupportError(RuntimeError):
    """The wavefunction support reaches the grid edge."""


@dataclass(frozen=True)
class Grid1D:
    x0: float
    dx: float
    n: int

    def __post_init__(self):
        if self.n & (self.n - 1):
            raise ValueError("n must be a power of two")

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def k(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def length(self):
        return self.n * self.dx

    @classmethod
    def centered(cls, center, half_width, n):
        dx = 2.0 * half_width / n
        return cls(center - half_width, dx, n)


@dataclass
class GridWaveFunction:
    """Complex samples on a uniform grid, with hbar and mass attached."""

    grid: Grid1D
    psi: np.ndarray
    hbar: float
    mass: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        if self.psi.shape != (self.grid.n,):
            raise ValueError("psi length does not match the grid")

    @property
    def x(self):
        return self.grid.x

    @property
    def norm2(self):
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dx)

    @property
    def norm(self):
        return math.sqrt(self.norm2)

    def normalized(self):
        return GridWaveFunction(self.grid, self.psi / self.norm, self.hbar, self.mass, self.t)

    def copy(self):
        return GridWaveFunction(self.grid, self.psi.copy(), self.hbar, self.mass, self.t)


def coherent_packet(grid, hbar, m=1.0, b=1j, p0=0.0, x0=0.0):
    """Normalized Gaussian exp{(i/hbar)(p0 dx + m b dx^2/2)}, dx = x - x0.

    b is the initial logarithmic-derivative parameter: Im b > 0 sets the
    width hbar/(2 m Im b) of the position variance.
    """
    if b.imag <= 0:
        raise ValueError("Im b must be positive")
    dxv = grid.x - x0
    psi = np.exp(1j * (p0 * dxv + 0.5 * m * b * dxv**2) / hbar)
    psi *= (m * b.imag / (math.pi * hbar)) ** 0.25
    return GridWaveFunction(grid, psi, hbar, m)


@dataclass
class SplitStepConfig:
    dt: float
    kappa: float = 0.0
    kernel: object = None          # ("gaussian", V0, gamma) | ("difference_poly", coeffs) | None
    external_potential: object = None  # callable x -> V_ext(x)
    absorber_width: float = 0.0
    norm_drift_tol: float = 1e-8

    def __post_init__(self):
        if self.dt == 0.0:
            raise ValueError("dt must be nonzero")


def _kernel_transform(kernel, k):
    """Continuum Fourier transform of the interaction kernel on the k grid."""
    kind = kernel[0]
    if kind == "gaussian":
        _, V0, gamma = kernel
        return V0 * gamma * math.sqrt(2.0 * math.pi) * np.exp(-0.5 * (gamma * k) ** 2)
    raise ValueError(f"no spectral transform for kernel {kind!r}")


def _poly_kernel_potential(coeffs, x, rho, dx):
    # sum_j c_j integral (x-y)^j rho(y) dy, expanded over raw moments of rho
    mom = [float(np.sum(x**j * rho) * dx) for j in range(len(coeffs))]
    U = np.zeros_like(x)
    for j, c in enumerate(coeffs):
        if not c:
            continue
        term = np.zeros_like(x)
        for i in range(j + 1):
            term += math.comb(j, i) * (-1.0) ** i * x ** (j - i) * mom[i]
        U += c * term
    return U


def _interaction_potential(config, state, khat_pad, norm2_0):
    rho = np.abs(state.psi) ** 2 / norm2_0
    if config.kernel is None or config.kappa == 0.0:
        return 0.0
    kind = config.kernel[0]
    kappa_eff = config.kappa * norm2_0
    if kind == "gaussian":
        # zero-padded (aperiodic) convolution with the analytic transform
        n = rho.size
        rho_pad = np.zeros(2 * n)
        rho_pad[:n] = rho
        conv = np.fft.ifft(np.fft.fft(rho_pad) * khat_pad).real[:n]
        return kappa_eff * conv
    if kind == "difference_poly":
        return kappa_eff * _poly_kernel_potential(config.kernel[1], state.x, rho, state.grid.dx)
    raise ValueError(f"unknown kernel {kind!r}")


def propagate_split_step(psi0, config, t_eval):
    """Strang-split evolution, sampled at the times in t_eval.

    Returns the list of GridWaveFunction snapshots (t_eval order).  t_eval
    values are snapped to the step grid; t_eval[0] may be 0.
    """
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    if np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must be strictly increasing")
    dt = config.dt
    steps_at = np.rint(t_eval / dt).astype(int)
    if steps_at[-1] < 0:
        raise ValueError("t_eval and dt disagree in sign")

    state = psi0.copy()
    grid = state.grid
    hbar, m = state.hbar, state.mass
    k = grid.k
    half_kinetic = np.exp(-1j * hbar * k**2 * dt / (4.0 * m))
    if config.kernel is not None and config.kernel[0] == "gaussian":
        k_pad = 2.0 * np.pi * np.fft.fftfreq(2 * grid.n, d=grid.dx)
        khat = _kernel_transform(config.kernel, k_pad)
    else:
        khat = None
    vext = config.external_potential(grid.x) if config.external_potential is not None else 0.0
    norm2_0 = state.norm2

    absorber = None
    if config.absorber_width > 0:
        w = config.absorber_width
        edge = np.minimum(grid.x - grid.x[0], grid.x[-1] - grid.x)
        ramp = np.clip(1.0 - edge / w, 0.0, 1.0)
        absorber = np.exp(-10.0 * ramp**2 * abs(dt))

    out = []
    step = 0
    for target in steps_at:
        while step < target:
            psi = np.fft.ifft(half_kinetic * np.fft.fft(state.psi))
            U = _interaction_potential(config, state, khat, norm2_0) + vext
            if isinstance(U, np.ndarray) or U != 0.0:
                psi = psi * np.exp(-1j * U * dt / hbar)
            psi = np.fft.ifft(half_kinetic * np.fft.fft(psi))
            if absorber is not None:
                psi = psi * absorber
            state.psi = psi
            step += 1
            if absorber is None and step % 1000 == 0:
                drift = abs(math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx / norm2_0) - 1.0)
                if drift > config.norm_drift_tol * (step / 1000.0):
                    raise OracleResolutionError(
                        f"norm drift {drift:.2e} after {step} steps exceeds "
                        f"{config.norm_drift_tol:.1e} per 1000 steps"
                    )
        snap = state.copy()
        snap.t = step * dt
        out.append(snap)
    return out


# ---------------------------------------------------------------------------
# grid diagnostics


def _check_support(psi_wf, tol=1e-10):
    rho = np.abs(psi_wf.psi) ** 2
    edge = (rho[:2].sum() + rho[-2:].sum()) * psi_wf.grid.dx
    if edge > tol * psi_wf.norm2:
        raise GridSupportError(f"edge mass {edge:.2e} exceeds {tol:.0e} of the norm")


def mean_phase_point(psi_wf):
    """(P, X): means of momentum and position."""
    rho = np.abs(psi_wf.psi) ** 2
    w = psi_wf.norm2
    X = float(np.sum(psi_wf.x * rho) * psi_wf.grid.dx / w)
    ft = np.fft.fft(psi_wf.psi)
    p = psi_wf.hbar * psi_wf.grid.k
    P = float(np.sum(p * np.abs(ft) ** 2) / np.sum(np.abs(ft) ** 2))
    return P, X


def _dp_power_apply(psi_wf, P, j):
    """(Delta p-hat)^j psi as grid samples."""
    ft = np.fft.fft(psi_wf.psi)
    p = psi_wf.hbar * psi_wf.grid.k
    return np.fft.ifft((p - P) ** j * ft)


def weyl_moment(psi_wf, a, b, center=None):
    """Centered Weyl-symmetrized moment <Weyl{Dp^a Dx^b}> / |psi|^2, a+b <= 4.

    Mixed orders use operator identities: Weyl(p x^2) = x p x,
    Weyl(p^2 x^2) = p x^2 p - hbar^2/2, Weyl(p x^3) = (x^3 p + p x^3)/2, etc.
    """
    _check_support(psi_wf)
    P, X = mean_phase_point(psi_wf) if center is None else center
    dx = psi_wf.grid.dx
    w = psi_wf.norm2
    dxv = psi_wf.x - X
    psi = psi_wf.psi
    hbar = psi_wf.hbar

    if a == 0:
        return float(np.sum(dxv**b * np.abs(psi) ** 2) * dx / w)
    if b == 0:
        ft = np.fft.fft(psi)
        p = hbar * psi_wf.grid.k
        return float(np.sum((p - P) ** a * np.abs(ft) ** 2) / np.sum(np.abs(ft) ** 2))

    def inner(u, v):
        return complex(np.sum(np.conj(u) * v) * dx)

    dpsi = _dp_power_apply(psi_wf, P, 1)
    if (a, b) == (1, 1):
        return float(np.real(inner(psi, dxv * dpsi)) / w)
    if (a, b) == (1, 2):
        phi = dxv * psi
        phi_wf = GridWaveFunction(psi_wf.grid, phi, hbar, psi_wf.mass)
        return float(np.real(inner(phi, _dp_power_apply(phi_wf, P, 1))) / w)
    if (a, b) == (2, 1):
        return float(np.real(inner(dpsi, dxv * dpsi)) / w)
    if (a, b) == (1, 3):
        return float(np.real(inner(psi, dxv**3 * dpsi)) / w)
    if (a, b) == (3, 1):
        # Weyl(p^3 x) = (Dp^3 Dx + Dx Dp^3)/2 -> Re <psi | Dp^3 (dx psi)>
        phi_wf = GridWaveFunction(psi_wf.grid, dxv * psi, hbar, psi_wf.mass)
        return float(np.real(inner(psi, _dp_power_apply(phi_wf, P, 3))) / w)
    if (a, b) == (2, 2):
        return float((np.real(inner(dpsi, dxv**2 * dpsi)) - 0.5 * hbar**2) / w)
    raise ValueError(f"Weyl moment ({a},{b}) not supported (order > 4)")


def grid_moments(psi_wf, order, center=None):
    """Centered position moment of the given order (trapezoid quadrature)."""
    _check_support(psi_wf)
    if center is None:
        _, X = mean_phase_point(psi_wf)
    else:
        X = center
    rho = np.abs(psi_wf.psi) ** 2
    dxv = psi_wf.x - X
    return float(np.trapezoid(dxv**order * rho, dx=psi_wf.grid.dx) / psi_wf.norm2)


def fidelity(psi1, psi2):
    """|<psi1, psi2>| / (|psi1| |psi2|) on a shared grid."""
    if psi1.grid != psi2.grid:
        raise ValueError("wavefunctions live on different grids")
    ov = np.sum(np.conj(psi1.psi) * psi2.psi) * psi1.grid.dx
    return float(abs(ov) / (psi1.norm * psi2.norm))


def momentum_representation(psi_wf):
    """hbar-scaled unitary Fourier transform, returned on the sorted p grid."""
    grid = psi_wf.grid
    hbar = psi_wf.hbar
    ft = np.fft.fft(psi_wf.psi)
    k = grid.k
    phase = np.exp(-1j * k * grid.x0)
    psit = grid.dx / math.sqrt(2.0 * math.pi * hbar) * phase * ft
    order = np.argsort(k)
    p_sorted = hbar * k[order]
    dp = p_sorted[1] - p_sorted[0]
    pgrid = Grid1D(float(p_sorted[0]), float(dp), grid.n)
    return GridWaveFunction(pgrid, psit[order], hbar, psi_wf.mass, psi_wf.t)
