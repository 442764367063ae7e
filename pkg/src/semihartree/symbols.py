"""Weyl-symbol models: Hamiltonian symbols H(z,t), two-point interaction
kernels V(z,w,t), and their analytic partial derivatives.

Phase-space points are ordered momentum-first, z = (p_1..p_n, x_1..x_n).
Multi-indices are length-2n tuples of nonnegative integers in the same
ordering.  All shipped models are time-independent; the `t` argument is kept
in the evaluator signatures so time-dependent symbols can be dropped in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "symplectic_matrix",
    "PhasePoint",
    "PolynomialSymbol",
    "GaussianKernel",
    "DifferenceKernel1D",
    "SymbolModel",
    "free_model",
    "harmonic_model",
    "anharmonic_model",
    "gauss_model_1d",
    "poly_kernel_model_1d",
    "validate_derivatives",
    "DerivativeReport",
]

_SQRT2 = math.sqrt(2.0)


def symplectic_matrix(n):
    """Unit symplectic matrix J = [[0, -I], [I, 0]] for momentum-first ordering."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


@dataclass(frozen=True)
class PhasePoint:
    """A point (p, x) of the 2n-dimensional phase space."""

    p: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "x", x)
        if p.shape != x.shape or p.ndim != 1:
            raise ValueError("p and x must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(x))):
            raise ValueError("phase point entries must be finite")

    @property
    def n(self):
        return self.p.size

    @property
    def z(self):
        """Flat phase vector (p_1..p_n, x_1..x_n)."""
        return np.concatenate([self.p, self.x])

    @classmethod
    def from_z(cls, z):
        z = np.asarray(z, dtype=float)
        n = z.size // 2
        return cls(z[:n], z[n:])


def _as_multi_index(mu, n):
    mu = tuple(int(m) for m in mu)
    if len(mu) != 2 * n or any(m < 0 for m in mu):
        raise ValueError(f"multi-index {mu} invalid for dimension n={n}")
    return mu


class PolynomialSymbol:
    """Polynomial phase-space symbol sum_alpha c_alpha z^alpha.

    coeffs maps length-2n multi-indices to real coefficients.  Derivatives of
    any order are exact.
    """

    def __init__(self, n, coeffs):
        self.n = n
        self.coeffs = {_as_multi_index(a, n): float(c) for a, c in coeffs.items()}
        self.degree = max((sum(a) for a in self.coeffs), default=0)

    def value(self, z, t=0.0):
        z = np.asarray(z, dtype=float)
        out = 0.0
        for a, c in self.coeffs.items():
            term = c
            for zi, ai in zip(z, a):
                if ai:
                    term *= zi**ai
            out += term
        return out

    def derivative(self, mu, z, t=0.0):
        mu = _as_multi_index(mu, self.n)
        z = np.asarray(z, dtype=float)
        out = 0.0
        for a, c in self.coeffs.items():
            if any(ai < mi for ai, mi in zip(a, mu)):
                continue
            term = c
            for zi, ai, mi in zip(z, a, mu):
                if mi:
                    term *= math.factorial(ai) / math.factorial(ai - mi)
                    ai -= mi
                if ai:
                    term *= zi**ai
            out += term
        return out


def _gauss_derivative_1d(u, order, gamma):
    """order-th derivative of exp(-u^2/(2 gamma^2)) with respect to u."""
    s = u / (gamma * _SQRT2)
    g = math.exp(-(s * s))
    if order == 0:
        return g
    # d^k/du^k e^{-u^2/2g^2} = (-1/(g sqrt2))^k H_k(u/(g sqrt2)) e^{-s^2}
    h_prev, h = 1.0, 2.0 * s
    for k in range(2, order + 1):
        h_prev, h = h, 2.0 * s * h - 2.0 * (k - 1) * h_prev
    return (-1.0 / (gamma * _SQRT2)) ** order * h * g


class GaussianKernel:
    """Interaction kernel V(z,w) = V0 * exp(-|x-y|^2 / (2 gamma^2)).

    Depends on the position parts only; any momentum derivative vanishes.
    Separable across axes, so mixed derivatives are products of 1-d factors.
    """

    def __init__(self, n, V0, gamma):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.n = n
        self.V0 = float(V0)
        self.gamma = float(gamma)

    def value(self, z, w, t=0.0):
        n = self.n
        u = np.asarray(z, dtype=float)[n:] - np.asarray(w, dtype=float)[n:]
        return self.V0 * math.exp(-float(u @ u) / (2.0 * self.gamma**2))

    def derivative(self, mu, nu, z, w, t=0.0):
        n = self.n
        mu = _as_multi_index(mu, n)
        nu = _as_multi_index(nu, n)
        if any(mu[:n]) or any(nu[:n]):
            return 0.0
        u = np.asarray(z, dtype=float)[n:] - np.asarray(w, dtype=float)[n:]
        out = self.V0
        for i in range(n):
            a, b = mu[n + i], nu[n + i]
            # each d/dy_i contributes a factor (-1)
            out *= (-1.0) ** b * _gauss_derivative_1d(u[i], a + b, self.gamma)
        return out


class DifferenceKernel1D:
    """1-d polynomial difference kernel V(z,w) = sum_k c_k (x - y)^k."""

    def __init__(self, coeffs):
        self.n = 1
        self.coeffs = [float(c) for c in coeffs]

    def _f(self, u, order):
        out = 0.0
        for k, c in enumerate(self.coeffs):
            if c and k >= order:
                out += c * math.factorial(k) / math.factorial(k - order) * u ** (k - order)
        return out

    def value(self, z, w, t=0.0):
        return self._f(float(z[1]) - float(w[1]), 0)

    def derivative(self, mu, nu, z, w, t=0.0):
        mu = _as_multi_index(mu, 1)
        nu = _as_multi_index(nu, 1)
        if mu[0] or nu[0]:
            return 0.0
        u = float(z[1]) - float(w[1])
        return (-1.0) ** nu[1] * self._f(u, mu[1] + nu[1])


@dataclass
class SymbolModel:
    """Evaluator bundle for one model: H, optional V, and derivative tables.

    Immutable in practice (evaluators are pure); safe for concurrent reads.
    """

    n: int
    hamiltonian: PolynomialSymbol
    kernel: object = None
    mass: float = 1.0
    kappa: float = 0.0
    max_order: int = 6
    params: dict = field(default_factory=dict)
    name: str = "model"

    @property
    def J(self):
        return symplectic_matrix(self.n)

    def eval_symbol(self, which, z, w=None, t=0.0):
        if which == "H":
            return self.hamiltonian.value(np.asarray(z, dtype=float), t)
        if which == "V":
            if self.kernel is None:
                raise ValueError(f"model {self.name!r} has no interaction kernel")
            if w is None:
                raise ValueError("V requires the second phase point w")
            return self.kernel.value(np.asarray(z, dtype=float), np.asarray(w, dtype=float), t)
        raise ValueError("which must be 'H' or 'V'")

    def eval_derivative(self, which, mu, nu=None, z=None, w=None, t=0.0):
        mu = _as_multi_index(mu, self.n)
        order = sum(mu) + (sum(nu) if nu is not None else 0)
        if order > self.max_order:
            raise ValueError(f"derivative order {order} exceeds max_order={self.max_order}")
        if which == "H":
            return self.hamiltonian.derivative(mu, np.asarray(z, dtype=float), t)
        if which == "V":
            if self.kernel is None:
                raise ValueError(f"model {self.name!r} has no interaction kernel")
            nu = (0,) * (2 * self.n) if nu is None else _as_multi_index(nu, self.n)
            return self.kernel.derivative(mu, nu, np.asarray(z, dtype=float), np.asarray(w, dtype=float), t)
        raise ValueError("which must be 'H' or 'V'")

    # -- second-derivative blocks used by the linearized dynamics --

    def h_zz_eff(self, z, kappa_eff, t=0.0):
        """2n x 2n matrix H_zz + kappa_eff * V_zz evaluated at w = z."""
        d = 2 * self.n
        M = np.zeros((d, d))
        for i in range(d):
            for j in range(i, d):
                mu = [0] * d
                mu[i] += 1
                mu[j] += 1
                val = self.hamiltonian.derivative(tuple(mu), z, t)
                if self.kernel is not None and kappa_eff:
                    val += kappa_eff * self.kernel.derivative(
                        tuple(mu), (0,) * d, z, z, t
                    )
                M[i, j] = M[j, i] = val
        return M

    def blocks(self, M):
        """Split a 2n x 2n matrix into (h_pp, h_px, h_xp, h_xx)."""
        n = self.n
        return M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:]


# ---------------------------------------------------------------------------
# built-in models


def free_model(m=1.0, n=1):
    coeffs = {}
    for i in range(n):
        a = [0] * (2 * n)
        a[i] = 2
        coeffs[tuple(a)] = 1.0 / (2.0 * m)
    return SymbolModel(
        n=n,
        hamiltonian=PolynomialSymbol(n, coeffs),
        mass=m,
        name="free",
        params={"m": m},
    )


def harmonic_model(m=1.0, omega=1.0, n=1):
    coeffs = {}
    for i in range(n):
        a = [0] * (2 * n)
        a[i] = 2
        coeffs[tuple(a)] = 1.0 / (2.0 * m)
        b = [0] * (2 * n)
        b[n + i] = 2
        coeffs[tuple(b)] = 0.5 * m * omega**2
    return SymbolModel(
        n=n,
        hamiltonian=PolynomialSymbol(n, coeffs),
        mass=m,
        name="harmonic",
        params={"m": m, "omega": omega},
    )


def anharmonic_model(m=1.0, omega=1.0, eps=0.1):
    """1-d cubic anharmonic oscillator H = p^2/2m + m w^2 x^2/2 + eps x^3."""
    coeffs = {
        (2, 0): 1.0 / (2.0 * m),
        (0, 2): 0.5 * m * omega**2,
        (0, 3): eps,
    }
    return SymbolModel(
        n=1,
        hamiltonian=PolynomialSymbol(1, coeffs),
        mass=m,
        name="anharmonic",
        params={"m": m, "omega": omega, "eps": eps},
    )


def gauss_model_1d(m=1.0, gamma=1.0, V0=1.0, kappa=1.0):
    """Free particle coupled to the 1-d Gaussian difference kernel."""
    return SymbolModel(
        n=1,
        hamiltonian=PolynomialSymbol(1, {(2, 0): 1.0 / (2.0 * m)}),
        kernel=GaussianKernel(1, V0, gamma),
        mass=m,
        kappa=kappa,
        name="gauss1d",
        params={"m": m, "gamma": gamma, "V0": V0, "kappa": kappa},
    )


def poly_kernel_model_1d(m=1.0, omega=1.0, kappa=1.0, kernel_coeffs=(0.0, 0.0, 0.5)):
    """Quadratic Hamiltonian with a polynomial difference kernel (cross-check model)."""
    coeffs = {(2, 0): 1.0 / (2.0 * m)}
    if omega:
        coeffs[(0, 2)] = 0.5 * m * omega**2
    return SymbolModel(
        n=1,
        hamiltonian=PolynomialSymbol(1, coeffs),
        kernel=DifferenceKernel1D(kernel_coeffs),
        mass=m,
        kappa=kappa,
        name="polykernel1d",
        params={"m": m, "omega": omega, "kappa": kappa, "kernel_coeffs": list(kernel_coeffs)},
    )


# ---------------------------------------------------------------------------
# numerical validation of the derivative tables


@dataclass
class DerivativeEntry:
    which: str
    mu: tuple
    nu: tuple
    max_rel_error: float


@dataclass
class DerivativeReport:
    entries: list
    tolerance: float

    @property
    def passed(self):
        return all(e.max_rel_error <= self.tolerance for e in self.entries)

    @property
    def worst(self):
        return max(self.entries, key=lambda e: e.max_rel_error)

    def failures(self):
        return [e for e in self.entries if e.max_rel_error > self.tolerance]


def _fd4(f, h):
    """4th-order central difference of a scalar function of one step variable."""
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)


def _unique_multi_indices(d, order):
    import itertools

    out = set()
    for combo in itertools.combinations_with_replacement(range(d), order):
        mi = [0] * d
        for i in combo:
            mi[i] += 1
        out.add(tuple(mi))
    return sorted(out)


def validate_derivatives(model, sample_box, tolerance=1e-5, step=1e-4, n_points=4, seed=7):
    """Check every analytic derivative against 4th-order central differences.

    Order-1 derivatives are differenced from the symbol values; order k >= 2
    from the analytic order-(k-1) derivatives (direct high-order differencing
    of values drowns in roundoff at step 1e-4).  Report-only: never raises.
    """
    rng = np.random.default_rng(seed)
    lo, hi = sample_box
    d = 2 * model.n
    pts = rng.uniform(lo, hi, size=(n_points, d))
    pts_w = rng.uniform(lo, hi, size=(n_points, d))
    entries = []

    def check_h(mu):
        worst = 0.0
        base = tuple(m - (1 if i == np.argmax(mu) else 0) for i, m in enumerate(mu))
        k = int(np.argmax(mu))
        for z in pts:
            if sum(mu) == 1:
                f = lambda h: model.eval_symbol("H", _shift(z, k, h))
            else:
                f = lambda h: model.eval_derivative("H", base, z=_shift(z, k, h))
            fd = _fd4(f, step)
            an = model.eval_derivative("H", mu, z=z)
            worst = max(worst, abs(fd - an) / max(abs(an), 1.0))
        entries.append(DerivativeEntry("H", mu, (0,) * d, worst))

    def check_v(mu, nu):
        worst = 0.0
        in_z = sum(mu) > 0
        idxs = mu if in_z else nu
        k = int(np.argmax(idxs))
        base_mu = tuple(m - (1 if in_z and i == k else 0) for i, m in enumerate(mu))
        base_nu = tuple(m - (1 if (not in_z) and i == k else 0) for i, m in enumerate(nu))
        for z, w in zip(pts, pts_w):
            if sum(mu) + sum(nu) == 1:
                if in_z:
                    f = lambda h: model.eval_symbol("V", _shift(z, k, h), w)
                else:
                    f = lambda h: model.eval_symbol("V", z, _shift(w, k, h))
            else:
                if in_z:
                    f = lambda h: model.eval_derivative("V", base_mu, base_nu, z=_shift(z, k, h), w=w)
                else:
                    f = lambda h: model.eval_derivative("V", base_mu, base_nu, z=z, w=_shift(w, k, h))
            fd = _fd4(f, step)
            an = model.eval_derivative("V", mu, nu, z=z, w=w)
            worst = max(worst, abs(fd - an) / max(abs(an), 1.0))
        entries.append(DerivativeEntry("V", mu, nu, worst))

    for order in range(1, model.max_order + 1):
        for mu in _unique_multi_indices(d, order):
            check_h(mu)
    if model.kernel is not None:
        for order in range(1, model.max_order + 1):
            for oz in range(order + 1):
                for mu in _unique_multi_indices(d, oz):
                    for nu in _unique_multi_indices(d, order - oz):
                        check_v(mu, nu)

    return DerivativeReport(entries=entries, tolerance=tolerance)


def _shift(z, k, h):
    out = np.array(z, dtype=float)
    out[k] += h
    return out
