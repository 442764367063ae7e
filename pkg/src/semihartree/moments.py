"""Hamilton-Ehrenfest moment systems.

The quantum means Z(t) = (P, X) and centered Weyl moments D_alpha close, up
to a fixed order N, into an ODE system once the two-point kernel is averaged
over the state's own moments.  Two right-hand sides are provided:

* `rhs_order2` - the N = 2 system in any dimension, written directly in
  matrix form (second moments evolve by the linearized flow, the means carry
  the leading moment corrections).

* `rhs_orderN_1d` - the full 1-d hierarchy for N <= 4, generated exactly by
  a polynomial Moyal star-product commutator: the effective symbol is Taylor
  expanded around Z(t) to order N + 2, commuted against each monomial
  Weyl{Dz^alpha}, and contracted with the moment set (moments of order > N
  are dropped, first moments are pinned to zero).  The center motion adds
  the usual transport term  -sum_k zdot_k alpha_k D_alpha(k).

The classical action S(t) = integral(<P,Xdot> - H - interaction scalar) is
integrated alongside every trajectory; downstream state construction reads
it from the same solution object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .oracle import mean_phase_point, weyl_moment
from .symbols import symplectic_matrix

__all__ = [
    "moment_indices",
    "MomentSet",
    "TrajectoryState",
    "MomentTrajectory",
    "init_from_wavefunction",
    "rhs_order2",
    "rhs_orderN_1d",
    "propagate_order2",
    "propagate_orderN_1d",
    "gaussian_wick_moments",
    "write_trajectory_csv",
]


def moment_indices(n, N):
    """Multi-indices alpha over 2n entries with 2 <= |alpha| <= N, order-grouped."""
    import itertools

    out = []
    for order in range(2, N + 1):
        block = set()
        for combo in itertools.combinations_with_replacement(range(2 * n), order):
            mi = [0] * (2 * n)
            for i in combo:
                mi[i] += 1
            block.add(tuple(mi))
        out.extend(sorted(block, reverse=True))
    return out


def _factorial_mi(alpha):
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


class MomentSet(dict):
    """Map multi-index -> centered moment value; order-0 is 1, order-1 is 0."""

    def moment(self, alpha):
        s = sum(alpha)
        if s == 0:
            return 1.0
        if s == 1:
            return 0.0
        return self.get(tuple(alpha), 0.0)

    def order(self):
        return max((sum(a) for a in self), default=0)

    def delta2(self, n):
        """Second moments as a symmetric 2n x 2n matrix."""
        d = 2 * n
        M = np.zeros((d, d))
        for i in range(d):
            for j in range(d):
                a = [0] * d
                a[i] += 1
                a[j] += 1
                M[i, j] = self.moment(tuple(a))
        return M

    @classmethod
    def from_delta2(cls, D2):
        D2 = np.asarray(D2, dtype=float)
        d = D2.shape[0]
        out = cls()
        for i in range(d):
            for j in range(i, d):
                a = [0] * d
                a[i] += 1
                a[j] += 1
                out[tuple(a)] = float(D2[i, j])
        return out


@dataclass
class TrajectoryState:
    t: float
    Z: np.ndarray
    moments: MomentSet
    kappa_eff: float
    hbar: float
    order: int
    S: float = 0.0

    @property
    def n(self):
        return self.Z.size // 2


def gaussian_wick_moments(D2, N):
    """Extend second moments to order N by the Gaussian (Wick) closure."""
    D2 = np.asarray(D2, dtype=float)
    d = D2.shape[0]
    out = MomentSet.from_delta2(D2)
    for alpha in moment_indices(d // 2, N):
        s = sum(alpha)
        if s <= 2:
            continue
        if s % 2:
            out[alpha] = 0.0
            continue
        slots = []
        for i, a in enumerate(alpha):
            slots.extend([i] * a)
        val = 0.0
        for pairing in _pairings(tuple(range(s))):
            term = 1.0
            for i, j in pairing:
                term *= D2[slots[i], slots[j]]
            val += term
        out[alpha] = val
    return out


def _pairings(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k, second in enumerate(rest):
        tail = rest[:k] + rest[k + 1:]
        for sub in _pairings(tail):
            yield [(first, second)] + sub


# ---------------------------------------------------------------------------
# initialization from a grid wavefunction


def init_from_wavefunction(psi_wf, N):
    """Measure (Z, D_alpha) up to order N from a 1-d grid wavefunction."""
    if N < 2:
        raise ValueError("moment order must be at least 2")
    P, X = mean_phase_point(psi_wf)
    # momentum-resolution guard: the packet must sit well inside the p window
    dp = 2.0 * math.pi * psi_wf.hbar / (psi_wf.grid.n * psi_wf.grid.dx)
    p_nyq = math.pi * psi_wf.hbar / psi_wf.grid.dx
    spp = weyl_moment(psi_wf, 2, 0, center=(P, X))
    if math.sqrt(max(spp, 0.0)) + abs(P) > p_nyq - 2.0 * dp:
        raise ValueError("grid too coarse: momentum spread reaches the Nyquist edge")
    moments = MomentSet()
    for alpha in moment_indices(1, N):
        a, b = alpha
        moments[alpha] = weyl_moment(psi_wf, a, b, center=(P, X))
    D2 = moments.delta2(1)
    eig = np.linalg.eigvalsh(D2)
    if eig.min() < -1e-12:
        raise ValueError(f"unphysical covariance: eigenvalue {eig.min():.2e} < -1e-12")
    return TrajectoryState(
        t=psi_wf.t,
        Z=np.array([P, X]),
        moments=moments,
        kappa_eff=0.0,
        hbar=psi_wf.hbar,
        order=N,
    )


# ---------------------------------------------------------------------------
# order-2 right-hand side (any dimension)


def _basis_mi(d, *idxs):
    a = [0] * d
    for i in idxs:
        a[i] += 1
    return tuple(a)


def _grad_corrected(model, Z, D2, kappa_eff, t):
    """gradient of (1 + 1/2<dz,D2 dz> + 1/2<dw,D2 dw>)(H + kappa V)|_{w=z}."""
    d = 2 * model.n
    g = np.zeros(d)
    zero = (0,) * d
    for i in range(d):
        gi = model.eval_derivative("H", _basis_mi(d, i), z=Z, t=t)
        if model.kernel is not None and kappa_eff:
            gi += kappa_eff * model.eval_derivative("V", _basis_mi(d, i), zero, z=Z, w=Z, t=t)
        corr = 0.0
        for j in range(d):
            for k in range(j, d):
                w = 1.0 if j == k else 2.0  # symmetric off-diagonal pairs
                D = D2[j, k]
                if D == 0.0:
                    continue
                corr += 0.5 * w * D * model.eval_derivative("H", _basis_mi(d, i, j, k), z=Z, t=t)
                if model.kernel is not None and kappa_eff:
                    corr += 0.5 * w * D * kappa_eff * (
                        model.eval_derivative("V", _basis_mi(d, i, j, k), zero, z=Z, w=Z, t=t)
                        + model.eval_derivative("V", _basis_mi(d, i), _basis_mi(d, j, k), z=Z, w=Z, t=t)
                    )
        g[i] = gi + corr
    return g


def _interaction_scalar(model, Z, moments, kappa_eff, N, t):
    """kappa_eff * sum_{|a|<=N} (1/a!) V_{0a}(Z,Z) D_a  (the action integrand term)."""
    if model.kernel is None or not kappa_eff:
        return 0.0
    d = 2 * model.n
    zero = (0,) * d
    out = model.eval_derivative("V", zero, zero, z=Z, w=Z, t=t)
    for alpha in moment_indices(model.n, N):
        mom = moments.moment(alpha)
        if mom:
            out += model.eval_derivative("V", zero, alpha, z=Z, w=Z, t=t) * mom / _factorial_mi(alpha)
    return kappa_eff * out


def rhs_order2(model, Z, D2, kappa_eff, t=0.0):
    """(Zdot, D2dot) of the N=2 system: Zdot = J grad, D2dot = JMD2 - D2MJ."""
    J = symplectic_matrix(model.n)
    M = model.h_zz_eff(Z, kappa_eff, t)
    zdot = J @ _grad_corrected(model, Z, D2, kappa_eff, t)
    ddot = J @ M @ D2 - D2 @ M @ J
    return zdot, ddot


# ---------------------------------------------------------------------------
# polynomial Moyal algebra (1-d)


def _poly_dp(c):
    out = np.zeros_like(c)
    out[:-1, :] = c[1:, :] * np.arange(1, c.shape[0])[:, None]
    return out


def _poly_dx(c):
    out = np.zeros_like(c)
    out[:, :-1] = c[:, 1:] * np.arange(1, c.shape[1])[None, :]
    return out


def _poly_mul(f, g):
    out = np.zeros((f.shape[0] + g.shape[0] - 1, f.shape[1] + g.shape[1] - 1), dtype=complex)
    fa, fb = np.nonzero(f)
    for a, b in zip(fa, fb):
        out[a:a + g.shape[0], b:b + g.shape[1]] += f[a, b] * g
    return out


def _star(f, g, hbar):
    """Weyl star product of polynomial symbols in (Dp, Dx); exact and finite.

    f * g = sum_{s,t} (i hbar/2)^{s+t} (-1)^t / (s! t!)
            (dx^s dp^t f) (dp^s dx^t g)
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    out = np.zeros(
        (f.shape[0] + g.shape[0] - 1, f.shape[1] + g.shape[1] - 1), dtype=complex
    )
    for s in range(f.shape[1]):
        for t in range(f.shape[0]):
            fd = f
            for _ in range(s):
                fd = _poly_dx(fd)
            for _ in range(t):
                fd = _poly_dp(fd)
            if not np.any(fd):
                continue
            gd = g
            for _ in range(s):
                gd = _poly_dp(gd)
            for _ in range(t):
                gd = _poly_dx(gd)
            if not np.any(gd):
                continue
            pref = (0.5j * hbar) ** (s + t) * (-1.0) ** t / (
                math.factorial(s) * math.factorial(t)
            )
            term = _poly_mul(fd, gd)
            out[: term.shape[0], : term.shape[1]] += pref * term
    return out


def moyal_commutator(f, g, hbar):
    return _star(f, g, hbar) - _star(g, f, hbar)


def _taylor_coefficients(model, Z, moments, kappa_eff, N, t):
    """Graded Taylor coefficients of the effective symbol around Z.

    Returns {m: T_m} where T_m[a,b] is the (1/a!b!)-weighted coefficient of
    Dp^a Dx^b whose kernel average carries moments of order m (m = 0 is the
    bare H + kappa V part).  The grading lets the closure drop moment
    products of total order > N, matching the N = 2 matrix form exactly.
    """
    D = N + 3
    zero = (0, 0)
    graded = {0: np.zeros((D, D))}
    for a in range(D):
        for b in range(D - a):
            fact = math.factorial(a) * math.factorial(b)
            val = model.eval_derivative("H", (a, b), z=Z, t=t)
            if model.kernel is not None and kappa_eff:
                val += kappa_eff * model.eval_derivative("V", (a, b), zero, z=Z, w=Z, t=t)
            graded[0][a, b] = val / fact
    if model.kernel is not None and kappa_eff:
        # combined order |mu| + |nu| capped at N + 2 (the truncation that
        # reproduces the N = 2 matrix form and stays within max_order)
        for nu in moment_indices(1, N):
            mom = moments.moment(nu)
            if not mom:
                continue
            m = sum(nu)
            T = graded.setdefault(m, np.zeros((D, D)))
            for a in range(D):
                for b in range(D - a):
                    if a + b + m > N + 2:
                        continue
                    T[a, b] += (
                        kappa_eff
                        * model.eval_derivative("V", (a, b), nu, z=Z, w=Z, t=t)
                        * mom
                        / (_factorial_mi(nu) * math.factorial(a) * math.factorial(b))
                    )
    return graded


def rhs_orderN_1d(model, Z, moments, kappa_eff, hbar, N, t=0.0):
    """(Zdot, {D_alpha dot}) of the order-N hierarchy, n = 1."""
    if model.n != 1:
        raise ValueError("the order-N hierarchy is implemented for n = 1")
    graded = _taylor_coefficients(model, Z, moments, kappa_eff, N, t)
    D = N + 3

    def mom(a, b, grade):
        if a + b + grade > N or a + b < 0:
            return 0.0
        return moments.moment((a, b))

    xdot = 0.0
    pdot = 0.0
    for m, T in graded.items():
        for a in range(D):
            for b in range(D - a):
                if not T[a, b]:
                    continue
                if a >= 1:
                    xdot += T[a, b] * a * mom(a - 1, b, m)
                if b >= 1:
                    pdot -= T[a, b] * b * mom(a, b - 1, m)
    zdot = np.array([pdot, xdot])

    idx = moment_indices(1, N)
    ddot = {alpha: 0.0 for alpha in idx}
    for m, T in graded.items():
        for alpha in idx:
            aa, bb = alpha
            mono = np.zeros((aa + 1, bb + 1))
            mono[aa, bb] = 1.0
            com = moyal_commutator(mono, T.astype(complex), hbar) / (1j * hbar)
            val = 0.0
            ca, cb = np.nonzero(np.abs(com) > 1e-300)
            for a, b in zip(ca, cb):
                if a + b == 0:
                    continue
                mv = mom(a, b, m)
                if mv:
                    val += com[a, b].real * mv
            ddot[alpha] += val
    # transport from the moving center
    for alpha in idx:
        aa, bb = alpha
        ddot[alpha] -= zdot[0] * aa * mom(aa - 1, bb, 0)
        ddot[alpha] -= zdot[1] * bb * mom(aa, bb - 1, 0)
    return zdot, ddot


# ---------------------------------------------------------------------------
# propagation


class MomentTrajectory:
    """Dense Hamilton-Ehrenfest solution: Z(t), S(t), moments(t)."""

    def __init__(self, model, kappa_eff, hbar, order, sol, index, method):
        self.model = model
        self.kappa_eff = kappa_eff
        self.hbar = hbar
        self.order = order
        self.sol = sol
        self.index = index
        self.method = method
        self.t = sol.t

    @property
    def n(self):
        return self.model.n

    def _unpack(self, y):
        d = 2 * self.n
        Z = y[:d]
        S = y[d]
        moments = MomentSet()
        if self.method == "fundamental":
            A = y[d + 1:].reshape(d, d)
            D2 = A @ self._D2_0 @ A.T
            moments = MomentSet.from_delta2(D2)
        else:
            for alpha, v in zip(self.index, y[d + 1:]):
                moments[alpha] = v
        return Z, S, moments

    def state_at(self, t):
        y = self.sol.sol(t)
        Z, S, moments = self._unpack(y)
        return TrajectoryState(
            t=float(t), Z=Z, moments=moments, kappa_eff=self.kappa_eff,
            hbar=self.hbar, order=self.order, S=float(S),
        )

    def Z_at(self, t):
        d = 2 * self.n
        y = self.sol.sol(np.atleast_1d(t))
        return y[:d].T if np.ndim(t) else y[:d, 0]

    def S_at(self, t):
        y = self.sol.sol(np.atleast_1d(t))
        return y[2 * self.n].T if np.ndim(t) else float(y[2 * self.n, 0])

    def hzz_at(self, t):
        return self.model.h_zz_eff(self.Z_at(float(t)), self.kappa_eff, t)

    def fundamental_at(self, t):
        if self.method != "fundamental":
            raise ValueError("trajectory was not integrated with the fundamental matrix")
        d = 2 * self.n
        return self.sol.sol(float(t))[d + 1:].reshape(d, d)

    def rhs_at(self, t):
        """Zdot at time t (re-evaluates the right-hand side)."""
        st = self.state_at(t)
        if self.method == "hierarchy":
            zdot, _ = rhs_orderN_1d(
                self.model, st.Z, st.moments, self.kappa_eff, self.hbar, self.order, t
            )
        else:
            zdot, _ = rhs_order2(
                self.model, st.Z, st.moments.delta2(self.n), self.kappa_eff, t
            )
        return zdot


def propagate_order2(model, state0, t_span, rtol=1e-10, atol=1e-10,
                     method="direct", t_eval=None):
    """Integrate the N=2 system.

    method="direct" evolves D2 itself; method="fundamental" evolves the
    fundamental matrix A(t) with D2(t) = A D2(0) A^T (equivalent form).
    """
    n = model.n
    d = 2 * n
    D2_0 = state0.moments.delta2(n)
    kap = state0.kappa_eff
    index = moment_indices(n, 2)

    iu = np.triu_indices(d)

    if method == "direct":
        def pack_d2(D2):
            return D2[iu]

        def unpack_d2(v):
            D2 = np.zeros((d, d))
            D2[iu] = v
            return D2 + np.triu(D2, 1).T

        def rhs(t, y):
            Z = y[:d]
            D2 = unpack_d2(y[d + 1:])
            zdot, ddot = rhs_order2(model, Z, D2, kap, t)
            moments = MomentSet.from_delta2(D2)
            sdot = Z[:n] @ zdot[n:] - model.eval_symbol("H", Z, t=t) - _interaction_scalar(
                model, Z, moments, kap, 2, t
            )
            return np.concatenate([zdot, [sdot], pack_d2(ddot)])

        y0 = np.concatenate([state0.Z, [state0.S], pack_d2(D2_0)])
    elif method == "fundamental":
        def rhs(t, y):
            Z = y[:d]
            A = y[d + 1:].reshape(d, d)
            D2 = A @ D2_0 @ A.T
            zdot, _ = rhs_order2(model, Z, D2, kap, t)
            M = model.h_zz_eff(Z, kap, t)
            Adot = model.J @ M @ A
            moments = MomentSet.from_delta2(D2)
            sdot = Z[:n] @ zdot[n:] - model.eval_symbol("H", Z, t=t) - _interaction_scalar(
                model, Z, moments, kap, 2, t
            )
            return np.concatenate([zdot, [sdot], Adot.ravel()])

        y0 = np.concatenate([state0.Z, [state0.S], np.eye(d).ravel()])
    else:
        raise ValueError("method must be 'direct' or 'fundamental'")

    sol = solve_ivp(
        rhs, t_span, y0, method="RK45", rtol=rtol, atol=atol,
        dense_output=True, t_eval=t_eval,
    )
    if not sol.success:
        raise RuntimeError(f"moment integration failed: {sol.message}")
    traj = MomentTrajectory(model, kap, state0.hbar, 2, sol, index, method)
    traj._D2_0 = D2_0
    return traj


def propagate_orderN_1d(model, state0, t_span, N=None, rtol=1e-10, atol=1e-10,
                        t_eval=None):
    """Integrate the full 1-d hierarchy up to order N (<= 4)."""
    if model.n != 1:
        raise ValueError("order-N propagation is 1-d only")
    N = state0.order if N is None else N
    if N > 4 or N < 2:
        raise ValueError("N must be between 2 and 4")
    index = moment_indices(1, N)
    kap = state0.kappa_eff
    hbar = state0.hbar

    def rhs(t, y):
        Z = y[:2]
        moments = MomentSet(zip(index, y[3:]))
        zdot, ddot = rhs_orderN_1d(model, Z, moments, kap, hbar, N, t)
        sdot = Z[0] * zdot[1] - model.eval_symbol("H", Z, t=t) - _interaction_scalar(
            model, Z, moments, kap, N, t
        )
        return np.concatenate([zdot, [sdot], [ddot[a] for a in index]])

    y0 = np.concatenate(
        [state0.Z, [state0.S], [state0.moments.moment(a) for a in index]]
    )
    sol = solve_ivp(
        rhs, t_span, y0, method="RK45", rtol=rtol, atol=atol,
        dense_output=True, t_eval=t_eval,
    )
    if not sol.success:
        raise RuntimeError(f"moment integration failed: {sol.message}")
    return MomentTrajectory(model, kap, hbar, N, sol, index, "hierarchy")


def write_trajectory_csv(traj, path, times):
    """t, P, X, D_alpha (order-grouped lexicographic), kappa_eff, hbar."""
    index = traj.index
    n = traj.n
    cols = ["t"] + [f"P{i+1}" for i in range(n)] + [f"X{i+1}" for i in range(n)]
    cols += ["D_" + "_".join(map(str, a)) for a in index]
    cols += ["S", "kappa_eff", "hbar"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for t in times:
            st = traj.state_at(t)
            row = [t, *st.Z, *[st.moments.moment(a) for a in index],
                   st.S, traj.kappa_eff, traj.hbar]
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
