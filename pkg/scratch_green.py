import numpy as np

from semihartree.symbols import free_model, harmonic_model
from semihartree.moments import MomentSet, TrajectoryState, propagate_order2
from semihartree.variations import integrate_variations
from semihartree.states import germ_state
from semihartree.green import (
    make_kernel_order0, apply_kernel, compose_residual, spectral_kernel_matrix,
)
from semihartree.oracle import Grid1D, fidelity
from semihartree.gauss1d import GaussExperiment
from semihartree.states import class_state_moments

hbar = 0.05

# free particle: G = sqrt(m/2 pi i hbar t) e^{i m (x-y)^2 / 2 hbar t}
m = 1.7
model = free_model(m=m)
ms = MomentSet.from_delta2(np.diag([hbar, hbar]) / 2)
st0 = TrajectoryState(0.0, np.zeros(2), ms, 0.0, hbar, 2)
traj = propagate_order2(model, st0, (0.0, 2.0))
kern = make_kernel_order0(traj, 0.0, 1.0)
xs = np.linspace(-1.5, 1.5, 41)
G = kern.evaluate(xs, xs)
pref = np.sqrt(m / (2j * np.pi * hbar * 1.0))
Gref = pref * np.exp(1j * m * (xs[:, None] - xs[None, :]) ** 2 / (2 * hbar * 1.0))
print("free kernel max |diff|:", np.max(np.abs(G - Gref)))
print("lam3:", kern.lam3[0, 0], "expect", -1.0 / m)

# Mehler at t = pi/4
model2 = harmonic_model(m=1.0, omega=1.0)
st0 = TrajectoryState(0.0, np.zeros(2), ms, 0.0, hbar, 2)
traj2 = propagate_order2(model2, st0, (0.0, 2.0))
t = np.pi / 4
kern2 = make_kernel_order0(traj2, 0.0, t)
G2 = kern2.evaluate(xs, xs)
s, c = np.sin(t), np.cos(t)
G2ref = np.sqrt(1.0 / (2j * np.pi * hbar * s)) * np.exp(
    1j / (2 * hbar * s) * ((xs[:, None] ** 2 + xs[None, :] ** 2) * c - 2 * xs[:, None] * xs[None, :])
)
print("Mehler max |diff|:", np.max(np.abs(G2 - G2ref)))

# apply to vacuum / fock: propagation fidelity
fr2 = integrate_variations(traj2, [[1j]], [[1.0]], (0.0, 2.0))
grid = Grid1D.centered(0.0, 7.0, 2048)
gs0 = germ_state(traj2, fr2, 0.0)
gs1 = germ_state(traj2, fr2, 1.0)
kern3 = make_kernel_order0(traj2, 0.0, 1.0)
for k in [0, 1]:
    out = apply_kernel(kern3, gs0.to_grid(grid, k=k))
    print(f"fock{k} propagation fidelity:", fidelity(out, gs1.to_grid(grid, k=k)),
          " norm:", out.norm)

# composition and spectral convergence on the gauss model
exp = GaussExperiment(m=1.0, gamma=1.0, V0=-0.5, kappa=1.0, hbar=hbar, b=0.6j)
model3 = exp.model()
ms3 = class_state_moments([1.0], exp.m * exp.b, 1.0, exp.D0, hbar, 2)
st3 = TrajectoryState(0.0, np.zeros(2), ms3, exp.kappa_eff, hbar, 2)
traj3 = propagate_order2(model3, st3, (0.0, 2.0))
fr3 = integrate_variations(traj3, [[exp.m * exp.b]], [[1.0]], (0.0, 2.0))
kA = make_kernel_order0(traj3, 0.0, 0.7)
kB = make_kernel_order0(traj3, 0.7, 1.4)
kAB = make_kernel_order0(traj3, 0.0, 1.4)
gs = germ_state(traj3, fr3, 0.0)
tests = [gs.to_grid(grid, k=k) for k in range(4)]
print("composition residual:", compose_residual(kA, kB, kAB, tests))

xs2 = np.linspace(-2.0, 2.0, 101)
Gfull = kAB.evaluate(xs2, xs2)
prev = None
for K in [4, 8, 16, 24]:
    S = spectral_kernel_matrix(traj3, fr3, 0.0, 1.4, K, xs2, xs2)
    dist = np.sqrt(np.sum(np.abs(S - Gfull) ** 2) * (xs2[1] - xs2[0]) ** 2)
    print(f"spectral K={K}: L2 distance {dist:.3e}", "(monotone)" if prev is None or dist < prev else "(NOT monotone)")
    prev = dist
