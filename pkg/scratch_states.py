import numpy as np

from semihartree.symbols import free_model, harmonic_model
from semihartree.moments import MomentSet, TrajectoryState, propagate_order2
from semihartree.oracle import Grid1D, fidelity, grid_moments, momentum_representation
from semihartree.states import (
    germ_state, class_state_moments, ladder_lower, ladder_raise,
    action_phase, phi1_phase,
)
from semihartree.variations import integrate_variations

hbar = 0.05
model = harmonic_model(m=1.0, omega=1.0)
D2 = np.diag([hbar / 2, hbar / 2])
st0 = TrajectoryState(0.0, np.array([0.0, 1.0]), MomentSet.from_delta2(D2),
                      0.0, hbar, 2)
traj = propagate_order2(model, st0, (0.0, 8.0))
fr = integrate_variations(traj, [[1j]], [[1.0]], (0.0, 8.0))

grid = Grid1D.centered(0.0, 6.0, 2048)
for t in [0.0, 1.3, 5.7]:
    gs = germ_state(traj, fr, t)
    wf = gs.to_grid(grid, k=0)
    print(f"t={t}: vacuum norm={wf.norm:.12f} sxx={grid_moments(wf, 2):.8f} expect {hbar/2:.8f}")

gs = germ_state(traj, fr, 1.3)
# Gram matrix k,k' <= 6
psis = [gs.to_grid(grid, k=k) for k in range(7)]
G = np.zeros((7, 7), dtype=complex)
for i in range(7):
    for j in range(7):
        G[i, j] = np.sum(np.conj(psis[i].psi) * psis[j].psi) * grid.dx
print("Gram max dev:", np.max(np.abs(G - np.eye(7))))

# <k|dx^2|k> law: hbar |C|^2 (2k+1)/(2 m Im b), here C(t)=e^{it}, Im b = 1
for k in [0, 1, 3]:
    sxx = grid_moments(psis[k], 2)
    print(f"k={k}: sxx={sxx:.10f} expect {hbar*(2*k+1)/2:.10f}")

# vacuum annihilation: a psi0 ~ 0 with a = N_a (C dp - B dx)
B, C, _ = fr.at(1.3)
b, c = B[0, 0], C[0, 0]
psi0 = psis[0]
dxv = grid.x - gs.X[0]
ft = np.fft.fft(psi0.psi)
p = hbar * grid.k
dpsi = np.fft.ifft((p - gs.P[0]) * ft)
apsi = c * dpsi - b * dxv * psi0.psi
print("||a psi0||/||psi0||:", np.linalg.norm(apsi) / np.linalg.norm(psi0.psi))

# ladder ops
c0 = np.zeros(5, dtype=complex); c0[0] = 1
print("a vac:", np.abs(ladder_lower(c0)).max(), " a+ vac:", ladder_raise(c0)[:3])
rng = np.random.default_rng(3)
cr = rng.normal(size=6) + 1j * rng.normal(size=6)
comm = ladder_lower(ladder_raise(cr)) - ladder_raise(ladder_lower(cr))
print("[a,a+] - 1 residual:", np.max(np.abs(comm - cr)))

# class-state moments: vacuum and fock1 at t=0
ms0 = class_state_moments([1.0], b=None, B=1j, C=1.0, D0=1.0, hbar=hbar, N=4) if False else \
      class_state_moments([1.0], 1j, 1.0, 1.0, hbar, 4)
print("vac moments:", {k: round(v, 6) for k, v in ms0.items() if abs(v) > 1e-14})
ms1 = class_state_moments([0.0, 1.0], 1j, 1.0, 1.0, hbar, 2)
print("fock1 sxx:", ms1[(0, 2)], "expect", 3 * hbar / 2)

# action and phi1 on free particle
modelf = free_model(m=1.0)
st0f = TrajectoryState(0.0, np.array([2.0, 0.0]), MomentSet.from_delta2(D2), 0.0, hbar, 2)
trajf = propagate_order2(modelf, st0f, (0.0, 3.0))
print("S free (3.0):", trajf.S_at(3.0), "expect", 2.0**2 * 3 / 2)
print("action quad:", action_phase(trajf, 3.0))
frf = integrate_variations(trajf, [[1j]], [[1.0]], (0.0, 3.0))
print("phi1 free:", phi1_phase(frf, 3.0), "expect", 0.5 * np.arctan(3.0))
print("phi1 harmonic:", phi1_phase(fr, 2.0), "expect", 1.0)
