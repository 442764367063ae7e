import numpy as np

from semihartree.symbols import anharmonic_model
from semihartree.moments import TrajectoryState, propagate_order2
from semihartree.variations import integrate_variations
from semihartree.states import class_state_moments, germ_state
from semihartree.green import phi1_correction_1d, spectral_apply, make_kernel_order0, apply_kernel
from semihartree.oracle import (
    Grid1D, SplitStepConfig, fidelity, propagate_split_step,
)

# cubic anharmonic oscillator, kappa = 0
m_, om, eps = 1.0, 1.0, 0.15
x0, p0, b = 0.4, 0.0, 1j
t_end = 1.0
model = anharmonic_model(m=m_, omega=om, eps=eps)

rows = []
for hbar in [0.1, 0.03, 0.01]:
    ms = class_state_moments([1.0], m_ * b, 1.0, m_ * b.imag, hbar, 2)
    st0 = TrajectoryState(0.0, np.array([p0, x0]), ms, 0.0, hbar, 2)
    traj = propagate_order2(model, st0, (0.0, t_end + 0.1))
    fr = integrate_variations(traj, [[m_ * b]], [[1.0]], (0.0, t_end + 0.1))
    grid = Grid1D.centered(x0, 5.0, 2048)
    gs0 = germ_state(traj, fr, 0.0)
    psi0 = gs0.to_grid(grid, k=0)
    cfg = SplitStepConfig(dt=2.5e-4, external_potential=lambda x: 0.5 * m_ * om**2 * x**2 + eps * x**3)
    orc = propagate_split_step(psi0, cfg, [t_end])[0]

    gs1 = germ_state(traj, fr, t_end)
    base = gs1.to_grid(grid, coeffs=[1.0])
    F0 = fidelity(orc, base)

    corr = phi1_correction_1d(model, traj, fr, [1.0], t_end, K=10)
    cc = corr.corrected()
    corrected = gs1.to_grid(grid, coeffs=cc)
    F1 = fidelity(orc, corrected.normalized())
    rows.append((hbar, 1 - F0, 1 - F1, np.sqrt(2 * (1 - F0)), np.sqrt(2 * max(1 - F1, 1e-18))))
    print(f"hbar={hbar}: 1-F0={1-F0:.3e} 1-F1={1-F1:.3e}  d coeffs max={np.abs(corr.d).max():.3e}")
    print("   d (first 6):", np.round(corr.d[:6], 5))

rows = np.array(rows)
for name, col in [("1-F base", 1), ("1-F corr", 2), ("dist base", 3), ("dist corr", 4)]:
    s = np.polyfit(np.log(rows[:, 0]), np.log(rows[:, col]), 1)[0]
    print(f"slope {name}: {s:.3f}")
