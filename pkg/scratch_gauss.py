import numpy as np

from semihartree.gauss1d import (
    GaussExperiment, closed_form_C, sigma_xx, theta_coefficients,
    corrected_trajectory, experiment_germ, principal_term_grid,
)
from semihartree.moments import MomentSet, TrajectoryState, propagate_order2
from semihartree.oracle import (
    Grid1D, SplitStepConfig, fidelity, grid_moments, propagate_split_step,
)
from semihartree.states import class_state_moments
from semihartree.variations import integrate_variations

# oscillatory branch, b = i Omega -> |C| = 1
exp = GaussExperiment(m=1.0, gamma=1.0, V0=-1.0, kappa=1.0, hbar=1e-3, b=1j)
print("Omega:", exp.Omega)
print("C(0):", closed_form_C(exp, 0.0), " C(pi/2):", closed_form_C(exp, np.pi / 2))
print("|C| dev from 1:", abs(abs(closed_form_C(exp, 1.234)) - 1.0))
print("sigma_xx:", sigma_xx(exp, 0.7), "expect", exp.hbar / 2)

# closed form vs numerical frame
model = exp.model()
ms = class_state_moments([1.0], exp.m * exp.b, 1.0, exp.D0, exp.hbar, 2)
st0 = TrajectoryState(0.0, np.array([exp.p0, exp.x0]), ms, exp.kappa_eff, exp.hbar, 2)
traj = propagate_order2(model, st0, (0.0, 10.0))
fr = integrate_variations(traj, [[exp.m * exp.b]], [[1.0]], (0.0, 10.0))
worst = 0.0
for t in np.linspace(0.1, 10.0, 23):
    worst = max(worst, abs(fr.C_at(t)[0, 0] - closed_form_C(exp, t)))
print("closed form C vs frame worst:", worst)

# thetas
th = theta_coefficients(exp, c=np.array([1.0, 1.0]) / np.sqrt(2))
print("theta1 sum for (1,1)/sqrt2:", th.theta1 / (exp.kappa_eff * exp.V0 / (exp.m * exp.gamma**2 * exp.b.imag)), "expect 0.75")
th0 = theta_coefficients(exp, c=np.array([1.0]))
print("theta2 vacuum:", th0.theta2, "expect", exp.kappa_eff * exp.V0 / (4 * exp.m * exp.b.imag))

# corrected trajectory, |C| = 1: correction = sqrt(hbar) th1 t^2 / 2m
P, X = corrected_trajectory(exp, 0.5, 2.0)
print("X corr:", X - exp.x0, "expect", np.sqrt(exp.hbar) * 0.5 * 2.0**2 / 2)

# principal term vs oracle, vacuum, breathing packet
exp2 = GaussExperiment(m=1.0, gamma=1.0, V0=-0.5, kappa=1.0, hbar=5e-2, b=0.5j)
grid = Grid1D.centered(0.0, 6.0, 2048)
t_end = 1.5
sem = principal_term_grid(exp2, grid, t_end)
print("principal norm:", sem.norm)
psi0 = principal_term_grid(exp2, grid, 0.0, n_samples=8).normalized()
cfg = SplitStepConfig(dt=2e-4, kappa=exp2.kappa, kernel=("gaussian", exp2.V0, exp2.gamma))
orc = propagate_split_step(psi0, cfg, [t_end])[0]
print("sigma law:", sigma_xx(exp2, t_end), "oracle:", grid_moments(orc, 2))
print("fidelity  Psi0 vs oracle:", fidelity(orc, sem))
