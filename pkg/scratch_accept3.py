import numpy as np

from semihartree.gauss1d import GaussExperiment, principal_term_grid, sigma_xx
from semihartree.moments import (
    MomentSet, TrajectoryState, propagate_order2, propagate_orderN_1d,
    init_from_wavefunction,
)
from semihartree.oracle import (
    Grid1D, SplitStepConfig, fidelity, propagate_split_step, weyl_moment,
)
from semihartree.states import class_state_moments


def make_grid(exp, t_end, n, kfac=3.0):
    smax = np.sqrt(np.max(sigma_xx(exp, np.linspace(0, t_end, 150))) * kfac)
    return Grid1D.centered(exp.x0, 20 * smax + 3 * exp.gamma, n)


# Criterion 1: moment scaling on a vacuum + fock1 mixture, orders 2,3,4
print("== moment scaling (hierarchy + oracle) ==")
hl = [0.1, 0.01, 0.001]
t_star = 1.0
cmix = np.array([1.0, 1.0]) / np.sqrt(2)
byorder_h = {2: [], 3: [], 4: []}
byorder_o = {2: [], 3: [], 4: []}
for hbar in hl:
    exp = GaussExperiment(m=1.0, gamma=1.0, V0=-0.5, kappa=1.0, hbar=hbar,
                          b=0.5j, c=cmix)
    model = exp.model()
    ms0 = class_state_moments(exp.c, exp.m * exp.b, 1.0, exp.D0, hbar, 4)
    st0 = TrajectoryState(0.0, np.array([0.0, 0.0]), ms0, exp.kappa_eff, hbar, 4)
    traj = propagate_orderN_1d(model, st0, (0.0, t_star + 0.1), N=4)
    st = traj.state_at(t_star)
    # oracle measurement
    grid = make_grid(exp, t_star, 4096)
    psi0 = principal_term_grid(exp, grid, 0.0, n_samples=8).normalized()
    cfg = SplitStepConfig(dt=2e-4, kappa=1.0, kernel=("gaussian", exp.V0, exp.gamma))
    orc = propagate_split_step(psi0, cfg, [t_star])[0]
    for order, alpha in [(2, (0, 2)), (3, (0, 3)), (4, (0, 4))]:
        byorder_h[order].append(abs(st.moments.moment(alpha)))
        byorder_o[order].append(abs(weyl_moment(orc, *alpha)))
    print(f"hbar={hbar}: HE D03={st.moments.moment((0,3)):.4e} "
          f"oracle D03={weyl_moment(orc, 0, 3):.4e}  "
          f"HE D04={st.moments.moment((0,4)):.4e} oracle={weyl_moment(orc, 0, 4):.4e}")
for order in [2, 3, 4]:
    sh = np.polyfit(np.log(hl), np.log(byorder_h[order]), 1)[0]
    so = np.polyfit(np.log(hl), np.log(byorder_o[order]), 1)[0]
    print(f"|alpha|={order}: HE slope {sh:.3f} oracle slope {so:.3f} expect {order/2}")

# Criterion 3: oracle (Z, D2) vs order-2 integration, disc / hbar^{3/2}
print("== HE consistency ==")
for hbar in hl:
    exp = GaussExperiment(m=1.0, gamma=1.0, V0=-0.5, kappa=1.0, hbar=hbar, b=0.5j)
    model = exp.model()
    T = 2 * np.pi / exp.Omega
    ms0 = class_state_moments(exp.c, exp.m * exp.b, 1.0, exp.D0, hbar, 2)
    st0 = TrajectoryState(0.0, np.array([0.0, 0.0]), ms0, exp.kappa_eff, hbar, 2)
    traj = propagate_order2(model, st0, (0.0, T))
    grid = make_grid(exp, T, 4096)
    psi0 = principal_term_grid(exp, grid, 0.0, n_samples=8).normalized()
    cfg = SplitStepConfig(dt=2.5e-4, kappa=1.0, kernel=("gaussian", exp.V0, exp.gamma))
    orc = propagate_split_step(psi0, cfg, [T])[0]
    stT = traj.state_at(T)
    mo = init_from_wavefunction(orc, 2)
    dz = np.max(np.abs(stT.Z - mo.Z))
    dd = max(abs(stT.moments.moment(a) - mo.moments.moment(a))
             for a in [(2, 0), (1, 1), (0, 2)])
    disc = dz + dd
    print(f"hbar={hbar}: dz={dz:.2e} dD2={dd:.2e} disc/h^1.5={disc/hbar**1.5:.4f}")
