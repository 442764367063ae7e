import numpy as np

from semihartree.gauss1d import (
    GaussExperiment, principal_term_grid, sigma_xx, superposition_experiment,
)
from semihartree.oracle import (
    Grid1D, SplitStepConfig, fidelity, grid_moments, propagate_split_step,
    momentum_representation, weyl_moment,
)

# (a) principal-term fidelity-error slope on the gauss model
print("== principal-term slope ==")
t_end = 1.5
errs = []
hbars = [0.1, 0.03, 0.01]
for hbar in hbars:
    exp = GaussExperiment(m=1.0, gamma=1.0, V0=-0.5, kappa=1.0, hbar=hbar, b=0.5j)
    smax = np.sqrt(np.max(sigma_xx(exp, np.linspace(0, t_end, 100))))
    grid = Grid1D.centered(0.0, max(14 * smax, 1.0), 2048)
    psi0 = principal_term_grid(exp, grid, 0.0, n_samples=8).normalized()
    cfg = SplitStepConfig(dt=1.5e-4, kappa=1.0, kernel=("gaussian", exp.V0, exp.gamma))
    orc = propagate_split_step(psi0, cfg, [t_end])[0]
    sem = principal_term_grid(exp, grid, t_end)
    err = 1.0 - fidelity(orc, sem)
    errs.append(err)
    print(f"hbar={hbar}: 1-F = {err:.3e}")
s = np.polyfit(np.log(hbars), np.log(errs), 1)[0]
print("slope:", s)

# (b) superposition gap
print("== superposition ==")
for hbar in hbars:
    e1 = GaussExperiment(m=1.0, gamma=1.0, V0=-0.5, kappa=1.0, hbar=hbar, b=0.5j,
                         c=np.array([1.0]))
    e2 = GaussExperiment(m=1.0, gamma=1.0, V0=-0.5, kappa=1.0, hbar=hbar, b=0.5j,
                         c=np.array([0.0, 0.0, 1.0]))
    Om = e1.Omega
    t_end2 = np.pi / Om * 1.1
    smax = np.sqrt(np.max(sigma_xx(e1, np.linspace(0, t_end2, 100)))) * np.sqrt(5)
    grid = Grid1D.centered(0.0, max(16 * smax, 1.2), 2048)
    rep = superposition_experiment(e1, e2, 1 / np.sqrt(2), 1 / np.sqrt(2), t_end2,
                                   grid, oracle_dt=2e-4)
    print(f"hbar={hbar}: lin={rep['linearity_error']:.2e} "
          f"Fc={rep['fidelity_consistent']:.6f} Fn={rep['fidelity_naive']:.6f} "
          f"gap={rep['gap']:.6f}")

# (e) concentration: position + momentum variance slopes of propagated oracle
print("== concentration ==")
svals, pvals = [], []
for hbar in [0.1, 0.01, 0.001]:
    exp = GaussExperiment(m=1.0, gamma=1.0, V0=-0.5, kappa=1.0, hbar=hbar, b=0.5j)
    smax = np.sqrt(np.max(sigma_xx(exp, np.linspace(0, t_end, 100))))
    grid = Grid1D.centered(0.0, max(20 * smax, 0.35), 2048)
    psi0 = principal_term_grid(exp, grid, 0.0, n_samples=8).normalized()
    cfg = SplitStepConfig(dt=2e-4, kappa=1.0, kernel=("gaussian", exp.V0, exp.gamma))
    orc = propagate_split_step(psi0, cfg, [t_end])[0]
    sxx = grid_moments(orc, 2)
    spp = weyl_moment(orc, 2, 0)
    svals.append(sxx); pvals.append(spp)
    print(f"hbar={hbar}: sxx={sxx:.3e} spp={spp:.3e}")
hl = [0.1, 0.01, 0.001]
print("sigma_xx slope:", np.polyfit(np.log(hl), np.log(svals), 1)[0])
print("sigma_pp slope:", np.polyfit(np.log(hl), np.log(pvals), 1)[0])
