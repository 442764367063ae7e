import numpy as np

from semihartree.gauss1d import (
    GaussExperiment, principal_term_grid, sigma_xx, superposition_experiment,
)
from semihartree.oracle import (
    Grid1D, SplitStepConfig, fidelity, grid_moments, propagate_split_step,
    weyl_moment,
)


def make_grid(exp, t_end, n, kfac=1.0):
    smax = np.sqrt(np.max(sigma_xx(exp, np.linspace(0, t_end, 150))) * kfac)
    half = 20 * smax + 3 * exp.gamma
    return Grid1D.centered(exp.x0, half, n)


# (a) principal-term fidelity-error slope
print("== principal-term slope ==")
t_end = 1.5
errs = []
hbars = [0.1, 0.03, 0.01]
for hbar in hbars:
    exp = GaussExperiment(m=1.0, gamma=1.0, V0=-0.5, kappa=1.0, hbar=hbar, b=0.5j)
    grid = make_grid(exp, t_end, 4096)
    psi0 = principal_term_grid(exp, grid, 0.0, n_samples=8).normalized()
    cfg = SplitStepConfig(dt=1.5e-4, kappa=1.0, kernel=("gaussian", exp.V0, exp.gamma))
    orc = propagate_split_step(psi0, cfg, [t_end])[0]
    sem = principal_term_grid(exp, grid, t_end)
    err = 1.0 - fidelity(orc, sem)
    errs.append(err)
    print(f"hbar={hbar}: 1-F = {err:.3e}")
print("slope:", np.polyfit(np.log(hbars), np.log(errs), 1)[0])

# (e) concentration
print("== concentration ==")
svals, pvals = [], []
hl = [0.1, 0.01, 0.001]
for hbar in hl:
    exp = GaussExperiment(m=1.0, gamma=1.0, V0=-0.5, kappa=1.0, hbar=hbar, b=0.5j)
    grid = make_grid(exp, t_end, 4096)
    psi0 = principal_term_grid(exp, grid, 0.0, n_samples=8).normalized()
    cfg = SplitStepConfig(dt=2e-4, kappa=1.0, kernel=("gaussian", exp.V0, exp.gamma))
    orc = propagate_split_step(psi0, cfg, [t_end])[0]
    sxx = grid_moments(orc, 2)
    spp = weyl_moment(orc, 2, 0)
    svals.append(sxx); pvals.append(spp)
    law = float(sigma_xx(exp, t_end))
    print(f"hbar={hbar}: sxx={sxx:.4e} law={law:.4e} rel={abs(sxx-law)/law:.2e} spp={spp:.3e}")
print("sigma_xx slope:", np.polyfit(np.log(hl), np.log(svals), 1)[0])
print("sigma_pp slope:", np.polyfit(np.log(hl), np.log(pvals), 1)[0])

# (b) superposition, retuned: gamma=2, V0=-2
print("== superposition ==")
for hbar in [0.03, 0.01, 0.003]:
    e1 = GaussExperiment(m=1.0, gamma=2.0, V0=-2.0, kappa=1.0, hbar=hbar, b=0.5j,
                         c=np.array([1.0]))
    e2 = GaussExperiment(m=1.0, gamma=2.0, V0=-2.0, kappa=1.0, hbar=hbar, b=0.5j,
                         c=np.array([0.0, 0.0, 1.0]))
    t2 = np.pi / e1.Omega
    grid = make_grid(e1, t2, 4096, kfac=5.0)
    rep = superposition_experiment(e1, e2, 1 / np.sqrt(2), 1 / np.sqrt(2), t2,
                                   grid, oracle_dt=2e-4)
    print(f"hbar={hbar}: lin={rep['linearity_error']:.2e} "
          f"Fc={rep['fidelity_consistent']:.6f} Fn={rep['fidelity_naive']:.6f} "
          f"gap={rep['gap']:.6f}")
