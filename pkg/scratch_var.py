import numpy as np

from semihartree.symbols import free_model
from semihartree.moments import MomentSet, TrajectoryState, propagate_order2
from semihartree.variations import (
    integrate_variations, conserved_invariants, q_and_riccati_residual,
    matriciant_and_liouville, skew_product,
)

model = free_model(m=2.0)
hbar = 0.1
ms = MomentSet.from_delta2(np.diag([hbar, hbar]) / 2)
st0 = TrajectoryState(t=0.0, Z=np.array([1.0, 0.0]), moments=ms,
                      kappa_eff=0.0, hbar=hbar, order=2)
traj = propagate_order2(model, st0, (0.0, 5.0))
print("Z(2):", traj.Z_at(2.0), "expect [1, 1]")
print("S(2):", traj.S_at(2.0), "expect", 1.0 / (2 * 2.0) * 2.0)

fr = integrate_variations(traj, [[1j]], [[1.0]], (0.0, 5.0))
B, C, ld = fr.at(3.0)
print("B(3):", B[0, 0], "expect 1j;  C(3):", C[0, 0], "expect", 1 + 1.5j)
inv = conserved_invariants(fr, np.linspace(0, 5, 11))
print("D0:", inv["D0"][0, 0], "drifts:", inv["D0_drift"], inv["D0_tilde_drift"])
rq = q_and_riccati_residual(fr, np.linspace(0.2, 4.8, 13))
print("riccati report:", {k: f"{v:.2e}" for k, v in rq.items()})

mres = matriciant_and_liouville(traj, fr, (0.0, 2.0), n_samples=9)
print("lam3(t=2):", mres.lam3[-1][0, 0], "expect", -2 / 2.0)
print("lam4:", mres.lam4[-1][0, 0], "identity:", mres.identity_residual,
      "sympl:", mres.symplectic_residual)
print("liouville:", mres.liouville_mismatch, "b15:", mres.b15_residual,
      "b16:", mres.b16_residual, "b24:", mres.b24_residual, "b28:", mres.b28_residual)

a1 = np.array([1.0, 0.0]); a2 = np.array([0.0, 1.0])
print("skew {(1,0),(0,1)}:", skew_product(a1, a2), "expect -1")

# skew products along an integrated frame stay constant
cols0 = fr.columns_at(0.0)
colsT = fr.columns_at(4.0)
print("{a,a*}(0):", skew_product(cols0[0], np.conj(cols0[0])))
print("{a,a*}(4):", skew_product(colsT[0], np.conj(colsT[0])), "expect same, |.|=2 Im b")
