"""Trajectory-coherent semiclassical states for nonlocal Hartree dynamics."""

__version__ = "0.1.0"

from .symbols import (  # noqa: F401
    PhasePoint, SymbolModel, symplectic_matrix,
    free_model, harmonic_model, anharmonic_model, gauss_model_1d,
    poly_kernel_model_1d, validate_derivatives,
)
from .moments import (  # noqa: F401
    MomentSet, TrajectoryState, MomentTrajectory, init_from_wavefunction,
    rhs_order2, rhs_orderN_1d, propagate_order2, propagate_orderN_1d,
    gaussian_wick_moments, moment_indices, write_trajectory_csv,
)
from .variations import (  # noqa: F401
    FrameTrajectory, skew_product, integrate_variations, conserved_invariants,
    q_and_riccati_residual, matriciant_and_liouville,
)
from .states import (  # noqa: F401
    GermState, germ_state, ladder_lower, ladder_raise, class_state_moments,
    action_phase, phi1_phase,
)
from .green import (  # noqa: F401
    CausticError, Order0Kernel, make_kernel_order0, apply_kernel,
    compose_residual, spectral_kernel_matrix, phi1_correction_1d,
)
from .oracle import (  # noqa: F401
    Grid1D, GridWaveFunction, SplitStepConfig, coherent_packet,
    propagate_split_step, grid_moments, weyl_moment, fidelity,
    momentum_representation,
)
from .gauss1d import (  # noqa: F401
    GaussExperiment, ThetaPair, closed_form_C, closed_form_B, sigma_xx,
    theta_coefficients, corrected_trajectory, experiment_germ,
    principal_term_grid, superposition_experiment,
)
