//! Consumers of subspaces: deflated CG, two-grid correction, POD/Galerkin
//! reduced models, balanced truncation and finite-horizon LQR.

mod balanced;
mod cg;
mod lqr;
mod pod;
mod twogrid;

pub use balanced::{balanced_truncation, frequency_gain, gramians, BalancedReduction};
pub use cg::{cg, deflated_cg, SolverReport};
pub use lqr::{
    lqr_full, lqr_solve, lqr_solve_with_reference, simulate_uncontrolled, LqrOutcome, LqrReport, LqrSpec,
    RK4_STABILITY,
};
pub use pod::{
    global_pod_basis, pod_basis, pod_reconstruction_error, pod_rom_integrate, pod_singular_values,
    relative_trajectory_error, RomBasis, RomSource, POD_RANK_TOL,
};
pub use twogrid::{
    jacobi_leading_eigenspace, two_grid_apply, two_grid_rho, TwoGrid, DEFAULT_OMEGA, DEFAULT_POWER_ITERS,
};
