//! Discretised operators, PDE integrators, dataset generation and the
//! on-disk dataset container.

mod assembly;
mod burgers;
mod control;
mod dataset;
pub(crate) mod io;
mod twogrid;

pub use assembly::{assemble_elliptic, assemble_schrodinger};
pub use burgers::{
    advect, burgers_integrate, cfl_number, diffusion_operator, viscosity_from_field, BurgersSpec, SnapshotMatrix,
};
pub use control::{heat_control_system, HeatControlSystem};
pub use twogrid::{twogrid_field, FourierPhase, TwoGridFieldSpec};
pub use dataset::{
    control_target, gen_dataset, gen_eig_dataset, gen_elliptic_rhs_pairs, rhs_from_modes, DatasetSpec, Preset,
    RhsPair, SubspaceDataset, QM_POTENTIAL_CAP, RHS_MODES,
};
pub use io::{
    read_dataset, read_meta, write_dataset, DatasetMeta, DATASET_MAGIC, FEATURES_FILE, FORMAT_VERSION, META_FILE,
    TARGETS_FILE,
};
