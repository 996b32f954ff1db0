//! Points on the Grassmann manifold, subspace losses, geodesics and the
//! geodesic embedding construction.

mod basis;
mod embed;
mod geodesic;
mod loss;
mod metrics;

pub use basis::{OrthoBasis, TangentVector, ORTHO_TOL};
pub use embed::{alignment_loss, embed_curve, embed_geodesic, CurveSegment, EmbeddedCurve};
pub use geodesic::{grassmann_exp, grassmann_log, CUT_LOCUS_TOL};
pub use loss::{grad_loss, loss_l1, loss_l2, loss_l2_stoch, loss_l2_stoch_batch, loss_z2, LossKind, LsqPath};
pub use metrics::{principal_angles, relative_subspace_error, subspace_union, PrincipalAngles};
