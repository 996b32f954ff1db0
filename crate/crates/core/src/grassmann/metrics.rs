use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::OrthoBasis;
use crate::numerics::svd_sorted;
use crate::{Error, Result};

/// Principal angles in radians, ascending, each in [0, π/2].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalAngles {
    pub angles: Vec<f64>,
}

impl PrincipalAngles {
    pub fn max(&self) -> f64 {
        self.angles.iter().cloned().fold(0.0, f64::max)
    }

    pub fn sum_sin_squared(&self) -> f64 {
        self.angles.iter().map(|t| t.sin().powi(2)).sum()
    }
}

/// Principal angles via cosines (large angles) and sines (small angles).
pub fn principal_angles(a: &OrthoBasis, b: &OrthoBasis) -> Result<PrincipalAngles> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch(format!("ambient dims {} vs {}", a.ambient_dim(), b.ambient_dim())));
    }
    // Project the smaller subspace off the larger one.
    let (big, small) = if a.dim() >= b.dim() { (a.matrix(), b.matrix()) } else { (b.matrix(), a.matrix()) };
    let k = small.ncols();
    if k == 0 {
        return Ok(PrincipalAngles { angles: vec![] });
    }
    let cos = svd_sorted(&(big.transpose() * small)).singular_values;
    let resid = small - big * (big.transpose() * small);
    let mut sin = svd_sorted(&resid).singular_values;
    sin.reverse();
    let angles = (0..k)
        .map(|i| {
            let c = cos[i].clamp(0.0, 1.0);
            if c * c >= 0.5 {
                sin[i].clamp(0.0, 1.0).asin()
            } else {
                c.acos()
            }
        })
        .collect::<Vec<_>>();
    let mut angles = angles;
    angles.sort_by(f64::total_cmp);
    Ok(PrincipalAngles { angles })
}

/// RMS sine of the principal angles between span(W) and span(V), p = dim V ≤ dim W.
pub fn relative_subspace_error(w: &OrthoBasis, v: &OrthoBasis) -> Result<f64> {
    if w.ambient_dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch(format!("ambient dims {} vs {}", w.ambient_dim(), v.ambient_dim())));
    }
    let p = v.dim();
    if p == 0 {
        return Ok(0.0);
    }
    // ‖(I − WWᵀ)V‖_F² = Σ sin²θ, without the cancellation of p − ‖WᵀV‖².
    let resid = v.matrix() - w.matrix() * (w.matrix().transpose() * v.matrix());
    Ok((resid.norm_squared() / p as f64).min(1.0).sqrt())
}

/// Orthonormal basis of the numerical span of all inputs: columns whose
/// singular value of the stacked matrix exceeds `tol`.
pub fn subspace_union(bases: &[OrthoBasis], tol: f64) -> Result<OrthoBasis> {
    let Some(first) = bases.first() else {
        return Err(Error::InvalidArgument("subspace_union of an empty list".into()));
    };
    let n = first.ambient_dim();
    if bases.iter().any(|b| b.ambient_dim() != n) {
        return Err(Error::DimensionMismatch("subspace_union needs a common ambient dimension".into()));
    }
    let total: usize = bases.iter().map(|b| b.dim()).sum();
    let mut stacked = DMatrix::zeros(n, total);
    let mut c = 0;
    for b in bases {
        stacked.columns_mut(c, b.dim()).copy_from(b.matrix());
        c += b.dim();
    }
    let s = svd_sorted(&stacked);
    let rank = s.singular_values.iter().filter(|&&x| x > tol).count();
    Ok(OrthoBasis::new_unchecked(s.u.columns(0, rank).into_owned()))
}
