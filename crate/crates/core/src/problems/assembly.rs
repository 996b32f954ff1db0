//! Finite-difference assembly of −div k grad and −Δ + U on Dirichlet grids.

use crate::fields::{FieldSample, GridSpec};
use crate::numerics::SparseOperator;
use crate::{Error, Result};

fn check_channels(k: &[FieldSample]) -> Result<&GridSpec> {
    let first = k.first().ok_or_else(|| Error::InvalidArgument("no coefficient channels".into()))?;
    let grid = &first.grid;
    if k.len() != 1 && k.len() != grid.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficient channels on a {}-dimensional grid (expected 1 or {})",
            k.len(),
            grid.dim(),
            grid.dim()
        )));
    }
    for c in k {
        if c.grid != *grid {
            return Err(Error::DimensionMismatch("coefficient channels live on different grids".into()));
        }
        if let Some((i, &v)) = c.values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveCoefficient(v, i));
        }
    }
    Ok(grid)
}

/// SPD operator −div k grad with face coefficients averaged arithmetically
/// from the two adjacent nodes. A single channel is isotropic; otherwise
/// channel `a` is the coefficient along axis `a`. Faces on the boundary use
/// the value at the interior node.
pub fn assemble_elliptic(k: &[FieldSample]) -> Result<SparseOperator> {
    let grid = check_channels(k)?;
    let n = grid.len();
    let dim = grid.dim();
    let mut t = Vec::with_capacity(n * (2 * dim + 1));
    let mut stride = 1;
    for a in 0..dim {
        let ka = &k[if k.len() == 1 { 0 } else { a }].values;
        let inv_h2 = 1.0 / grid.spacing(a).powi(2);
        let na = grid.extents[a];
        for p in 0..n {
            let j = (p / stride) % na;
            // Face towards lower index.
            let lo = if j > 0 { 0.5 * (ka[p] + ka[p - stride]) } else { ka[p] };
            let hi = if j + 1 < na { 0.5 * (ka[p] + ka[p + stride]) } else { ka[p] };
            t.push((p, p, (lo + hi) * inv_h2));
            if j > 0 {
                t.push((p, p - stride, -lo * inv_h2));
            }
            if j + 1 < na {
                t.push((p, p + stride, -hi * inv_h2));
            }
        }
        stride *= na;
    }
    SparseOperator::from_triplets(n, &t)
}

/// Operator −Δ + diag(U) with the standard second-difference Laplacian.
pub fn assemble_schrodinger(u: &FieldSample) -> Result<SparseOperator> {
    if u.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("potential contains non-finite values".into()));
    }
    let lap = assemble_elliptic(&[FieldSample::constant(u.grid.clone(), 1.0)])?;
    lap.add_scaled(1.0, &SparseOperator::diagonal(&u.values))
}
