use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{dense::sym_eig_sorted, BandCholesky, SparseOperator, Tolerances};
use crate::{Error, Result};

/// Eigenpairs with ascending values and orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub tolerances: Tolerances,
    /// Block size for the Lanczos path.
    pub block: usize,
    /// Krylov basis cap per restart, as a multiple of `m`.
    pub basis_factor: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), block: 4, basis_factor: 6, max_restarts: 30, seed: 0x5eed }
    }
}

/// The `m` smallest eigenpairs of `op`.
pub fn sym_eig_smallest(op: &SparseOperator, m: usize) -> Result<EigDecomposition> {
    sym_eig_smallest_with(op, m, &EigOptions::default())
}

pub fn sym_eig_smallest_with(op: &SparseOperator, m: usize, opts: &EigOptions) -> Result<EigDecomposition> {
    let n = op.dim();
    if m > n {
        return Err(Error::InvalidArgument(format!("requested {m} eigenpairs of a {n}-dimensional operator")));
    }
    if m == 0 {
        return Ok(EigDecomposition { values: vec![], vectors: DMatrix::zeros(n, 0) });
    }
    if n <= opts.tolerances.dense_eig_max_dim {
        let e = sym_eig_dense(&op.to_dense());
        return Ok(EigDecomposition { values: e.values[..m].to_vec(), vectors: e.vectors.columns(0, m).into_owned() });
    }
    lanczos_shift_invert(op, m, opts)
}

/// Full dense symmetric eigendecomposition.
pub fn sym_eig_dense(a: &DMatrix<f64>) -> EigDecomposition {
    let (values, vectors) = sym_eig_sorted(a);
    EigDecomposition { values, vectors }
}

fn orthogonalize_against(basis: &[DVector<f64>], v: &mut DVector<f64>) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

/// Block Lanczos on A⁻¹ (shift σ = 0) with full reorthogonalization and
/// restarts from the current Ritz vectors.
fn lanczos_shift_invert(op: &SparseOperator, m: usize, opts: &EigOptions) -> Result<EigDecomposition> {
    let n = op.dim();
    let chol = BandCholesky::factor(op)?;
    let tol = opts.tolerances.eig_residual * op.gershgorin_bound();
    let bs = opts.block.max(1);
    let cap = (opts.basis_factor * m + 4 * bs).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let randv = |rng: &mut ChaCha8Rng| DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut start: Vec<DVector<f64>> = (0..bs.max(m).min(cap)).map(|_| randv(&mut rng)).collect();
    let mut worst = f64::INFINITY;

    for _ in 0..opts.max_restarts {
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(cap);
        let mut images: Vec<DVector<f64>> = Vec::with_capacity(cap);
        let mut pending = std::mem::take(&mut start);
        while basis.len() < cap {
            let mut next = Vec::new();
            for mut v in pending.drain(..) {
                if basis.len() >= cap {
                    break;
                }
                // Images of A⁻¹ are scaled by 1/λ, so the breakdown test is relative.
                let before = v.norm();
                orthogonalize_against(&basis, &mut v);
                if !(v.norm() > 1e-10 * before) {
                    v = randv(&mut rng);
                    orthogonalize_against(&basis, &mut v);
                }
                v.unscale_mut(v.norm());
                let mut w = v.clone();
                chol.solve_in_place(w.as_mut_slice());
                next.push(w.clone());
                images.push(w);
                basis.push(v);
            }
            pending = next;
            if pending.is_empty() {
                pending = (0..bs).map(|_| randv(&mut rng)).collect();
            }
        }

        let k = basis.len();
        let b = DMatrix::from_columns(&basis);
        let ab = DMatrix::from_columns(&images);
        let (_, y) = sym_eig_sorted(&(b.transpose() * &ab));
        // Largest eigenvalues of A⁻¹ belong to the smallest of A. Guard
        // vectors beyond m are carried through restarts but not tested.
        let take = m.min(k);
        let keep = (m + (m / 4).max(bs)).min(k);
        let ritz = &b * DMatrix::from_fn(k, take, |i, j| y[(i, k - 1 - j)]);
        let aritz = op.mul_dense(&ritz);
        let mut values = Vec::with_capacity(take);
        worst = 0.0;
        for j in 0..take {
            let phi = ritz.column(j);
            let lam = phi.dot(&aritz.column(j));
            worst = worst.max((aritz.column(j) - phi * lam).norm());
            values.push(lam);
        }
        if worst <= tol {
            let mut order: Vec<usize> = (0..take).collect();
            order.sort_by(|&a, &c| values[a].total_cmp(&values[c]));
            return Ok(EigDecomposition {
                values: order.iter().map(|&j| values[j]).collect(),
                vectors: DMatrix::from_fn(n, take, |i, j| ritz[(i, order[j])]),
            });
        }
        start = (0..keep).map(|j| &b * y.column(k - 1 - j)).collect();
    }
    Err(Error::ConvergenceFailure(format!("shift-invert Lanczos: worst residual {worst:e} > {tol:e}")))
}
