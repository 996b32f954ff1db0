use nalgebra::DVector;

use super::SparseOperator;
use crate::{Error, Result};

/// Banded Cholesky factor L (A = L Lᵀ) stored by rows: `band[i*(b+1) + (b - (i-j))] = L[i][j]`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    b: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(op: &SparseOperator) -> Result<Self> {
        let n = op.dim();
        let b = op.bandwidth();
        let w = b + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in op.row(i) {
                if j <= i {
                    band[i * w + b - (i - j)] = v;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            for j in j0..=i {
                let mut s = band[i * w + b - (i - j)];
                let k0 = j0.max(j.saturating_sub(b));
                for k in k0..j {
                    s -= band[i * w + b - (i - k)] * band[j * w + b - (j - k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::RankDeficient(format!("band cholesky pivot {i} = {s:e}")));
                    }
                    band[i * w + b] = s.sqrt();
                } else {
                    band[i * w + b - (i - j)] = s / band[j * w + b];
                }
            }
        }
        Ok(Self { n, b, band })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, b, w) = (self.n, self.b, self.b + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(b)..i {
                s -= self.band[i * w + b - (i - k)] * x[k];
            }
            x[i] = s / self.band[i * w + b];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n.min(i + b + 1) {
                s -= self.band[k * w + b - (k - i)] * x[k];
            }
            x[i] = s / self.band[i * w + b];
        }
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = rhs.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_laplacian() {
        let a = SparseOperator::laplacian_2d(7, 5, 0.5, 0.25);
        let f = BandCholesky::factor(&a).unwrap();
        let rhs = DVector::from_fn(35, |i, _| (i as f64).sin());
        let x = f.solve(&rhs);
        assert!((a.matvec(&x) - rhs).norm() < 1e-10);
    }

    #[test]
    fn indefinite_rejected() {
        let a = SparseOperator::diagonal(&[1.0, -1.0]);
        assert!(BandCholesky::factor(&a).is_err());
    }
}
