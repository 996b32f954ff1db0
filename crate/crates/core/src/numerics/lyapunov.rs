use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Diagonal block ranges of a real quasi-triangular Schur factor.
fn schur_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

fn block_abscissa(t: &DMatrix<f64>, (s, len): (usize, usize)) -> f64 {
    if len == 1 {
        return t[(s, s)];
    }
    let (a, b, c, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
    let mean = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc >= 0.0 {
        mean + disc.sqrt()
    } else {
        mean
    }
}

fn real_schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    a.clone()
        .try_schur(f64::EPSILON, 1000 * n.max(1))
        .map(|s| s.unpack())
        .ok_or_else(|| Error::ConvergenceFailure("real Schur decomposition did not converge".into()))
}

/// Largest real part over the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let (_, t) = real_schur(a)?;
    Ok(schur_blocks(&t).into_iter().map(|b| block_abscissa(&t, b)).fold(f64::NEG_INFINITY, f64::max))
}

/// Solves A X + X Aᵀ + Q = 0 by Bartels–Stewart on the real Schur form of A.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("lyapunov: A {:?}, Q {:?}", a.shape(), q.shape())));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (u, t) = real_schur(a)?;
    let blocks = schur_blocks(&t);
    let abscissa = blocks.iter().map(|&b| block_abscissa(&t, b)).fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= 0.0 {
        return Err(Error::UnstableSystem(abscissa));
    }

    // T Y + Y Tᵀ = −C with C = Uᵀ Q U, solved block by block from the bottom-right.
    let c = u.transpose() * q * &u;
    let mut y = DMatrix::<f64>::zeros(n, n);
    for &(i0, li) in blocks.iter().rev() {
        for &(j0, lj) in blocks.iter().rev() {
            let mut rhs = -c.view((i0, j0), (li, lj)).into_owned();
            if i0 + li < n {
                let rest = n - i0 - li;
                rhs -= t.view((i0, i0 + li), (li, rest)) * y.view((i0 + li, j0), (rest, lj));
            }
            if j0 + lj < n {
                let rest = n - j0 - lj;
                rhs -= y.view((i0, j0 + lj), (li, rest)) * t.view((j0, j0 + lj), (lj, rest)).transpose();
            }
            let tii = t.view((i0, i0), (li, li));
            let tjj = t.view((j0, j0), (lj, lj));
            // vec(T_ii Y + Y T_jjᵀ) = (I ⊗ T_ii + T_jj ⊗ I) vec(Y), column-major.
            let dim = li * lj;
            let mut k = DMatrix::<f64>::zeros(dim, dim);
            for col in 0..lj {
                for row in 0..li {
                    let r = col * li + row;
                    for rr in 0..li {
                        k[(r, col * li + rr)] += tii[(row, rr)];
                    }
                    for cc in 0..lj {
                        k[(r, cc * li + row)] += tjj[(col, cc)];
                    }
                }
            }
            let rv = DVector::from_column_slice(rhs.as_slice());
            let sol = k
                .lu()
                .solve(&rv)
                .ok_or_else(|| Error::ConvergenceFailure("singular Sylvester block".into()))?;
            y.view_mut((i0, j0), (li, lj)).copy_from_slice(sol.as_slice());
        }
    }
    let x = &u * y * u.transpose();
    Ok((&x + x.transpose()) * 0.5)
}
