//! Controlled heat equation φ' = Aφ − b + W u with terminal observation Ψᵀφ(T).
//!
//! A = −K where K is the assembled SPD diffusion operator. The constant
//! forcing is carried as a second state block, giving the homogeneous system
//! d/dt (φ, φ̃) = [[A, −I], [0, 0]] (φ, φ̃) + [W; 0] u with φ̃(0) = b.

use nalgebra::{DMatrix, DVector};

use crate::fields::FieldSample;
use crate::problems::assemble_elliptic;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HeatControlSystem {
    /// State matrix A = −K (negative definite).
    pub a: DMatrix<f64>,
    /// Forcing b, entering the dynamics as −b.
    pub b: DVector<f64>,
    /// Input shapes, one per column.
    pub w: DMatrix<f64>,
    /// Observation shapes, one per column.
    pub psi: DMatrix<f64>,
    pub phi0: DVector<f64>,
}

/// Builds the system from a 1-D diffusion coefficient and discretised shapes.
/// `w` and `psi` are expected to have orthonormal (or zero) columns.
pub fn heat_control_system(
    k: &FieldSample,
    b: &DVector<f64>,
    w: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    phi0: &DVector<f64>,
) -> Result<HeatControlSystem> {
    let n = k.grid.len();
    if b.len() != n || w.nrows() != n || psi.nrows() != n || phi0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "control data must have {n} rows (b {}, W {}, Ψ {}, φ0 {})",
            b.len(),
            w.nrows(),
            psi.nrows(),
            phi0.len()
        )));
    }
    let a = -assemble_elliptic(std::slice::from_ref(k))?.to_dense();
    Ok(HeatControlSystem { a, b: b.clone(), w: w.clone(), psi: psi.clone(), phi0: phi0.clone() })
}

impl HeatControlSystem {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.w.ncols()
    }

    /// [[A, −I], [0, 0]].
    pub fn augmented_matrix(&self) -> DMatrix<f64> {
        let n = self.state_dim();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        for i in 0..n {
            m[(i, n + i)] = -1.0;
        }
        m
    }

    /// [W; 0].
    pub fn augmented_input(&self) -> DMatrix<f64> {
        let n = self.state_dim();
        let mut m = DMatrix::zeros(2 * n, self.n_inputs());
        m.view_mut((0, 0), (n, self.n_inputs())).copy_from(&self.w);
        m
    }

    /// (φ0, b).
    pub fn initial_state(&self) -> DVector<f64> {
        let n = self.state_dim();
        DVector::from_fn(2 * n, |i, _| if i < n { self.phi0[i] } else { self.b[i - n] })
    }

    /// Terminal cost weight ΨΨᵀ on φ.
    pub fn terminal_weight(&self) -> DMatrix<f64> {
        &self.psi * self.psi.transpose()
    }

    /// Right-hand side of the augmented system.
    pub fn augmented_rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.augmented_matrix() * x + &self.augmented_input() * u
    }

    /// Uncontrolled steady state φ = A⁻¹b.
    pub fn steady_state(&self) -> Result<DVector<f64>> {
        self.a
            .clone()
            .lu()
            .solve(&self.b)
            .ok_or_else(|| Error::RankDeficient("singular heat operator".into()))
    }
}
