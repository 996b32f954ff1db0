use nalgebra::{DMatrix, DVector};

use super::{grassmann_exp, grassmann_log, OrthoBasis, TangentVector};
use crate::numerics::svd_sorted;
use crate::{Error, Result};

/// Velocities at or below this Frobenius norm count as zero.
const ZERO_VELOCITY: f64 = 1e-14;

/// k − ‖WᵀV‖²_F, which equals ½‖WWᵀ − VVᵀ‖²_F − (r − k)/2 for W n×r, V n×k.
pub fn alignment_loss(w: &OrthoBasis, v: &OrthoBasis) -> f64 {
    v.dim() as f64 - (w.matrix().transpose() * v.matrix()).norm_squared()
}

/// Flips singular pairs so each left vector's first nonzero entry is positive.
fn canonical_sign(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for j in 0..u.ncols() {
        let first = u.column(j).iter().copied().find(|x| x.abs() > 1e-14).unwrap_or(0.0);
        if first < 0.0 {
            u.column_mut(j).neg_mut();
            v.column_mut(j).neg_mut();
        }
    }
}

fn lex_greater(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-12 {
            return x > y;
        }
    }
    false
}

/// Freezes the dominant direction of Δ: returns W0 = [U0 | u1] and a
/// velocity Δ' at W0 with ‖Δ'‖² = ‖Δ‖² − σ1² whose geodesic contains the
/// geodesic of Δ for all t.
pub fn embed_geodesic(delta: &TangentVector) -> Result<(OrthoBasis, TangentVector)> {
    if delta.norm() <= ZERO_VELOCITY {
        return Err(Error::ZeroVelocity);
    }
    let u0 = delta.base().matrix();
    let (n, k) = u0.shape();
    if k >= n {
        return Err(Error::InvalidArgument("no room to embed a full-dimensional subspace".into()));
    }
    let svd = svd_sorted(delta.delta());
    let (mut u, mut y) = (svd.u, svd.v);
    let sig = svd.singular_values;
    canonical_sign(&mut u, &mut y);

    let s1 = sig[0];
    let mut lead = 0;
    for j in 1..sig.len() {
        if (sig[j] - s1).abs() <= 1e-12 * s1 && lex_greater(u.column(j).as_slice(), u.column(lead).as_slice()) {
            lead = j;
        }
    }

    let mut u1: DVector<f64> = u.column(lead).into_owned();
    u1 -= u0 * (u0.transpose() * &u1);
    u1.unscale_mut(u1.norm());

    let mut w0 = DMatrix::zeros(n, k + 1);
    w0.columns_mut(0, k).copy_from(u0);
    w0.column_mut(k).copy_from(&u1);

    let mut d = DMatrix::zeros(n, k + 1);
    for j in (0..sig.len()).filter(|&j| j != lead) {
        let uj = u.column(j);
        let yj = y.column(j);
        for c in 0..k {
            let s = sig[j] * yj[c];
            if s != 0.0 {
                d.column_mut(c).axpy(s, &uj, 1.0);
            }
        }
    }
    let w0 = OrthoBasis::new_unchecked(w0);
    let d = &d - w0.matrix() * (w0.matrix().transpose() * &d);
    Ok((w0.clone(), TangentVector::new_unchecked(w0, d)))
}

/// Appends the coordinate direction with the largest component orthogonal
/// to `base` (lowest index on ties) and extends Δ by a zero column.
fn pad(delta: &TangentVector) -> TangentVector {
    let b = delta.base().matrix();
    let (n, k) = b.shape();
    let mut best = (0, -1.0);
    for i in 0..n {
        let resid = 1.0 - b.row(i).norm_squared();
        if resid > best.1 + 1e-12 {
            best = (i, resid);
        }
    }
    let mut e = DVector::zeros(n);
    e[best.0] = 1.0;
    for _ in 0..2 {
        e -= b * (b.transpose() * &e);
    }
    e.unscale_mut(e.norm());
    let mut w = DMatrix::zeros(n, k + 1);
    w.columns_mut(0, k).copy_from(b);
    w.column_mut(k).copy_from(&e);
    let mut d = DMatrix::zeros(n, k + 1);
    d.columns_mut(0, k).copy_from(delta.delta());
    TangentVector::new_unchecked(OrthoBasis::new_unchecked(w), d)
}

/// One geodesic piece of an embedded curve, valid on `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct CurveSegment {
    pub t0: f64,
    pub t1: f64,
    /// Embedded velocity at the segment start (base is W(t0)).
    pub velocity: TangentVector,
    /// Velocity of the original piecewise geodesic on this segment.
    pub original_speed: f64,
}

impl CurveSegment {
    pub fn eval(&self, t: f64) -> OrthoBasis {
        grassmann_exp(&self.velocity, t - self.t0)
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Piecewise-geodesic curve on Gr(r, n).
#[derive(Debug, Clone)]
pub struct EmbeddedCurve {
    pub segments: Vec<CurveSegment>,
}

impl EmbeddedCurve {
    /// Index of the segment containing `t` (clamped to the ends).
    pub fn segment_index(&self, t: f64) -> usize {
        let idx = self.segments.partition_point(|s| s.t1 <= t);
        idx.min(self.segments.len() - 1)
    }

    pub fn eval(&self, t: f64) -> OrthoBasis {
        self.segments[self.segment_index(t)].eval(t)
    }
}

/// Embeds a sampled curve on Gr(k, n) into Gr(r, n). On each interval the
/// samples are joined by a geodesic whose velocity is frozen r − k times.
pub fn embed_curve(samples: &[OrthoBasis], times: &[f64], r: usize) -> Result<EmbeddedCurve> {
    if samples.len() != times.len() || samples.len() < 2 {
        return Err(Error::InvalidArgument("embed_curve needs matching samples and times, at least two".into()));
    }
    let k = samples[0].dim();
    let n = samples[0].ambient_dim();
    if r <= k || r > n {
        return Err(Error::InvalidArgument(format!("target dimension {r} must satisfy {k} < r <= {n}")));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("sample times must be strictly increasing".into()));
    }
    let segments = crate::exec::try_map_indexed(samples.len() - 1, |i| {
        let dt = times[i + 1] - times[i];
        let mut vel = grassmann_log(&samples[i], &samples[i + 1])?.scaled(1.0 / dt);
        let original_speed = vel.norm();
        for _ in k..r {
            vel = if vel.norm() > ZERO_VELOCITY * original_speed.max(1.0) {
                embed_geodesic(&vel)?.1
            } else {
                pad(&vel)
            };
        }
        Ok::<_, Error>(CurveSegment { t0: times[i], t1: times[i + 1], velocity: vel, original_speed })
    })?;
    Ok(EmbeddedCurve { segments })
}
