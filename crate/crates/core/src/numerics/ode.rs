use nalgebra::DVector;

use crate::{Error, Result};

/// One classical Runge–Kutta step of size `h`.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)));
    let k4 = f(t + h, &(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrates ẏ = f(t, y) from `t0` to `t1` in `steps` equal steps and returns
/// all `steps + 1` states. `t1 < t0` integrates backward.
pub fn rk4_integrate<F>(mut f: F, y0: &DVector<f64>, t0: f64, t1: f64, steps: usize) -> Result<Vec<DVector<f64>>>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    if steps == 0 {
        return Err(Error::InvalidArgument("rk4_integrate needs at least one step".into()));
    }
    let h = (t1 - t0) / steps as f64;
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(y0.clone());
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let next = rk4_step(&mut f, t, &traj[s], h);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState(t + h));
        }
        traj.push(next);
    }
    Ok(traj)
}
