use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::grassmann::{grassmann_exp, grassmann_log, OrthoBasis, TangentVector};
use crate::problems::SubspaceDataset;
use crate::{Error, Result};

/// Squared-exponential kernel exp(−d²/(2h²)); `bandwidth` defaults to the
/// median pairwise distance of the neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

fn default_ridge() -> f64 {
    1e-8
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { bandwidth: None, ridge: default_ridge() }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Indices of the `k` training samples closest to `query`; ties go to the
/// lower index.
pub fn nearest_neighbors(train: &SubspaceDataset, query: &[f64], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = train.features.iter().enumerate().map(|(i, f)| (dist(f, query), i)).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, i)| i).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        0.0
    } else if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Interpolates the target subspace at `query` in normal coordinates around
/// the nearest training target: neighbour log maps are regressed on the
/// features with centred kernel ridge regression and mapped back with exp.
pub fn interpolate_normal_coords(
    train: &SubspaceDataset,
    query: &[f64],
    k_nn: usize,
    kernel: &KernelParams,
) -> Result<OrthoBasis> {
    if k_nn == 0 || k_nn > train.n_samples() {
        return Err(Error::InvalidArgument(format!("k_nn = {k_nn} with {} training samples", train.n_samples())));
    }
    if query.len() != train.features[0].len() {
        return Err(Error::DimensionMismatch(format!("query length {} != {}", query.len(), train.features[0].len())));
    }
    let nn = nearest_neighbors(train, query, k_nn);
    let base = train.targets[nn[0]].clone();
    if k_nn == 1 {
        return Ok(base);
    }
    let tangents = nn.iter().map(|&i| grassmann_log(&base, &train.targets[i])).collect::<Result<Vec<_>>>()?;
    let feats: Vec<&[f64]> = nn.iter().map(|&i| train.features[i].as_slice()).collect();
    let mut pair = Vec::new();
    for a in 0..k_nn {
        for b in a + 1..k_nn {
            pair.push(dist(feats[a], feats[b]));
        }
    }
    let h = kernel.bandwidth.unwrap_or_else(|| median(pair));
    let h = if h > 0.0 { h } else { 1.0 };
    let kern = |d: f64| (-d * d / (2.0 * h * h)).exp();
    let gram = DMatrix::from_fn(k_nn, k_nn, |a, b| kern(dist(feats[a], feats[b])) + if a == b { kernel.ridge } else { 0.0 });
    let kq = DVector::from_fn(k_nn, |a, _| kern(dist(feats[a], query)));
    let weights = match gram.clone().cholesky() {
        Some(c) => c.solve(&kq),
        None => gram.lu().solve(&kq).ok_or_else(|| Error::RankDeficient("kernel matrix".into()))?,
    };
    // Centred regression: Δ = mean + Σ_a w_a (T_a − mean).
    let mean = tangents.iter().fold(DMatrix::zeros(base.ambient_dim(), base.dim()), |acc, t| acc + t.delta())
        / k_nn as f64;
    let mut delta = mean.clone();
    for (w, t) in weights.iter().zip(&tangents) {
        delta += (t.delta() - &mean) * *w;
    }
    Ok(grassmann_exp(&TangentVector::project(base, &delta)?, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;
    use crate::grassmann::principal_angles;
    use crate::problems::{DatasetSpec, Preset};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ds(features: Vec<Vec<f64>>, targets: Vec<OrthoBasis>) -> SubspaceDataset {
        let n = targets[0].ambient_dim();
        SubspaceDataset {
            spec: DatasetSpec::new(Preset::Qm1d, targets.len(), targets[0].dim(), 0).with_grid(n),
            grid: GridSpec::unit(1, n),
            features,
            targets,
        }
    }

    fn random_basis(rng: &mut ChaCha8Rng, n: usize, p: usize) -> OrthoBasis {
        OrthoBasis::orthonormalize(&DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))).unwrap()
    }

    #[test]
    fn training_point_with_one_neighbor_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t: Vec<OrthoBasis> = (0..4).map(|_| random_basis(&mut rng, 6, 2)).collect();
        let f: Vec<Vec<f64>> = (0..4).map(|i| (0..6).map(|j| (i * 6 + j) as f64).collect()).collect();
        let d = ds(f.clone(), t.clone());
        let out = interpolate_normal_coords(&d, &f[2], 1, &KernelParams::default()).unwrap();
        assert_eq!(out, t[2]);
    }

    #[test]
    fn geodesic_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u0 = random_basis(&mut rng, 10, 3);
        let u1 = random_basis(&mut rng, 10, 3);
        let delta = grassmann_log(&u0, &u1).unwrap();
        let f0 = vec![0.0; 10];
        let f1 = vec![1.0; 10];
        let d = ds(vec![f0, f1], vec![u0, u1]);
        let out = interpolate_normal_coords(&d, &[0.5; 10], 2, &KernelParams::default()).unwrap();
        let truth = grassmann_exp(&delta, 0.5);
        assert!(principal_angles(&out, &truth).unwrap().max() <= 1e-2);
    }

    #[test]
    fn equal_neighbors_give_that_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_basis(&mut rng, 8, 2);
        let d = ds(vec![vec![1.0; 8], vec![1.0; 8], vec![1.0; 8]], vec![u.clone(), u.clone(), u.clone()]);
        let out = interpolate_normal_coords(&d, &[0.3; 8], 3, &KernelParams::default()).unwrap();
        assert!(principal_angles(&out, &u).unwrap().max() < 1e-7);
        assert!(interpolate_normal_coords(&d, &[0.3; 8], 4, &KernelParams::default()).is_err());
    }
}
