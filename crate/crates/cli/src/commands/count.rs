use std::path::Path;

use serde::{Deserialize, Serialize};
use subreg_core::eigencount::{
    asymptotic_count, census_position_k, census_subspaces, count_products_leq, greedy_augment, tau_sum, upper_bound,
};

use crate::config::Loaded;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir};

/// Largest position accepted by `count`.
pub const MAX_K: u64 = 10_000_000;
/// Largest dimension accepted by `count`.
pub const MAX_D: u32 = 64;
/// Largest position for which spectra are sampled.
pub const MAX_CENSUS_K: u64 = 100_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountConfig {
    pub schema_version: u32,
    pub k: u64,
    pub d: u32,
    /// Monte Carlo coefficient draws per row (0 disables the census).
    #[serde(default)]
    pub mc: usize,
    /// Most frequent tuples added in the greedy augmentation (0 disables it).
    #[serde(default)]
    pub greedy: usize,
    #[serde(default)]
    pub seed: u64,
}

impl CountConfig {
    pub fn check(&self) -> CliResult<()> {
        if self.k == 0 || self.d == 0 {
            return Err(CliError::config("k and d must be at least 1"));
        }
        if self.k > MAX_K || self.d > MAX_D {
            return Err(CliError::config(format!("count guard: need k <= {MAX_K} and d <= {MAX_D}")));
        }
        if self.mc > 0 && self.k > MAX_CENSUS_K {
            return Err(CliError::config(format!("census guard: need k <= {MAX_CENSUS_K} when mc > 0")));
        }
        if self.greedy > 0 && self.mc == 0 {
            return Err(CliError::config("greedy augmentation needs a census (mc > 0)"));
        }
        Ok(())
    }

    /// Positions 1, 2, 4, … below k, then k itself.
    pub fn ladder(&self) -> Vec<u64> {
        let mut v: Vec<u64> = std::iter::successors(Some(1u64), |x| x.checked_mul(2)).take_while(|&x| x < self.k).collect();
        v.push(self.k);
        v
    }
}

pub fn run(cfg: &Loaded<CountConfig>, out: &Path) -> CliResult<()> {
    let c = &cfg.config;
    c.check()?;
    let mut dir = OutDir::open(out)?;
    let mut header = vec!["k", "d", "exact", "tau_sum", "asymptotic", "upper_bound"];
    if c.mc > 0 {
        header.extend(["census_position_k", "census_subspaces"]);
        if c.greedy > 0 {
            header.push("greedy_subspaces");
        }
    }
    let mut w = dir.csv("count.csv", &cfg.hash, &header)?;
    for k in c.ladder() {
        let exact = count_products_leq(k, c.d);
        let ts = tau_sum(k, c.d);
        let mut row = vec![
            k.to_string(),
            c.d.to_string(),
            exact.to_string(),
            ts.to_string(),
            num(asymptotic_count(k, c.d)),
            num(upper_bound(k, c.d)),
        ];
        if c.mc > 0 {
            let (d, kk) = (c.d as usize, k as usize);
            row.push(census_position_k(d, kk, c.mc, c.seed).len().to_string());
            let census = census_subspaces(d, kk, c.mc, c.seed);
            row.push(census.distinct_count().to_string());
            if c.greedy > 0 {
                row.push(greedy_augment(&census, c.greedy).to_string());
            }
        }
        w.row(row)?;
    }
    w.close()?;
    dir.finish("count", &cfg.value, &cfg.hash)?;
    Ok(())
}
