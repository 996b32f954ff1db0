//! Counting which Dirichlet eigenvectors can occupy a given position of the
//! spectrum of the constant-coefficient operator −Σ a_j ∂²_j on the unit cube.
//!
//! Eigenvectors are indexed by tuples (i_1, …, i_D) of positive integers with
//! eigenvalue Σ a_j (π i_j)². An index tuple can only appear at position k
//! when Π i_j ≤ k, so the number of candidates is the number of D-tuples with
//! product at most k.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::f64::consts::PI;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec;

/// Multi-index of a tensor-product eigenvector; all entries ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexTuple(pub Vec<u32>);

impl IndexTuple {
    pub fn ones(d: usize) -> Self {
        Self(vec![1; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl std::fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Number of D-tuples of positive integers with product ≤ k.
pub fn count_products_leq(k: u64, d: u32) -> BigUint {
    let mut memo = HashMap::new();
    count_rec(k, d.max(1), &mut memo)
}

fn count_rec(k: u64, d: u32, memo: &mut HashMap<(u64, u32), BigUint>) -> BigUint {
    if k == 0 {
        return BigUint::ZERO;
    }
    if d == 1 {
        return BigUint::from(k);
    }
    if k == 1 {
        return BigUint::from(1u32);
    }
    if let Some(v) = memo.get(&(k, d)) {
        return v.clone();
    }
    // Σ_{i≤k} #(⌊k/i⌋, d−1), grouped over runs of equal quotient.
    let mut total = BigUint::ZERO;
    let mut i = 1;
    while i <= k {
        let q = k / i;
        let last = k / q;
        total += count_rec(q, d - 1, memo) * BigUint::from(last - i + 1);
        i = last + 1;
    }
    memo.insert((k, d), total.clone());
    total
}

fn binomial(n: u64, r: u64) -> BigUint {
    let r = r.min(n - r);
    let mut acc = BigUint::from(1u32);
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn prime_exponents(mut p: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= p {
        let mut a = 0;
        while p % f == 0 {
            p /= f;
            a += 1;
        }
        if a > 0 {
            out.push(a);
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if p > 1 {
        out.push(1);
    }
    out
}

/// Number of ordered D-tuples with product exactly p: Π_r C(a_r + D − 1, a_r).
pub fn tau(p: u64, d: u32) -> BigUint {
    assert!(p >= 1, "tau needs p >= 1");
    prime_exponents(p).into_iter().map(|a| binomial(a + d as u64 - 1, a)).product()
}

/// Σ_{p ≤ k} τ(p, D) using a smallest-prime-factor sieve.
pub fn tau_sum(k: u64, d: u32) -> BigUint {
    let k = k as usize;
    let mut spf = vec![0u32; k + 1];
    for i in 2..=k {
        if spf[i] == 0 {
            let mut j = i;
            while j <= k {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    let mut binom_cache: HashMap<u64, BigUint> = HashMap::new();
    let mut total = BigUint::ZERO;
    for p in 1..=k {
        let mut x = p;
        let mut term = BigUint::from(1u32);
        while x > 1 {
            let f = spf[x] as usize;
            let mut a = 0u64;
            while x % f == 0 {
                x /= f;
                a += 1;
            }
            term *= binom_cache.entry(a).or_insert_with(|| binomial(a + d as u64 - 1, a)).clone();
        }
        total += term;
    }
    total
}

/// Leading asymptotic k (ln k)^{D−1} / (D−1)!.
pub fn asymptotic_count(k: u64, d: u32) -> f64 {
    let lk = (k as f64).ln();
    let mut v = k as f64;
    for j in 1..d {
        v *= lk / j as f64;
    }
    v
}

/// Upper bound k · D^{log₂ k}.
pub fn upper_bound(k: u64, d: u32) -> f64 {
    k as f64 * (d as f64).powf((k as f64).log2())
}

/// Earliest position an eigenvector can occupy: the product of its indices.
pub fn min_position(t: &IndexTuple) -> BigUint {
    t.0.iter().map(|&i| BigUint::from(i)).product()
}

/// The first `ordered.len()` eigenvectors for coefficients `coefficients`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOrder {
    pub coefficients: Vec<f64>,
    pub ordered: Vec<IndexTuple>,
    pub values: Vec<f64>,
}

fn energy(a: &[f64], t: &[u32]) -> f64 {
    // Summing sorted terms makes the value invariant under permutations of
    // equal coefficients, so symmetric ties compare exactly equal.
    let mut terms: Vec<f64> = a.iter().zip(t).map(|(&aj, &ij)| aj * (ij as f64) * (ij as f64)).collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>() * PI * PI
}

struct Entry {
    lambda: f64,
    tuple: IndexTuple,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    // Reversed so the max-heap pops the smallest (λ, tuple).
    fn cmp(&self, o: &Self) -> Ordering {
        o.lambda.total_cmp(&self.lambda).then_with(|| o.tuple.cmp(&self.tuple))
    }
}

/// First `k` index tuples in ascending eigenvalue order, ties broken
/// lexicographically. Best-first search over the lattice: every tuple has a
/// unique parent (decrement its last index > 1) with strictly smaller
/// eigenvalue, so pops come out in exact order.
pub fn enumerate_spectrum(a: &[f64], k: usize) -> SpectrumOrder {
    assert!(a.iter().all(|&x| x > 0.0), "coefficients must be positive");
    let d = a.len();
    let mut heap = BinaryHeap::new();
    let start = IndexTuple::ones(d);
    heap.push(Entry { lambda: energy(a, &start.0), tuple: start });
    let mut ordered = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    while ordered.len() < k {
        let Some(Entry { lambda, tuple }) = heap.pop() else { break };
        let last = tuple.0.iter().rposition(|&i| i > 1).unwrap_or(0);
        for j in last..d {
            let mut child = tuple.0.clone();
            child[j] += 1;
            heap.push(Entry { lambda: energy(a, &child), tuple: IndexTuple(child) });
        }
        ordered.push(tuple);
        values.push(lambda);
    }
    SpectrumOrder { coefficients: a.to_vec(), ordered, values }
}

fn sample_coefficients(d: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = exec::stream_rng(seed, index);
    // (0, 1]: strictly positive.
    (0..d).map(|_| 1.0 - rng.random::<f64>()).collect()
}

/// Distinct tuples found at position k (1-based) over `n_samples` coefficient
/// draws a ~ U(0,1)^D.
pub fn census_position_k(d: usize, k: usize, n_samples: usize, seed: u64) -> BTreeSet<IndexTuple> {
    assert!(k >= 1 && d >= 1);
    exec::map_indexed(n_samples, |s| {
        let a = sample_coefficients(d, seed, s as u64);
        enumerate_spectrum(&a, k).ordered.swap_remove(k - 1)
    })
    .into_iter()
    .collect()
}

/// Outcome of a subspace census.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceCensus {
    pub k: usize,
    pub n_samples: usize,
    /// Distinct first-k eigenspaces, each as a sorted list of tuples.
    pub subspaces: BTreeSet<Vec<IndexTuple>>,
    /// How many sampled eigenspaces contain each tuple.
    pub frequency: BTreeMap<IndexTuple, u64>,
}

impl SubspaceCensus {
    pub fn distinct_count(&self) -> usize {
        self.subspaces.len()
    }
}

/// Census of the span of the first k eigenvectors over `n_samples` draws.
pub fn census_subspaces(d: usize, k: usize, n_samples: usize, seed: u64) -> SubspaceCensus {
    assert!(k >= 1 && d >= 1);
    let sets = exec::map_indexed(n_samples, |s| {
        let a = sample_coefficients(d, seed, s as u64);
        let mut v = enumerate_spectrum(&a, k).ordered;
        v.sort();
        v
    });
    let mut frequency = BTreeMap::new();
    for set in &sets {
        for t in set {
            *frequency.entry(t.clone()).or_insert(0) += 1;
        }
    }
    SubspaceCensus { k, n_samples, subspaces: sets.into_iter().collect(), frequency }
}

/// The `m` most frequent tuples, ties broken lexicographically.
pub fn most_frequent(freq: &BTreeMap<IndexTuple, u64>, m: usize) -> Vec<IndexTuple> {
    let mut v: Vec<(&IndexTuple, u64)> = freq.iter().map(|(t, &c)| (t, c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v.into_iter().take(m).map(|(t, _)| t.clone()).collect()
}

/// Number of distinct subspaces after adding the `m` most frequent tuples to
/// every observed eigenspace.
pub fn greedy_augment(census: &SubspaceCensus, m: usize) -> usize {
    let extra = most_frequent(&census.frequency, m);
    census
        .subspaces
        .iter()
        .map(|s| {
            let mut u: BTreeSet<&IndexTuple> = s.iter().collect();
            u.extend(extra.iter());
            u
        })
        .collect::<BTreeSet<_>>()
        .len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_count(k: u64, d: u32) -> u64 {
        fn rec(k: u64, d: u32) -> u64 {
            if d == 0 {
                return 1;
            }
            (1..=k).map(|i| rec(k / i, d - 1)).sum()
        }
        rec(k, d)
    }

    fn t(v: &[u32]) -> IndexTuple {
        IndexTuple(v.to_vec())
    }

    #[test]
    fn count_small_cases() {
        assert_eq!(count_products_leq(17, 1), BigUint::from(17u32));
        assert_eq!(count_products_leq(4, 2), BigUint::from(8u32));
        for d in 1..=4 {
            for k in 1..=40 {
                assert_eq!(count_products_leq(k, d), BigUint::from(brute_count(k, d)), "k={k} d={d}");
            }
        }
    }

    #[test]
    fn tau_cases() {
        assert_eq!(tau(1, 5), BigUint::from(1u32));
        assert_eq!(tau(12, 2), BigUint::from(6u32));
        assert_eq!(tau(8, 3), BigUint::from(10u32));
        assert_eq!(tau_sum(100, 3), count_products_leq(100, 3));
    }

    #[test]
    fn min_position_cases() {
        assert_eq!(min_position(&IndexTuple::ones(4)), BigUint::from(1u32));
        assert_eq!(min_position(&t(&[4, 5])), BigUint::from(20u32));
        assert_eq!(min_position(&t(&[2, 3, 7])), BigUint::from(42u32));
    }

    #[test]
    fn spectrum_orders() {
        let s = enumerate_spectrum(&[1.0, 1e6], 3);
        assert_eq!(s.ordered, vec![t(&[1, 1]), t(&[2, 1]), t(&[3, 1])]);
        let s = enumerate_spectrum(&[1.0, 1.0], 4);
        assert_eq!(s.ordered, vec![t(&[1, 1]), t(&[1, 2]), t(&[2, 1]), t(&[2, 2])]);
        assert_eq!(s.values[1], s.values[2]);
        let s = enumerate_spectrum(&[0.3], 5);
        assert_eq!(s.ordered, (1..=5).map(|i| t(&[i])).collect::<Vec<_>>());
    }

    #[test]
    fn spectrum_matches_brute_force() {
        let a = [0.37, 0.91, 0.12];
        let s = enumerate_spectrum(&a, 30);
        let mut all: Vec<(f64, IndexTuple)> = Vec::new();
        for i in 1..=20 {
            for j in 1..=20 {
                for l in 1..=20 {
                    let tp = t(&[i, j, l]);
                    all.push((energy(&a, &tp.0), tp));
                }
            }
        }
        all.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
        let expect: Vec<_> = all.into_iter().take(30).map(|x| x.1).collect();
        assert_eq!(s.ordered, expect);
    }

    #[test]
    fn census_properties() {
        assert_eq!(census_position_k(3, 1, 50, 1).into_iter().collect::<Vec<_>>(), vec![IndexTuple::ones(3)]);
        let c = census_position_k(2, 3, 2000, 2);
        assert!(c.iter().all(|x| min_position(x) <= BigUint::from(3u32)));
        assert!(BigUint::from(c.len()) <= count_products_leq(3, 2));
        assert_eq!(census_subspaces(2, 1, 100, 3).distinct_count(), 1);
    }

    #[test]
    fn census_lower_bound_and_monotone() {
        // Only {(1,1),(1,2)}, {(1,1),(2,1)} exist at k = 2, and three sets at k = 3.
        assert_eq!(census_subspaces(2, 2, 20_000, 4).distinct_count(), 2);
        assert_eq!(census_subspaces(2, 3, 20_000, 4).distinct_count(), 3);
        for k in 4..=6 {
            let c = census_subspaces(2, k, 20_000, 4);
            assert!(c.distinct_count() >= k + 1, "k={k}: {}", c.distinct_count());
        }
        let small = census_subspaces(3, 5, 500, 5).distinct_count();
        let large = census_subspaces(3, 5, 2000, 5).distinct_count();
        assert!(small <= large);
    }

    #[test]
    fn greedy_reduces() {
        let c = census_subspaces(3, 10, 3000, 6);
        let base = greedy_augment(&c, 0);
        assert_eq!(base, c.distinct_count());
        let m10 = greedy_augment(&c, 10);
        let m20 = greedy_augment(&c, 20);
        assert!(m20 < m10 && m10 < base, "{base} {m10} {m20}");
        assert_eq!(greedy_augment(&c, c.frequency.len()), 1);
    }
}
