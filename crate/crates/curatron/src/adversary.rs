//! Corruption and missingness generators: sparse logit-space corruption,
//! probability-space tampering, random deletion, the transpose flip
//! adversary, and the response-injection attack.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{LogitMatrix, PreferenceMatrix};
use crate::ranking::copeland;

/// Space in which a corruption's deltas live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionSpace {
    Logit,
    Probability,
}

/// Sparse skew-symmetric corruption: `delta` at `(i, j)` with `i < j`
/// implies `-delta` at `(j, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCorruption {
    pub n: usize,
    /// Triples `(i, j, delta)` with `i < j`, sorted, no duplicates.
    pub triples: Vec<(usize, usize, f64)>,
    pub space: CorruptionSpace,
}

impl SparseCorruption {
    pub fn new(n: usize, mut triples: Vec<(usize, usize, f64)>, space: CorruptionSpace) -> Result<Self> {
        triples.sort_by_key(|&(i, j, _)| (i, j));
        let c = SparseCorruption { n, triples, space };
        c.validate()?;
        Ok(c)
    }

    pub fn empty(n: usize, space: CorruptionSpace) -> Self {
        SparseCorruption { n, triples: Vec::new(), space }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &(i, j, delta) in &self.triples {
            if i >= j || j >= self.n {
                return Err(Error::invalid(format!("corruption triple ({i},{j}) must satisfy i < j < n")));
            }
            if !delta.is_finite() {
                return Err(Error::invalid(format!("corruption delta at ({i},{j}) must be finite")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::invalid(format!("duplicate corruption triple ({i},{j})")));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Unordered-pair support of the corruption.
    pub fn support(&self) -> BTreeSet<(usize, usize)> {
        self.triples.iter().map(|&(i, j, _)| (i, j)).collect()
    }

    /// Maximum number of corrupted pairs incident to any single item, the
    /// `d` of the bounded-degree condition.
    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n];
        for &(i, j, _) in &self.triples {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }

    /// Dense skew-symmetric matrix carrying the deltas.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.n, self.n);
        for &(i, j, delta) in &self.triples {
            s[(i, j)] = delta;
            s[(j, i)] = -delta;
        }
        s
    }

    /// Adds a logit-space corruption to a logit matrix; the sum stays
    /// skew-symmetric. Corrupted pairs must be observed.
    pub fn apply_to_logit(&self, m: &LogitMatrix) -> Result<LogitMatrix> {
        if self.space != CorruptionSpace::Logit {
            return Err(Error::invalid("corruption is not in logit space"));
        }
        if self.n != m.n() {
            return Err(Error::invalid("corruption size does not match matrix"));
        }
        let mut entries = m.entries().clone();
        for &(i, j, delta) in &self.triples {
            if !m.is_observed(i, j) {
                return Err(Error::invalid(format!("corrupted pair ({i},{j}) is unobserved")));
            }
            entries[(i, j)] += delta;
            entries[(j, i)] -= delta;
        }
        Ok(LogitMatrix::from_parts_unchecked(entries, m.mask().clone(), m.link_id))
    }
}

/// Draws a skew-symmetric logit-space corruption where each upper-triangle
/// entry is independently nonzero with probability `density`, magnitude
/// uniform in `magnitude_range`, sign uniform.
pub fn random_logit_corruption(
    n: usize,
    density: f64,
    magnitude_range: (f64, f64),
    rng: &mut impl Rng,
) -> Result<SparseCorruption> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::invalid("density must lie in [0,1]"));
    }
    let (lo, hi) = magnitude_range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
        return Err(Error::invalid("magnitude range must satisfy 0 < lo <= hi"));
    }
    let mut triples = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < density {
                let mag = if lo == hi { lo } else { rng.random_range(lo..hi) };
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                triples.push((i, j, sign * mag));
            }
        }
    }
    SparseCorruption::new(n, triples, CorruptionSpace::Logit)
}

/// Draws a logit-space corruption whose per-item degree never exceeds
/// `max_degree`: pairs are visited in shuffled order and kept greedily
/// while both endpoints have spare degree.
pub fn bounded_degree_logit_corruption(
    n: usize,
    max_degree: usize,
    magnitude_range: (f64, f64),
    rng: &mut impl Rng,
) -> Result<SparseCorruption> {
    let (lo, hi) = magnitude_range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
        return Err(Error::invalid("magnitude range must satisfy 0 < lo <= hi"));
    }
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    // Fisher-Yates shuffle driven by the supplied stream.
    for k in (1..pairs.len()).rev() {
        let swap = rng.random_range(0..=k);
        pairs.swap(k, swap);
    }
    let mut deg = vec![0usize; n];
    let mut triples = Vec::new();
    for (i, j) in pairs {
        if deg[i] < max_degree && deg[j] < max_degree {
            deg[i] += 1;
            deg[j] += 1;
            let mag = if lo == hi { lo } else { rng.random_range(lo..hi) };
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            triples.push((i, j, sign * mag));
        }
    }
    SparseCorruption::new(n, triples, CorruptionSpace::Logit)
}

/// Replaces a random `ap`-fraction of observed pairs with draws from
/// `value_range`, mirroring the complement. Returns the corrupted matrix
/// and the replacement deltas.
pub fn probability_corruption(
    p: &PreferenceMatrix,
    ap: f64,
    value_range: (f64, f64),
    rng: &mut impl Rng,
) -> Result<(PreferenceMatrix, SparseCorruption)> {
    if !(0.0..=1.0).contains(&ap) {
        return Err(Error::invalid("corruption probability must lie in [0,1]"));
    }
    let (lo, hi) = value_range;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::invalid("value range must lie within [0,1]"));
    }
    let n = p.n();
    let mut out = p.clone();
    let mut triples = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if p.is_observed(i, j) && rng.random::<f64>() < ap {
                let u = if lo == hi { lo } else { rng.random_range(lo..hi) };
                triples.push((i, j, u - p.get(i, j)));
                out.set_pair(i, j, u);
            }
        }
    }
    let record = SparseCorruption::new(n, triples, CorruptionSpace::Probability)?;
    Ok((out, record))
}

/// Masks each observed off-diagonal pair with probability `dp`. The
/// diagonal is never masked.
pub fn delete_entries(p: &PreferenceMatrix, dp: f64, rng: &mut impl Rng) -> Result<PreferenceMatrix> {
    if !(0.0..=1.0).contains(&dp) {
        return Err(Error::invalid("deletion probability must lie in [0,1]"));
    }
    let n = p.n();
    let mut out = p.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            if out.is_observed(i, j) && rng.random::<f64>() < dp {
                out.mask_pair(i, j);
            }
        }
    }
    Ok(out)
}

/// Swaps `P_ij` and `P_ji` for every listed pair, reversing those
/// comparison outcomes. Flipping every pair yields the transpose.
pub fn flip_adversary(p: &PreferenceMatrix, pairs: &[(usize, usize)]) -> Result<PreferenceMatrix> {
    let n = p.n();
    let mut seen = BTreeSet::new();
    for &(i, j) in pairs {
        if i >= j || j >= n {
            return Err(Error::invalid(format!("flip pair ({i},{j}) must satisfy i < j < n")));
        }
        if !seen.insert((i, j)) {
            return Err(Error::invalid(format!("duplicate flip pair ({i},{j})")));
        }
    }
    let mut out = p.clone();
    for &(i, j) in pairs {
        if out.is_observed(i, j) {
            let pij = out.get(i, j);
            out.set_pair(i, j, 1.0 - pij);
        }
    }
    Ok(out)
}

/// All unordered pairs of `0..n`, for flipping a whole matrix.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

/// Response-injection attack configuration.
///
/// `k_injected` new responses are added. Each beats a random `p1`-fraction
/// of incumbents with scores in `s1_range`. A `p2`-fraction of the
/// top-ranked incumbents then loses narrowly (scores in `s2_range`) to a
/// `p3`-fraction of the remaining incumbents, chosen with linear bias
/// toward the worst ones. Unattacked cells against new responses take the
/// incumbent's average prior score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionScenario {
    pub k_injected: usize,
    pub s1_range: (f64, f64),
    pub p1: f64,
    pub s2_range: (f64, f64),
    pub p2: f64,
    pub p3: f64,
}

impl Default for InjectionScenario {
    fn default() -> Self {
        InjectionScenario {
            k_injected: 5,
            // Upper end is sigmoid(1), the probability-space corruption bound.
            s1_range: (0.7, 0.731_058_578_630_004_9),
            p1: 0.45,
            s2_range: (0.5, 0.55),
            p2: 0.30,
            p3: 0.35,
        }
    }
}

impl InjectionScenario {
    pub fn validate(&self) -> Result<()> {
        for (name, frac) in [("p1", self.p1), ("p2", self.p2), ("p3", self.p3)] {
            if !(0.0..=1.0).contains(&frac) {
                return Err(Error::invalid(format!("{name} must lie in [0,1]")));
            }
        }
        for (name, (lo, hi)) in [("s1_range", self.s1_range), ("s2_range", self.s2_range)] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::invalid(format!("{name} must be an ordered range within [0,1]")));
            }
        }
        Ok(())
    }
}

/// Runs the injection attack on a fully observed matrix, returning the
/// `(n+k) x (n+k)` matrix and the injected indices `n..n+k`.
pub fn inject_responses(
    p: &PreferenceMatrix,
    scenario: &InjectionScenario,
    rng: &mut impl Rng,
) -> Result<(PreferenceMatrix, Vec<usize>)> {
    scenario.validate()?;
    if !p.fully_observed() {
        return Err(Error::invalid("injection requires a fully observed matrix"));
    }
    let n = p.n();
    let k = scenario.k_injected;
    if k == 0 {
        return Ok((p.clone(), Vec::new()));
    }
    let total = n + k;
    let mut entries = DMatrix::from_element(total, total, 0.5);
    entries.view_mut((0, 0), (n, n)).copy_from(p.entries());

    // Average prior score of each incumbent, the provisional value for
    // cells the attack leaves untouched.
    let row_mean: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| p.get(i, j)).sum::<f64>() / (n - 1) as f64)
        .collect();

    let beat_count = ((scenario.p1 * n as f64).round() as usize).min(n);
    for m in n..total {
        let beaten = sample_without_replacement(n, beat_count, rng);
        let beaten_set: BTreeSet<usize> = beaten.iter().cloned().collect();
        for j in 0..n {
            if beaten_set.contains(&j) {
                let (lo, hi) = scenario.s1_range;
                let s1 = if lo == hi { lo } else { rng.random_range(lo..hi) };
                entries[(m, j)] = s1;
                entries[(j, m)] = 1.0 - s1;
            } else {
                entries[(j, m)] = row_mean[j];
                entries[(m, j)] = 1.0 - row_mean[j];
            }
        }
    }

    // Undermine the strongest incumbents: each top response narrowly loses
    // to weaker incumbents picked with bias toward the bottom of the order.
    let original_order = copeland(p)?.order;
    let top_count = ((scenario.p2 * n as f64).round() as usize).min(n);
    let tops: Vec<usize> = original_order[..top_count].to_vec();
    let remaining: Vec<usize> = original_order[top_count..].to_vec();
    let attackers_per_top = ((scenario.p3 * remaining.len() as f64).round() as usize).min(remaining.len());
    for &t in &tops {
        // Weight grows linearly toward the end of the order (the worst).
        let weights: Vec<f64> = (0..remaining.len()).map(|q| (q + 1) as f64).collect();
        let picks = weighted_sample_without_replacement(&remaining, &weights, attackers_per_top, rng);
        for j in picks {
            let (lo, hi) = scenario.s2_range;
            let u = if lo == hi { lo } else { rng.random_range(lo..hi) };
            entries[(j, t)] = u;
            entries[(t, j)] = 1.0 - u;
        }
    }

    let out = PreferenceMatrix::from_entries(entries)?;
    Ok((out, (n..total).collect()))
}

/// Uniform sample of `count` distinct values from `0..n`, in draw order.
fn sample_without_replacement(n: usize, count: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count.min(n) {
        let idx = rng.random_range(0..pool.len());
        picked.push(pool.swap_remove(idx));
    }
    picked
}

/// Weighted sample without replacement by repeated cumulative draws.
fn weighted_sample_without_replacement(
    items: &[usize],
    weights: &[f64],
    count: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let mut pool: Vec<(usize, f64)> = items.iter().cloned().zip(weights.iter().cloned()).collect();
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count.min(items.len()) {
        let total: f64 = pool.iter().map(|&(_, w)| w).sum();
        let mut u = rng.random_range(0.0..total);
        let mut chosen = pool.len() - 1;
        for (idx, &(_, w)) in pool.iter().enumerate() {
            if u < w {
                chosen = idx;
                break;
            }
            u -= w;
        }
        picked.push(pool.remove(chosen).0);
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{btl_preference, link_transform, BtlParams, LinkFunction};
    use crate::rng::derive_rng;

    fn btl(w: &[f64]) -> PreferenceMatrix {
        btl_preference(&BtlParams::new(w.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn zero_density_gives_empty_support() {
        let c = random_logit_corruption(20, 0.0, (5.0, 10.0), &mut derive_rng(1, &[])).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.max_degree(), 0);
    }

    #[test]
    fn corruption_count_near_binomial_mean() {
        // density d/n with d=100, n=500: expectation 0.2 per pair over
        // C(500,2)=124750 pairs, so 24950 with sigma ~ 141.
        let c = random_logit_corruption(500, 0.2, (5.0, 10.0), &mut derive_rng(7, &[])).unwrap();
        let count = c.triples.len() as f64;
        let mean = 124_750.0 * 0.2;
        let sigma = (124_750.0_f64 * 0.2 * 0.8).sqrt();
        assert!((count - mean).abs() <= 3.0 * sigma, "count {count}");
    }

    #[test]
    fn corruption_magnitudes_in_range() {
        let c = random_logit_corruption(60, 0.3, (5.0, 10.0), &mut derive_rng(3, &[])).unwrap();
        assert!(!c.is_empty());
        for &(_, _, delta) in &c.triples {
            assert!((5.0..=10.0).contains(&delta.abs()), "delta {delta}");
        }
        // Signs go both ways.
        assert!(c.triples.iter().any(|&(_, _, d)| d > 0.0));
        assert!(c.triples.iter().any(|&(_, _, d)| d < 0.0));
    }

    #[test]
    fn corruption_matrix_is_skew() {
        let c = random_logit_corruption(12, 0.4, (5.0, 10.0), &mut derive_rng(9, &[])).unwrap();
        let s = c.to_matrix();
        assert_eq!(s.transpose(), -s.clone());
    }

    #[test]
    fn applied_corruption_keeps_skew_symmetry() {
        let p = btl(&[0.0, 0.5, 1.0, 1.5, 2.0, 2.5]);
        let m = link_transform(&p, &LinkFunction::logit(), 1e-6).unwrap();
        let c = random_logit_corruption(6, 0.5, (5.0, 10.0), &mut derive_rng(2, &[])).unwrap();
        let corrupted = c.apply_to_logit(&m).unwrap();
        corrupted.validate().unwrap();
    }

    #[test]
    fn bounded_degree_respects_cap() {
        for seed in 0..5 {
            let c =
                bounded_degree_logit_corruption(50, 3, (5.0, 10.0), &mut derive_rng(seed, &[])).unwrap();
            assert!(c.max_degree() <= 3, "degree {}", c.max_degree());
            assert!(!c.is_empty());
        }
    }

    #[test]
    fn probability_corruption_zero_rate_is_identity() {
        let p = btl(&[0.0, 0.4, 1.1]);
        let (q, rec) = probability_corruption(&p, 0.0, (0.269, 0.731), &mut derive_rng(1, &[])).unwrap();
        assert_eq!(q, p);
        assert!(rec.is_empty());
    }

    #[test]
    fn probability_corruption_keeps_complement_rule() {
        let p = btl(&[0.0, 0.3, 0.8, 1.4, 2.0]);
        let (q, rec) =
            probability_corruption(&p, 0.5, (0.269, 0.731), &mut derive_rng(4, &[])).unwrap();
        q.validate().unwrap();
        assert!(!rec.is_empty());
        for &(i, j, delta) in &rec.triples {
            let u = p.get(i, j) + delta;
            assert!((0.269..=0.731).contains(&u), "replacement {u}");
            assert_eq!(q.get(i, j), u);
            assert_eq!(q.get(j, i), 1.0 - u);
        }
    }

    #[test]
    fn probability_corruption_deterministic() {
        let p = btl(&(0..15).map(|i| i as f64 * 0.1).collect::<Vec<_>>());
        let a = probability_corruption(&p, 0.1, (0.269, 0.731), &mut derive_rng(42, &[])).unwrap();
        let b = probability_corruption(&p, 0.1, (0.269, 0.731), &mut derive_rng(42, &[])).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn probability_corruption_rate_matches_binomial() {
        let p = btl(&(0..15).map(|i| i as f64 * 0.1).collect::<Vec<_>>());
        let seeds = 20u64;
        let total: usize = (0..seeds)
            .map(|s| {
                probability_corruption(&p, 0.1, (0.269, 0.731), &mut derive_rng(s, &[]))
                    .unwrap()
                    .1
                    .triples
                    .len()
            })
            .sum();
        // 105 pairs at rate 0.1 per seed; bound the mean of 20 seeds.
        let mean = total as f64 / seeds as f64;
        let sigma_mean = (105.0f64 * 0.1 * 0.9).sqrt() / (seeds as f64).sqrt();
        assert!((mean - 10.5).abs() <= 3.0 * sigma_mean, "mean {mean}");
    }

    #[test]
    fn deletion_extremes() {
        let p = btl(&[0.0, 0.4, 1.1, 1.9]);
        let full = delete_entries(&p, 0.0, &mut derive_rng(1, &[])).unwrap();
        assert!(full.fully_observed());
        let none = delete_entries(&p, 1.0, &mut derive_rng(1, &[])).unwrap();
        assert_eq!(none.observed_pair_count(), 0);
        for i in 0..4 {
            assert!(none.is_observed(i, i));
        }
    }

    #[test]
    fn deletion_count_near_binomial_mean() {
        let p = btl(&(0..15).map(|i| i as f64 * 0.1).collect::<Vec<_>>());
        let q = delete_entries(&p, 0.4, &mut derive_rng(6, &[])).unwrap();
        let masked = 105 - q.observed_pair_count();
        let sigma = (105.0f64 * 0.4 * 0.6).sqrt();
        assert!((masked as f64 - 42.0).abs() <= 3.0 * sigma, "masked {masked}");
    }

    #[test]
    fn flip_empty_subset_is_identity() {
        let p = btl(&[0.0, 0.7, 1.3]);
        assert_eq!(flip_adversary(&p, &[]).unwrap(), p);
    }

    #[test]
    fn flip_all_pairs_is_transpose() {
        let p = btl(&[0.0, 0.5, 1.0, 1.5, 2.0]);
        let flipped = flip_adversary(&p, &all_pairs(5)).unwrap();
        assert_eq!(flipped.entries(), &p.entries().transpose());
        let fwd = copeland(&p).unwrap().order;
        let bwd = copeland(&flipped).unwrap().order;
        let reversed: Vec<usize> = fwd.iter().rev().cloned().collect();
        assert_eq!(bwd, reversed);
    }

    #[test]
    fn injection_zero_k_is_identity() {
        let p = btl(&[0.0, 0.4, 1.1]);
        let scenario = InjectionScenario { k_injected: 0, ..Default::default() };
        let (q, injected) = inject_responses(&p, &scenario, &mut derive_rng(1, &[])).unwrap();
        assert_eq!(q, p);
        assert!(injected.is_empty());
    }

    #[test]
    fn injection_grows_matrix_and_reports_indices() {
        let w: Vec<f64> = (0..30).map(|i| i as f64 * 0.05).collect();
        let p = btl(&w);
        let scenario = InjectionScenario::default();
        let (q, injected) = inject_responses(&p, &scenario, &mut derive_rng(8, &[])).unwrap();
        assert_eq!(q.n(), 35);
        assert_eq!(injected, (30..35).collect::<Vec<_>>());
        q.validate().unwrap();
    }

    #[test]
    fn injection_pushes_attackers_into_top_ranks() {
        let w: Vec<f64> = (0..30).map(|i| i as f64 * 0.05).collect();
        let p = btl(&w);
        let (q, injected) = inject_responses(&p, &InjectionScenario::default(), &mut derive_rng(8, &[])).unwrap();
        let top5 = copeland(&q).unwrap().order[..5].to_vec();
        assert!(
            top5.iter().any(|t| injected.contains(t)),
            "top-5 {top5:?} contains no injected index"
        );
    }

    #[test]
    fn injection_attack_values_in_declared_ranges() {
        let w: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let p = btl(&w);
        let scenario = InjectionScenario::default();
        let (q, injected) = inject_responses(&p, &scenario, &mut derive_rng(3, &[])).unwrap();
        let n = 20;
        for &m in &injected {
            for j in 0..n {
                let v = q.get(m, j);
                let strong_win = (scenario.s1_range.0..=scenario.s1_range.1).contains(&v);
                // Otherwise the cell is a provisional average or the mirror
                // of a top-attack value in [0.45, 0.5].
                assert!(strong_win || (0.0..=0.761).contains(&v), "cell {v}");
            }
            for &m2 in &injected {
                if m != m2 {
                    assert_eq!(q.get(m, m2), 0.5);
                }
            }
        }
    }

    #[test]
    fn generators_are_deterministic_per_seed() {
        let a = random_logit_corruption(40, 0.15, (5.0, 10.0), &mut derive_rng(42, &[9])).unwrap();
        let b = random_logit_corruption(40, 0.15, (5.0, 10.0), &mut derive_rng(42, &[9])).unwrap();
        assert_eq!(a, b);
        let c = random_logit_corruption(40, 0.15, (5.0, 10.0), &mut derive_rng(42, &[10])).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scenario_validation_rejects_bad_fractions() {
        let mut s = InjectionScenario::default();
        s.p1 = 1.5;
        assert!(s.validate().is_err());
        let mut s = InjectionScenario::default();
        s.s2_range = (0.6, 0.5);
        assert!(s.validate().is_err());
    }
}

