//! Domain types, the BTL model, link transforms, comparison sampling, and
//! empirical estimation.
//!
//! The central object is the [`PreferenceMatrix`]: an n×n matrix of win
//! probabilities with `P[i][j] + P[j][i] = 1` and an observation mask.
//! Under the BTL model, `P[i][j] = e^{-w_i} / (e^{-w_i} + e^{-w_j})`, so the
//! logit transform of `P` is the rank-2 skew-symmetric matrix with entries
//! `w_j - w_i`. Note the sign convention: the item with the *lower* score
//! wins more often. [`ScoreOrientation`] flips that convention if needed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Tolerance for the complement rule `P_ij + P_ji = 1`.
pub const COMPLEMENT_TOL: f64 = 1e-12;
/// Tolerance for skew-symmetry of logit matrices.
pub const SKEW_TOL: f64 = 1e-9;

/// BTL parameter vector; item `i` has score `w[i]` (unitless, lower wins).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtlParams {
    pub w: Vec<f64>,
    /// Optional known bounds on the entries of `w`.
    pub score_range: Option<(f64, f64)>,
}

impl BtlParams {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        let p = BtlParams { w, score_range: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_range(w: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        let p = BtlParams { w, score_range: Some((lo, hi)) };
        p.validate()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.len() < 2 {
            return Err(Error::invalid("BTL parameters need at least 2 items"));
        }
        if self.w.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("BTL scores must be finite"));
        }
        if let Some((lo, hi)) = self.score_range {
            if !(lo <= hi) {
                return Err(Error::invalid("score_range must satisfy lo <= hi"));
            }
            if self.w.iter().any(|&x| x < lo || x > hi) {
                return Err(Error::invalid("BTL score outside declared score_range"));
            }
        }
        Ok(())
    }
}

/// Which direction of the score axis wins a comparison.
///
/// The default follows the formula `P_ij = e^{-w_i}/(e^{-w_i}+e^{-w_j})`
/// verbatim, under which lower scores win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreOrientation {
    #[default]
    LowerWins,
    HigherWins,
}

/// n×n pairwise preference matrix with observation mask.
///
/// Invariants: entries lie in `[0,1]`; for observed pairs
/// `P_ij + P_ji = 1` within `1e-12`; the diagonal is `1/2` and observed;
/// the mask is symmetric; unobserved entries hold the placeholder `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    entries: DMatrix<f64>,
    mask: DMatrix<bool>,
}

impl PreferenceMatrix {
    /// Builds a fully observed matrix, validating all invariants.
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        let mask = DMatrix::from_element(n, n, true);
        Self::new(entries, mask)
    }

    /// Builds a matrix with the given observation mask, validating invariants.
    pub fn new(entries: DMatrix<f64>, mask: DMatrix<bool>) -> Result<Self> {
        let m = PreferenceMatrix { entries, mask };
        m.validate()?;
        Ok(m)
    }

    /// Constructs without validation; callers must uphold the invariants.
    pub(crate) fn from_parts_unchecked(entries: DMatrix<f64>, mask: DMatrix<bool>) -> Self {
        PreferenceMatrix { entries, mask }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.entries.nrows();
        if n < 2 || self.entries.ncols() != n {
            return Err(Error::invalid("preference matrix must be square with n >= 2"));
        }
        if self.mask.nrows() != n || self.mask.ncols() != n {
            return Err(Error::invalid("mask shape does not match entries"));
        }
        for i in 0..n {
            if self.entries[(i, i)] != 0.5 {
                return Err(Error::invalid(format!("diagonal entry ({i},{i}) must be 1/2")));
            }
            if !self.mask[(i, i)] {
                return Err(Error::invalid(format!("diagonal ({i},{i}) must be observed")));
            }
            for j in 0..n {
                let p = self.entries[(i, j)];
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid(format!("entry ({i},{j}) outside [0,1]")));
                }
                if self.mask[(i, j)] != self.mask[(j, i)] {
                    return Err(Error::invalid(format!("mask not symmetric at ({i},{j})")));
                }
                if i < j {
                    if self.mask[(i, j)] {
                        let s = p + self.entries[(j, i)];
                        if (s - 1.0).abs() > COMPLEMENT_TOL {
                            return Err(Error::invalid(format!(
                                "complement rule violated at ({i},{j}): sum {s}"
                            )));
                        }
                    } else if p != 0.5 || self.entries[(j, i)] != 0.5 {
                        return Err(Error::invalid(format!(
                            "unobserved pair ({i},{j}) must hold placeholder 1/2"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[(i, j)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn fully_observed(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// Number of observed unordered off-diagonal pairs.
    pub fn observed_pair_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.mask[(i, j)])
            .count()
    }

    /// Sets an observed pair, maintaining the complement rule.
    pub(crate) fn set_pair(&mut self, i: usize, j: usize, p: f64) {
        debug_assert!(i != j);
        self.entries[(i, j)] = p;
        self.entries[(j, i)] = 1.0 - p;
        self.mask[(i, j)] = true;
        self.mask[(j, i)] = true;
    }

    /// Marks a pair unobserved and writes the placeholder value.
    pub(crate) fn mask_pair(&mut self, i: usize, j: usize) {
        debug_assert!(i != j);
        self.entries[(i, j)] = 0.5;
        self.entries[(j, i)] = 0.5;
        self.mask[(i, j)] = false;
        self.mask[(j, i)] = false;
    }
}

/// Raw comparison data: for each compared pair `i < j`, K binary outcomes
/// with 1 meaning "i preferred".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub i: usize,
    pub j: usize,
    pub outcomes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonDataset {
    pub n: usize,
    pub records: Vec<ComparisonRecord>,
}

impl ComparisonDataset {
    pub fn new(n: usize, records: Vec<ComparisonRecord>) -> Result<Self> {
        let d = ComparisonDataset { n, records };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("dataset needs n >= 2"));
        }
        let mut seen = BTreeSet::new();
        for r in &self.records {
            if r.i >= r.j || r.j >= self.n {
                return Err(Error::invalid(format!(
                    "record ({},{}) must satisfy i < j < n",
                    r.i, r.j
                )));
            }
            if !seen.insert((r.i, r.j)) {
                return Err(Error::invalid(format!("duplicate record ({},{})", r.i, r.j)));
            }
            if r.outcomes.is_empty() {
                return Err(Error::invalid(format!("record ({},{}) has no outcomes", r.i, r.j)));
            }
            if r.outcomes.iter().any(|&y| y > 1) {
                return Err(Error::invalid(format!(
                    "record ({},{}) has non-binary outcome",
                    r.i, r.j
                )));
            }
        }
        Ok(())
    }
}

/// Identifier of the link function that produced a logit matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkId {
    #[default]
    Logit,
    Probit,
}

/// Strictly increasing bijection `[0,1] -> R` linking probabilities to the
/// low-rank space. Logit is the default; probit generalizes the model to
/// Thurstonian comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkFunction {
    pub id: LinkId,
}

impl LinkFunction {
    pub fn logit() -> Self {
        LinkFunction { id: LinkId::Logit }
    }

    pub fn probit() -> Self {
        LinkFunction { id: LinkId::Probit }
    }

    pub fn from_id(id: LinkId) -> Self {
        LinkFunction { id }
    }

    /// Forward map `psi(x)`; finite only for `x` in `(0,1)`.
    pub fn forward(&self, x: f64) -> f64 {
        match self.id {
            LinkId::Logit => (x / (1.0 - x)).ln(),
            LinkId::Probit => std_normal().inverse_cdf(x),
        }
    }

    /// Inverse map; for logit this is the logistic sigmoid.
    pub fn inverse(&self, y: f64) -> f64 {
        match self.id {
            LinkId::Logit => sigmoid(y),
            LinkId::Probit => std_normal().cdf(y),
        }
    }

    /// Lipschitz constant of the forward map on `[lo, hi]`.
    ///
    /// Both links have convex-in-the-tails derivatives maximized at the
    /// interval endpoints.
    pub fn lipschitz_on(&self, lo: f64, hi: f64) -> f64 {
        let deriv = |x: f64| match self.id {
            LinkId::Logit => 1.0 / (x * (1.0 - x)),
            LinkId::Probit => {
                let z = std_normal().inverse_cdf(x);
                let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                1.0 / phi
            }
        };
        deriv(lo).max(deriv(hi))
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// Numerically stable logistic sigmoid.
pub(crate) fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

/// Link-transformed matrix `psi(P)`; skew-symmetric and rank <= 2 when `P`
/// is a clean BTL matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitMatrix {
    entries: DMatrix<f64>,
    mask: DMatrix<bool>,
    pub link_id: LinkId,
}

impl LogitMatrix {
    pub fn new(entries: DMatrix<f64>, mask: DMatrix<bool>, link_id: LinkId) -> Result<Self> {
        let m = LogitMatrix { entries, mask, link_id };
        m.validate()?;
        Ok(m)
    }

    pub(crate) fn from_parts_unchecked(
        entries: DMatrix<f64>,
        mask: DMatrix<bool>,
        link_id: LinkId,
    ) -> Self {
        LogitMatrix { entries, mask, link_id }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.entries.nrows();
        if n < 2 || self.entries.ncols() != n {
            return Err(Error::invalid("logit matrix must be square with n >= 2"));
        }
        if self.mask.nrows() != n || self.mask.ncols() != n {
            return Err(Error::invalid("mask shape does not match entries"));
        }
        for i in 0..n {
            if self.entries[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("diagonal entry ({i},{i}) must be 0")));
            }
            if !self.mask[(i, i)] {
                return Err(Error::invalid(format!("diagonal ({i},{i}) must be observed")));
            }
            for j in (i + 1)..n {
                if self.mask[(i, j)] != self.mask[(j, i)] {
                    return Err(Error::invalid(format!("mask not symmetric at ({i},{j})")));
                }
                if self.mask[(i, j)] {
                    let a = self.entries[(i, j)];
                    let b = self.entries[(j, i)];
                    if !a.is_finite() || !b.is_finite() {
                        return Err(Error::invalid(format!("non-finite entry at ({i},{j})")));
                    }
                    if (a + b).abs() > SKEW_TOL {
                        return Err(Error::invalid(format!(
                            "skew-symmetry violated at ({i},{j}): {a} + {b}"
                        )));
                    }
                } else if self.entries[(i, j)] != 0.0 || self.entries[(j, i)] != 0.0 {
                    return Err(Error::invalid(format!(
                        "unobserved pair ({i},{j}) must hold placeholder 0"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[(i, j)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn fully_observed(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }
}

/// Builds the BTL preference matrix `P_ij = e^{-w_i}/(e^{-w_i}+e^{-w_j})`.
///
/// Equal scores give 1/2; the lower score wins more often.
pub fn btl_preference(params: &BtlParams) -> Result<PreferenceMatrix> {
    btl_preference_oriented(params, ScoreOrientation::LowerWins)
}

/// BTL matrix with an explicit win orientation for the score axis.
pub fn btl_preference_oriented(
    params: &BtlParams,
    orientation: ScoreOrientation,
) -> Result<PreferenceMatrix> {
    params.validate()?;
    let n = params.n();
    let mut entries = DMatrix::from_element(n, n, 0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            // e^{-w_i}/(e^{-w_i}+e^{-w_j}) = sigmoid(w_j - w_i), computed in
            // the stable sigmoid form.
            let diff = match orientation {
                ScoreOrientation::LowerWins => params.w[j] - params.w[i],
                ScoreOrientation::HigherWins => params.w[i] - params.w[j],
            };
            let p = sigmoid(diff);
            entries[(i, j)] = p;
            entries[(j, i)] = 1.0 - p;
        }
    }
    Ok(PreferenceMatrix::from_parts_unchecked(
        entries,
        DMatrix::from_element(n, n, true),
    ))
}

/// Samples `K` Bernoulli outcomes per unordered pair from a fully observed
/// ground-truth matrix. Deterministic given the RNG stream.
pub fn sample_comparisons(
    p: &PreferenceMatrix,
    k: usize,
    rng: &mut impl Rng,
) -> Result<ComparisonDataset> {
    if !p.fully_observed() {
        return Err(Error::invalid("sampling requires a fully observed ground-truth matrix"));
    }
    if k == 0 {
        return Err(Error::invalid("K must be >= 1"));
    }
    let n = p.n();
    let mut records = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let pij = p.get(i, j);
            let outcomes = (0..k).map(|_| u8::from(rng.random::<f64>() < pij)).collect();
            records.push(ComparisonRecord { i, j, outcomes });
        }
    }
    Ok(ComparisonDataset { n, records })
}

/// Empirical preference matrix: `P_ij` is the mean outcome for `i < j`,
/// mirrored by the complement rule. Pairs absent from the data are masked
/// unobserved and carry the placeholder 1/2.
pub fn empirical_matrix(data: &ComparisonDataset) -> Result<PreferenceMatrix> {
    data.validate()?;
    let n = data.n;
    let mut entries = DMatrix::from_element(n, n, 0.5);
    let mut mask = DMatrix::from_element(n, n, false);
    for i in 0..n {
        mask[(i, i)] = true;
    }
    for r in &data.records {
        let wins: u64 = r.outcomes.iter().map(|&y| u64::from(y)).sum();
        let p = wins as f64 / r.outcomes.len() as f64;
        entries[(r.i, r.j)] = p;
        entries[(r.j, r.i)] = 1.0 - p;
        mask[(r.i, r.j)] = true;
        mask[(r.j, r.i)] = true;
    }
    Ok(PreferenceMatrix::from_parts_unchecked(entries, mask))
}

/// Default clamp width for [`link_transform`]: `min(1e-6, 1/(4K))`.
///
/// Keeps logits finite when empirical probabilities saturate at 0 or 1.
pub fn default_clamp(k: Option<usize>) -> f64 {
    match k {
        Some(k) if k > 0 => 1e-6_f64.min(1.0 / (4.0 * k as f64)),
        _ => 1e-6,
    }
}

/// Applies the link entrywise after clamping probabilities to
/// `[delta, 1-delta]`. Unobserved pairs stay masked; the result is exactly
/// skew-symmetric on the observed support.
pub fn link_transform(p: &PreferenceMatrix, link: &LinkFunction, delta: f64) -> Result<LogitMatrix> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::invalid("clamp delta must lie in (0, 0.5)"));
    }
    let n = p.n();
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if p.is_observed(i, j) {
                let x = p.get(i, j).clamp(delta, 1.0 - delta);
                let v = link.forward(x);
                entries[(i, j)] = v;
                entries[(j, i)] = -v;
            }
        }
    }
    Ok(LogitMatrix::from_parts_unchecked(entries, p.mask().clone(), link.id))
}

/// Inverse link, entrywise, then exact re-symmetrization
/// (`P_ij <- (P_ij + 1 - P_ji)/2`) and a forced 1/2 diagonal.
pub fn inverse_link(m: &LogitMatrix, link: &LinkFunction) -> Result<PreferenceMatrix> {
    if m.entries().iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("inverse link requires finite entries"));
    }
    let n = m.n();
    let mut entries = DMatrix::from_element(n, n, 0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = link.inverse(m.get(i, j));
            let b = link.inverse(m.get(j, i));
            let p = (a + (1.0 - b)) / 2.0;
            entries[(i, j)] = p;
            entries[(j, i)] = 1.0 - p;
        }
    }
    Ok(PreferenceMatrix::from_parts_unchecked(entries, m.mask().clone()))
}

/// Incoherence of a rank-`r` matrix and the corruption-degree budget it
/// implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceReport {
    /// mu such that all row norms of the rank-r singular factors are
    /// `<= mu * sqrt(r/n)`.
    pub mu: f64,
    /// `floor(n / (512 mu^2 r))`, the admissible per-row/column corruption
    /// degree. The constant 512 is extremely conservative; at practical
    /// sizes this often evaluates to 0.
    pub max_corruption_degree: usize,
    /// Minimum off-diagonal `|entry|`, the margin of the transformed matrix.
    pub delta: f64,
    /// Numerical rank actually found (singular values above `1e-12 sigma_1`).
    pub achieved_rank: usize,
    pub requested_rank: usize,
}

/// Computes incoherence from the rank-`r` SVD factors of a fully observed
/// skew-symmetric matrix, plus the degree bound and margin.
pub fn incoherence_and_bound(m: &LogitMatrix, r: usize) -> Result<IncoherenceReport> {
    if r == 0 {
        return Err(Error::invalid("rank must be >= 1"));
    }
    if !m.fully_observed() {
        return Err(Error::invalid("incoherence requires a fully observed matrix"));
    }
    let n = m.n();
    let svd = crate::recovery::spectrum::full_svd(m.entries())?;
    let sigma1 = svd.singular_values[0];
    let achieved_rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-12 * sigma1)
        .count();
    let r_used = r.min(achieved_rank.max(1));
    let mut max_row_norm: f64 = 0.0;
    for i in 0..n {
        let mut u2 = 0.0;
        let mut v2 = 0.0;
        for k in 0..r_used {
            u2 += svd.u[(i, k)] * svd.u[(i, k)];
            v2 += svd.v[(i, k)] * svd.v[(i, k)];
        }
        max_row_norm = max_row_norm.max(u2.sqrt()).max(v2.sqrt());
    }
    let mu = max_row_norm * (n as f64 / r_used as f64).sqrt();
    let max_corruption_degree = (n as f64 / (512.0 * mu * mu * r as f64)).floor() as usize;
    let mut delta = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                delta = delta.min(m.get(i, j).abs());
            }
        }
    }
    Ok(IncoherenceReport {
        mu,
        max_corruption_degree,
        delta,
        achieved_rank,
        requested_rank: r,
    })
}

/// Closed-form incoherence bound for a BTL instance:
/// `sqrt(n/2) * sqrt(1 + (w_max - mean)^2 / (w_min - mean)^2)`.
///
/// Undefined when `w_min` equals the mean (all scores equal).
pub fn btl_analytic_incoherence(params: &BtlParams) -> Result<f64> {
    params.validate()?;
    let n = params.n() as f64;
    let mean = params.w.iter().sum::<f64>() / n;
    let w_max = params.w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w_min = params.w.iter().cloned().fold(f64::INFINITY, f64::min);
    let lo = w_min - mean;
    if lo == 0.0 {
        return Err(Error::Undefined(
            "analytic incoherence requires w_min below the mean".into(),
        ));
    }
    let ratio = (w_max - mean) * (w_max - mean) / (lo * lo);
    Ok((n / 2.0).sqrt() * (1.0 + ratio).sqrt())
}

/// Convenience: `w` as a nalgebra vector.
pub fn scores_vector(params: &BtlParams) -> DVector<f64> {
    DVector::from_column_slice(&params.w)
}
