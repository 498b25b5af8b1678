//! Evaluation metrics: normalized Frobenius error, elementwise correlation,
//! ranking distance, matrix disagreement, and corruption-support scoring.
//!
//! Matrix metrics run over all n² entries including the diagonal; the
//! normalizing formulas sum over every element, so alternate conventions
//! would silently shift the numbers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::adversary::SparseCorruption;
use crate::error::{Error, Result};
use crate::model::PreferenceMatrix;
use crate::ranking::Ranking;

/// Normalized Frobenius error `||A - B||_F / ||A||_F` on raw matrices.
pub fn nfe_raw(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::invalid("matrices must have identical shape"));
    }
    let denom = a.norm();
    if denom == 0.0 {
        return Err(Error::invalid("reference matrix has zero norm"));
    }
    Ok((a - b).norm() / denom)
}

/// Normalized Frobenius error between two fully observed preference
/// matrices, the reference first.
pub fn nfe(p: &PreferenceMatrix, q: &PreferenceMatrix) -> Result<f64> {
    require_comparable(p, q)?;
    nfe_raw(p.entries(), q.entries())
}

/// Pearson correlation over all entries of two raw matrices.
pub fn correlation_raw(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::invalid("matrices must have identical shape"));
    }
    let len = (a.nrows() * a.ncols()) as f64;
    let mean_a = a.iter().sum::<f64>() / len;
    let mean_b = b.iter().sum::<f64>() / len;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::Undefined(
            "correlation undefined for a constant matrix".into(),
        ));
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

/// Pearson correlation of corresponding entries of two preference matrices.
pub fn correlation(p: &PreferenceMatrix, q: &PreferenceMatrix) -> Result<f64> {
    require_comparable(p, q)?;
    correlation_raw(p.entries(), q.entries())
}

/// Fraction of unordered pairs on which the ranking contradicts the strict
/// majority direction of `P`. Ties in `P` never count against a ranking.
pub fn ranking_distance(sigma: &Ranking, p: &PreferenceMatrix) -> Result<f64> {
    sigma.validate()?;
    if sigma.n() != p.n() {
        return Err(Error::invalid("ranking size does not match matrix"));
    }
    if !p.fully_observed() {
        return Err(Error::invalid("ranking distance requires a fully observed matrix"));
    }
    let n = p.n();
    let pos = sigma.positions();
    let mut disagreements = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if p.get(i, j) > 0.5 && pos[i] > pos[j] {
                disagreements += 1;
            }
            if p.get(j, i) > 0.5 && pos[j] > pos[i] {
                disagreements += 1;
            }
        }
    }
    Ok(disagreements as f64 / pair_count(n))
}

/// Fraction of unordered pairs on which two matrices order the items in
/// strictly opposite directions.
pub fn matrix_disagreement(q: &PreferenceMatrix, r: &PreferenceMatrix) -> Result<f64> {
    require_comparable(q, r)?;
    let n = q.n();
    let mut disagreements = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if (q.get(i, j) - 0.5) * (r.get(i, j) - 0.5) < 0.0 {
                disagreements += 1;
            }
        }
    }
    Ok(disagreements as f64 / pair_count(n))
}

/// Worst-case disagreement fraction reachable by flipping pairs incident
/// to `d` items: `d (2n - 1 - d) / (n (n - 1))`.
pub fn flip_disagreement_bound(n: usize, d: usize) -> f64 {
    (d * (2 * n - 1 - d)) as f64 / (n * (n - 1)) as f64
}

fn pair_count(n: usize) -> f64 {
    (n * (n - 1) / 2) as f64
}

fn require_comparable(p: &PreferenceMatrix, q: &PreferenceMatrix) -> Result<()> {
    if p.n() != q.n() {
        return Err(Error::invalid("matrices must have identical size"));
    }
    if !p.fully_observed() || !q.fully_observed() {
        return Err(Error::invalid("metric requires fully observed matrices"));
    }
    Ok(())
}

/// Set precision and recall of a detected corruption support against the
/// ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportScores {
    pub precision: f64,
    pub recall: f64,
}

/// Scores a detected support against the truth over unordered pairs.
///
/// An empty detected set has precision 1 (no false alarms); an empty truth
/// has recall 1 (nothing to find).
pub fn support_scores(detected: &SparseCorruption, truth: &SparseCorruption) -> Result<SupportScores> {
    if detected.n != truth.n {
        return Err(Error::invalid("corruption sizes do not match"));
    }
    let d = detected.support();
    let t = truth.support();
    let hits = d.intersection(&t).count() as f64;
    let precision = if d.is_empty() { 1.0 } else { hits / d.len() as f64 };
    let recall = if t.is_empty() { 1.0 } else { hits / t.len() as f64 };
    Ok(SupportScores { precision, recall })
}
