//! Rank-r matrix completion: spectral initialization on the rescaled
//! observed matrix, optional degree trimming, then alternating least
//! squares on the observed entries.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::LogitMatrix;

use super::spectrum::{full_svd, skew_project};
use super::SolverParams;

/// Exit after this many iterations without meaningful residual progress.
const STALL_LIMIT: usize = 15;
const STALL_REL: f64 = 1e-10;

/// Outcome of a completion run.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionReport {
    /// Fully observed completion; observed entries are copied verbatim,
    /// missing ones come from the rank-r fit, skew-projected.
    pub m_hat: LogitMatrix,
    pub iterations_used: usize,
    /// Relative residual over the observed entries at exit.
    pub residual_observed: f64,
    /// False when some row has fewer observed off-diagonal entries than
    /// the target rank (the factors are underdetermined), or when the
    /// iteration budget ran out while still improving.
    pub converged: bool,
    /// Items zeroed in the initialization for being over-represented.
    pub trimmed: Vec<usize>,
}

/// Completes a partially observed logit matrix to full observation with a
/// rank-`r` model fit on the observed support.
pub fn complete(m: &LogitMatrix, params: &SolverParams) -> Result<CompletionReport> {
    params.validate()?;
    let n = m.n();
    let r = params.target_rank.min(n);

    if m.fully_observed() {
        return Ok(CompletionReport {
            m_hat: m.clone(),
            iterations_used: 0,
            residual_observed: 0.0,
            converged: true,
            trimmed: Vec::new(),
        });
    }

    // Observed column lists per row, diagonal included; the diagonal zeros
    // are genuine constraints of the skew model.
    let mut row_obs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut off_diag_count = vec![0usize; n];
    let mut observed_cells = 0usize;
    for i in 0..n {
        for j in 0..n {
            if m.is_observed(i, j) {
                row_obs[i].push(j);
                observed_cells += 1;
                if i != j {
                    off_diag_count[i] += 1;
                }
            }
        }
    }
    if off_diag_count.iter().all(|&c| c == 0) {
        return Err(Error::invalid("completion requires at least one observed pair"));
    }
    let underdetermined = off_diag_count.iter().any(|&c| c < r);

    // Spectral initialization on the rescaled observed matrix. Unobserved
    // entries already hold 0, the placeholder.
    let scale = (n * n) as f64 / observed_cells as f64;
    let mut init = m.entries() * scale;
    let mut trimmed = Vec::new();
    if params.optspace_trim {
        let degree_cap = 2.0 * observed_cells as f64 / n as f64;
        for i in 0..n {
            if row_obs[i].len() as f64 > degree_cap {
                trimmed.push(i);
            }
        }
        for &i in &trimmed {
            for j in 0..n {
                init[(i, j)] = 0.0;
                init[(j, i)] = 0.0;
            }
        }
    }
    let factors = full_svd(&init)?;
    let mut x = DMatrix::zeros(n, r);
    let mut y = DMatrix::zeros(n, r);
    for k in 0..r {
        let root = factors.singular_values[k].max(0.0).sqrt();
        for i in 0..n {
            x[(i, k)] = factors.u[(i, k)] * root;
            y[(i, k)] = factors.v[(i, k)] * root;
        }
    }

    let norm_obs = {
        let mut acc = 0.0;
        for i in 0..n {
            for &j in &row_obs[i] {
                acc += m.get(i, j) * m.get(i, j);
            }
        }
        acc.sqrt().max(f64::MIN_POSITIVE)
    };

    // Column lists per column for the Y-step.
    let mut col_obs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in &row_obs[i] {
            col_obs[j].push(i);
        }
    }

    let mut residual = f64::INFINITY;
    let mut iterations = 0usize;
    let mut stall = 0usize;
    let mut hit_tol = false;
    for it in 0..params.max_iters {
        iterations = it + 1;
        solve_rows(&mut x, &y, &row_obs, m, false);
        solve_rows(&mut y, &x, &col_obs, m, true);

        let mut acc = 0.0;
        for i in 0..n {
            for &j in &row_obs[i] {
                let fit: f64 = (0..r).map(|k| x[(i, k)] * y[(j, k)]).sum();
                let d = m.get(i, j) - fit;
                acc += d * d;
            }
        }
        let rel = acc.sqrt() / norm_obs;
        if rel <= params.tol {
            residual = rel;
            hit_tol = true;
            break;
        }
        if rel >= residual * (1.0 - STALL_REL) {
            stall += 1;
        } else {
            stall = 0;
        }
        residual = rel.min(residual);
        if stall >= STALL_LIMIT {
            break;
        }
    }
    let stalled = stall >= STALL_LIMIT;

    // Observed entries verbatim; the fit only fills the holes. The final
    // skew-projection touches the filled cells alone.
    let mut entries = m.entries().clone();
    for i in 0..n {
        for j in 0..n {
            if !m.is_observed(i, j) {
                entries[(i, j)] = (0..r).map(|k| x[(i, k)] * y[(j, k)]).sum();
            }
        }
    }
    let entries = skew_project_preserving_observed(&entries, m);
    if entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("completion produced non-finite entries"));
    }
    let m_hat = LogitMatrix::from_parts_unchecked(
        entries,
        DMatrix::from_element(n, n, true),
        m.link_id,
    );
    debug_assert!(m_hat.validate().is_ok());

    Ok(CompletionReport {
        m_hat,
        iterations_used: iterations,
        residual_observed: residual,
        converged: !underdetermined && (hit_tol || stalled),
        trimmed,
    })
}

/// Least-squares update of every row of `target` against the fixed factor,
/// fitting observed entries only. `transposed` selects `M_ji` instead of
/// `M_ij` as the fitted value.
fn solve_rows(
    target: &mut DMatrix<f64>,
    fixed: &DMatrix<f64>,
    obs: &[Vec<usize>],
    m: &LogitMatrix,
    transposed: bool,
) {
    let r = target.ncols();
    let n = target.nrows();
    for i in 0..n {
        let mut normal = DMatrix::zeros(r, r);
        let mut rhs = DVector::zeros(r);
        for &j in &obs[i] {
            let value = if transposed { m.get(j, i) } else { m.get(i, j) };
            for a in 0..r {
                let fa = fixed[(j, a)];
                rhs[a] += value * fa;
                for b in 0..r {
                    normal[(a, b)] += fa * fixed[(j, b)];
                }
            }
        }
        let ridge = 1e-10 * (1.0 + normal.trace() / r as f64);
        for a in 0..r {
            normal[(a, a)] += ridge;
        }
        if let Some(solution) = normal.lu().solve(&rhs) {
            for a in 0..r {
                target[(i, a)] = solution[a];
            }
        }
    }
}

/// Skew-projection that leaves observed pairs untouched (they are already
/// exactly skew) and averages only the filled cells.
fn skew_project_preserving_observed(entries: &DMatrix<f64>, m: &LogitMatrix) -> DMatrix<f64> {
    let n = entries.nrows();
    let mut out = entries.clone();
    let projected = skew_project(entries);
    for i in 0..n {
        out[(i, i)] = 0.0;
        for j in 0..n {
            if i != j && !m.is_observed(i, j) {
                out[(i, j)] = projected[(i, j)];
            }
        }
    }
    out
}
