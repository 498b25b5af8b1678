//! Robust PCA by stagewise alternating projections: hard-threshold the
//! residual into a sparse part, project the rest onto low rank, raising
//! the rank one stage at a time.

use nalgebra::DMatrix;

use crate::adversary::{CorruptionSpace, SparseCorruption};
use crate::error::{Error, Result};
use crate::model::LogitMatrix;

use super::spectrum::{full_svd, skew_project};
use super::{RecoveryReport, SolverParams, TraceEntry};

/// After this many final-stage iterations, a residual that stopped
/// shrinking relative to `STALL_WINDOW` iterations ago ends the run.
const STALL_MIN_ITERS: usize = 45;
const STALL_WINDOW: usize = 25;
const STALL_RATIO: f64 = 0.9999;

/// Incoherence scale of the structured plane of a skew score-difference
/// matrix: the largest squared row norm its rank-2 factors can have.
/// Entries of the structured part are bounded by this value times
/// `sigma_1`, so it is the natural threshold scale. The plane is spanned
/// by the constant vector and the score deviations, and scores enter row
/// means with weight `1/n` each, so estimating from row means keeps a
/// sparse corruption from hijacking the scale the way a singular-vector
/// estimate would let it.
fn structured_plane_entry_bound(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / n as f64).collect();
    let grand = means.iter().sum::<f64>() / n as f64;
    let mut denom = 0.0;
    let mut max_dev = 0.0f64;
    for &mean in &means {
        let dev = (mean - grand).powi(2);
        denom += dev;
        max_dev = max_dev.max(dev);
    }
    if denom <= f64::MIN_POSITIVE {
        return 1.0;
    }
    1.0 / n as f64 + max_dev / denom
}

/// Splits a fully observed skew-symmetric matrix into a rank-`r` part and
/// a sparse corruption.
///
/// Each iteration recomputes the SVD of the denoised matrix `M - S`,
/// truncates to the current stage rank with a skew-projection, and
/// re-thresholds the residual `M - L` at
/// `beta (sigma_{k+1} + decay^t sigma_k)`. Because a skew spectrum pairs
/// its singular values, stages advance the rank two at a time; an odd
/// stage would fit exactly half the dominant plane and push the rest into
/// the sparse part. The run converges when the residual drops below
/// `tol * ||M||_F` or stops changing; it only reports failure when the
/// iteration budget runs out first.
pub fn rpca(m: &LogitMatrix, params: &SolverParams) -> Result<RecoveryReport> {
    params.validate()?;
    if !m.fully_observed() {
        return Err(Error::invalid("rpca requires a fully observed matrix; complete it first"));
    }
    let n = m.n();
    let r = params.target_rank;
    let schedule = &params.rpca_threshold_schedule;

    // Exact skewness makes the threshold act symmetrically on mirrored
    // entries, so S stays skew without separate bookkeeping.
    let work = skew_project(m.entries());
    let norm_m = work.norm();

    let mut stage_ranks = Vec::new();
    let mut next_rank = 2.min(r);
    loop {
        stage_ranks.push(next_rank);
        if next_rank == r {
            break;
        }
        next_rank = (next_rank + 2).min(r);
    }

    // Threshold the raw matrix before any rank fit; otherwise a large
    // corruption gets absorbed into the first truncation and spreads over
    // the residual where no later threshold can find it.
    let mut s: DMatrix<f64> = {
        let factors = full_svd(&work)?;
        let k = stage_ranks[0];
        let sigma_next = factors.singular_values.get(k).copied().unwrap_or(0.0);
        let sigma_stage = factors.singular_values.get(k - 1).copied().unwrap_or(0.0);
        let beta = schedule
            .beta
            .unwrap_or_else(|| structured_plane_entry_bound(&work));
        let zeta = beta * (sigma_next + sigma_stage);
        work.map(|x| if x.abs() > zeta { x } else { 0.0 })
    };
    let mut l: DMatrix<f64> = DMatrix::zeros(n, n);
    let mut singular_values = vec![0.0; n];
    let mut trace = Vec::new();
    let mut residual = norm_m;
    let mut converged = norm_m == 0.0;
    let mut total_iters = 0;

    'stages: for &stage in &stage_ranks {
        if converged {
            break;
        }
        let last = stage == r;
        let mut history: Vec<f64> = Vec::new();
        let mut stage_iter = 0usize;
        loop {
            if total_iters >= params.max_iters {
                break 'stages;
            }
            let denoised = &work - &s;
            let factors = full_svd(&denoised)?;
            let sigma1 = factors.singular_values[0];
            let sigma_next = factors.singular_values.get(stage).copied().unwrap_or(0.0);
            let sigma_stage = factors.singular_values.get(stage - 1).copied().unwrap_or(0.0);

            // The current sparse part already explains every deviation
            // from rank `stage`: accept the split as is. Thresholding
            // further would only claw clean entries into the support,
            // un-anchoring the fit.
            if last && sigma_next <= params.tol * sigma1 {
                l = skew_project(&factors.truncate(stage));
                residual = (&work - &l - &s).norm();
                singular_values = factors.singular_values;
                trace.push(TraceEntry {
                    stage,
                    iteration: stage_iter,
                    residual,
                    threshold: 0.0,
                });
                total_iters += 1;
                converged = true;
                break 'stages;
            }
            let transient = schedule.decay.powi(stage_iter as i32) * sigma_stage;
            let beta = schedule
                .beta
                .unwrap_or_else(|| structured_plane_entry_bound(&denoised));
            let zeta = beta * (sigma_next + transient);

            l = skew_project(&factors.truncate(stage));
            let support = (&work - &l).map(|x| x.abs() > zeta);
            total_iters += 1;

            // Alternate the fit and the sparse values on the frozen
            // support until they agree. Re-selecting the support from a
            // half-converged fit lets its leftover error pull clean
            // entries over the shrinking threshold one batch at a time.
            loop {
                s = (&work - &l).zip_map(&support, |x, inside| if inside { x } else { 0.0 });
                let refit = full_svd(&(&work - &s))?;
                l = skew_project(&refit.truncate(stage));
                singular_values = refit.singular_values;
                let next = (&work - &l - &s).norm();
                total_iters += 1;
                let settled = (residual - next).abs() <= 1e-6 * norm_m.max(1.0);
                residual = next;
                if settled || total_iters >= params.max_iters {
                    break;
                }
            }
            s = (&work - &l).zip_map(&support, |x, inside| if inside { x } else { 0.0 });
            residual = (&work - &l - &s).norm();
            trace.push(TraceEntry { stage, iteration: stage_iter, residual, threshold: zeta });

            if residual <= params.tol * norm_m {
                if last {
                    converged = true;
                    break 'stages;
                }
                break;
            }
            if !last && transient <= schedule.stage_advance_rel * sigma1 {
                break;
            }
            if last {
                history.push(residual);
                if stage_iter >= STALL_MIN_ITERS && history.len() > STALL_WINDOW {
                    let past = history[history.len() - 1 - STALL_WINDOW];
                    if residual > STALL_RATIO * past {
                        // Fixed point above tolerance: the leftover mass is
                        // neither low-rank nor sparse. Still a valid split.
                        converged = true;
                        break 'stages;
                    }
                }
            }
            stage_iter += 1;
        }
    }

    let mut triples = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if s[(i, j)] != 0.0 {
                triples.push((i, j, s[(i, j)]));
            }
        }
    }
    let s_hat = SparseCorruption::new(n, triples, CorruptionSpace::Logit)?;
    let l_hat = LogitMatrix::from_parts_unchecked(
        l,
        DMatrix::from_element(n, n, true),
        m.link_id,
    );
    debug_assert!(l_hat.validate().is_ok());

    Ok(RecoveryReport {
        l_hat,
        s_hat,
        singular_values,
        iterations_used: total_iters,
        residual_frobenius: residual,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::nfe;
    use crate::model::{
        btl_preference, inverse_link, link_transform, BtlParams, LinkFunction, PreferenceMatrix,
    };
    use crate::rng::derive_rng;

    fn btl(w: &[f64]) -> PreferenceMatrix {
        btl_preference(&BtlParams::new(w.to_vec()).unwrap()).unwrap()
    }

    fn logit_of(p: &PreferenceMatrix) -> LogitMatrix {
        link_transform(p, &LinkFunction::logit(), 1e-6).unwrap()
    }

    #[test]
    fn clean_rank_two_input_passes_through() {
        let p = btl(&[0.0, 0.4, 0.9, 1.6, 2.1]);
        let m = logit_of(&p);
        let rep = rpca(&m, &SolverParams::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.s_hat.is_empty(), "spurious support {:?}", rep.s_hat.support());
        let diff = (m.entries() - rep.l_hat.entries()).norm();
        assert!(diff <= 1e-9 * m.entries().norm(), "diff {diff}");
    }

    #[test]
    fn single_corrupted_pair_detected_exactly() {
        let w: Vec<f64> = (0..10).map(|i| i as f64 * 0.2).collect();
        let p = btl(&w);
        let m = logit_of(&p);
        let c = SparseCorruption::new(10, vec![(2, 7, 7.0)], CorruptionSpace::Logit).unwrap();
        let corrupted = c.apply_to_logit(&m).unwrap();
        let rep = rpca(&corrupted, &SolverParams::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.detected_pairs(), c.support());
        let recovered = inverse_link(&rep.l_hat, &LinkFunction::logit()).unwrap();
        let err = nfe(&p, &recovered).unwrap();
        assert!(err <= 1e-6, "NFE {err}");
    }

    #[test]
    fn bounded_degree_corruption_support_containment() {
        let n = 30;
        let w: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let p = btl(&w);
        let m = logit_of(&p);
        for seed in 0..3u64 {
            let truth = crate::adversary::bounded_degree_logit_corruption(
                n,
                2,
                (5.0, 10.0),
                &mut derive_rng(seed, &[77]),
            )
            .unwrap();
            let corrupted = truth.apply_to_logit(&m).unwrap();
            let rep = rpca(&corrupted, &SolverParams::default()).unwrap();
            let detected = rep.detected_pairs();
            let true_support = truth.support();
            assert!(
                detected.is_subset(&true_support),
                "seed {seed}: false positives {:?}",
                detected.difference(&true_support).collect::<Vec<_>>()
            );
            assert_eq!(detected, true_support, "seed {seed}: support should be exact here");
            let rel = (m.entries() - rep.l_hat.entries()).norm() / m.entries().norm();
            assert!(rel <= 1e-6, "seed {seed}: relative error {rel}");
        }
    }

    #[test]
    fn low_rank_estimate_respects_rank_bound() {
        let w: Vec<f64> = (0..12).map(|i| i as f64 * 0.15).collect();
        let p = btl(&w);
        let m = logit_of(&p);
        let c = SparseCorruption::new(12, vec![(0, 5, 6.0), (3, 9, -8.0)], CorruptionSpace::Logit)
            .unwrap();
        let rep = rpca(&c.apply_to_logit(&m).unwrap(), &SolverParams::default()).unwrap();
        let svd = super::super::spectrum::full_svd(rep.l_hat.entries()).unwrap();
        let s1 = svd.singular_values[0];
        let numeric_rank = svd.singular_values.iter().filter(|&&s| s > 1e-8 * s1).count();
        assert!(numeric_rank <= 2, "rank {numeric_rank}");
    }

    #[test]
    fn residual_non_increasing_within_stages() {
        let w: Vec<f64> = (0..10).map(|i| i as f64 * 0.2).collect();
        let p = btl(&w);
        let m = logit_of(&p);
        let c = SparseCorruption::new(10, vec![(1, 4, 6.5), (2, 8, -5.5)], CorruptionSpace::Logit)
            .unwrap();
        let rep = rpca(&c.apply_to_logit(&m).unwrap(), &SolverParams::default()).unwrap();
        let scale = m.entries().norm();
        for pair in rep.trace.windows(2) {
            if pair[0].stage == pair[1].stage {
                assert!(
                    pair[1].residual <= pair[0].residual + 1e-9 * scale,
                    "residual rose within stage {}: {} -> {}",
                    pair[0].stage,
                    pair[0].residual,
                    pair[1].residual
                );
            }
        }
    }

    #[test]
    fn deterministic_across_calls() {
        let w: Vec<f64> = (0..8).map(|i| i as f64 * 0.3).collect();
        let p = btl(&w);
        let m = logit_of(&p);
        let c = SparseCorruption::new(8, vec![(0, 3, 5.5)], CorruptionSpace::Logit).unwrap();
        let corrupted = c.apply_to_logit(&m).unwrap();
        let a = rpca(&corrupted, &SolverParams::default()).unwrap();
        let b = rpca(&corrupted, &SolverParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_masked_input() {
        let p = btl(&[0.0, 0.4, 0.9, 1.3]);
        let masked = crate::adversary::delete_entries(&p, 0.5, &mut derive_rng(1, &[])).unwrap();
        let m = link_transform(&masked, &LinkFunction::logit(), 1e-6).unwrap();
        assert!(rpca(&m, &SolverParams::default()).is_err());
    }
}

