//! Recovery solvers and pipelines.
//!
//! [`rpca`] separates a logit matrix into a low-rank part and a sparse
//! corruption by alternating projections. [`complete`] fills missing
//! entries by rank-constrained least squares. The three pipelines chain
//! these with the link transform and Copeland ranking:
//!
//! * [`roratron_matrix`]: corruption repair on fully observed data,
//! * [`coratron_matrix`]: completion of partially observed clean data,
//! * [`curatron_matrix`]: completion then corruption repair.
//!
//! [`augment`] appends deliberately weak reference items, which lowers the
//! completion problem's effective incoherence, and [`health_check`] flags
//! matrices whose spectrum is inconsistent with the low-rank model.

pub mod spectrum;

mod completion;
mod rpca;

pub use completion::{complete, CompletionReport};
pub use rpca::rpca;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::adversary::SparseCorruption;
use crate::error::{Error, Result};
use crate::model::{
    default_clamp, empirical_matrix, inverse_link, link_transform, ComparisonDataset,
    LinkFunction, LinkId, LogitMatrix, PreferenceMatrix,
};
use crate::ranking::{copeland, Ranking};

/// Default probability that an established item beats an augmented one:
/// sigmoid(1).
pub const AUGMENT_UPPER: f64 = 0.731_058_578_630_004_9;
/// Complement of [`AUGMENT_UPPER`]; exact so augmented blocks satisfy the
/// complement rule bitwise.
pub const AUGMENT_LOWER: f64 = 1.0 - AUGMENT_UPPER;

/// Threshold schedule of the alternating-projection solver. At stage `k`,
/// iteration `t`, entries of the residual above
/// `beta * (sigma_{k+1} + decay^t * sigma_k)` are classified as corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdSchedule {
    /// Scale of the threshold. `None` picks it adaptively each iteration
    /// as the incoherence scale of the denoised matrix's structured
    /// plane, the largest squared factor row norm, below which entries of
    /// the structured part cannot be told apart from corruptions.
    pub beta: Option<f64>,
    /// Per-iteration decay of the transient term.
    pub decay: f64,
    /// A stage below the target rank ends once the transient term falls
    /// under this fraction of `sigma_1`.
    pub stage_advance_rel: f64,
}

impl Default for ThresholdSchedule {
    fn default() -> Self {
        ThresholdSchedule { beta: None, decay: 0.5, stage_advance_rel: 1e-6 }
    }
}

/// Shared solver configuration for RPCA and completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Rank of the structured part; 2 for the BTL model.
    pub target_rank: usize,
    /// Total iteration budget per solver call.
    pub max_iters: usize,
    /// Relative residual tolerance.
    pub tol: f64,
    pub rpca_threshold_schedule: ThresholdSchedule,
    /// Whether completion zeroes over-represented rows and columns in its
    /// spectral initialization.
    pub optspace_trim: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            target_rank: 2,
            max_iters: 2500,
            tol: 1e-11,
            rpca_threshold_schedule: ThresholdSchedule::default(),
            optspace_trim: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.target_rank == 0 {
            return Err(Error::invalid("target rank must be >= 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let s = &self.rpca_threshold_schedule;
        if let Some(beta) = s.beta {
            if !(beta > 0.0) {
                return Err(Error::invalid("threshold beta must be positive"));
            }
        }
        if !(s.decay > 0.0 && s.decay < 1.0) {
            return Err(Error::invalid("threshold decay must lie in (0,1)"));
        }
        if !(s.stage_advance_rel > 0.0) {
            return Err(Error::invalid("stage_advance_rel must be positive"));
        }
        Ok(())
    }
}

/// One accepted RPCA iteration, for convergence inspection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Rank fitted during this stage.
    pub stage: usize,
    pub iteration: usize,
    pub residual: f64,
    pub threshold: f64,
}

/// Outcome of an RPCA run: the low-rank estimate, the detected sparse
/// corruption, and convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub l_hat: LogitMatrix,
    pub s_hat: SparseCorruption,
    /// Spectrum of the last denoised iterate, descending.
    pub singular_values: Vec<f64>,
    pub iterations_used: usize,
    /// `||M - L_hat - S_hat||_F` at exit.
    pub residual_frobenius: f64,
    /// False only if the iteration budget ran out while the residual was
    /// still shrinking; a stable fixed point above tolerance counts as
    /// converged.
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

impl RecoveryReport {
    /// Unordered pairs classified as corrupted.
    pub fn detected_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.s_hat.support()
    }
}

/// Augmentation settings: `k` weak reference items appended with fixed
/// win probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    pub k: usize,
    pub u_bound: f64,
    pub l_bound: f64,
}

impl Augmentation {
    pub fn new(k: usize) -> Self {
        Augmentation { k, u_bound: AUGMENT_UPPER, l_bound: AUGMENT_LOWER }
    }
}

/// Pipeline configuration: link choice, clamp width, solver settings, and
/// optional augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    pub link: LinkId,
    /// Clamp width for the link transform; `None` selects the default
    /// based on the per-pair sample count.
    pub clamp: Option<f64>,
    pub solver: SolverParams,
    pub augment: Option<Augmentation>,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            link: LinkId::Logit,
            clamp: None,
            solver: SolverParams::default(),
            augment: None,
        }
    }
}

/// Result of a pipeline run. When augmentation was used, `recovered` and
/// `ranking` refer to the original items only, while the reports keep the
/// augmented dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub recovered: PreferenceMatrix,
    pub ranking: Ranking,
    pub report: Option<RecoveryReport>,
    pub completion: Option<CompletionReport>,
}

enum PipelineKind {
    Roratron,
    Coratron,
    Curatron,
}

/// Corruption repair on fully observed data: link transform, RPCA,
/// inverse link, Copeland.
pub fn roratron_matrix(p: &PreferenceMatrix, params: &PipelineParams) -> Result<PipelineOutcome> {
    run_matrix(p, params, PipelineKind::Roratron, None)
}

/// Completion of partially observed, uncorrupted data: link transform,
/// rank-r completion, inverse link, Copeland.
pub fn coratron_matrix(p: &PreferenceMatrix, params: &PipelineParams) -> Result<PipelineOutcome> {
    run_matrix(p, params, PipelineKind::Coratron, None)
}

/// Completion followed by corruption repair, for data that is both
/// incomplete and corrupted.
pub fn curatron_matrix(p: &PreferenceMatrix, params: &PipelineParams) -> Result<PipelineOutcome> {
    run_matrix(p, params, PipelineKind::Curatron, None)
}

/// [`roratron_matrix`] on the empirical matrix of a dataset; the clamp
/// width defaults from the largest per-pair sample count.
pub fn roratron_dataset(data: &ComparisonDataset, params: &PipelineParams) -> Result<PipelineOutcome> {
    let (p, k) = empirical_with_count(data)?;
    run_matrix(&p, params, PipelineKind::Roratron, k)
}

/// [`coratron_matrix`] on the empirical matrix of a dataset.
pub fn coratron_dataset(data: &ComparisonDataset, params: &PipelineParams) -> Result<PipelineOutcome> {
    let (p, k) = empirical_with_count(data)?;
    run_matrix(&p, params, PipelineKind::Coratron, k)
}

/// [`curatron_matrix`] on the empirical matrix of a dataset.
pub fn curatron_dataset(data: &ComparisonDataset, params: &PipelineParams) -> Result<PipelineOutcome> {
    let (p, k) = empirical_with_count(data)?;
    run_matrix(&p, params, PipelineKind::Curatron, k)
}

fn empirical_with_count(data: &ComparisonDataset) -> Result<(PreferenceMatrix, Option<usize>)> {
    let p = empirical_matrix(data)?;
    let k = data.records.iter().map(|r| r.outcomes.len()).max();
    Ok((p, k))
}

fn run_matrix(
    p: &PreferenceMatrix,
    params: &PipelineParams,
    kind: PipelineKind,
    sample_count: Option<usize>,
) -> Result<PipelineOutcome> {
    params.solver.validate()?;
    let original_n = p.n();
    let augmented = matches!(params.augment, Some(a) if a.k > 0);
    let work = match params.augment {
        Some(a) if a.k > 0 => augment(p, a.k, a.u_bound, a.l_bound)?,
        _ => p.clone(),
    };
    if matches!(kind, PipelineKind::Roratron) && !work.fully_observed() {
        return Err(Error::invalid(
            "roratron requires fully observed data; use curatron for incomplete data",
        ));
    }
    let link = LinkFunction::from_id(params.link);
    let delta = params.clamp.unwrap_or_else(|| default_clamp(sample_count));
    let m0 = link_transform(&work, &link, delta)?;

    let (m_low, completion) = match kind {
        PipelineKind::Roratron => (m0, None),
        PipelineKind::Coratron | PipelineKind::Curatron => {
            let comp = complete(&m0, &params.solver)?;
            (comp.m_hat.clone(), Some(comp))
        }
    };
    let (m_final, report) = match kind {
        PipelineKind::Coratron => (m_low, None),
        PipelineKind::Roratron | PipelineKind::Curatron => {
            let rep = rpca(&m_low, &params.solver)?;
            (rep.l_hat.clone(), Some(rep))
        }
    };

    let recovered_full = inverse_link(&m_final, &link)?;
    let recovered = if augmented {
        crop(&recovered_full, original_n)?
    } else {
        recovered_full
    };
    let ranking = copeland(&recovered)?;
    Ok(PipelineOutcome { recovered, ranking, report, completion })
}

/// Appends `k` uniformly weak items: established items beat them with
/// probability `u_bound`, they beat established items with `l_bound`, and
/// they tie each other. The original block, mask included, is untouched.
pub fn augment(p: &PreferenceMatrix, k: usize, u_bound: f64, l_bound: f64) -> Result<PreferenceMatrix> {
    if !(0.0 < l_bound && l_bound < 1.0 && 0.0 < u_bound && u_bound < 1.0) {
        return Err(Error::invalid("augmentation bounds must lie in (0,1)"));
    }
    if (u_bound + l_bound - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("augmentation bounds must be complements"));
    }
    if k == 0 {
        return Ok(p.clone());
    }
    let n = p.n();
    let total = n + k;
    let mut entries = DMatrix::from_element(total, total, 0.5);
    let mut mask = DMatrix::from_element(total, total, true);
    entries.view_mut((0, 0), (n, n)).copy_from(p.entries());
    mask.view_mut((0, 0), (n, n)).copy_from(p.mask());
    for i in 0..n {
        for m in n..total {
            entries[(i, m)] = u_bound;
            entries[(m, i)] = l_bound;
        }
    }
    Ok(PreferenceMatrix::from_parts_unchecked(entries, mask))
}

/// Top-left `n x n` block of a matrix, mask included.
pub fn crop(p: &PreferenceMatrix, n: usize) -> Result<PreferenceMatrix> {
    if n < 2 || n > p.n() {
        return Err(Error::invalid("crop size must lie in [2, n]"));
    }
    let entries = p.entries().view((0, 0), (n, n)).into_owned();
    let mask = p.mask().view((0, 0), (n, n)).into_owned();
    Ok(PreferenceMatrix::from_parts_unchecked(entries, mask))
}

/// Settings for the spectral health check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HealthCheckParams {
    pub link: LinkId,
    pub clamp: f64,
    /// Expected rank of the clean model.
    pub target_rank: usize,
    /// A singular value counts toward the effective rank when it exceeds
    /// this fraction of the largest one.
    pub tau_rel: f64,
}

impl Default for HealthCheckParams {
    fn default() -> Self {
        HealthCheckParams { link: LinkId::Logit, clamp: 1e-6, target_rank: 2, tau_rel: 1e-3 }
    }
}

/// Spectral summary of a link-transformed matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthReport {
    pub effective_rank: usize,
    /// Full spectrum, descending.
    pub spectrum: Vec<f64>,
    /// True when the effective rank exceeds the target rank, indicating
    /// data inconsistent with the low-rank model.
    pub flagged: bool,
}

/// Checks whether the spectrum of `psi(P)` is consistent with the
/// expected low rank. Masked cells enter as the neutral placeholder.
pub fn health_check(p: &PreferenceMatrix, params: &HealthCheckParams) -> Result<HealthReport> {
    if params.target_rank == 0 {
        return Err(Error::invalid("target rank must be >= 1"));
    }
    if !(params.tau_rel > 0.0 && params.tau_rel < 1.0) {
        return Err(Error::invalid("tau_rel must lie in (0,1)"));
    }
    let link = LinkFunction::from_id(params.link);
    let m = link_transform(p, &link, params.clamp)?;
    let svd = spectrum::full_svd(m.entries())?;
    let spectrum = svd.singular_values;
    let sigma1 = spectrum.first().copied().unwrap_or(0.0);
    let effective_rank = if sigma1 > 0.0 {
        spectrum.iter().filter(|&&s| s > params.tau_rel * sigma1).count()
    } else {
        0
    };
    Ok(HealthReport {
        effective_rank,
        spectrum,
        flagged: effective_rank > params.target_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{inject_responses, InjectionScenario, SparseCorruption};
    use crate::adversary::CorruptionSpace;
    use crate::metrics::{correlation, matrix_disagreement, nfe, ranking_distance};
    use crate::model::{btl_preference, BtlParams};
    use crate::rng::derive_rng;

    fn btl(w: &[f64]) -> PreferenceMatrix {
        btl_preference(&BtlParams::new(w.to_vec()).unwrap()).unwrap()
    }

    fn corrupt_logit(p: &PreferenceMatrix, triples: Vec<(usize, usize, f64)>) -> PreferenceMatrix {
        let link = LinkFunction::logit();
        let m = link_transform(p, &link, 1e-6).unwrap();
        let c = SparseCorruption::new(p.n(), triples, CorruptionSpace::Logit).unwrap();
        inverse_link(&c.apply_to_logit(&m).unwrap(), &link).unwrap()
    }

    #[test]
    fn roratron_clean_input_sorts_scores_ascending() {
        let p = btl(&[0.0, 0.4, 0.9, 1.3]);
        let out = roratron_matrix(&p, &PipelineParams::default()).unwrap();
        assert_eq!(out.ranking.order, vec![0, 1, 2, 3]);
        assert!(out.report.as_ref().unwrap().converged);
        assert!(out.completion.is_none());
        assert!(nfe(&p, &out.recovered).unwrap() <= 1e-9);
    }

    #[test]
    fn roratron_beats_direct_copeland_on_corrupted_input() {
        let w: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let p = btl(&w);
        // One strong flip makes item 4 appear to lose to item 5.
        let pc = corrupt_logit(&p, vec![(4, 5, -7.0)]);
        let direct = copeland(&pc).unwrap();
        let direct_dist = ranking_distance(&direct, &p).unwrap();
        assert!(direct_dist > 0.0);
        let out = roratron_matrix(&pc, &PipelineParams::default()).unwrap();
        let fixed_dist = ranking_distance(&out.ranking, &p).unwrap();
        assert!(fixed_dist < direct_dist, "{fixed_dist} vs {direct_dist}");
        assert_eq!(fixed_dist, 0.0);
    }

    #[test]
    fn roratron_rejects_masked_input() {
        let p = btl(&[0.0, 0.4, 0.9, 1.3]);
        let masked = crate::adversary::delete_entries(&p, 0.5, &mut derive_rng(3, &[])).unwrap();
        assert!(roratron_matrix(&masked, &PipelineParams::default()).is_err());
    }

    #[test]
    fn coratron_fully_observed_matches_copeland() {
        let p = btl(&[0.0, 0.5, 1.1, 1.8, 2.2]);
        let out = coratron_matrix(&p, &PipelineParams::default()).unwrap();
        assert_eq!(out.ranking.order, copeland(&p).unwrap().order);
        assert!(out.completion.unwrap().converged);
    }

    #[test]
    fn coratron_recovers_deleted_entries() {
        let w: Vec<f64> = (0..15).map(|i| i as f64 * 0.1).collect();
        let p = btl(&w);
        let masked = crate::adversary::delete_entries(&p, 0.4, &mut derive_rng(21, &[])).unwrap();
        let out = coratron_matrix(&masked, &PipelineParams::default()).unwrap();
        assert_eq!(ranking_distance(&out.ranking, &p).unwrap(), 0.0);
        assert!(nfe(&p, &out.recovered).unwrap() <= 1e-6);
        assert!(correlation(&p, &out.recovered).unwrap() >= 0.999);
    }

    #[test]
    fn curatron_identity_on_clean_complete_data() {
        let p = btl(&[0.0, 0.6, 1.2, 1.9]);
        let out = curatron_matrix(&p, &PipelineParams::default()).unwrap();
        assert_eq!(out.ranking.order, copeland(&p).unwrap().order);
        assert!(out.report.is_some());
        assert!(out.completion.is_some());
    }

    #[test]
    fn curatron_equals_coratron_on_clean_masked_data() {
        let w: Vec<f64> = (0..12).map(|i| i as f64 * 0.15).collect();
        let p = btl(&w);
        let masked = crate::adversary::delete_entries(&p, 0.3, &mut derive_rng(5, &[])).unwrap();
        let params = PipelineParams::default();
        let cor = coratron_matrix(&masked, &params).unwrap();
        let cur = curatron_matrix(&masked, &params).unwrap();
        assert_eq!(cor.ranking.order, cur.ranking.order);
    }

    #[test]
    fn curatron_handles_deletion_plus_corruption() {
        let w: Vec<f64> = (0..15).map(|i| i as f64 * 0.12).collect();
        let p = btl(&w);
        let mut rng = derive_rng(9, &[]);
        let masked = crate::adversary::delete_entries(&p, 0.1, &mut rng).unwrap();
        let (pc, _) =
            crate::adversary::probability_corruption(&masked, 0.1, (0.269, 0.731), &mut rng).unwrap();
        let out = curatron_matrix(&pc, &PipelineParams::default()).unwrap();
        let err = nfe(&p, &out.recovered).unwrap();
        assert!(err <= 0.05, "NFE {err}");
    }

    #[test]
    fn augment_zero_is_identity() {
        let p = btl(&[0.0, 0.4, 1.1]);
        assert_eq!(augment(&p, 0, AUGMENT_UPPER, AUGMENT_LOWER).unwrap(), p);
    }

    #[test]
    fn augment_pattern_and_crop_round_trip() {
        let p = btl(&[0.0, 1.0]);
        let a = augment(&p, 1, AUGMENT_UPPER, AUGMENT_LOWER).unwrap();
        assert_eq!(a.n(), 3);
        a.validate().unwrap();
        assert_eq!(a.get(2, 0), AUGMENT_LOWER);
        assert_eq!(a.get(2, 1), AUGMENT_LOWER);
        assert_eq!(a.get(2, 2), 0.5);
        assert_eq!(a.get(0, 2), AUGMENT_UPPER);
        assert_eq!(a.get(1, 2), AUGMENT_UPPER);
        assert_eq!(crop(&a, 2).unwrap(), p);
    }

    #[test]
    fn augment_preserves_original_mask() {
        let p = btl(&[0.0, 0.4, 1.1, 1.9]);
        let masked = crate::adversary::delete_entries(&p, 0.5, &mut derive_rng(2, &[])).unwrap();
        let a = augment(&masked, 2, AUGMENT_UPPER, AUGMENT_LOWER).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.is_observed(i, j), masked.is_observed(i, j));
            }
            assert!(a.is_observed(i, 4));
            assert!(a.is_observed(5, i));
        }
    }

    #[test]
    fn augment_rejects_non_complement_bounds() {
        let p = btl(&[0.0, 1.0]);
        assert!(augment(&p, 1, 0.7, 0.2).is_err());
    }

    #[test]
    fn augmented_pipeline_reports_cropped_outputs() {
        let w: Vec<f64> = (0..10).map(|i| i as f64 * 0.2).collect();
        let p = btl(&w);
        let pc = corrupt_logit(&p, vec![(2, 3, 6.0)]);
        let params = PipelineParams {
            augment: Some(Augmentation::new(5)),
            ..PipelineParams::default()
        };
        let out = roratron_matrix(&pc, &params).unwrap();
        assert_eq!(out.recovered.n(), 10);
        assert_eq!(out.ranking.n(), 10);
        assert_eq!(out.report.as_ref().unwrap().l_hat.n(), 15);
        assert_eq!(ranking_distance(&out.ranking, &p).unwrap(), 0.0);
    }

    #[test]
    fn health_check_clean_btl_rank_two() {
        let p = btl(&(0..12).map(|i| i as f64 * 0.2).collect::<Vec<_>>());
        let rep = health_check(&p, &HealthCheckParams::default()).unwrap();
        assert_eq!(rep.effective_rank, 2);
        assert!(!rep.flagged);
        assert_eq!(rep.spectrum.len(), 12);
    }

    #[test]
    fn health_check_flags_single_strong_corruption() {
        let w: Vec<f64> = (0..10).map(|i| i as f64 * 0.25).collect();
        let p = btl(&w);
        let pc = corrupt_logit(&p, vec![(1, 6, 7.0)]);
        let rep = health_check(&pc, &HealthCheckParams::default()).unwrap();
        assert!(rep.flagged, "effective rank {}", rep.effective_rank);
    }

    #[test]
    fn health_check_flags_injection() {
        let w: Vec<f64> = (0..30).map(|i| i as f64 * 0.05).collect();
        let p = btl(&w);
        let (attacked, _) =
            inject_responses(&p, &InjectionScenario::default(), &mut derive_rng(4, &[])).unwrap();
        let rep = health_check(&attacked, &HealthCheckParams::default()).unwrap();
        assert!(rep.flagged, "effective rank {}", rep.effective_rank);
    }

    #[test]
    fn claim_one_flip_degrades_copeland() {
        let w: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let p = btl(&w);
        let flipped =
            crate::adversary::flip_adversary(&p, &crate::adversary::all_pairs(10)).unwrap();
        assert_eq!(matrix_disagreement(&p, &flipped).unwrap(), 1.0);
        let sigma = copeland(&flipped).unwrap();
        assert!(ranking_distance(&sigma, &p).unwrap() >= 0.9);
    }
}
