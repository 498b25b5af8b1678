//! `experiment`: sweeps a deletion-probability by corruption-probability
//! grid, runs the configured pipeline per cell and seed, and writes a
//! long-format results CSV plus a per-cell summary.
//!
//! Every run of every cell appears in the results file; a failed cell
//! run keeps its row with `NaN` metrics so nothing is silently dropped.

use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use curatron::adversary::{delete_entries, probability_corruption};
use curatron::metrics::{correlation, nfe, ranking_distance};
use curatron::model::{btl_preference, BtlParams, PreferenceMatrix};
use curatron::recovery::{
    coratron_matrix, curatron_matrix, roratron_matrix, Augmentation, PipelineParams, SolverParams,
};
use curatron::rng::derive_rng;

use super::metrics::detected_within;
use super::{fmt_f64, mean_and_se, resolve, write_text, RESULTS, SUMMARY};
use crate::config::{ExperimentConfig, PipelineChoice, WeightModel};
use crate::CliError;

/// Random stream tag for the per-run ground-truth draw.
const TAG_MATRIX: u64 = 0;
/// Random stream tag for per-cell deletion and corruption draws.
const TAG_CELL: u64 = 1;

/// One grid cell run; failed runs carry `NaN` metrics.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentRow {
    pub dp: f64,
    pub ap: f64,
    pub run: usize,
    pub nfe: f64,
    pub corr: f64,
    pub dist: f64,
    pub precision: f64,
    pub recall: f64,
}

impl ExperimentRow {
    pub fn failed(&self) -> bool {
        self.nfe.is_nan()
    }
}

/// Per-cell aggregate over the successful runs.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentCell {
    pub dp: f64,
    pub ap: f64,
    pub runs: usize,
    pub failed: usize,
    pub nfe_mean: f64,
    pub nfe_se: f64,
    pub corr_mean: f64,
    pub corr_se: f64,
    pub dist_mean: f64,
    pub dist_se: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ExperimentRow>,
    pub cells: Vec<ExperimentCell>,
}

impl ExperimentOutput {
    /// The aggregate for one grid cell, looked up by sweep values.
    pub fn cell(&self, dp: f64, ap: f64) -> Option<&ExperimentCell> {
        self.cells.iter().find(|c| c.dp == dp && c.ap == ap)
    }
}

fn pipeline_params(cfg: &ExperimentConfig) -> PipelineParams {
    PipelineParams {
        solver: SolverParams {
            target_rank: cfg.target_rank,
            max_iters: cfg.max_iters,
            tol: cfg.tol,
            ..SolverParams::default()
        },
        augment: (cfg.augment_k > 0).then_some(Augmentation {
            k: cfg.augment_k,
            u_bound: cfg.augment_u,
            l_bound: cfg.augment_l,
        }),
        ..PipelineParams::default()
    }
}

fn draw_weights(cfg: &ExperimentConfig, rng: &mut impl rand::Rng) -> Result<Vec<f64>, CliError> {
    match cfg.weights {
        WeightModel::Uniform => Ok((0..cfg.n).map(|_| rng.random::<f64>()).collect()),
        WeightModel::Normal => {
            let normal = Normal::new(0.0, cfg.nu)
                .map_err(|e| CliError::Validation(format!("invalid nu {}: {e}", cfg.nu)))?;
            Ok((0..cfg.n).map(|_| normal.sample(rng)).collect())
        }
    }
}

fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.runs == 0 {
        return Err(CliError::Validation("experiment needs runs >= 1".into()));
    }
    if cfg.dp_values.is_empty() || cfg.ap_values.is_empty() {
        return Err(CliError::Validation("dp_values and ap_values must be non-empty".into()));
    }
    for (name, values) in [("dp_values", &cfg.dp_values), ("ap_values", &cfg.ap_values)] {
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CliError::Validation(format!("{name} entry {bad} outside [0,1]")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Validation(format!("{name} contains duplicate entries")));
        }
    }
    Ok(())
}

pub fn run(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<ExperimentOutput, CliError> {
    validate(cfg)?;
    let truths: Vec<PreferenceMatrix> = (0..cfg.runs)
        .map(|run| {
            let mut rng = derive_rng(seed, &[TAG_MATRIX, run as u64]);
            let w = draw_weights(cfg, &mut rng)?;
            Ok(btl_preference(&BtlParams::new(w)?)?)
        })
        .collect::<Result<_, CliError>>()?;
    let params = pipeline_params(cfg);

    let jobs: Vec<(usize, usize, usize)> = (0..cfg.dp_values.len())
        .flat_map(|di| {
            (0..cfg.ap_values.len())
                .flat_map(move |ai| (0..cfg.runs).map(move |run| (di, ai, run)))
        })
        .collect();

    let mut rows: Vec<ExperimentRow> = jobs
        .par_iter()
        .map(|&(di, ai, run)| {
            let dp = cfg.dp_values[di];
            let ap = cfg.ap_values[ai];
            match run_cell(cfg, &params, &truths[run], seed, di, ai, run) {
                Ok(row) => row,
                Err(e) => {
                    eprintln!("experiment cell dp={dp} ap={ap} run={run} failed: {e}");
                    ExperimentRow {
                        dp,
                        ap,
                        run,
                        nfe: f64::NAN,
                        corr: f64::NAN,
                        dist: f64::NAN,
                        precision: f64::NAN,
                        recall: f64::NAN,
                    }
                }
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.dp, a.ap, a.run)
            .partial_cmp(&(b.dp, b.ap, b.run))
            .expect("grid values are finite")
    });

    let mut cells = Vec::with_capacity(cfg.dp_values.len() * cfg.ap_values.len());
    for chunk in rows.chunks(cfg.runs) {
        let ok: Vec<&ExperimentRow> = chunk.iter().filter(|r| !r.failed()).collect();
        let pick = |f: fn(&ExperimentRow) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
        let (nfe_mean, nfe_se) = mean_and_se(&pick(|r| r.nfe));
        let (corr_mean, corr_se) = mean_and_se(&pick(|r| r.corr));
        let (dist_mean, dist_se) = mean_and_se(&pick(|r| r.dist));
        cells.push(ExperimentCell {
            dp: chunk[0].dp,
            ap: chunk[0].ap,
            runs: chunk.len(),
            failed: chunk.len() - ok.len(),
            nfe_mean,
            nfe_se,
            corr_mean,
            corr_se,
            dist_mean,
            dist_se,
        });
    }

    write_results(out_dir, &rows)?;
    write_summary(out_dir, &cells)?;
    let failed: usize = cells.iter().map(|c| c.failed).sum();
    println!(
        "experiment: {} rows over {} cells ({} failed runs)",
        rows.len(),
        cells.len(),
        failed
    );
    Ok(ExperimentOutput { rows, cells })
}

fn run_cell(
    cfg: &ExperimentConfig,
    params: &PipelineParams,
    truth: &PreferenceMatrix,
    seed: u64,
    di: usize,
    ai: usize,
    run: usize,
) -> Result<ExperimentRow, CliError> {
    let dp = cfg.dp_values[di];
    let ap = cfg.ap_values[ai];
    // One deletion and corruption realization per cell, shared by every
    // run; only the ground-truth matrix varies across runs.
    let mut rng = derive_rng(seed, &[TAG_CELL, di as u64, ai as u64]);
    let deleted = delete_entries(truth, dp, &mut rng)?;
    let (corrupted, truth_corruption) =
        probability_corruption(&deleted, ap, (cfg.value_lo, cfg.value_hi), &mut rng)?;

    let outcome = match cfg.pipeline {
        PipelineChoice::Roratron => roratron_matrix(&corrupted, params)?,
        PipelineChoice::Coratron => coratron_matrix(&corrupted, params)?,
        PipelineChoice::Curatron => curatron_matrix(&corrupted, params)?,
    };

    let detected = outcome
        .report
        .as_ref()
        .map(|r| r.s_hat.triples.clone())
        .unwrap_or_default();
    let scores = detected_within(&detected, cfg.n).score_against(&truth_corruption)?;
    Ok(ExperimentRow {
        dp,
        ap,
        run,
        nfe: nfe(truth, &outcome.recovered)?,
        corr: correlation(truth, &outcome.recovered)?,
        dist: ranking_distance(&outcome.ranking, truth)?,
        precision: scores.precision,
        recall: scores.recall,
    })
}

fn write_results(out_dir: &Path, rows: &[ExperimentRow]) -> Result<(), CliError> {
    let mut text = String::from("dp,ap,run,nfe,corr,dist,precision,recall\n");
    for r in rows {
        writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.dp),
            fmt_f64(r.ap),
            r.run,
            fmt_f64(r.nfe),
            fmt_f64(r.corr),
            fmt_f64(r.dist),
            fmt_f64(r.precision),
            fmt_f64(r.recall)
        )
        .expect("string write");
    }
    write_text(&resolve(out_dir, RESULTS), &text)
}

fn write_summary(out_dir: &Path, cells: &[ExperimentCell]) -> Result<(), CliError> {
    let mut text =
        String::from("dp,ap,runs,failed,nfe_mean,nfe_se,corr_mean,corr_se,dist_mean,dist_se\n");
    for c in cells {
        writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(c.dp),
            fmt_f64(c.ap),
            c.runs,
            c.failed,
            fmt_f64(c.nfe_mean),
            fmt_f64(c.nfe_se),
            fmt_f64(c.corr_mean),
            fmt_f64(c.corr_se),
            fmt_f64(c.dist_mean),
            fmt_f64(c.dist_se)
        )
        .expect("string write");
    }
    write_text(&resolve(out_dir, SUMMARY), &text)
}
