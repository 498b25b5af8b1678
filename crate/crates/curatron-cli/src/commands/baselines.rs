//! `baselines`: compares the corruption-repair pipeline against
//! Maximum Likelihood, Rank Centrality, and Borda Count on shared
//! corrupted instances, sweeping either the corruption degree or the
//! score spread.

use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use curatron::adversary::random_logit_corruption;
use curatron::metrics::ranking_distance;
use curatron::model::{
    btl_preference, inverse_link, link_transform, BtlParams, LinkFunction, PreferenceMatrix,
};
use curatron::ranking::{borda_from_matrix, btl_mle, rank_centrality};
use curatron::recovery::{roratron_matrix, PipelineParams};
use curatron::rng::derive_rng;

use super::{fmt_f64, mean_and_se, resolve, write_text, RESULTS, SUMMARY};
use crate::config::{BaselinesConfig, SweepKind};
use crate::CliError;

/// Random stream tag for the per-run ground-truth draw.
const TAG_MATRIX: u64 = 0;
/// Random stream tag for corruption draws.
const TAG_CORRUPTION: u64 = 1;

/// The compared ranking procedures, in output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ranker {
    /// Corruption repair followed by Copeland counting.
    Roratron,
    /// BTL maximum likelihood on the corrupted matrix.
    Ml,
    /// Rank Centrality on the corrupted matrix.
    Rc,
    /// Borda Count on the corrupted matrix.
    Bc,
}

pub const RANKERS: [Ranker; 4] = [Ranker::Roratron, Ranker::Ml, Ranker::Rc, Ranker::Bc];

impl Ranker {
    pub fn name(self) -> &'static str {
        match self {
            Ranker::Roratron => "roratron",
            Ranker::Ml => "ml",
            Ranker::Rc => "rc",
            Ranker::Bc => "bc",
        }
    }

    fn index(self) -> usize {
        RANKERS.iter().position(|&r| r == self).expect("listed ranker")
    }
}

/// One ranker on one corrupted instance.
#[derive(Debug, Clone, Copy)]
pub struct BaselineRow {
    pub value: f64,
    pub run: usize,
    pub ranker: Ranker,
    pub dist: f64,
    pub converged: bool,
}

/// Mean ranking distance of one ranker at one sweep point.
#[derive(Debug, Clone, Copy)]
pub struct BaselineCell {
    pub value: f64,
    pub ranker: Ranker,
    pub runs: usize,
    pub dist_mean: f64,
    pub dist_se: f64,
}

#[derive(Debug, Clone)]
pub struct BaselinesOutput {
    pub sweep: SweepKind,
    pub rows: Vec<BaselineRow>,
    pub cells: Vec<BaselineCell>,
}

impl BaselinesOutput {
    pub fn cell(&self, value: f64, ranker: Ranker) -> Option<&BaselineCell> {
        self.cells.iter().find(|c| c.value == value && c.ranker == ranker)
    }
}

fn validate(cfg: &BaselinesConfig) -> Result<Vec<f64>, CliError> {
    if cfg.runs == 0 {
        return Err(CliError::Validation("baselines needs runs >= 1".into()));
    }
    let values = match cfg.sweep {
        SweepKind::D => cfg.d_values.clone(),
        SweepKind::Nu => cfg.nu_values.clone(),
    };
    if values.is_empty() {
        return Err(CliError::Validation("sweep values must be non-empty".into()));
    }
    let degrees: Vec<f64> = match cfg.sweep {
        SweepKind::D => values.clone(),
        SweepKind::Nu => vec![cfg.d],
    };
    for d in degrees {
        if !(0.0..=cfg.n as f64).contains(&d) {
            return Err(CliError::Validation(format!(
                "corruption degree {d} outside [0, n={}]",
                cfg.n
            )));
        }
    }
    Ok(values)
}

pub fn run(cfg: &BaselinesConfig, seed: u64, out_dir: &Path) -> Result<BaselinesOutput, CliError> {
    let values = validate(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|vi| (0..cfg.runs).map(move |run| (vi, run)))
        .collect();

    let nested: Vec<Result<Vec<BaselineRow>, CliError>> = jobs
        .par_iter()
        .map(|&(vi, run)| run_instance(cfg, &values, seed, vi, run))
        .collect();
    let mut rows = Vec::with_capacity(jobs.len() * RANKERS.len());
    for group in nested {
        rows.extend(group?);
    }
    rows.sort_by(|a, b| {
        (a.value, a.run, a.ranker.index())
            .partial_cmp(&(b.value, b.run, b.ranker.index()))
            .expect("sweep values are finite")
    });

    let mut cells = Vec::with_capacity(values.len() * RANKERS.len());
    let mut sorted_values = values.clone();
    sorted_values.sort_by(|a, b| a.partial_cmp(b).expect("sweep values are finite"));
    for &value in &sorted_values {
        for ranker in RANKERS {
            let dists: Vec<f64> = rows
                .iter()
                .filter(|r| r.value == value && r.ranker == ranker && !r.dist.is_nan())
                .map(|r| r.dist)
                .collect();
            let (dist_mean, dist_se) = mean_and_se(&dists);
            cells.push(BaselineCell { value, ranker, runs: dists.len(), dist_mean, dist_se });
        }
    }

    write_results(out_dir, cfg.sweep, &rows)?;
    write_summary(out_dir, cfg.sweep, &cells)?;
    println!(
        "baselines: {} sweep over {} points, {} rows",
        sweep_name(cfg.sweep),
        values.len(),
        rows.len()
    );
    Ok(BaselinesOutput { sweep: cfg.sweep, rows, cells })
}

fn run_instance(
    cfg: &BaselinesConfig,
    values: &[f64],
    seed: u64,
    vi: usize,
    run: usize,
) -> Result<Vec<BaselineRow>, CliError> {
    let value = values[vi];
    let (nu, degree) = match cfg.sweep {
        SweepKind::D => (cfg.nu, value),
        SweepKind::Nu => (value, cfg.d),
    };
    let normal = Normal::new(0.0, nu)
        .map_err(|e| CliError::Validation(format!("invalid nu {nu}: {e}")))?;
    // The d sweep reuses one instance per run across all sweep points;
    // the nu sweep regenerates it, since the spread itself changes.
    let mut truth_rng = match cfg.sweep {
        SweepKind::D => derive_rng(seed, &[TAG_MATRIX, run as u64]),
        SweepKind::Nu => derive_rng(seed, &[TAG_MATRIX, vi as u64, run as u64]),
    };
    let w: Vec<f64> = (0..cfg.n).map(|_| normal.sample(&mut truth_rng)).collect();
    let truth = btl_preference(&BtlParams::new(w)?)?;

    // One corruption realization per sweep point, shared by every run;
    // only the ground-truth scores vary across runs.
    let mut corruption_rng = derive_rng(seed, &[TAG_CORRUPTION, vi as u64]);
    let corruption = random_logit_corruption(
        cfg.n,
        degree / cfg.n as f64,
        (cfg.mag_lo, cfg.mag_hi),
        &mut corruption_rng,
    )?;
    let link = LinkFunction::logit();
    let m = link_transform(&truth, &link, 1e-6)?;
    let corrupted = inverse_link(&corruption.apply_to_logit(&m)?, &link)?;

    let mut rows = Vec::with_capacity(RANKERS.len());
    for ranker in RANKERS {
        let (dist, converged) = match score_ranker(ranker, &corrupted, &truth) {
            Ok(pair) => pair,
            Err(e) => {
                eprintln!("baselines {} at {value} run {run} failed: {e}", ranker.name());
                (f64::NAN, false)
            }
        };
        rows.push(BaselineRow { value, run, ranker, dist, converged });
    }
    Ok(rows)
}

fn score_ranker(
    ranker: Ranker,
    corrupted: &PreferenceMatrix,
    truth: &PreferenceMatrix,
) -> Result<(f64, bool), CliError> {
    let (ranking, converged) = match ranker {
        Ranker::Roratron => {
            let outcome = roratron_matrix(corrupted, &PipelineParams::default())?;
            let converged = outcome.report.as_ref().is_some_and(|r| r.converged);
            (outcome.ranking, converged)
        }
        Ranker::Ml => {
            let outcome = btl_mle(corrupted)?;
            (outcome.ranking, outcome.converged)
        }
        Ranker::Rc => (rank_centrality(corrupted)?.ranking, true),
        Ranker::Bc => (borda_from_matrix(corrupted)?, true),
    };
    Ok((ranking_distance(&ranking, truth)?, converged))
}

fn sweep_name(sweep: SweepKind) -> &'static str {
    match sweep {
        SweepKind::D => "d",
        SweepKind::Nu => "nu",
    }
}

fn write_results(out_dir: &Path, sweep: SweepKind, rows: &[BaselineRow]) -> Result<(), CliError> {
    let mut text = String::from("sweep,value,run,ranker,dist,converged\n");
    for r in rows {
        writeln!(
            text,
            "{},{},{},{},{},{}",
            sweep_name(sweep),
            fmt_f64(r.value),
            r.run,
            r.ranker.name(),
            fmt_f64(r.dist),
            r.converged
        )
        .expect("string write");
    }
    write_text(&resolve(out_dir, RESULTS), &text)
}

fn write_summary(out_dir: &Path, sweep: SweepKind, cells: &[BaselineCell]) -> Result<(), CliError> {
    let mut text = String::from("sweep,value,ranker,runs,dist_mean,dist_se\n");
    for c in cells {
        writeln!(
            text,
            "{},{},{},{},{},{}",
            sweep_name(sweep),
            fmt_f64(c.value),
            c.ranker.name(),
            c.runs,
            fmt_f64(c.dist_mean),
            fmt_f64(c.dist_se)
        )
        .expect("string write");
    }
    write_text(&resolve(out_dir, SUMMARY), &text)
}
