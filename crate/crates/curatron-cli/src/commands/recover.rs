//! `recover`: runs a repair pipeline on a stored matrix and writes the
//! recovered matrix, its ranking, and the solver reports.

use std::path::Path;

use serde::Serialize;

use curatron::dataio;
use curatron::recovery::{
    coratron_matrix, curatron_matrix, roratron_matrix, Augmentation, PipelineOutcome,
    PipelineParams, SolverParams,
};

use super::{load_matrix, resolve, write_text, COMPLETION, RANKING, RECOVERED_MATRIX, REPORT};
use crate::config::{PipelineChoice, RecoverConfig};
use crate::CliError;

pub const COMPLETION_VERSION: &str = "curatron completion v1";

/// JSON shape of a completion report; the completed matrix itself feeds
/// the next pipeline stage and is not persisted separately.
#[derive(Serialize)]
struct CompletionDocument {
    version: String,
    iterations_used: usize,
    residual_observed: f64,
    converged: bool,
    trimmed: Vec<usize>,
}

/// Builds pipeline parameters from a `recover`-style configuration.
pub fn pipeline_params(cfg: &RecoverConfig) -> PipelineParams {
    PipelineParams {
        link: cfg.link,
        clamp: (cfg.clamp > 0.0).then_some(cfg.clamp),
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
    }
}

/// Dispatches on the configured pipeline.
pub fn run_pipeline(
    cfg: &RecoverConfig,
    input: &curatron::PreferenceMatrix,
) -> Result<PipelineOutcome, CliError> {
    let params = pipeline_params(cfg);
    let outcome = match cfg.pipeline {
        PipelineChoice::Roratron => roratron_matrix(input, &params)?,
        PipelineChoice::Coratron => coratron_matrix(input, &params)?,
        PipelineChoice::Curatron => curatron_matrix(input, &params)?,
    };
    Ok(outcome)
}

pub fn run(cfg: &RecoverConfig, out_dir: &Path) -> Result<PipelineOutcome, CliError> {
    let input = load_matrix(out_dir, &cfg.input)?;
    let outcome = run_pipeline(cfg, &input)?;

    dataio::save_matrix(&resolve(out_dir, RECOVERED_MATRIX), &outcome.recovered)?;
    dataio::save_ranking(&resolve(out_dir, RANKING), &outcome.ranking)?;
    let mut unconverged = Vec::new();
    if let Some(report) = &outcome.report {
        dataio::save_report(&resolve(out_dir, REPORT), report)?;
        if !report.converged {
            unconverged.push(format!(
                "corruption repair stopped after {} iterations at residual {:.3e}",
                report.iterations_used, report.residual_frobenius
            ));
        }
    }
    if let Some(completion) = &outcome.completion {
        let doc = CompletionDocument {
            version: COMPLETION_VERSION.into(),
            iterations_used: completion.iterations_used,
            residual_observed: completion.residual_observed,
            converged: completion.converged,
            trimmed: completion.trimmed.clone(),
        };
        let json = serde_json::to_string(&doc).expect("completion document serializes");
        write_text(&resolve(out_dir, COMPLETION), &format!("{json}\n"))?;
        if !completion.converged {
            unconverged.push(format!(
                "completion stopped after {} iterations at residual {:.3e}",
                completion.iterations_used, completion.residual_observed
            ));
        }
    }
    let detected = outcome.report.as_ref().map_or(0, |r| r.s_hat.triples.len());
    println!(
        "recover: wrote {RECOVERED_MATRIX} (n={}, {} corrupted pairs detected)",
        outcome.recovered.n(),
        detected
    );
    if !unconverged.is_empty() {
        return Err(CliError::NonConvergence(unconverged.join("; ")));
    }
    Ok(outcome)
}
