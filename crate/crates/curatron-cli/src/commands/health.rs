//! `health-check`: spectral screening of a preference matrix for
//! departures from the low-rank model.

use std::path::Path;

use curatron::recovery::{health_check, HealthCheckParams, HealthReport};

use super::{load_matrix, resolve, write_text, HEALTH};
use crate::config::HealthCheckConfig;
use crate::CliError;

pub fn run(cfg: &HealthCheckConfig, out_dir: &Path) -> Result<HealthReport, CliError> {
    let matrix = load_matrix(out_dir, &cfg.input)?;
    let params = HealthCheckParams {
        link: cfg.link,
        clamp: cfg.clamp,
        target_rank: cfg.target_rank,
        tau_rel: cfg.tau_rel,
    };
    let report = health_check(&matrix, &params)?;
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Validation(format!("serialize health report: {e}")))?;
    write_text(&resolve(out_dir, HEALTH), &(text + "\n"))?;
    let verdict = if report.flagged { "flagged" } else { "consistent" };
    println!(
        "health-check: effective rank {} against target {}, {verdict}",
        report.effective_rank, params.target_rank
    );
    Ok(report)
}
