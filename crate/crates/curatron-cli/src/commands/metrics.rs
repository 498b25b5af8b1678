//! `metrics`: compares a candidate matrix, ranking, and detected
//! corruption support against stored ground truth.

use std::path::Path;

use serde::{Deserialize, Serialize};

use curatron::adversary::{CorruptionSpace, SparseCorruption};
use curatron::dataio;
use curatron::metrics::{correlation, nfe, ranking_distance, support_scores, SupportScores};

use super::{load_matrix, resolve, write_text, METRICS};
use crate::config::MetricsConfig;
use crate::CliError;

pub const METRICS_VERSION: &str = "curatron metrics v1";

/// JSON shape of a metrics run; optional parts appear only when their
/// inputs were supplied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub version: String,
    pub nfe: f64,
    pub correlation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
}

/// Restricts a detected support to the first `n` items, dropping
/// augmentation rows, so it can be scored against an original-size truth.
pub fn detected_within(detected: &[(usize, usize, f64)], n: usize) -> SupportScoresInput {
    let triples: Vec<(usize, usize, f64)> = detected
        .iter()
        .copied()
        .filter(|&(i, j, _)| i < n && j < n)
        .collect();
    SupportScoresInput { n, triples }
}

/// A filtered detected support ready for scoring.
pub struct SupportScoresInput {
    n: usize,
    triples: Vec<(usize, usize, f64)>,
}

impl SupportScoresInput {
    pub fn score_against(&self, truth: &SparseCorruption) -> Result<SupportScores, CliError> {
        let detected =
            SparseCorruption::new(self.n, self.triples.clone(), CorruptionSpace::Logit)?;
        Ok(support_scores(&detected, truth)?)
    }
}

pub fn run(cfg: &MetricsConfig, out_dir: &Path) -> Result<MetricsDocument, CliError> {
    let truth = load_matrix(out_dir, &cfg.truth)?;
    let candidate = load_matrix(out_dir, &cfg.candidate)?;
    let nfe_value = nfe(&truth, &candidate)?;
    let corr_value = correlation(&truth, &candidate)?;

    let dist = if cfg.ranking.is_empty() {
        None
    } else {
        let path = resolve(out_dir, &cfg.ranking);
        let ranking = dataio::load_ranking(&path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Some(ranking_distance(&ranking, &truth)?)
    };

    let (precision, recall) = if cfg.corruption.is_empty() || cfg.report.is_empty() {
        (None, None)
    } else {
        let corruption_path = resolve(out_dir, &cfg.corruption);
        let truth_corruption = dataio::load_corruption(&corruption_path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", corruption_path.display())))?;
        let report_path = resolve(out_dir, &cfg.report);
        let report = dataio::load_report(&report_path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", report_path.display())))?;
        let scores = detected_within(&report.detected, truth_corruption.n)
            .score_against(&truth_corruption)?;
        (Some(scores.precision), Some(scores.recall))
    };

    let doc = MetricsDocument {
        version: METRICS_VERSION.into(),
        nfe: nfe_value,
        correlation: corr_value,
        dist,
        precision,
        recall,
    };
    let json = serde_json::to_string(&doc).expect("metrics document serializes");
    write_text(&resolve(out_dir, METRICS), &format!("{json}\n"))?;
    println!(
        "metrics: nfe={:.3e}, correlation={:.6}{}",
        doc.nfe,
        doc.correlation,
        doc.dist.map_or(String::new(), |d| format!(", dist={d:.4}"))
    );
    Ok(doc)
}
