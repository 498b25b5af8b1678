//! Subcommand implementations. Each `run` takes its configuration
//! section, writes fixed-name artifacts into the output directory, and
//! returns its results for in-process callers.

use std::fs;
use std::path::{Path, PathBuf};

use curatron::dataio;
use curatron::model::PreferenceMatrix;

use crate::CliError;

pub mod baselines;
pub mod corrupt;
pub mod experiment;
pub mod export;
pub mod health;
pub mod metrics;
pub mod rank;
pub mod recover;
pub mod simulate;

pub const TRUTH_MATRIX: &str = "truth_matrix.csv";
pub const EMPIRICAL_MATRIX: &str = "empirical_matrix.csv";
pub const DATASET: &str = "dataset.jsonl";
pub const PARAMS: &str = "params.json";
pub const CATALOG: &str = "catalog.jsonl";
pub const CORRUPTED_MATRIX: &str = "corrupted_matrix.csv";
pub const CORRUPTION: &str = "corruption.jsonl";
pub const CATALOG_INJECTED: &str = "catalog_injected.jsonl";
pub const INJECTED: &str = "injected.json";
pub const RECOVERED_MATRIX: &str = "recovered_matrix.csv";
pub const RANKING: &str = "ranking.json";
pub const REPORT: &str = "report.json";
pub const COMPLETION: &str = "completion.json";
pub const METRICS: &str = "metrics.json";
pub const RESULTS: &str = "results.csv";
pub const SUMMARY: &str = "summary.csv";
pub const EXPORT: &str = "export.jsonl";
pub const HEALTH: &str = "health.json";

/// Resolves a configured path against the output directory; absolute
/// paths pass through.
pub fn resolve(out_dir: &Path, configured: &str) -> PathBuf {
    let p = Path::new(configured);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

pub fn load_matrix(out_dir: &Path, configured: &str) -> Result<PreferenceMatrix, CliError> {
    let path = resolve(out_dir, configured);
    dataio::load_matrix(&path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Writes a text file in one shot so reruns are byte-identical.
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Shortest decimal form that round-trips; `NaN` for failed cells.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Mean and standard error of the mean; `(NaN, NaN)` for an empty slice.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se_of_constant_runs_is_exact() {
        let (mean, se) = mean_and_se(&[0.25, 0.25, 0.25, 0.25]);
        assert_eq!(mean, 0.25);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn mean_and_se_matches_hand_computation() {
        let (mean, se) = mean_and_se(&[1.0, 2.0, 3.0]);
        assert_eq!(mean, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fmt_round_trips_shortest_form() {
        assert_eq!(fmt_f64(0.15), "0.15");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        let v = 0.123456789123456789;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn resolve_keeps_absolute_paths() {
        let out = Path::new("/tmp/out");
        assert_eq!(resolve(out, "file.csv"), Path::new("/tmp/out/file.csv"));
        assert_eq!(resolve(out, "/abs/file.csv"), Path::new("/abs/file.csv"));
    }
}
