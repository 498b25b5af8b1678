//! `simulate`: generates a ground-truth instance, either a BTL model
//! with Gaussian scores or a scored response catalog.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use curatron::dataio::{self, ResponseCatalog, ResponseEntry};
use curatron::model::{btl_preference, empirical_matrix, sample_comparisons, BtlParams, PreferenceMatrix};
use curatron::rng::derive_rng;

use super::{resolve, write_text, DATASET, EMPIRICAL_MATRIX, PARAMS, TRUTH_MATRIX};
use crate::config::{SimulateConfig, SimulateMode};
use crate::CliError;

pub const PARAMS_VERSION: &str = "curatron params v1";

/// Random stream tag for the ground-truth draw.
const TAG_TRUTH: u64 = 0;
/// Random stream tag for comparison sampling.
const TAG_SAMPLES: u64 = 1;

/// What `simulate` generated, for in-process callers.
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub matrix: PreferenceMatrix,
    /// BTL scores, or normalized catalog scores in catalog mode.
    pub w: Vec<f64>,
    pub catalog: Option<ResponseCatalog>,
}

#[derive(Serialize)]
struct ParamsDocument {
    version: String,
    mode: String,
    seed: u64,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rating_levels: Option<usize>,
    w: Vec<f64>,
}

pub fn run(cfg: &SimulateConfig, seed: u64, out_dir: &Path) -> Result<SimulateOutput, CliError> {
    match cfg.mode {
        SimulateMode::Btl => run_btl(cfg, seed, out_dir),
        SimulateMode::Catalog => run_catalog(cfg, seed, out_dir),
    }
}

fn run_btl(cfg: &SimulateConfig, seed: u64, out_dir: &Path) -> Result<SimulateOutput, CliError> {
    if cfg.n < 2 {
        return Err(CliError::Validation("simulate needs n >= 2".into()));
    }
    let normal = Normal::new(0.0, cfg.nu)
        .map_err(|e| CliError::Validation(format!("invalid nu {}: {e}", cfg.nu)))?;
    let mut rng = derive_rng(seed, &[TAG_TRUTH]);
    let w: Vec<f64> = (0..cfg.n).map(|_| normal.sample(&mut rng)).collect();
    let params = BtlParams::new(w.clone())?;
    let matrix = btl_preference(&params)?;
    dataio::save_matrix(&resolve(out_dir, TRUTH_MATRIX), &matrix)?;

    if cfg.k > 0 {
        let mut sample_rng = derive_rng(seed, &[TAG_SAMPLES]);
        let dataset = sample_comparisons(&matrix, cfg.k, &mut sample_rng)?;
        dataio::save_dataset(&resolve(out_dir, DATASET), &dataset)?;
        let empirical = empirical_matrix(&dataset)?;
        dataio::save_matrix(&resolve(out_dir, EMPIRICAL_MATRIX), &empirical)?;
    }

    let doc = ParamsDocument {
        version: PARAMS_VERSION.into(),
        mode: "btl".into(),
        seed,
        n: cfg.n,
        nu: Some(cfg.nu),
        k: Some(cfg.k),
        rating_levels: None,
        w: w.clone(),
    };
    write_params(out_dir, &doc)?;
    println!(
        "simulate: wrote {TRUTH_MATRIX} (n={}, nu={}{})",
        cfg.n,
        cfg.nu,
        if cfg.k > 0 { format!(", K={}", cfg.k) } else { ", exact".into() }
    );
    Ok(SimulateOutput { matrix, w, catalog: None })
}

fn run_catalog(cfg: &SimulateConfig, seed: u64, out_dir: &Path) -> Result<SimulateOutput, CliError> {
    if cfg.incumbents < 2 {
        return Err(CliError::Validation("catalog mode needs incumbents >= 2".into()));
    }
    if cfg.rating_levels < 2 {
        return Err(CliError::Validation("catalog mode needs rating_levels >= 2".into()));
    }
    let mut rng = derive_rng(seed, &[TAG_TRUTH]);
    let responses: Vec<ResponseEntry> = (0..cfg.incumbents)
        .map(|i| {
            let rating = rng.random_range(1..=cfg.rating_levels);
            ResponseEntry {
                id: format!("r{i:02}"),
                text: incumbent_text(i),
                score: Some(rating as f64 / cfg.rating_levels as f64),
            }
        })
        .collect();
    let scores: Vec<f64> = responses.iter().map(|r| r.score.unwrap()).collect();
    let catalog = ResponseCatalog::new(cfg.prompt.clone(), responses)?;
    dataio::save_catalog(&resolve(out_dir, super::CATALOG), &catalog)?;
    let matrix = dataio::scores_to_matrix(&catalog)?;
    dataio::save_matrix(&resolve(out_dir, TRUTH_MATRIX), &matrix)?;

    let doc = ParamsDocument {
        version: PARAMS_VERSION.into(),
        mode: "catalog".into(),
        seed,
        n: cfg.incumbents,
        nu: None,
        k: None,
        rating_levels: Some(cfg.rating_levels),
        w: scores.clone(),
    };
    write_params(out_dir, &doc)?;
    println!(
        "simulate: wrote {} and {TRUTH_MATRIX} ({} responses)",
        super::CATALOG,
        cfg.incumbents
    );
    Ok(SimulateOutput { matrix, w: scores, catalog: Some(catalog) })
}

fn write_params(out_dir: &Path, doc: &ParamsDocument) -> Result<(), CliError> {
    let json = serde_json::to_string(doc).expect("params serialize");
    write_text(&resolve(out_dir, PARAMS), &format!("{json}\n"))
}

/// Deterministic distinct placeholder text for synthetic responses.
fn incumbent_text(i: usize) -> String {
    format!("Candidate response {i:02}: summarizes the report and lists recommended actions.")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimulateConfig;
    use tempfile::tempdir;

    #[test]
    fn btl_mode_writes_matrix_and_params() {
        let dir = tempdir().unwrap();
        let cfg = SimulateConfig { n: 8, ..SimulateConfig::default() };
        let out = run(&cfg, 7, dir.path()).unwrap();
        assert_eq!(out.matrix.n(), 8);
        assert_eq!(out.w.len(), 8);
        let loaded = dataio::load_matrix(&dir.path().join(TRUTH_MATRIX)).unwrap();
        assert_eq!(loaded, out.matrix);
        let params = std::fs::read_to_string(dir.path().join(PARAMS)).unwrap();
        assert!(params.contains("\"mode\":\"btl\""));
    }

    #[test]
    fn zero_spread_gives_all_half() {
        let dir = tempdir().unwrap();
        let cfg = SimulateConfig { n: 5, nu: 0.0, ..SimulateConfig::default() };
        let out = run(&cfg, 1, dir.path()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(out.matrix.get(i, j), 0.5);
            }
        }
    }

    #[test]
    fn sampling_mode_writes_dataset_and_empirical_matrix() {
        let dir = tempdir().unwrap();
        let cfg = SimulateConfig { n: 6, k: 40, ..SimulateConfig::default() };
        run(&cfg, 3, dir.path()).unwrap();
        let dataset = dataio::load_dataset(&dir.path().join(DATASET)).unwrap();
        assert_eq!(dataset.records.len(), 15);
        assert!(dataset.records.iter().all(|r| r.outcomes.len() == 40));
        let emp = dataio::load_matrix(&dir.path().join(EMPIRICAL_MATRIX)).unwrap();
        assert!(emp.fully_observed());
    }

    #[test]
    fn same_seed_reproduces_files() {
        let a = tempdir().unwrap();
        let b = tempdir().unwrap();
        let cfg = SimulateConfig { n: 9, k: 10, ..SimulateConfig::default() };
        run(&cfg, 11, a.path()).unwrap();
        run(&cfg, 11, b.path()).unwrap();
        for name in [TRUTH_MATRIX, DATASET, EMPIRICAL_MATRIX, PARAMS] {
            let left = std::fs::read(a.path().join(name)).unwrap();
            let right = std::fs::read(b.path().join(name)).unwrap();
            assert_eq!(left, right, "{name} differs between reruns");
        }
    }

    #[test]
    fn catalog_mode_writes_scored_catalog() {
        let dir = tempdir().unwrap();
        let cfg = SimulateConfig {
            mode: SimulateMode::Catalog,
            incumbents: 12,
            ..SimulateConfig::default()
        };
        let out = run(&cfg, 5, dir.path()).unwrap();
        let catalog = out.catalog.unwrap();
        assert_eq!(catalog.len(), 12);
        assert!(catalog.responses.iter().all(|r| {
            let s = r.score.unwrap();
            (0.1..=1.0).contains(&s)
        }));
        assert_eq!(out.matrix.n(), 12);
        let loaded = dataio::load_catalog(&dir.path().join(super::super::CATALOG)).unwrap();
        assert_eq!(loaded, catalog);
    }

    #[test]
    fn invalid_sizes_are_rejected() {
        let dir = tempdir().unwrap();
        let cfg = SimulateConfig { n: 1, ..SimulateConfig::default() };
        assert!(run(&cfg, 1, dir.path()).is_err());
        let cfg = SimulateConfig {
            mode: SimulateMode::Catalog,
            incumbents: 1,
            ..SimulateConfig::default()
        };
        assert!(run(&cfg, 1, dir.path()).is_err());
    }
}
