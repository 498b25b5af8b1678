//! Configuration handling: one TOML file holds a flat section per
//! subcommand. Unknown sections and unknown keys are rejected by name, so
//! a typo never silently falls back to a default.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use curatron::dataio::SamplingStrategy;
use curatron::model::LinkId;
use curatron::recovery::{AUGMENT_LOWER, AUGMENT_UPPER};

use crate::CliError;

/// Parsed configuration with one entry per subcommand section. Sections
/// absent from the file carry their defaults.
#[derive(Debug, Clone, Default)]
pub struct Config {
    pub simulate: SimulateConfig,
    pub corrupt: CorruptConfig,
    pub recover: RecoverConfig,
    pub rank: RankConfig,
    pub metrics: MetricsConfig,
    pub experiment: ExperimentConfig,
    pub baselines: BaselinesConfig,
    pub export: ExportConfig,
    pub health_check: HealthCheckConfig,
}

const SECTIONS: &[&str] = &[
    "simulate",
    "corrupt",
    "recover",
    "rank",
    "metrics",
    "experiment",
    "baselines",
    "export",
    "health_check",
];

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Validation(format!("config is not valid TOML: {e}")))?;

        let mut problems = Vec::new();
        for (name, value) in &table {
            if !SECTIONS.contains(&name.as_str()) {
                problems.push(format!("unknown section [{name}]"));
                continue;
            }
            let Some(section) = value.as_table() else {
                problems.push(format!("[{name}] must be a section, not a bare value"));
                continue;
            };
            let allowed = allowed_keys(name);
            let unknown: Vec<&str> = section
                .keys()
                .map(String::as_str)
                .filter(|k| !allowed.contains(k))
                .collect();
            if !unknown.is_empty() {
                problems.push(format!("unknown keys in [{name}]: {}", unknown.join(", ")));
            }
        }
        if !problems.is_empty() {
            return Err(CliError::Validation(problems.join("; ")));
        }

        let mut config = Config::default();
        config.simulate = parse_section(&table, "simulate")?;
        config.corrupt = parse_section(&table, "corrupt")?;
        config.recover = parse_section(&table, "recover")?;
        config.rank = parse_section(&table, "rank")?;
        config.metrics = parse_section(&table, "metrics")?;
        config.experiment = parse_section(&table, "experiment")?;
        config.baselines = parse_section(&table, "baselines")?;
        config.export = parse_section(&table, "export")?;
        config.health_check = parse_section(&table, "health_check")?;
        Ok(config)
    }
}

fn parse_section<T: for<'de> Deserialize<'de> + Default>(
    table: &toml::Table,
    name: &str,
) -> Result<T, CliError> {
    match table.get(name) {
        Some(value) => value
            .clone()
            .try_into()
            .map_err(|e| CliError::Validation(format!("[{name}]: {e}"))),
        None => Ok(T::default()),
    }
}

fn allowed_keys(section: &str) -> &'static [&'static str] {
    match section {
        "simulate" => &["mode", "n", "nu", "k", "incumbents", "rating_levels", "prompt"],
        "corrupt" => &[
            "input", "mode", "dp", "ap", "value_lo", "value_hi", "d", "max_degree", "mag_lo",
            "mag_hi", "catalog", "k_injected", "s1_lo", "s1_hi", "p1", "s2_lo", "s2_hi", "p2",
            "p3",
        ],
        "recover" => &[
            "input",
            "pipeline",
            "link",
            "clamp",
            "augment_k",
            "augment_u",
            "augment_l",
            "target_rank",
            "max_iters",
            "tol",
        ],
        "rank" => &["input", "method"],
        "metrics" => &["truth", "candidate", "ranking", "corruption", "report"],
        "experiment" => &[
            "n",
            "weights",
            "nu",
            "dp_values",
            "ap_values",
            "runs",
            "pipeline",
            "value_lo",
            "value_hi",
            "augment_k",
            "augment_u",
            "augment_l",
            "target_rank",
            "max_iters",
            "tol",
        ],
        "baselines" => &[
            "n", "nu", "sweep", "d_values", "nu_values", "d", "runs", "mag_lo", "mag_hi",
        ],
        "export" => &["catalog", "matrix", "ranking", "strategy"],
        "health_check" => &["input", "link", "clamp", "target_rank", "tau_rel"],
        _ => &[],
    }
}

/// What `simulate` generates: a synthetic BTL instance or a scored
/// response catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulateMode {
    #[default]
    Btl,
    Catalog,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub mode: SimulateMode,
    /// Number of items in BTL mode.
    pub n: usize,
    /// Spread of the BTL scores: `w ~ N(0, nu^2)`.
    pub nu: f64,
    /// Comparisons per pair; 0 keeps the exact probabilities instead of
    /// sampling.
    pub k: usize,
    /// Number of responses in catalog mode.
    pub incumbents: usize,
    /// Rating scale for catalog scores: integers `1..=rating_levels`,
    /// normalized by the top level.
    pub rating_levels: usize,
    pub prompt: String,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            mode: SimulateMode::Btl,
            n: 15,
            nu: 2.0,
            k: 0,
            incumbents: 30,
            rating_levels: 10,
            prompt: "Summarize the incident report and recommend next steps.".into(),
        }
    }
}

/// Corruption family applied by `corrupt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptMode {
    /// Delete a `dp` fraction of pairs, then replace an `ap` fraction of
    /// the remaining observed pairs with uniform draws.
    #[default]
    Probability,
    /// Additive sparse corruption in link space on a fully observed matrix.
    Logit,
    /// Append adversarial responses that manipulate their own comparisons.
    Inject,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct CorruptConfig {
    pub input: String,
    pub mode: CorruptMode,
    /// Deletion probability per pair.
    pub dp: f64,
    /// Corruption probability per observed pair (probability mode).
    pub ap: f64,
    /// Replacement value range in probability mode; defaults to the
    /// preference band reachable by unit-interval scores.
    pub value_lo: f64,
    pub value_hi: f64,
    /// Expected corrupted entries per row in logit mode; the per-pair
    /// density is `d / n`.
    pub d: f64,
    /// Per-item degree cap in logit mode; 0 selects the independent
    /// density model instead.
    pub max_degree: usize,
    /// Magnitude range of link-space corruptions.
    pub mag_lo: f64,
    pub mag_hi: f64,
    /// Catalog to extend with the injected response texts; empty skips
    /// catalog output (inject mode).
    pub catalog: String,
    pub k_injected: usize,
    pub s1_lo: f64,
    pub s1_hi: f64,
    pub p1: f64,
    pub s2_lo: f64,
    pub s2_hi: f64,
    pub p2: f64,
    pub p3: f64,
}

impl Default for CorruptConfig {
    fn default() -> Self {
        CorruptConfig {
            input: "truth_matrix.csv".into(),
            mode: CorruptMode::Probability,
            dp: 0.0,
            ap: 0.0,
            value_lo: AUGMENT_LOWER,
            value_hi: AUGMENT_UPPER,
            d: 0.0,
            max_degree: 0,
            mag_lo: 5.0,
            mag_hi: 10.0,
            catalog: "catalog.jsonl".into(),
            k_injected: 5,
            s1_lo: 0.7,
            s1_hi: AUGMENT_UPPER,
            p1: 0.45,
            s2_lo: 0.5,
            s2_hi: 0.55,
            p2: 0.30,
            p3: 0.35,
        }
    }
}

/// Which recovery pipeline `recover` and `experiment` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineChoice {
    /// Corruption repair on fully observed data.
    Roratron,
    /// Completion of partially observed data.
    Coratron,
    /// Completion followed by corruption repair.
    #[default]
    Curatron,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct RecoverConfig {
    pub input: String,
    pub pipeline: PipelineChoice,
    pub link: LinkId,
    /// Clamp width for the link transform; 0 selects the default.
    pub clamp: f64,
    /// Number of augmentation rows; 0 disables augmentation.
    pub augment_k: usize,
    pub augment_u: f64,
    pub augment_l: f64,
    pub target_rank: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        RecoverConfig {
            input: "corrupted_matrix.csv".into(),
            pipeline: PipelineChoice::Curatron,
            link: LinkId::Logit,
            clamp: 0.0,
            augment_k: 0,
            augment_u: AUGMENT_UPPER,
            augment_l: AUGMENT_LOWER,
            target_rank: 2,
            max_iters: 2500,
            tol: 1e-11,
        }
    }
}

/// Ranking procedure run by `rank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    #[default]
    Copeland,
    Borda,
    RankCentrality,
    Mle,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct RankConfig {
    pub input: String,
    pub method: RankMethod,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig { input: "recovered_matrix.csv".into(), method: RankMethod::Copeland }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub truth: String,
    pub candidate: String,
    /// Optional ranking file; empty skips the ranking distance.
    pub ranking: String,
    /// Optional ground-truth corruption file; with `report`, enables
    /// support precision and recall.
    pub corruption: String,
    /// Optional recovery report carrying the detected support.
    pub report: String,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            truth: "truth_matrix.csv".into(),
            candidate: "recovered_matrix.csv".into(),
            ranking: String::new(),
            corruption: String::new(),
            report: String::new(),
        }
    }
}

/// Distribution of the per-run ground-truth scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightModel {
    /// Scores uniform on `[0,1]`, the range of judge-assigned ratings.
    #[default]
    Uniform,
    /// Scores from `N(0, nu^2)`.
    Normal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub weights: WeightModel,
    /// Score spread under the normal weight model.
    pub nu: f64,
    pub dp_values: Vec<f64>,
    pub ap_values: Vec<f64>,
    pub runs: usize,
    pub pipeline: PipelineChoice,
    /// Replacement value range for the probability corruption.
    pub value_lo: f64,
    pub value_hi: f64,
    pub augment_k: usize,
    pub augment_u: f64,
    pub augment_l: f64,
    pub target_rank: usize,
    pub max_iters: usize,
    pub tol: f64,
}

/// `0, 0.05, ..., 0.5`, the default sweep for both grid axes.
fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 20.0).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 15,
            weights: WeightModel::Uniform,
            nu: 2.0,
            dp_values: default_grid(),
            ap_values: default_grid(),
            runs: 5,
            pipeline: PipelineChoice::Curatron,
            value_lo: AUGMENT_LOWER,
            value_hi: AUGMENT_UPPER,
            augment_k: 0,
            augment_u: AUGMENT_UPPER,
            augment_l: AUGMENT_LOWER,
            target_rank: 2,
            max_iters: 2500,
            tol: 1e-11,
        }
    }
}

/// Which parameter `baselines` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Vary the corruption degree at fixed score spread.
    #[default]
    D,
    /// Vary the score spread at fixed corruption degree.
    Nu,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct BaselinesConfig {
    pub n: usize,
    pub nu: f64,
    pub sweep: SweepKind,
    /// Expected corrupted entries per row at each sweep point.
    pub d_values: Vec<f64>,
    pub nu_values: Vec<f64>,
    /// Fixed corruption degree for the `nu` sweep.
    pub d: f64,
    pub runs: usize,
    pub mag_lo: f64,
    pub mag_hi: f64,
}

impl Default for BaselinesConfig {
    fn default() -> Self {
        BaselinesConfig {
            n: 200,
            nu: 2.0,
            sweep: SweepKind::D,
            d_values: vec![10.0, 40.0, 70.0, 100.0],
            nu_values: vec![0.5, 1.0, 2.0, 3.0],
            d: 100.0,
            runs: 5,
            mag_lo: 5.0,
            mag_hi: 10.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ExportConfig {
    pub catalog: String,
    pub matrix: String,
    /// Optional ranking file; empty ranks the matrix by Copeland count.
    pub ranking: String,
    pub strategy: SamplingStrategy,
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig {
            catalog: "catalog_injected.jsonl".into(),
            matrix: "recovered_matrix.csv".into(),
            ranking: String::new(),
            strategy: SamplingStrategy::TopGroups,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct HealthCheckConfig {
    pub input: String,
    pub link: LinkId,
    pub clamp: f64,
    pub target_rank: usize,
    pub tau_rel: f64,
}

impl Default for HealthCheckConfig {
    fn default() -> Self {
        HealthCheckConfig {
            input: "corrupted_matrix.csv".into(),
            link: LinkId::Logit,
            clamp: 1e-6,
            target_rank: 2,
            tau_rel: 1e-3,
        }
    }
}
