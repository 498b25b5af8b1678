//! `corrupt`: applies deletion, probability replacement, link-space
//! corruption, or response injection to a stored matrix.

use std::path::Path;

use serde::Serialize;

use curatron::adversary::{
    delete_entries, inject_responses, probability_corruption, random_logit_corruption,
    bounded_degree_logit_corruption, InjectionScenario, SparseCorruption,
};
use curatron::dataio::{self, ResponseCatalog, ResponseEntry};
use curatron::model::{inverse_link, link_transform, LinkFunction, PreferenceMatrix};
use curatron::rng::derive_rng;

use super::{load_matrix, resolve, write_text, CATALOG_INJECTED, CORRUPTED_MATRIX, CORRUPTION, INJECTED};
use crate::config::{CorruptConfig, CorruptMode};
use crate::CliError;

pub const INJECTED_VERSION: &str = "curatron injected v1";

/// Random stream tag for corruption draws.
const TAG_CORRUPT: u64 = 2;

/// What `corrupt` produced, for in-process callers.
#[derive(Debug, Clone)]
pub struct CorruptOutput {
    pub matrix: PreferenceMatrix,
    /// Ground-truth corruption record, absent in inject
    /// mode and for identity runs.
    pub corruption: Option<SparseCorruption>,
    /// Indices of injected responses, inject mode only.
    pub injected: Vec<usize>,
    pub catalog: Option<ResponseCatalog>,
}

#[derive(Serialize)]
struct InjectedDocument {
    version: String,
    indices: Vec<usize>,
}

pub fn run(cfg: &CorruptConfig, seed: u64, out_dir: &Path) -> Result<CorruptOutput, CliError> {
    let input = load_matrix(out_dir, &cfg.input)?;
    let mut rng = derive_rng(seed, &[TAG_CORRUPT]);
    match cfg.mode {
        CorruptMode::Probability => {
            let deleted = delete_entries(&input, cfg.dp, &mut rng)?;
            let (matrix, record) =
                probability_corruption(&deleted, cfg.ap, (cfg.value_lo, cfg.value_hi), &mut rng)?;
            dataio::save_matrix(&resolve(out_dir, CORRUPTED_MATRIX), &matrix)?;
            dataio::save_corruption(&resolve(out_dir, CORRUPTION), &record)?;
            println!(
                "corrupt: dp={}, ap={}, {} pairs replaced",
                cfg.dp,
                cfg.ap,
                record.triples.len()
            );
            Ok(CorruptOutput {
                matrix,
                corruption: Some(record),
                injected: Vec::new(),
                catalog: None,
            })
        }
        CorruptMode::Logit => {
            if cfg.dp != 0.0 {
                return Err(CliError::Validation(
                    "logit corruption operates on fully observed matrices; set dp = 0 and use probability mode for deletions".into(),
                ));
            }
            if !input.fully_observed() {
                return Err(CliError::Validation(
                    "logit corruption requires a fully observed input matrix".into(),
                ));
            }
            let n = input.n();
            let record = if cfg.max_degree > 0 {
                bounded_degree_logit_corruption(
                    n,
                    cfg.max_degree,
                    (cfg.mag_lo, cfg.mag_hi),
                    &mut rng,
                )?
            } else {
                let density = cfg.d / n as f64;
                random_logit_corruption(n, density, (cfg.mag_lo, cfg.mag_hi), &mut rng)?
            };
            let link = LinkFunction::logit();
            let m = link_transform(&input, &link, 1e-6)?;
            let matrix = inverse_link(&record.apply_to_logit(&m)?, &link)?;
            dataio::save_matrix(&resolve(out_dir, CORRUPTED_MATRIX), &matrix)?;
            dataio::save_corruption(&resolve(out_dir, CORRUPTION), &record)?;
            println!("corrupt: {} link-space corruptions", record.triples.len());
            Ok(CorruptOutput {
                matrix,
                corruption: Some(record),
                injected: Vec::new(),
                catalog: None,
            })
        }
        CorruptMode::Inject => {
            if cfg.dp != 0.0 || cfg.ap != 0.0 {
                return Err(CliError::Validation(
                    "inject mode ignores dp and ap; set both to 0".into(),
                ));
            }
            let scenario = InjectionScenario {
                k_injected: cfg.k_injected,
                s1_range: (cfg.s1_lo, cfg.s1_hi),
                p1: cfg.p1,
                s2_range: (cfg.s2_lo, cfg.s2_hi),
                p2: cfg.p2,
                p3: cfg.p3,
            };
            let (matrix, injected) = inject_responses(&input, &scenario, &mut rng)?;
            dataio::save_matrix(&resolve(out_dir, CORRUPTED_MATRIX), &matrix)?;
            let doc = InjectedDocument { version: INJECTED_VERSION.into(), indices: injected.clone() };
            let json = serde_json::to_string(&doc).expect("injected document serializes");
            write_text(&resolve(out_dir, INJECTED), &format!("{json}\n"))?;

            let catalog = if cfg.catalog.is_empty() {
                None
            } else {
                let path = resolve(out_dir, &cfg.catalog);
                let base = dataio::load_catalog(&path)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                if base.len() != input.n() {
                    return Err(CliError::Validation(format!(
                        "catalog has {} responses but the matrix has {}",
                        base.len(),
                        input.n()
                    )));
                }
                let mut responses = base.responses.clone();
                for (m, _) in injected.iter().enumerate() {
                    responses.push(ResponseEntry {
                        id: format!("inj{m:02}"),
                        text: dismissive_text(m),
                        score: None,
                    });
                }
                let extended = ResponseCatalog::new(base.prompt.clone(), responses)?;
                dataio::save_catalog(&resolve(out_dir, CATALOG_INJECTED), &extended)?;
                Some(extended)
            };
            println!("corrupt: injected {} responses", injected.len());
            Ok(CorruptOutput { matrix, corruption: None, injected, catalog })
        }
    }
}

/// Deterministic dismissive texts for injected responses.
fn dismissive_text(m: usize) -> String {
    const PHRASES: [&str; 5] = [
        "I can't help with that.",
        "This request cannot be completed.",
        "No useful answer is available.",
        "That is outside what I will answer.",
        "Try asking something else.",
    ];
    if m < PHRASES.len() {
        PHRASES[m].to_string()
    } else {
        format!("{} (variant {m})", PHRASES[m % PHRASES.len()])
    }
}
