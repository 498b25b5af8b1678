//! `export`: converts a ranked response catalog into chosen/rejected
//! training pairs.

use std::path::Path;

use curatron::dataio::{
    load_catalog, load_ranking, sample_pairs, save_export, PairwiseExportRecord, SamplingStrategy,
};
use curatron::ranking::copeland;
use curatron::rng::derive_rng;

use super::{load_matrix, resolve, EXPORT};
use crate::config::ExportConfig;
use crate::CliError;

/// Random stream tag for pair sampling.
const TAG_EXPORT: u64 = 4;

fn strategy_name(strategy: SamplingStrategy) -> &'static str {
    match strategy {
        SamplingStrategy::TopGroups => "top_groups",
        SamplingStrategy::AllPairs => "all_pairs",
        SamplingStrategy::BestOfN => "best_of_n",
        SamplingStrategy::WorstOfN => "worst_of_n",
    }
}

pub fn run(
    cfg: &ExportConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PairwiseExportRecord>, CliError> {
    let catalog = load_catalog(&resolve(out_dir, &cfg.catalog))
        .map_err(|e| CliError::Validation(format!("catalog {}: {e}", cfg.catalog)))?;
    let matrix = load_matrix(out_dir, &cfg.matrix)?;
    let ranking = if cfg.ranking.is_empty() {
        copeland(&matrix)?
    } else {
        load_ranking(&resolve(out_dir, &cfg.ranking))
            .map_err(|e| CliError::Validation(format!("ranking {}: {e}", cfg.ranking)))?
    };

    let mut rng = derive_rng(seed, &[TAG_EXPORT]);
    let records = sample_pairs(&matrix, &ranking, &catalog, cfg.strategy, &mut rng)?;
    save_export(&resolve(out_dir, EXPORT), &records)?;
    println!(
        "export: {} records via {} strategy",
        records.len(),
        strategy_name(cfg.strategy)
    );
    Ok(records)
}
