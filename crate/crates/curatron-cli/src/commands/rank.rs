//! `rank`: ranks a stored preference matrix with a chosen procedure.

use std::path::Path;

use curatron::dataio;
use curatron::ranking::{borda_from_matrix, btl_mle, copeland, rank_centrality, Ranking};

use super::{load_matrix, resolve, RANKING};
use crate::config::{RankConfig, RankMethod};
use crate::CliError;

pub fn run(cfg: &RankConfig, out_dir: &Path) -> Result<Ranking, CliError> {
    let matrix = load_matrix(out_dir, &cfg.input)?;
    let (ranking, note) = match cfg.method {
        RankMethod::Copeland => (copeland(&matrix)?, None),
        RankMethod::Borda => (borda_from_matrix(&matrix)?, None),
        RankMethod::RankCentrality => {
            let outcome = rank_centrality(&matrix)?;
            let note = outcome.smoothed.then(|| "walk needed smoothing".to_string());
            (outcome.ranking, note)
        }
        RankMethod::Mle => {
            let outcome = btl_mle(&matrix)?;
            let note = (!outcome.converged).then(|| {
                format!("likelihood gradient still above tolerance after {} iterations", outcome.iterations)
            });
            if !outcome.converged {
                dataio::save_ranking(&resolve(out_dir, RANKING), &outcome.ranking)?;
                return Err(CliError::NonConvergence(note.unwrap()));
            }
            (outcome.ranking, None)
        }
    };
    dataio::save_ranking(&resolve(out_dir, RANKING), &ranking)?;
    match note {
        Some(n) => println!("rank: wrote {RANKING} ({n})"),
        None => println!("rank: wrote {RANKING} (top item {})", ranking.order[0]),
    }
    Ok(ranking)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commands::simulate;
    use crate::config::SimulateConfig;
    use tempfile::tempdir;

    fn instance(dir: &Path) {
        simulate::run(&SimulateConfig { n: 8, ..SimulateConfig::default() }, 3, dir).unwrap();
    }

    #[test]
    fn all_methods_agree_on_a_clean_instance() {
        let dir = tempdir().unwrap();
        instance(dir.path());
        let mut orders = Vec::new();
        for method in [
            RankMethod::Copeland,
            RankMethod::Borda,
            RankMethod::RankCentrality,
            RankMethod::Mle,
        ] {
            let cfg = RankConfig { input: super::super::TRUTH_MATRIX.into(), method };
            orders.push(run(&cfg, dir.path()).unwrap().order);
        }
        assert!(orders.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn ranking_file_round_trips() {
        let dir = tempdir().unwrap();
        instance(dir.path());
        let cfg = RankConfig { input: super::super::TRUTH_MATRIX.into(), ..RankConfig::default() };
        let ranking = run(&cfg, dir.path()).unwrap();
        let loaded = dataio::load_ranking(&dir.path().join(RANKING)).unwrap();
        assert_eq!(loaded, ranking);
    }
}
