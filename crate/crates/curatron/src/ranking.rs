//! Ranking procedures over preference data: Copeland counting plus the
//! Borda, Rank Centrality, and BTL maximum-likelihood baselines.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sigmoid, BtlParams, ComparisonDataset, PreferenceMatrix};

/// Copeland sorting of a matrix whose strict pairwise order admits a total
/// order is within a factor 5 of the optimal disagreement count.
pub const COPELAND_APPROXIMATION_FACTOR: f64 = 5.0;

/// A ranking of n items from most to least preferred.
///
/// `order[0]` is the top item. `scores[i]` is the per-item statistic that
/// produced the ranking (Copeland count, win fraction, stationary mass, or
/// a BTL score), indexed by item, not by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
}

impl Ranking {
    pub fn new(order: Vec<usize>, scores: Vec<f64>) -> Result<Self> {
        let r = Ranking { order, scores };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.order.len();
        if n == 0 {
            return Err(Error::invalid("ranking must not be empty"));
        }
        if self.scores.len() != n {
            return Err(Error::invalid("scores length must match order length"));
        }
        let mut seen = vec![false; n];
        for &i in &self.order {
            if i >= n || seen[i] {
                return Err(Error::invalid("order must be a permutation of 0..n"));
            }
            seen[i] = true;
        }
        if self.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("scores must be finite"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    /// Position of each item in the order; `positions()[i] = 0` means item
    /// `i` is ranked first.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (rank, &item) in self.order.iter().enumerate() {
            pos[item] = rank;
        }
        pos
    }

    /// The first `k` items in preference order.
    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }
}

/// Sorts items by score descending, ties broken by ascending index.
fn order_by_scores_desc(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

fn require_fully_observed(p: &PreferenceMatrix, what: &str) -> Result<()> {
    if !p.fully_observed() {
        return Err(Error::invalid(format!(
            "{what} requires a fully observed matrix; complete it first"
        )));
    }
    Ok(())
}

/// Copeland ranking: `v_i = #{j : P_ij > 1/2}`, sorted descending with
/// ascending-index tie-break.
pub fn copeland(p: &PreferenceMatrix) -> Result<Ranking> {
    require_fully_observed(p, "copeland")?;
    let n = p.n();
    let scores: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| p.get(i, j) > 0.5).count() as f64)
        .collect();
    Ranking::new(order_by_scores_desc(&scores), scores)
}

/// Borda ranking and the list of items that never appeared in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BordaOutcome {
    pub ranking: Ranking,
    /// Items with no comparisons; they receive score 0.
    pub isolated: Vec<usize>,
}

/// Borda count: each item is scored by the fraction of its comparisons won.
pub fn borda(data: &ComparisonDataset) -> Result<BordaOutcome> {
    data.validate()?;
    let n = data.n;
    let mut wins = vec![0u64; n];
    let mut total = vec![0u64; n];
    for r in &data.records {
        for &y in &r.outcomes {
            total[r.i] += 1;
            total[r.j] += 1;
            if y == 1 {
                wins[r.i] += 1;
            } else {
                wins[r.j] += 1;
            }
        }
    }
    let isolated: Vec<usize> = (0..n).filter(|&i| total[i] == 0).collect();
    let scores: Vec<f64> = (0..n)
        .map(|i| {
            if total[i] == 0 {
                0.0
            } else {
                wins[i] as f64 / total[i] as f64
            }
        })
        .collect();
    let ranking = Ranking::new(order_by_scores_desc(&scores), scores)?;
    Ok(BordaOutcome { ranking, isolated })
}

/// Borda on a fully observed matrix: score = mean win probability against
/// the other items. Matches [`borda`] in the infinite-sample limit.
pub fn borda_from_matrix(p: &PreferenceMatrix) -> Result<Ranking> {
    require_fully_observed(p, "borda")?;
    let n = p.n();
    let scores: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| p.get(i, j)).sum::<f64>() / (n - 1) as f64)
        .collect();
    Ranking::new(order_by_scores_desc(&scores), scores)
}

/// Rank Centrality result; `smoothed` reports whether the walk needed
/// additive regularization to become irreducible.
#[derive(Debug, Clone, PartialEq)]
pub struct RankCentralityOutcome {
    pub ranking: Ranking,
    pub smoothed: bool,
}

const RC_TOL: f64 = 1e-12;
const RC_SMOOTHING: f64 = 1e-8;
const RC_MAX_ITERS: usize = 500_000;

/// Rank Centrality: ranks by the stationary distribution of the random
/// walk that moves from `i` to `j` with probability `P_ji / n`.
///
/// A reducible walk gets additive smoothing of `1e-8` on the off-diagonal
/// and is flagged. The stationary vector is found by power iteration to an
/// l1 tolerance of `1e-12`; it sums to 1 by renormalization.
pub fn rank_centrality(p_hat: &PreferenceMatrix) -> Result<RankCentralityOutcome> {
    require_fully_observed(p_hat, "rank_centrality")?;
    let n = p_hat.n();
    let nf = n as f64;
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                t[(i, j)] = p_hat.get(j, i) / nf;
            }
        }
    }
    let smoothed = !strongly_connected(&t);
    if smoothed {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    t[(i, j)] += RC_SMOOTHING;
                }
            }
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| t[(i, j)]).sum();
        t[(i, i)] = 1.0 - off;
    }

    let mut pi = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut converged = false;
    for _ in 0..RC_MAX_ITERS {
        for (j, slot) in next.iter_mut().enumerate() {
            *slot = (0..n).map(|i| pi[i] * t[(i, j)]).sum();
        }
        let total: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= total;
        }
        let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        pi.copy_from_slice(&next);
        if diff <= RC_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::invalid("rank_centrality power iteration did not converge"));
    }
    let ranking = Ranking::new(order_by_scores_desc(&pi), pi)?;
    Ok(RankCentralityOutcome { ranking, smoothed })
}

/// Strong connectivity of the directed graph with an edge `i -> j` wherever
/// the transition mass is positive.
fn strongly_connected(t: &DMatrix<f64>) -> bool {
    let n = t.nrows();
    let reach = |transpose: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if transpose { t[(j, i)] } else { t[(i, j)] };
                if i != j && w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    reach(false) && reach(true)
}

/// BTL maximum-likelihood result. `converged` is false when the iteration
/// cap was reached with the gradient still above tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct MleOutcome {
    pub params: BtlParams,
    pub ranking: Ranking,
    pub converged: bool,
    pub iterations: usize,
}

const MLE_GRAD_TOL: f64 = 1e-9;
const MLE_MAX_ITERS: usize = 10_000;

/// Log-likelihood `sum_{i<j} P_ij (w_j - w_i) - log(1 + exp(w_j - w_i))`.
pub fn btl_log_likelihood(p_hat: &PreferenceMatrix, w: &[f64]) -> f64 {
    let n = p_hat.n();
    let mut obj = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = w[j] - w[i];
            obj += p_hat.get(i, j) * d - softplus(d);
        }
    }
    obj
}

/// Gradient of [`btl_log_likelihood`] with respect to `w`.
pub fn btl_log_likelihood_gradient(p_hat: &PreferenceMatrix, w: &[f64]) -> Vec<f64> {
    let n = p_hat.n();
    let mut grad = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let resid = p_hat.get(i, j) - sigmoid(w[j] - w[i]);
            grad[j] += resid;
            grad[i] -= resid;
        }
    }
    grad
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// BTL maximum likelihood by gradient ascent with step halving.
///
/// The objective is concave; `w` is centered to sum 0 for identifiability.
/// Converges when the gradient infinity norm drops to `1e-9`. The ranking
/// sorts `w` ascending: lower scores win.
pub fn btl_mle(p_hat: &PreferenceMatrix) -> Result<MleOutcome> {
    require_fully_observed(p_hat, "btl_mle")?;
    let n = p_hat.n();
    let mut w = vec![0.0; n];
    let mut step = 4.0 / n as f64;
    let mut obj = btl_log_likelihood(p_hat, &w);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..MLE_MAX_ITERS {
        iterations = it + 1;
        let grad = btl_log_likelihood_gradient(p_hat, &w);
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax <= MLE_GRAD_TOL {
            converged = true;
            iterations = it;
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand: Vec<f64> = w.iter().zip(&grad).map(|(x, g)| x + step * g).collect();
            center(&mut cand);
            let cand_obj = btl_log_likelihood(p_hat, &cand);
            // Near the optimum the true improvement sinks below f64
            // resolution of the objective; only a visible decrease counts
            // as divergence, otherwise halving would stall the ascent
            // while the gradient is still far from tolerance.
            if cand_obj >= obj - 1e-12 * (1.0 + obj.abs()) {
                w = cand;
                obj = cand_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // Step underflowed; the objective cannot improve further.
            break;
        }
    }
    if !converged {
        let grad = btl_log_likelihood_gradient(p_hat, &w);
        converged = grad.iter().all(|g| g.abs() <= MLE_GRAD_TOL);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
    let ranking = Ranking::new(idx, w.clone())?;
    let params = BtlParams::new(w)?;
    Ok(MleOutcome { params, ranking, converged, iterations })
}

fn center(w: &mut [f64]) {
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    for x in w.iter_mut() {
        *x -= mean;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        btl_preference, empirical_matrix, sample_comparisons, ComparisonRecord, PreferenceMatrix,
    };
    use crate::rng::derive_rng;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn matrix_from_upper(n: usize, upper: &[((usize, usize), f64)]) -> PreferenceMatrix {
        let mut entries = DMatrix::from_element(n, n, 0.5);
        for &((i, j), p) in upper {
            entries[(i, j)] = p;
            entries[(j, i)] = 1.0 - p;
        }
        PreferenceMatrix::from_entries(entries).unwrap()
    }

    fn btl(w: &[f64]) -> PreferenceMatrix {
        btl_preference(&BtlParams::new(w.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn copeland_counts_majorities() {
        let p = matrix_from_upper(3, &[((0, 1), 0.7), ((0, 2), 0.6), ((1, 2), 0.8)]);
        let r = copeland(&p).unwrap();
        assert_eq!(r.scores, vec![2.0, 1.0, 0.0]);
        assert_eq!(r.order, vec![0, 1, 2]);
    }

    #[test]
    fn copeland_all_ties_identity_order() {
        let p = matrix_from_upper(4, &[]);
        let r = copeland(&p).unwrap();
        assert_eq!(r.scores, vec![0.0; 4]);
        assert_eq!(r.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn copeland_transpose_reverses_strict_order() {
        let p = btl(&[0.0, 0.5, 1.0, 1.5, 2.0]);
        let forward = copeland(&p).unwrap();
        let pt = PreferenceMatrix::from_entries(p.entries().transpose()).unwrap();
        let backward = copeland(&pt).unwrap();
        let reversed: Vec<usize> = forward.order.iter().rev().cloned().collect();
        assert_eq!(backward.order, reversed);
    }

    #[test]
    fn copeland_rejects_masked_input() {
        let data = crate::model::ComparisonDataset::new(
            3,
            vec![ComparisonRecord { i: 0, j: 1, outcomes: vec![1] }],
        )
        .unwrap();
        let p = empirical_matrix(&data).unwrap();
        assert!(copeland(&p).is_err());
    }

    #[test]
    fn copeland_invariant_to_monotone_transform() {
        let p = btl(&[0.2, 0.9, 1.7, 2.4]);
        let base = copeland(&p).unwrap();
        // Monotone map fixing 1/2: shrink entries toward the threshold.
        let squeezed = p.entries().map(|x| 0.5 + 0.2 * (x - 0.5));
        let q = PreferenceMatrix::from_entries(squeezed).unwrap();
        assert_eq!(copeland(&q).unwrap().order, base.order);
    }

    #[test]
    fn borda_win_fractions() {
        let data = crate::model::ComparisonDataset::new(
            3,
            vec![
                ComparisonRecord { i: 0, j: 1, outcomes: vec![1, 1, 1, 0] },
                ComparisonRecord { i: 0, j: 2, outcomes: vec![1, 1] },
                ComparisonRecord { i: 1, j: 2, outcomes: vec![0, 1] },
            ],
        )
        .unwrap();
        let out = borda(&data).unwrap();
        assert!(out.isolated.is_empty());
        assert_abs_diff_eq!(out.ranking.scores[0], 5.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.ranking.scores[1], 2.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.ranking.scores[2], 1.0 / 4.0, epsilon = 1e-15);
        assert_eq!(out.ranking.order[0], 0);
    }

    #[test]
    fn borda_flags_isolated_items() {
        let data = crate::model::ComparisonDataset::new(
            3,
            vec![ComparisonRecord { i: 0, j: 1, outcomes: vec![1] }],
        )
        .unwrap();
        let out = borda(&data).unwrap();
        assert_eq!(out.isolated, vec![2]);
        assert_eq!(out.ranking.scores[2], 0.0);
    }

    #[test]
    fn borda_large_k_matches_copeland() {
        let p = btl(&[0.0, 0.4, 1.1, 1.6]);
        let data = sample_comparisons(&p, 60_000, &mut derive_rng(11, &[])).unwrap();
        let out = borda(&data).unwrap();
        assert_eq!(out.ranking.order, copeland(&p).unwrap().order);
    }

    #[test]
    fn borda_matrix_agrees_with_limit() {
        let p = btl(&[0.0, 0.4, 1.1, 1.6]);
        let r = borda_from_matrix(&p).unwrap();
        assert_eq!(r.order, copeland(&p).unwrap().order);
    }

    #[test]
    fn rank_centrality_two_state_closed_form() {
        // For n=2 the stationary distribution is (P_01, P_10) exactly.
        let p = matrix_from_upper(2, &[((0, 1), 0.731)]);
        let out = rank_centrality(&p).unwrap();
        assert!(!out.smoothed);
        assert_abs_diff_eq!(out.ranking.scores[0], 0.731, epsilon = 1e-9);
        assert_abs_diff_eq!(out.ranking.scores[1], 0.269, epsilon = 1e-9);
        assert_eq!(out.ranking.order, vec![0, 1]);
    }

    #[test]
    fn rank_centrality_uniform_matrix() {
        let p = matrix_from_upper(4, &[]);
        let out = rank_centrality(&p).unwrap();
        assert_eq!(out.ranking.order, vec![0, 1, 2, 3]);
        for &s in &out.ranking.scores {
            assert_abs_diff_eq!(s, 0.25, epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_centrality_stationary_sums_to_one() {
        let p = btl(&[0.0, 0.3, 0.9, 1.8, 2.5]);
        let out = rank_centrality(&p).unwrap();
        let total: f64 = out.ranking.scores.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert!(out.ranking.scores.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn rank_centrality_smooths_reducible_chain() {
        // Item 0 always wins, so nothing ever transitions out of state 0.
        let p = matrix_from_upper(3, &[((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 0.6)]);
        let out = rank_centrality(&p).unwrap();
        assert!(out.smoothed);
        assert_eq!(out.ranking.order[0], 0);
        let total: f64 = out.ranking.scores.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_centrality_matches_copeland_on_clean_btl() {
        let p = btl(&[0.0, 0.5, 1.0, 1.7, 2.6]);
        let out = rank_centrality(&p).unwrap();
        assert_eq!(out.ranking.order, copeland(&p).unwrap().order);
    }

    #[test]
    fn mle_recovers_generating_scores() {
        let w = [0.0, 0.4, 0.9, 1.3];
        let p = btl(&w);
        let out = btl_mle(&p).unwrap();
        assert!(out.converged, "no convergence after {} iters", out.iterations);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        for i in 0..w.len() {
            assert_abs_diff_eq!(out.params.w[i], w[i] - mean, epsilon = 1e-6);
        }
        assert_eq!(out.ranking.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn mle_two_items_logit_closed_form() {
        let p = matrix_from_upper(2, &[((0, 1), 0.7311)]);
        let out = btl_mle(&p).unwrap();
        let gap = out.params.w[1] - out.params.w[0];
        let expected = (0.7311f64 / (1.0 - 0.7311)).ln();
        assert_abs_diff_eq!(gap, expected, epsilon = 1e-6);

        // Feeding sigmoid(1) exactly recovers a unit gap.
        let p = matrix_from_upper(2, &[((0, 1), crate::model::sigmoid(1.0))]);
        let out = btl_mle(&p).unwrap();
        assert_abs_diff_eq!(out.params.w[1] - out.params.w[0], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn mle_gradient_matches_finite_differences() {
        let p = btl(&[0.1, 0.6, 1.5]);
        let w = vec![0.2, -0.3, 0.1];
        let grad = btl_log_likelihood_gradient(&p, &w);
        let h = 1e-6;
        for k in 0..3 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[k] += h;
            wm[k] -= h;
            let fd = (btl_log_likelihood(&p, &wp) - btl_log_likelihood(&p, &wm)) / (2.0 * h);
            let rel = (grad[k] - fd).abs() / grad[k].abs().max(1e-12);
            assert!(rel <= 1e-6, "coordinate {k}: analytic {} vs fd {}", grad[k], fd);
        }
    }

    #[test]
    fn mle_objective_at_optimum_dominates_truth() {
        let w = [0.0, 0.7, 1.9];
        let p = btl(&w);
        let out = btl_mle(&p).unwrap();
        let mut centered = w.to_vec();
        center(&mut centered);
        assert!(
            btl_log_likelihood(&p, &out.params.w) >= btl_log_likelihood(&p, &centered) - 1e-12
        );
    }

    #[test]
    fn all_procedures_agree_on_clean_btl() {
        let p = btl(&[0.0, 0.6, 1.1, 1.9, 2.8, 3.3]);
        let expected = vec![0, 1, 2, 3, 4, 5];
        assert_eq!(copeland(&p).unwrap().order, expected);
        assert_eq!(borda_from_matrix(&p).unwrap().order, expected);
        assert_eq!(rank_centrality(&p).unwrap().ranking.order, expected);
        assert_eq!(btl_mle(&p).unwrap().ranking.order, expected);
    }

    #[test]
    fn ranking_validation() {
        assert!(Ranking::new(vec![0, 1, 2], vec![3.0, 2.0, 1.0]).is_ok());
        assert!(Ranking::new(vec![0, 0, 2], vec![3.0, 2.0, 1.0]).is_err());
        assert!(Ranking::new(vec![0, 1], vec![1.0]).is_err());
        let r = Ranking::new(vec![2, 0, 1], vec![1.0, 0.0, 2.0]).unwrap();
        assert_eq!(r.positions(), vec![1, 2, 0]);
        assert_eq!(r.top(2), &[2, 0]);
    }
}
