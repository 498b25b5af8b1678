//! Detection and repair of incomplete and adversarially corrupted pairwise
//! preference data.
//!
//! Pairwise preference data over `n` items is held in an n×n matrix `P` with
//! `P[i][j]` the probability that item `i` beats item `j`. When the data
//! follows a Bradley-Terry-Luce (BTL) model, the logit transform `ψ(P)` is an
//! exactly rank-2 skew-symmetric matrix. This crate exploits that structure to
//!
//! * detect adversarial corruption (sparse deviations from low rank),
//! * repair corrupted entries via robust PCA by alternating projections,
//! * fill unobserved entries via OptSpace-style matrix completion,
//! * rank items with Copeland counting and several baselines, and
//! * export curated data as chosen/rejected comparison pairs.
//!
//! The three recovery pipelines differ in which repair steps they run:
//! [`recovery::roratron_matrix`] handles fully observed corrupted data
//! (robust PCA only), [`recovery::coratron_matrix`] handles partially
//! observed clean data (completion only), and [`recovery::curatron_matrix`]
//! handles both (completion then robust PCA).
//!
//! # Example
//!
//! ```
//! use curatron::model::{btl_preference, BtlParams};
//! use curatron::recovery::{roratron_matrix, PipelineParams};
//!
//! let params = BtlParams::new(vec![0.0, 0.4, 0.9, 1.3]).unwrap();
//! let p = btl_preference(&params).unwrap();
//! let outcome = roratron_matrix(&p, &PipelineParams::default()).unwrap();
//! // Clean input: the ranking sorts items by ascending BTL score
//! // (the e^{-w} convention means lower scores win).
//! assert_eq!(outcome.ranking.order, vec![0, 1, 2, 3]);
//! ```

pub mod adversary;
pub mod dataio;
mod error;
pub mod metrics;
pub mod model;
pub mod ranking;
pub mod recovery;
pub mod rng;

pub use error::{Error, Result};
pub use model::{BtlParams, ComparisonDataset, LinkFunction, LogitMatrix, PreferenceMatrix};
pub use ranking::Ranking;
pub use recovery::{RecoveryReport, SolverParams};
