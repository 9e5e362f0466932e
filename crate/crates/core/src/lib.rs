//! Nonnegative binary matrix factorization.
//!
//! A binary matrix `Y` is factorized as `Y ~ Bernoulli(W H)`, with the rows
//! of `W` on the probability simplex and a Beta prior on the entries of `H`.
//! The factors are estimated by maximum a posteriori with a
//! majorization-minimization algorithm whose updates are closed-form and
//! monotone. Training can be restricted to a subset of cells, which is what
//! the matrix-completion protocol in [`tune`] relies on.
//!
//! Modules:
//! * [`binmat`]: binary data, observation masks and seeded splits.
//! * [`nbmf`]: objective, updates and the fit loop.
//! * [`eval`]: held-out perplexity.
//! * [`tune`]: grid search and multi-restart test evaluation.

pub mod binmat;
pub mod error;
pub mod eval;
pub mod nbmf;
pub mod rng;
pub mod synth;
pub mod tune;

pub use binmat::{
    density, load_coordinate_file, split_observations, BinaryMatrix, ObservationMask, Split,
    SplitSpec,
};
pub use error::{Error, Result};
pub use eval::{completion_report, perplexity, predict_from_factors, CompletionReport, PredictionGrid};
pub use nbmf::{
    fit, fit_em, init_factors, objective, reconstruct, update_h, update_w, BetaPrior, EmConfig,
    FactorPair, FitConfig, FitReport,
};
pub use tune::{export_heatmap, grid_search, test_evaluation, GridResult, GridSpec};
