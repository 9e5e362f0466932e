//! The NBMF solver.
//!
//! Binary data `Y` is modeled as `y[m,n] ~ Bernoulli([W H][m,n])` where each
//! row of `W` lies on the probability simplex and every entry of `H` lies in
//! [0, 1] with a Beta(alpha, beta) prior. Factors are estimated by MAP with
//! alternating majorization-minimization steps: first H, then W, each of
//! which never increases the objective.

mod factors;
mod fit;
pub mod io;
mod prior;
mod updates;

pub use factors::{init_factors, prior_mode, reconstruct, FactorPair, ROW_SUM_TOL};
pub use fit::{
    fit, fit_em, fit_with_init, fit_with_observer, EmConfig, FitConfig, FitReport, Progress,
    DEFAULT_EPSILON, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use prior::BetaPrior;
pub use updates::{
    h_update_terms, objective, update_h, update_w, w_update_unclamped, Observed,
};
