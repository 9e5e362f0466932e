use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::factors::{init_factors, FactorPair};
use super::prior::BetaPrior;
use super::updates::{objective_unchecked, update_h_observed, update_w_observed, Observed};
use crate::binmat::{BinaryMatrix, ObservationMask};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 2000;
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Solver settings for one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub rank: usize,
    pub prior: BetaPrior,
    /// Stop once the relative change of the objective between sweeps drops
    /// below this value.
    pub tol: f64,
    /// Cap on the number of (H, W) sweeps.
    pub max_iter: usize,
    /// H is kept inside `[epsilon, 1 - epsilon]`; W entries are floored at it.
    pub epsilon: f64,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(rank: usize, prior: BetaPrior) -> Self {
        FitConfig {
            rank,
            prior,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1e-3) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1e-3), got {}",
                self.epsilon
            )));
        }
        // re-run the prior checks in case the config was deserialized around them
        BetaPrior::new(self.prior.alpha(), self.prior.beta())?;
        Ok(())
    }
}

/// Settings for the prior-free EM baseline: a [`FitConfig`] without a prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub rank: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl EmConfig {
    pub fn new(rank: usize) -> Self {
        FitConfig::new(rank, BetaPrior::UNIFORM).into()
    }

    pub fn with_prior(self, prior: BetaPrior) -> FitConfig {
        FitConfig {
            rank: self.rank,
            prior,
            tol: self.tol,
            max_iter: self.max_iter,
            epsilon: self.epsilon,
            seed: self.seed,
        }
    }
}

impl From<FitConfig> for EmConfig {
    fn from(c: FitConfig) -> Self {
        EmConfig {
            rank: c.rank,
            tol: c.tol,
            max_iter: c.max_iter,
            epsilon: c.epsilon,
            seed: c.seed,
        }
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Objective at initialization followed by its value after each sweep.
    pub objective_trace: Vec<f64>,
    pub n_iter: usize,
    pub converged: bool,
    /// Seconds spent in the sweep loop.
    pub wall_time: f64,
    pub seed: u64,
}

impl FitReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// State handed to a fit observer after each sweep.
pub struct Progress<'a> {
    pub iteration: usize,
    pub objective: f64,
    pub factors: &'a FactorPair,
}

/// Fits the model on the observed cells from a seeded random start.
pub fn fit(
    y: &BinaryMatrix,
    mask: &ObservationMask,
    config: &FitConfig,
) -> Result<(FactorPair, FitReport)> {
    fit_observed(y, mask, config, None, &mut |_| {})
}

/// The prior-free EM algorithm, i.e. [`fit`] with the uniform prior.
pub fn fit_em(
    y: &BinaryMatrix,
    mask: &ObservationMask,
    config: &EmConfig,
) -> Result<(FactorPair, FitReport)> {
    fit(y, mask, &config.with_prior(BetaPrior::UNIFORM))
}

/// Same as [`fit`], starting from the given factors instead of a seeded
/// draw. `config.seed` is only recorded in the report.
pub fn fit_with_init(
    y: &BinaryMatrix,
    mask: &ObservationMask,
    config: &FitConfig,
    init: FactorPair,
) -> Result<(FactorPair, FitReport)> {
    fit_observed(y, mask, config, Some(init), &mut |_| {})
}

/// [`fit`] with a callback run after every sweep.
pub fn fit_with_observer(
    y: &BinaryMatrix,
    mask: &ObservationMask,
    config: &FitConfig,
    init: Option<FactorPair>,
    observer: &mut dyn FnMut(&Progress<'_>),
) -> Result<(FactorPair, FitReport)> {
    fit_observed(y, mask, config, init, observer)
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    if prev == cur {
        0.0
    } else {
        (prev - cur).abs() / prev.abs()
    }
}

fn fit_observed(
    y: &BinaryMatrix,
    mask: &ObservationMask,
    config: &FitConfig,
    init: Option<FactorPair>,
    observer: &mut dyn FnMut(&Progress<'_>),
) -> Result<(FactorPair, FitReport)> {
    config.validate()?;
    if mask.is_empty() {
        return Err(Error::Config("cannot fit on an empty mask".into()));
    }
    let obs = Observed::new(y, mask)?;
    let (n_rows, n_cols) = y.shape();
    let mut factors = match init {
        Some(f) => {
            if f.rank() != config.rank {
                return Err(Error::Dimension(format!(
                    "initial factors have rank {}, config asks for {}",
                    f.rank(),
                    config.rank
                )));
            }
            f
        }
        None => init_factors(n_rows, n_cols, config.rank, config.epsilon, config.seed)?,
    };
    obs.check_factors(&factors)?;

    let start = Instant::now();
    let initial = objective_unchecked(&obs, &factors, &config.prior);
    if !initial.is_finite() {
        return Err(Error::NumericalFailure {
            iteration: 0,
            value: initial,
        });
    }
    let mut trace = vec![initial];
    let mut converged = false;
    for iteration in 1..=config.max_iter {
        factors.h = update_h_observed(&obs, &factors, &config.prior, config.epsilon);
        factors.w = update_w_observed(&obs, &factors, config.epsilon);
        let value = objective_unchecked(&obs, &factors, &config.prior);
        if !value.is_finite() {
            return Err(Error::NumericalFailure { iteration, value });
        }
        let prev = *trace.last().unwrap();
        trace.push(value);
        observer(&Progress {
            iteration,
            objective: value,
            factors: &factors,
        });
        if relative_change(prev, value) < config.tol {
            converged = true;
            break;
        }
    }
    let report = FitReport {
        n_iter: trace.len() - 1,
        objective_trace: trace,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        seed: config.seed,
    };
    Ok((factors, report))
}
