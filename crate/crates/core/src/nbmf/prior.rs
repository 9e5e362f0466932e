use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Beta(alpha, beta) prior shared by every entry of H.
///
/// Both shapes must be at least 1 so that the update numerator and
/// denominator stay nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior", into = "RawPrior")]
pub struct BetaPrior {
    alpha: f64,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPrior {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawPrior> for BetaPrior {
    type Error = Error;

    fn try_from(raw: RawPrior) -> Result<Self> {
        BetaPrior::new(raw.alpha, raw.beta)
    }
}

impl From<BetaPrior> for RawPrior {
    fn from(p: BetaPrior) -> Self {
        RawPrior {
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

impl BetaPrior {
    /// The flat prior; fitting with it is the prior-free EM algorithm.
    pub const UNIFORM: BetaPrior = BetaPrior {
        alpha: 1.0,
        beta: 1.0,
    };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 1.0 && alpha.is_finite()) || !(beta >= 1.0 && beta.is_finite()) {
            return Err(Error::Config(format!(
                "Beta prior needs alpha >= 1 and beta >= 1, got ({alpha}, {beta})"
            )));
        }
        Ok(BetaPrior { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_uniform(&self) -> bool {
        self.alpha == 1.0 && self.beta == 1.0
    }

    /// Negative log density (up to the normalizing constant) at `h`.
    pub fn neg_log_density(&self, h: f64) -> f64 {
        let mut g = 0.0;
        if self.alpha != 1.0 {
            g -= (self.alpha - 1.0) * h.ln();
        }
        if self.beta != 1.0 {
            g -= (self.beta - 1.0) * (-h).ln_1p();
        }
        g
    }
}

impl Default for BetaPrior {
    fn default() -> Self {
        BetaPrior::UNIFORM
    }
}
