use ndarray::{Array2, Axis};

use super::prior::BetaPrior;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Tolerance on the sum-to-one constraint of each row of W.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// The two factors of the model: `W` (M x K, rows on the probability
/// simplex) and `H` (K x N, entries in [0, 1]). Their product is the matrix
/// of Bernoulli means.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
}

impl FactorPair {
    /// Checks shapes and the hard constraints (nonnegative W with unit row
    /// sums, H inside [0, 1]). The epsilon margin is checked separately by
    /// [`FactorPair::check_invariants`].
    pub fn new(w: Array2<f64>, h: Array2<f64>) -> Result<Self> {
        if w.ncols() != h.nrows() {
            return Err(Error::Dimension(format!(
                "W is {}x{} but H is {}x{}",
                w.nrows(),
                w.ncols(),
                h.nrows(),
                h.ncols()
            )));
        }
        if w.ncols() == 0 {
            return Err(Error::Dimension("rank must be at least 1".into()));
        }
        if let Some(bad) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain(format!("W entry {bad} is not a nonnegative number")));
        }
        if let Some(bad) = h.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("H entry {bad} is outside [0, 1]")));
        }
        for (m, row) in w.axis_iter(Axis(0)).enumerate() {
            let s: f64 = row.sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Domain(format!("row {m} of W sums to {s}")));
            }
        }
        Ok(FactorPair { w, h })
    }

    pub fn n_rows(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.h.ncols()
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    /// Verifies every invariant the solver maintains for clamp `epsilon`:
    /// unit row sums of W, H inside `[epsilon, 1 - epsilon]` and every entry
    /// of W·H strictly inside (0, 1).
    pub fn check_invariants(&self, epsilon: f64) -> Result<()> {
        for (m, row) in self.w.axis_iter(Axis(0)).enumerate() {
            let s: f64 = row.sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Domain(format!("row {m} of W sums to {s}")));
            }
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::Domain(format!("row {m} of W has a negative entry")));
            }
        }
        if let Some(bad) = self.h.iter().find(|&&v| !(v >= epsilon && v <= 1.0 - epsilon)) {
            return Err(Error::Domain(format!(
                "H entry {bad} is outside [{epsilon}, 1 - {epsilon}]"
            )));
        }
        if let Some(bad) = reconstruct(self).iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Domain(format!("W·H entry {bad} is outside (0, 1)")));
        }
        Ok(())
    }

    /// Row-permuted copy: new row `i` of W is old row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> FactorPair {
        FactorPair {
            w: self.w.select(Axis(0), perm),
            h: self.h.clone(),
        }
    }
}

/// Random factors satisfying the constraints.
///
/// Each row of W is a draw from the flat Dirichlet on the K-simplex
/// (normalized unit-exponential draws); each entry of H is uniform on
/// `(epsilon, 1 - epsilon)`. W is drawn first, row by row, then H row by row.
pub fn init_factors(
    n_rows: usize,
    n_cols: usize,
    rank: usize,
    epsilon: f64,
    seed: u64,
) -> Result<FactorPair> {
    if n_rows == 0 || n_cols == 0 || rank == 0 {
        return Err(Error::Dimension(format!(
            "cannot initialize factors for M={n_rows}, N={n_cols}, K={rank}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut w = Array2::zeros((n_rows, rank));
    for mut row in w.axis_iter_mut(Axis(0)) {
        for v in row.iter_mut() {
            *v = rng.exp1();
        }
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    let span = 1.0 - 2.0 * epsilon;
    let h = Array2::from_shape_simple_fn((rank, n_cols), || epsilon + span * rng.unit_open());
    Ok(FactorPair { w, h })
}

/// The Bernoulli means W·H.
pub fn reconstruct(factors: &FactorPair) -> Array2<f64> {
    factors.w.dot(&factors.h)
}

pub(crate) fn clamp_h(value: f64, epsilon: f64) -> f64 {
    value.clamp(epsilon, 1.0 - epsilon)
}

/// `(alpha - 1) / (alpha + beta - 2)` clamped into the epsilon margin; the
/// value an unobserved column converges to.
pub fn prior_mode(prior: &BetaPrior, epsilon: f64) -> Option<f64> {
    let denom = prior.alpha() + prior.beta() - 2.0;
    (denom > 0.0).then(|| clamp_h((prior.alpha() - 1.0) / denom, epsilon))
}
