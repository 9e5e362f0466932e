//! MAP objective and the majorization-minimization updates for H and W.
//!
//! Every data-dependent sum runs only over the cells of the observation
//! mask. The Jensen bounds behind the updates are built entry by entry, so
//! dropping unobserved entries keeps each update a minimizer of a tight
//! upper bound, and the descent guarantee carries over. The multiplier of
//! the sum-to-one constraint on row `m` of W becomes `N_m`, the number of
//! observed cells in that row, in place of the full column count.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use super::factors::{clamp_h, FactorPair};
use super::prior::BetaPrior;
use crate::binmat::{BinaryMatrix, ObservationMask};
use crate::error::{Error, Result};

/// Above this many observed cells the per-column / per-row loops run on the
/// rayon pool. Each column (row) is reduced in a fixed sequential order, so
/// the result does not depend on the thread count.
const PARALLEL_CELLS: usize = 20_000;

/// Observed cells indexed both by row and by column, with their labels.
#[derive(Debug, Clone)]
pub struct Observed {
    n_rows: usize,
    n_cols: usize,
    n_cells: usize,
    by_row: Vec<Vec<(usize, bool)>>,
    by_col: Vec<Vec<(usize, bool)>>,
}

impl Observed {
    pub fn new(y: &BinaryMatrix, mask: &ObservationMask) -> Result<Self> {
        if y.shape() != mask.shape() {
            return Err(Error::Dimension(format!(
                "data is {:?} but mask is {:?}",
                y.shape(),
                mask.shape()
            )));
        }
        let (n_rows, n_cols) = y.shape();
        let mut by_row = vec![Vec::new(); n_rows];
        let mut by_col = vec![Vec::new(); n_cols];
        // both lists are sorted row-major, so a merge walk labels every cell
        let ones = y.ones();
        let mut j = 0;
        for &(r, c) in mask.cells() {
            while j < ones.len() && ones[j] < (r, c) {
                j += 1;
            }
            let label = j < ones.len() && ones[j] == (r, c);
            by_row[r].push((c, label));
            by_col[c].push((r, label));
        }
        Ok(Observed {
            n_rows,
            n_cols,
            n_cells: mask.len(),
            by_row,
            by_col,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    /// Number of observed cells in row `m`.
    pub fn row_count(&self, m: usize) -> usize {
        self.by_row[m].len()
    }

    pub(crate) fn check_factors(&self, factors: &FactorPair) -> Result<()> {
        if factors.n_rows() != self.n_rows || factors.n_cols() != self.n_cols {
            return Err(Error::Dimension(format!(
                "factors give a {}x{} matrix but data is {}x{}",
                factors.n_rows(),
                factors.n_cols(),
                self.n_rows,
                self.n_cols
            )));
        }
        Ok(())
    }

    fn parallel(&self) -> bool {
        self.n_cells >= PARALLEL_CELLS
    }
}

#[inline]
fn mean_at(w: &ArrayView2<f64>, h: &ArrayView2<f64>, m: usize, n: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..w.ncols() {
        s += w[[m, k]] * h[[k, n]];
    }
    s
}

/// Negative log-likelihood over the observed cells (no prior term).
pub(crate) fn neg_log_likelihood(obs: &Observed, factors: &FactorPair) -> f64 {
    let (w, h) = (factors.w.view(), factors.h.view());
    let mut f = 0.0;
    for (m, row) in obs.by_row.iter().enumerate() {
        for &(n, label) in row {
            let p = mean_at(&w, &h, m, n);
            f -= if label { p.ln() } else { (-p).ln_1p() };
        }
    }
    f
}

pub(crate) fn neg_log_prior(h: &Array2<f64>, prior: &BetaPrior) -> f64 {
    if prior.is_uniform() {
        return 0.0;
    }
    h.iter().map(|&v| prior.neg_log_density(v)).sum()
}

/// Objective without domain checks; may be NaN or infinite if the factors
/// leave the interior.
pub(crate) fn objective_unchecked(obs: &Observed, factors: &FactorPair, prior: &BetaPrior) -> f64 {
    neg_log_likelihood(obs, factors) + neg_log_prior(&factors.h, prior)
}

/// MAP objective: negative Bernoulli log-likelihood over the cells in `mask`
/// plus the negative Beta log-prior over all of H.
pub fn objective(
    y: &BinaryMatrix,
    mask: &ObservationMask,
    factors: &FactorPair,
    prior: &BetaPrior,
) -> Result<f64> {
    let obs = Observed::new(y, mask)?;
    obs.check_factors(factors)?;
    let (w, h) = (factors.w.view(), factors.h.view());
    for &(m, n) in mask.cells() {
        let p = mean_at(&w, &h, m, n);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "reconstructed mean {p} at ({m}, {n}) is outside (0, 1)"
            )));
        }
    }
    Ok(objective_unchecked(&obs, factors, prior))
}

/// Numerator and denominator pieces `(C, D)` of the H update, before the
/// ratio and before clamping.
pub(crate) fn h_terms(
    obs: &Observed,
    factors: &FactorPair,
    prior: &BetaPrior,
) -> (Array2<f64>, Array2<f64>) {
    let rank = factors.rank();
    let (w, h) = (factors.w.view(), factors.h.view());
    let column = |n: usize| -> Vec<(f64, f64)> {
        let mut pos = vec![0.0; rank];
        let mut neg = vec![0.0; rank];
        for &(m, label) in &obs.by_col[n] {
            let p = mean_at(&w, &h, m, n);
            if label {
                for k in 0..rank {
                    pos[k] += w[[m, k]] / p;
                }
            } else {
                let q = 1.0 - p;
                for k in 0..rank {
                    neg[k] += w[[m, k]] / q;
                }
            }
        }
        (0..rank)
            .map(|k| {
                let hk = h[[k, n]];
                (
                    hk * pos[k] + prior.alpha() - 1.0,
                    (1.0 - hk) * neg[k] + prior.beta() - 1.0,
                )
            })
            .collect()
    };
    let cols: Vec<Vec<(f64, f64)>> = if obs.parallel() {
        (0..obs.n_cols).into_par_iter().map(column).collect()
    } else {
        (0..obs.n_cols).map(column).collect()
    };
    let mut c = Array2::zeros((rank, obs.n_cols));
    let mut d = Array2::zeros((rank, obs.n_cols));
    for (n, col) in cols.into_iter().enumerate() {
        for (k, (ck, dk)) in col.into_iter().enumerate() {
            c[[k, n]] = ck;
            d[[k, n]] = dk;
        }
    }
    (c, d)
}

pub(crate) fn update_h_observed(
    obs: &Observed,
    factors: &FactorPair,
    prior: &BetaPrior,
    epsilon: f64,
) -> Array2<f64> {
    let (c, d) = h_terms(obs, factors, prior);
    let mut h = factors.h.clone();
    ndarray::Zip::from(&mut h)
        .and(&c)
        .and(&d)
        .for_each(|hv, &cv, &dv| {
            let total = cv + dv;
            // c = d = 0 only for an unobserved column under the flat prior
            if total > 0.0 {
                *hv = clamp_h(cv / total, epsilon);
            }
        });
    h
}

/// Raw multiplicative W update over observed cells, with the row divisor
/// `N_m`. Rows without observations are returned unchanged.
pub(crate) fn w_raw(obs: &Observed, factors: &FactorPair) -> Array2<f64> {
    let rank = factors.rank();
    let (w, h) = (factors.w.view(), factors.h.view());
    let row = |m: usize| -> Vec<f64> {
        let cells = &obs.by_row[m];
        if cells.is_empty() {
            return w.row(m).to_vec();
        }
        let mut acc = vec![0.0; rank];
        for &(n, label) in cells {
            let p = mean_at(&w, &h, m, n);
            if label {
                for k in 0..rank {
                    acc[k] += h[[k, n]] / p;
                }
            } else {
                let q = 1.0 - p;
                for k in 0..rank {
                    acc[k] += (1.0 - h[[k, n]]) / q;
                }
            }
        }
        let count = cells.len() as f64;
        (0..rank).map(|k| w[[m, k]] * acc[k] / count).collect()
    };
    let rows: Vec<Vec<f64>> = if obs.parallel() {
        (0..obs.n_rows).into_par_iter().map(row).collect()
    } else {
        (0..obs.n_rows).map(row).collect()
    };
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((obs.n_rows, rank), flat).expect("row lengths equal rank")
}

/// Floors every entry at `epsilon` and rescales each row to sum to one.
pub(crate) fn project_rows(w: &mut Array2<f64>, epsilon: f64) {
    for mut row in w.rows_mut() {
        row.mapv_inplace(|v| v.max(epsilon));
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
}

pub(crate) fn update_w_observed(obs: &Observed, factors: &FactorPair, epsilon: f64) -> Array2<f64> {
    let mut w = w_raw(obs, factors);
    project_rows(&mut w, epsilon);
    w
}

/// The unclamped `(C, D)` matrices whose ratio `C / (C + D)` is the new H.
pub fn h_update_terms(
    y: &BinaryMatrix,
    mask: &ObservationMask,
    factors: &FactorPair,
    prior: &BetaPrior,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let obs = Observed::new(y, mask)?;
    obs.check_factors(factors)?;
    Ok(h_terms(&obs, factors, prior))
}

/// One MM step on H with W held fixed. The result is clamped to
/// `[epsilon, 1 - epsilon]`; entries whose numerator and denominator both
/// vanish keep their current value.
pub fn update_h(
    y: &BinaryMatrix,
    mask: &ObservationMask,
    factors: &FactorPair,
    prior: &BetaPrior,
    epsilon: f64,
) -> Result<Array2<f64>> {
    let obs = Observed::new(y, mask)?;
    obs.check_factors(factors)?;
    Ok(update_h_observed(&obs, factors, prior, epsilon))
}

/// The W step before flooring and renormalization.
pub fn w_update_unclamped(
    y: &BinaryMatrix,
    mask: &ObservationMask,
    factors: &FactorPair,
) -> Result<Array2<f64>> {
    let obs = Observed::new(y, mask)?;
    obs.check_factors(factors)?;
    Ok(w_raw(&obs, factors))
}

/// One MM step on W with H held fixed. Entries are floored at `epsilon`
/// and each row renormalized to sum to one.
pub fn update_w(
    y: &BinaryMatrix,
    mask: &ObservationMask,
    factors: &FactorPair,
    epsilon: f64,
) -> Result<Array2<f64>> {
    let obs = Observed::new(y, mask)?;
    obs.check_factors(factors)?;
    Ok(update_w_observed(&obs, factors, epsilon))
}
