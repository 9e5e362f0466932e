//! Planted-factor datasets sampled from the generative model.

use ndarray::Array2;
use rand_distr::{Beta, Distribution};

use crate::binmat::BinaryMatrix;
use crate::error::{Error, Result};
use crate::nbmf::FactorPair;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    pub rank: usize,
    /// Shapes of the Beta distribution the true H is drawn from.
    pub h_alpha: f64,
    pub h_beta: f64,
    pub seed: u64,
}

/// Draws W* with flat-Dirichlet rows, H* from Beta(h_alpha, h_beta), and
/// then every cell of Y from Bernoulli([W* H*]).
pub fn planted(spec: &PlantedSpec) -> Result<(BinaryMatrix, FactorPair)> {
    let PlantedSpec {
        n_rows,
        n_cols,
        rank,
        h_alpha,
        h_beta,
        seed,
    } = *spec;
    if n_rows == 0 || n_cols == 0 || rank == 0 {
        return Err(Error::Dimension("planted dataset needs positive dimensions".into()));
    }
    let beta = Beta::new(h_alpha, h_beta).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = SeededRng::new(seed);
    let mut w = Array2::zeros((n_rows, rank));
    for mut row in w.rows_mut() {
        row.mapv_inplace(|_| rng.exp1());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    let h = Array2::from_shape_simple_fn((rank, n_cols), || beta.sample(rng.inner()));
    let truth = FactorPair::new(w, h)?;
    let means = truth.w.dot(&truth.h);
    let mut ones = Vec::new();
    for ((r, c), &p) in means.indexed_iter() {
        if rng.unit_open() < p {
            ones.push((r, c));
        }
    }
    Ok((BinaryMatrix::new(n_rows, n_cols, ones)?, truth))
}
