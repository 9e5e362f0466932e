//! Shared workloads for the solver benchmarks in `benches/`.

use nbmf_core::synth::{planted, PlantedSpec};
use nbmf_core::{split_observations, BinaryMatrix, ObservationMask, SplitSpec};

pub struct Workload {
    pub y: BinaryMatrix,
    pub train: ObservationMask,
    pub full: ObservationMask,
}

/// Planted `m x n` data with rank-`k` truth and the default split.
pub fn workload(m: usize, n: usize, k: usize) -> Workload {
    let (y, _) = planted(&PlantedSpec {
        n_rows: m,
        n_cols: n,
        rank: k,
        h_alpha: 3.0,
        h_beta: 3.0,
        seed: 0,
    })
    .expect("valid planted spec");
    let train = split_observations(&y, &SplitSpec::default())
        .expect("default split")
        .train;
    Workload {
        full: ObservationMask::full(m, n),
        y,
        train,
    }
}
