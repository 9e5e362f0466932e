//! Held-out scoring of predicted Bernoulli means.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::binmat::{BinaryMatrix, ObservationMask};
use crate::error::{Error, Result};
use crate::nbmf::{reconstruct, FactorPair};

/// Threshold for the auxiliary confusion counts.
pub const CONFUSION_THRESHOLD: f64 = 0.5;

/// Matrix of predicted Bernoulli means, each in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGrid(Array2<f64>);

impl PredictionGrid {
    pub fn new(means: Array2<f64>) -> Result<Self> {
        if let Some(bad) = means.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("prediction {bad} is not a probability")));
        }
        Ok(PredictionGrid(means))
    }

    /// A grid holding `value` everywhere.
    pub fn constant(n_rows: usize, n_cols: usize, value: f64) -> Result<Self> {
        Self::new(Array2::from_elem((n_rows, n_cols), value))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[[row, col]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0 && v < 1.0)
    }
}

/// Mean negative log-likelihood per scored cell, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerplexityScore {
    pub value: f64,
    pub n_cells: usize,
}

/// Predicts `W·H`; needs only the exported factors.
pub fn predict_from_factors(factors: &FactorPair) -> PredictionGrid {
    PredictionGrid(reconstruct(factors))
}

fn check_shapes(y: &BinaryMatrix, mask: &ObservationMask, pred: &PredictionGrid) -> Result<()> {
    if y.shape() != mask.shape() || y.shape() != pred.shape() {
        return Err(Error::Dimension(format!(
            "data {:?}, mask {:?} and predictions {:?} disagree",
            y.shape(),
            mask.shape(),
            pred.shape()
        )));
    }
    Ok(())
}

/// `-(1/|mask|) * sum over mask of [y ln(p) + (1 - y) ln(1 - p)]`.
pub fn perplexity(y: &BinaryMatrix, mask: &ObservationMask, pred: &PredictionGrid) -> Result<PerplexityScore> {
    check_shapes(y, mask, pred)?;
    if mask.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let mut total = 0.0;
    for &(m, n) in mask.cells() {
        let p = pred.get(m, n);
        let label = y.get(m, n);
        let ll = if label { p.ln() } else { (-p).ln_1p() };
        if ll == f64::NEG_INFINITY {
            return Err(Error::InfiniteScore {
                row: m,
                col: n,
                prediction: p,
                label: label as u8,
            });
        }
        total -= ll;
    }
    Ok(PerplexityScore {
        value: total / mask.len() as f64,
        n_cells: mask.len(),
    })
}

/// Counts at [`CONFUSION_THRESHOLD`]: a cell is predicted 1 when `p >= 0.5`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl Confusion {
    pub fn diagonal(&self) -> usize {
        self.true_pos + self.true_neg
    }

    pub fn off_diagonal(&self) -> usize {
        self.false_pos + self.false_neg
    }
}

fn confusion(y: &BinaryMatrix, mask: &ObservationMask, pred: &PredictionGrid) -> Confusion {
    let mut c = Confusion::default();
    for &(m, n) in mask.cells() {
        match (pred.get(m, n) >= CONFUSION_THRESHOLD, y.get(m, n)) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, false) => c.true_neg += 1,
            (false, true) => c.false_neg += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskReport {
    pub perplexity: f64,
    pub n_cells: usize,
    /// Auxiliary thresholded counts; not part of the perplexity metric.
    pub confusion_at_0_5: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionReport {
    /// Always "nats": perplexities use the natural logarithm.
    pub log_base: String,
    pub validation: MaskReport,
    pub test: MaskReport,
}

pub const CSV_HEADER: &str = "val_perplexity,val_cells,val_tp,val_fp,val_tn,val_fn,\
test_perplexity,test_cells,test_tp,test_fp,test_tn,test_fn";

impl CompletionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One CSV row matching [`CSV_HEADER`].
    pub fn to_csv_row(&self) -> String {
        let part = |r: &MaskReport| {
            let c = r.confusion_at_0_5;
            format!(
                "{},{},{},{},{},{}",
                r.perplexity, r.n_cells, c.true_pos, c.false_pos, c.true_neg, c.false_neg
            )
        };
        format!("{},{}", part(&self.validation), part(&self.test))
    }
}

/// Perplexity and confusion counts on the validation and test masks.
pub fn completion_report(
    y: &BinaryMatrix,
    val: &ObservationMask,
    test: &ObservationMask,
    pred: &PredictionGrid,
) -> Result<CompletionReport> {
    if !val.is_disjoint(test) {
        return Err(Error::Dimension("validation and test masks overlap".into()));
    }
    let score = |mask: &ObservationMask| -> Result<MaskReport> {
        let p = perplexity(y, mask, pred)?;
        Ok(MaskReport {
            perplexity: p.value,
            n_cells: p.n_cells,
            confusion_at_0_5: confusion(y, mask, pred),
        })
    };
    Ok(CompletionReport {
        log_base: "nats".into(),
        validation: score(val)?,
        test: score(test)?,
    })
}
