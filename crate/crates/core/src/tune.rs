//! Hyperparameter search over (K, alpha, beta) on validation perplexity and
//! multi-restart evaluation of the selected configuration on the test set.
//!
//! Grid points (and restarts) are independent fits and run on a bounded
//! rayon pool; results are always assembled in grid order, so the output
//! does not depend on the number of workers.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binmat::{BinaryMatrix, ObservationMask};
use crate::error::{Error, Result};
use crate::eval::{perplexity, predict_from_factors};
use crate::nbmf::{fit, BetaPrior, FitConfig, DEFAULT_EPSILON, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Perplexities closer than this are treated as tied when picking the best
/// grid point.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ranks: Vec<usize>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub n_restarts: usize,
    pub base_seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        let shapes = vec![1.0, 1.5, 2.0, 3.0, 5.0, 9.0];
        GridSpec {
            ranks: vec![2, 4, 8, 16],
            alphas: shapes.clone(),
            betas: shapes,
            n_restarts: 10,
            base_seed: 0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// One (K, alpha, beta) combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub rank: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl GridPoint {
    pub fn prior(&self) -> Result<BetaPrior> {
        BetaPrior::new(self.alpha, self.beta)
    }

    /// Tie-break order: smaller rank, then smaller alpha + beta, then smaller alpha.
    fn tie_key(&self) -> (usize, f64, f64) {
        (self.rank, self.alpha + self.beta, self.alpha)
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ranks.is_empty() || self.alphas.is_empty() || self.betas.is_empty() {
            return Err(Error::Config("grid lists must be nonempty".into()));
        }
        if self.ranks.contains(&0) {
            return Err(Error::Config("grid ranks must be at least 1".into()));
        }
        for &a in &self.alphas {
            for &b in &self.betas {
                BetaPrior::new(a, b)?;
            }
        }
        if self.n_restarts == 0 {
            return Err(Error::Config("n_restarts must be at least 1".into()));
        }
        self.fit_config(GridPoint {
            rank: self.ranks[0],
            alpha: self.alphas[0],
            beta: self.betas[0],
        }, self.base_seed)?
        .validate()
    }

    /// Points in grid order: rank outermost, then alpha, then beta.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.ranks.len() * self.alphas.len() * self.betas.len());
        for &rank in &self.ranks {
            for &alpha in &self.alphas {
                for &beta in &self.betas {
                    out.push(GridPoint { rank, alpha, beta });
                }
            }
        }
        out
    }

    pub fn fit_config(&self, point: GridPoint, seed: u64) -> Result<FitConfig> {
        Ok(FitConfig {
            rank: point.rank,
            prior: point.prior()?,
            tol: self.tol,
            max_iter: self.max_iter,
            epsilon: self.epsilon,
            seed,
        })
    }
}

/// One fit of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub rank: usize,
    pub alpha: f64,
    pub beta: f64,
    pub restart_seed: u64,
    pub val_perplexity: Option<f64>,
    pub test_perplexity: Option<f64>,
    pub n_iter: usize,
    pub converged: bool,
    pub wall_time: f64,
    /// Set when the fit or its scoring failed; such rows never win the search.
    pub failure: Option<String>,
}

impl GridRow {
    pub fn point(&self) -> GridPoint {
        GridPoint {
            rank: self.rank,
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }

    /// Identity used when resuming a partially completed search.
    pub fn key(&self) -> (usize, u64, u64, u64) {
        (self.rank, self.alpha.to_bits(), self.beta.to_bits(), self.restart_seed)
    }
}

pub const GRID_CSV_HEADER: &str =
    "rank,alpha,beta,restart_seed,val_perplexity,test_perplexity,n_iter,converged,status";

fn opt_to_string(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl GridRow {
    /// CSV line, optionally followed by a `wall_time` column.
    pub fn to_csv_line(&self, with_wall_time: bool) -> String {
        let status = match &self.failure {
            None => "ok".to_string(),
            Some(msg) => format!("failed: {}", msg.replace([',', '\n', '\r'], ";")),
        };
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{}",
            self.rank,
            self.alpha,
            self.beta,
            self.restart_seed,
            opt_to_string(self.val_perplexity),
            opt_to_string(self.test_perplexity),
            self.n_iter,
            self.converged,
            status
        );
        if with_wall_time {
            write!(line, ",{}", self.wall_time).unwrap();
        }
        line
    }

    /// Parses a line written by [`GridRow::to_csv_line`] (with or without
    /// the wall-time column).
    pub fn from_csv_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        let bad = |what: &str| Error::Parse {
            line: 0,
            message: format!("bad {what} in grid row {line:?}"),
        };
        if fields.len() != 9 && fields.len() != 10 {
            return Err(bad("field count"));
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad("perplexity"))
            }
        };
        let failure = match fields[8] {
            "ok" => None,
            s => Some(s.strip_prefix("failed: ").ok_or_else(|| bad("status"))?.to_string()),
        };
        Ok(GridRow {
            rank: fields[0].parse().map_err(|_| bad("rank"))?,
            alpha: fields[1].parse().map_err(|_| bad("alpha"))?,
            beta: fields[2].parse().map_err(|_| bad("beta"))?,
            restart_seed: fields[3].parse().map_err(|_| bad("restart_seed"))?,
            val_perplexity: opt(fields[4])?,
            test_perplexity: opt(fields[5])?,
            n_iter: fields[6].parse().map_err(|_| bad("n_iter"))?,
            converged: fields[7].parse().map_err(|_| bad("converged"))?,
            wall_time: match fields.get(9) {
                Some(s) => s.parse().map_err(|_| bad("wall_time"))?,
                None => 0.0,
            },
            failure,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
}

impl GridResult {
    /// Table as CSV. Wall times are left out unless asked for, so that
    /// repeated runs produce identical files.
    pub fn to_csv(&self, with_wall_time: bool) -> String {
        let mut out = String::from(GRID_CSV_HEADER);
        if with_wall_time {
            out.push_str(",wall_time");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv_line(with_wall_time));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(GridRow::from_csv_line)
            .collect::<Result<_>>()?;
        Ok(GridResult { rows })
    }

    /// Point with the lowest validation perplexity among successful rows;
    /// ties within [`TIE_TOL`] go to the smaller rank, then the smaller
    /// alpha + beta, then the smaller alpha.
    pub fn best(&self) -> Result<(GridPoint, f64)> {
        let ok: Vec<(GridPoint, f64)> = self
            .rows
            .iter()
            .filter(|r| r.is_ok())
            .filter_map(|r| r.val_perplexity.map(|v| (r.point(), v)))
            .filter(|(_, v)| v.is_finite())
            .collect();
        let min = ok
            .iter()
            .map(|&(_, v)| v)
            .fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return Err(Error::Search("every grid fit failed".into()));
        }
        let best = ok
            .into_iter()
            .filter(|&(_, v)| v <= min + TIE_TOL)
            .min_by(|a, b| {
                let (ka, kb) = (a.0.tie_key(), b.0.tie_key());
                ka.0.cmp(&kb.0)
                    .then(ka.1.total_cmp(&kb.1))
                    .then(ka.2.total_cmp(&kb.2))
                    .then(a.1.total_cmp(&b.1))
            })
            .expect("min came from this set");
        Ok(best)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub result: GridResult,
    pub best: GridPoint,
    pub best_val_perplexity: f64,
}

/// Knobs for running a search.
#[derive(Default)]
pub struct SearchOptions<'a> {
    /// Worker threads; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
    /// Also score every grid fit on this mask.
    pub test: Option<&'a ObservationMask>,
    /// Rows from an interrupted run; matching jobs are not refit.
    pub completed: Vec<GridRow>,
    /// Called once for every freshly computed row, in completion order.
    pub on_row: Option<&'a (dyn Fn(&GridRow) + Sync)>,
}

fn run_pool<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(work()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

fn fit_and_score(
    y: &BinaryMatrix,
    train: &ObservationMask,
    val: Option<&ObservationMask>,
    test: Option<&ObservationMask>,
    config: &FitConfig,
) -> GridRow {
    let mut row = GridRow {
        rank: config.rank,
        alpha: config.prior.alpha(),
        beta: config.prior.beta(),
        restart_seed: config.seed,
        val_perplexity: None,
        test_perplexity: None,
        n_iter: 0,
        converged: false,
        wall_time: 0.0,
        failure: None,
    };
    let outcome = fit(y, train, config).and_then(|(factors, report)| {
        row.n_iter = report.n_iter;
        row.converged = report.converged;
        row.wall_time = report.wall_time;
        let pred = predict_from_factors(&factors);
        let score = |m: Option<&ObservationMask>| -> Result<Option<f64>> {
            m.map(|m| perplexity(y, m, &pred).map(|s| s.value)).transpose()
        };
        Ok((score(val)?, score(test)?))
    });
    match outcome {
        Ok((v, t)) => {
            row.val_perplexity = v;
            row.test_perplexity = t;
        }
        Err(e) => row.failure = Some(e.to_string()),
    }
    row
}

fn check_masks(y: &BinaryMatrix, masks: &[&ObservationMask]) -> Result<()> {
    for (i, a) in masks.iter().enumerate() {
        if a.shape() != y.shape() {
            return Err(Error::Dimension("mask shape differs from data".into()));
        }
        for b in &masks[i + 1..] {
            if !a.is_disjoint(b) {
                return Err(Error::Config("train/validation/test masks overlap".into()));
            }
        }
    }
    Ok(())
}

/// Fits every grid point once (seed `base_seed`) on `train` and scores it on `val`.
pub fn grid_search(
    y: &BinaryMatrix,
    train: &ObservationMask,
    val: &ObservationMask,
    grid: &GridSpec,
) -> Result<SearchOutcome> {
    grid_search_with(y, train, val, grid, SearchOptions::default())
}

pub fn grid_search_with(
    y: &BinaryMatrix,
    train: &ObservationMask,
    val: &ObservationMask,
    grid: &GridSpec,
    options: SearchOptions<'_>,
) -> Result<SearchOutcome> {
    grid.validate()?;
    let mut masks = vec![train, val];
    masks.extend(options.test);
    check_masks(y, &masks)?;

    let done: std::collections::HashMap<_, GridRow> =
        options.completed.into_iter().map(|r| (r.key(), r)).collect();
    let configs: Vec<FitConfig> = grid
        .points()
        .into_iter()
        .map(|p| grid.fit_config(p, grid.base_seed))
        .collect::<Result<_>>()?;
    let test = options.test;
    let on_row = options.on_row;
    let rows = run_pool(options.jobs, || {
        configs
            .par_iter()
            .map(|cfg| {
                let key = (cfg.rank, cfg.prior.alpha().to_bits(), cfg.prior.beta().to_bits(), cfg.seed);
                if let Some(row) = done.get(&key) {
                    return row.clone();
                }
                let row = fit_and_score(y, train, Some(val), test, cfg);
                if let Some(cb) = on_row {
                    cb(&row);
                }
                row
            })
            .collect::<Vec<_>>()
    })?;
    let result = GridResult { rows };
    let (best, best_val_perplexity) = result.best()?;
    Ok(SearchOutcome {
        result,
        best,
        best_val_perplexity,
    })
}

/// Five-number summary used for box plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between order statistics at position
/// `q * (n - 1)`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(BoxStats {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEvaluation {
    pub point: GridPoint,
    pub restarts: Vec<GridRow>,
    pub summary: BoxStats,
}

impl TestEvaluation {
    pub fn test_perplexities(&self) -> Vec<f64> {
        self.restarts.iter().filter_map(|r| r.test_perplexity).collect()
    }
}

/// Refits `point` from `n_restarts` seeds (`base_seed + i`) and summarizes
/// the test perplexities.
#[allow(clippy::too_many_arguments)]
pub fn test_evaluation(
    y: &BinaryMatrix,
    train: &ObservationMask,
    test: &ObservationMask,
    point: GridPoint,
    n_restarts: usize,
    base_seed: u64,
    grid: &GridSpec,
    jobs: Option<usize>,
) -> Result<TestEvaluation> {
    if n_restarts == 0 {
        return Err(Error::Config("n_restarts must be at least 1".into()));
    }
    check_masks(y, &[train, test])?;
    let configs: Vec<FitConfig> = (0..n_restarts as u64)
        .map(|i| grid.fit_config(point, base_seed.wrapping_add(i)))
        .collect::<Result<_>>()?;
    for c in &configs {
        c.validate()?;
    }
    let restarts = run_pool(jobs, || {
        configs
            .par_iter()
            .map(|cfg| fit_and_score(y, train, None, Some(test), cfg))
            .collect::<Vec<_>>()
    })?;
    if let Some(failed) = restarts.iter().find(|r| !r.is_ok()) {
        return Err(Error::Search(format!(
            "restart with seed {} failed: {}",
            failed.restart_seed,
            failed.failure.as_deref().unwrap_or_default()
        )));
    }
    let values: Vec<f64> = restarts.iter().filter_map(|r| r.test_perplexity).collect();
    let summary = BoxStats::from_values(&values)?;
    Ok(TestEvaluation {
        point,
        restarts,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Mean,
    Median,
}

/// Validation perplexity for one rank as an alpha-by-beta CSV table.
///
/// The first row lists the beta values, the first column the alpha values.
/// Cells aggregate every successful row for that (alpha, beta); cells with
/// none are left empty.
pub fn export_heatmap(results: &GridResult, rank: usize, aggregate: Aggregate) -> Result<String> {
    let rows: Vec<&GridRow> = results.rows.iter().filter(|r| r.rank == rank).collect();
    if rows.is_empty() {
        return Err(Error::Key(format!("rank {rank} is not in the results")));
    }
    let mut alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
    let mut betas: Vec<f64> = rows.iter().map(|r| r.beta).collect();
    for v in [&mut alphas, &mut betas] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let mut out = String::from("alpha\\beta");
    for b in &betas {
        write!(out, ",{b}").unwrap();
    }
    out.push('\n');
    for &a in &alphas {
        write!(out, "{a}").unwrap();
        for &b in &betas {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.alpha == a && r.beta == b && r.is_ok())
                .filter_map(|r| r.val_perplexity)
                .collect();
            out.push(',');
            if !vals.is_empty() {
                let v = match aggregate {
                    Aggregate::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
                    Aggregate::Median => BoxStats::from_values(&vals)?.median,
                };
                write!(out, "{v}").unwrap();
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binmat::{split_observations, SplitSpec};

    fn row(rank: usize, alpha: f64, beta: f64, val: f64) -> GridRow {
        GridRow {
            rank,
            alpha,
            beta,
            restart_seed: 0,
            val_perplexity: Some(val),
            test_perplexity: None,
            n_iter: 3,
            converged: true,
            wall_time: 0.01,
            failure: None,
        }
    }

    fn small_grid(ranks: Vec<usize>, alphas: Vec<f64>, betas: Vec<f64>) -> GridSpec {
        GridSpec {
            ranks,
            alphas,
            betas,
            n_restarts: 2,
            ..GridSpec::default()
        }
    }

    #[test]
    fn single_point_grid() {
        let y = BinaryMatrix::from_rows(&[[1u8, 0, 1, 1], [0, 1, 1, 0], [1, 1, 0, 1]]).unwrap();
        let s = split_observations(&y, &SplitSpec::default()).unwrap();
        let grid = small_grid(vec![1], vec![1.5], vec![1.0]);
        let out = grid_search(&y, &s.train, &s.val, &grid).unwrap();
        assert_eq!(out.result.rows.len(), 1);
        assert_eq!(out.best, GridPoint { rank: 1, alpha: 1.5, beta: 1.0 });
    }

    #[test]
    fn ties_resolve_to_smaller_models() {
        let r = GridResult {
            rows: vec![row(4, 1.0, 1.0, 0.5), row(2, 2.0, 2.0, 0.5 + 1e-13), row(2, 1.5, 1.0, 0.5)],
        };
        assert_eq!(r.best().unwrap().0, GridPoint { rank: 2, alpha: 1.5, beta: 1.0 });
        let r = GridResult {
            rows: vec![row(2, 2.0, 1.0, 0.5), row(2, 1.0, 2.0, 0.5)],
        };
        assert_eq!(r.best().unwrap().0.alpha, 1.0);
        let r = GridResult {
            rows: vec![row(2, 1.0, 1.0, 0.5), row(8, 1.0, 1.0, 0.4)],
        };
        assert_eq!(r.best().unwrap().0.rank, 8);
    }

    #[test]
    fn failed_rows_never_win() {
        let mut bad = row(1, 1.0, 1.0, 0.1);
        bad.failure = Some("boom".into());
        let r = GridResult {
            rows: vec![bad.clone(), row(2, 1.0, 1.0, 0.6)],
        };
        assert_eq!(r.best().unwrap().0.rank, 2);
        let r = GridResult { rows: vec![bad] };
        assert!(matches!(r.best(), Err(Error::Search(_))));
    }

    #[test]
    fn prior_matches_all_ones_data() {
        let y = BinaryMatrix::ones_like(6, 5);
        let s = split_observations(&y, &SplitSpec::default()).unwrap();
        let grid = small_grid(vec![1], vec![1.0, 2.0], vec![1.0]);
        let out = grid_search(&y, &s.train, &s.val, &grid).unwrap();
        let v: Vec<f64> = out.result.rows.iter().map(|r| r.val_perplexity.unwrap()).collect();
        assert!(v[1] <= v[0], "{v:?}");
    }

    #[test]
    fn box_stats() {
        let s = BoxStats::from_values(&[0.42]).unwrap();
        assert_eq!((s.min, s.median, s.max), (0.42, 0.42, 0.42));
        let s = BoxStats::from_values(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let s = BoxStats::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
        assert!(BoxStats::from_values(&[]).is_err());
    }

    #[test]
    fn heatmap_layout() {
        let r = GridResult {
            rows: vec![
                row(2, 1.0, 1.0, 0.61),
                row(2, 1.0, 3.0, 0.6),
                row(2, 2.0, 1.0, 0.55),
                row(2, 2.0, 3.0, 0.123456789012345),
                row(4, 1.0, 1.0, 0.7),
            ],
        };
        let csv = export_heatmap(&r, 2, Aggregate::Mean).unwrap();
        assert_eq!(csv, "alpha\\beta,1,3\n1,0.61,0.6\n2,0.55,0.123456789012345\n");
        let parsed: f64 = csv.lines().nth(2).unwrap().split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(parsed, 0.123456789012345);
        assert_eq!(export_heatmap(&r, 4, Aggregate::Mean).unwrap(), "alpha\\beta,1\n1,0.7\n");
        assert!(matches!(export_heatmap(&r, 3, Aggregate::Mean), Err(Error::Key(_))));
    }

    #[test]
    fn heatmap_aggregates_restarts_and_leaves_gaps() {
        let mut a = row(2, 1.0, 1.0, 0.5);
        let mut b = row(2, 1.0, 1.0, 0.7);
        let mut c = row(2, 1.0, 1.0, 0.9);
        a.restart_seed = 0;
        b.restart_seed = 1;
        c.restart_seed = 2;
        let r = GridResult {
            rows: vec![a, b, c, row(2, 2.0, 3.0, 0.4)],
        };
        assert_eq!(
            export_heatmap(&r, 2, Aggregate::Mean).unwrap(),
            format!("alpha\\beta,1,3\n1,{},\n2,,0.4\n", (0.5 + 0.7 + 0.9) / 3.0)
        );
        assert_eq!(
            export_heatmap(&r, 2, Aggregate::Median).unwrap(),
            "alpha\\beta,1,3\n1,0.7,\n2,,0.4\n"
        );
    }

    #[test]
    fn csv_round_trip() {
        let mut failed = row(3, 1.5, 9.0, 0.5);
        failed.val_perplexity = None;
        failed.failure = Some("objective, became NaN".into());
        let r = GridResult {
            rows: vec![row(2, 1.0, 1.5, 0.612), failed],
        };
        let back = GridResult::from_csv(&r.to_csv(true)).unwrap();
        assert_eq!(back.rows[0], r.rows[0]);
        assert_eq!(back.rows[1].failure.as_deref(), Some("objective; became NaN"));
        let without = GridResult::from_csv(&r.to_csv(false)).unwrap();
        assert_eq!(without.rows[0].wall_time, 0.0);
    }

    #[test]
    fn grid_validation() {
        let mut g = GridSpec::default();
        g.validate().unwrap();
        g.alphas = vec![0.5];
        assert!(g.validate().is_err());
        let g = GridSpec { ranks: vec![], ..GridSpec::default() };
        assert!(g.validate().is_err());
        let g = GridSpec { n_restarts: 0, ..GridSpec::default() };
        assert!(g.validate().is_err());
    }
}
