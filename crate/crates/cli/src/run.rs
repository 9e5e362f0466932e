//! The four subcommands.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use nbmf_core::eval::CSV_HEADER as REPORT_CSV_HEADER;
use nbmf_core::nbmf::io::{load_factors, save_factors, FactorHeader, HEADER_FILE, H_FILE, W_FILE};
use nbmf_core::nbmf::{fit_with_observer, Progress};
use nbmf_core::rng::RNG_SCHEME;
use nbmf_core::tune::{
    grid_search_with, BoxStats, GridPoint, GridRow, SearchOptions, TestEvaluation,
    GRID_CSV_HEADER,
};
use nbmf_core::{
    completion_report, export_heatmap, load_coordinate_file, predict_from_factors,
    split_observations, test_evaluation, BinaryMatrix, FitReport, GridResult, ObservationMask,
    Split,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Mode, RunConfig};
use crate::error::CliError;

pub const TRAIN_MASK_FILE: &str = "train_mask.txt";
pub const VAL_MASK_FILE: &str = "val_mask.txt";
pub const TEST_MASK_FILE: &str = "test_mask.txt";
pub const FIT_REPORT_FILE: &str = "fit_report.json";
pub const EVAL_JSON_FILE: &str = "eval_report.json";
pub const EVAL_CSV_FILE: &str = "eval_report.csv";
pub const GRID_FILE: &str = "grid_results.csv";
pub const PARTIAL_FILE: &str = "grid_partial.csv";
pub const TEST_RESTARTS_FILE: &str = "test_restarts.csv";
pub const SUMMARY_FILE: &str = "tune_summary.json";
pub const LOCK_FILE: &str = ".nbmf.lock";

type Outcome<T> = Result<T, CliError>;

/// One manifest per subcommand, e.g. `manifest_fit.json`.
pub fn manifest_file(mode: Mode) -> String {
    let name = serde_json::to_value(mode).expect("mode serializes");
    format!("manifest_{}.json", name.as_str().expect("mode is a string"))
}

/// Exclusive advisory lock on the output directory, held for the whole run.
pub struct OutputLock {
    _file: File,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Outcome<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
        file.try_lock().map_err(|_| {
            CliError::Runtime(format!(
                "output directory {} is in use by another nbmf run",
                dir.display()
            ))
        })?;
        Ok(OutputLock { _file: file })
    }
}

/// Console sink; progress goes to stderr, results to stdout.
pub trait Console {
    fn progress(&mut self, line: &str);
    fn result(&mut self, line: &str);
}

pub struct StdConsole;

impl Console for StdConsole {
    fn progress(&mut self, line: &str) {
        eprintln!("{line}");
    }
    fn result(&mut self, line: &str) {
        println!("{line}");
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    jobs: Option<usize>,
    artifacts: Vec<String>,
}

impl Run<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn write(&mut self, name: &str, contents: &str) -> Outcome<()> {
        let path = self.path(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.record(name);
        Ok(())
    }

    fn record(&mut self, name: &str) {
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
    }

    fn load_data(&self) -> Outcome<BinaryMatrix> {
        Ok(load_coordinate_file(&self.cfg.dataset)?)
    }

    fn write_split(&mut self, y: &BinaryMatrix) -> Outcome<Split> {
        let split = split_observations(y, &self.cfg.split_spec()?)?;
        for (name, mask) in [
            (TRAIN_MASK_FILE, &split.train),
            (VAL_MASK_FILE, &split.val),
            (TEST_MASK_FILE, &split.test),
        ] {
            self.write(name, &mask.to_coordinate_string())?;
        }
        Ok(split)
    }

    /// Masks recorded by an earlier run, or a fresh split if none exist.
    fn read_split(&self, y: &BinaryMatrix) -> Outcome<Split> {
        let names = [TRAIN_MASK_FILE, VAL_MASK_FILE, TEST_MASK_FILE];
        if !names.iter().all(|n| self.path(n).is_file()) {
            return Ok(split_observations(y, &self.cfg.split_spec()?)?);
        }
        let load = |n: &str| -> Outcome<ObservationMask> {
            let m = ObservationMask::load(self.path(n))?;
            if m.shape() != y.shape() {
                return Err(CliError::Runtime(format!(
                    "{n} is {}x{} but the dataset is {}x{}",
                    m.shape().0,
                    m.shape().1,
                    y.n_rows(),
                    y.n_cols()
                )));
            }
            Ok(m)
        };
        Ok(Split {
            train: load(names[0])?,
            val: load(names[1])?,
            test: load(names[2])?,
        })
    }

    fn seeds(&self) -> serde_json::Value {
        json!({
            "split": self.cfg.split.seed,
            "fit": self.cfg.fit.seed,
            "tune_base": self.cfg.tune.base_seed,
        })
    }

    fn finish(mut self) -> Outcome<()> {
        self.artifacts.sort();
        let manifest = json!({
            "command": self.cfg.mode,
            "config_sha256": self.cfg.hash(),
            "config": self.cfg,
            "rng": RNG_SCHEME,
            "seeds": self.seeds(),
            "artifacts": self.artifacts,
        });
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        let path = self.path(&manifest_file(self.cfg.mode));
        fs::write(&path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

pub fn execute(cfg: &RunConfig, jobs: Option<usize>, console: &mut dyn Console) -> Outcome<()> {
    let _lock = OutputLock::acquire(&cfg.out_dir)?;
    let mut run = Run {
        cfg,
        jobs,
        artifacts: Vec::new(),
    };
    match cfg.mode {
        Mode::Fit => cmd_fit(&mut run, console)?,
        Mode::Eval => cmd_eval(&mut run, console)?,
        Mode::Tune => cmd_tune(&mut run, console)?,
        Mode::Report => return cmd_report(cfg, console),
    }
    run.finish()
}

fn cmd_fit(run: &mut Run, console: &mut dyn Console) -> Outcome<()> {
    let y = run.load_data()?;
    let split = run.write_split(&y)?;
    let fit_cfg = run.cfg.fit_config()?;
    let every = run.cfg.fit.progress_every;
    let mut observer = |p: &Progress| {
        if every > 0 && p.iteration.is_multiple_of(every) {
            console.progress(&format!("iter {} objective {}", p.iteration, p.objective));
        }
    };
    let (factors, report) = fit_with_observer(&y, &split.train, &fit_cfg, None, &mut observer)?;
    let header = FactorHeader::from_fit(&factors, &fit_cfg, &report);
    save_factors(&run.cfg.out_dir, &factors, &header)?;
    for name in [W_FILE, H_FILE, HEADER_FILE] {
        run.record(name);
    }
    run.write(FIT_REPORT_FILE, &(report.to_json()? + "\n"))?;
    console.result(&format!(
        "fit: K={} alpha={} beta={} iterations={} converged={} objective={}",
        fit_cfg.rank,
        fit_cfg.prior.alpha(),
        fit_cfg.prior.beta(),
        report.n_iter,
        report.converged,
        report.final_objective()
    ));
    Ok(())
}

fn cmd_eval(run: &mut Run, console: &mut dyn Console) -> Outcome<()> {
    let y = run.load_data()?;
    let (factors, _) = load_factors(&run.cfg.out_dir)?;
    if (factors.n_rows(), factors.n_cols()) != y.shape() {
        return Err(CliError::Runtime(format!(
            "factors reconstruct a {}x{} matrix but the dataset is {}x{}",
            factors.n_rows(),
            factors.n_cols(),
            y.n_rows(),
            y.n_cols()
        )));
    }
    let split = run.read_split(&y)?;
    let report = completion_report(&y, &split.val, &split.test, &predict_from_factors(&factors))?;
    run.write(EVAL_JSON_FILE, &(report.to_json()? + "\n"))?;
    run.write(EVAL_CSV_FILE, &format!("{REPORT_CSV_HEADER}\n{}\n", report.to_csv_row()))?;
    console.result(&format!(
        "eval: validation perplexity {} ({} cells), test perplexity {} ({} cells)",
        report.validation.perplexity,
        report.validation.n_cells,
        report.test.perplexity,
        report.test.n_cells
    ));
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub point: GridPoint,
    pub test_perplexities: Vec<f64>,
    pub stats: BoxStats,
}

impl From<&TestEvaluation> for RestartSummary {
    fn from(t: &TestEvaluation) -> Self {
        RestartSummary {
            point: t.point,
            test_perplexities: t.test_perplexities(),
            stats: t.summary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneSummary {
    pub log_base: String,
    pub best: GridPoint,
    pub best_val_perplexity: f64,
    pub test: RestartSummary,
    /// The best alpha = beta = 1 point, when the grid contains one.
    pub uniform_prior: Option<RestartSummary>,
}

fn partial_marker(cfg: &RunConfig) -> String {
    format!("# config {}", cfg.hash())
}

/// Rows of an interrupted run with the same configuration.
fn read_partial(path: &Path, marker: &str) -> Outcome<Vec<GridRow>> {
    let Ok(text) = fs::read_to_string(path) else {
        return Ok(Vec::new());
    };
    let mut lines = text.lines();
    if lines.next() != Some(marker) || lines.next() != Some(GRID_CSV_HEADER) {
        return Ok(Vec::new());
    }
    // a truncated final line is dropped
    Ok(lines.filter_map(|l| GridRow::from_csv_line(l).ok()).collect())
}

fn cmd_tune(run: &mut Run, console: &mut dyn Console) -> Outcome<()> {
    let y = run.load_data()?;
    let split = run.write_split(&y)?;
    let grid = run.cfg.grid_spec();

    let marker = partial_marker(run.cfg);
    let partial_path = run.path(PARTIAL_FILE);
    let completed = read_partial(&partial_path, &marker)?;
    if !completed.is_empty() {
        console.progress(&format!("resuming: {} grid fits already done", completed.len()));
    }
    let mut body = format!("{marker}\n{GRID_CSV_HEADER}\n");
    for row in &completed {
        body.push_str(&row.to_csv_line(true));
        body.push('\n');
    }
    fs::write(&partial_path, body)?;
    let sink = Mutex::new(OpenOptions::new().append(true).open(&partial_path)?);
    let total = grid.points().len();
    let done = Mutex::new(completed.len());
    let on_row = |row: &GridRow| {
        let mut n = done.lock().unwrap();
        *n += 1;
        let mut f = sink.lock().unwrap();
        // losing a checkpoint line only costs a refit on resume
        let _ = writeln!(f, "{}", row.to_csv_line(true)).and_then(|_| f.flush());
        eprintln!(
            "grid {}/{}: K={} alpha={} beta={} val={}",
            *n,
            total,
            row.rank,
            row.alpha,
            row.beta,
            row.val_perplexity.map_or_else(|| "failed".into(), |v| v.to_string())
        );
    };
    let options = SearchOptions {
        jobs: run.jobs,
        test: None,
        completed,
        on_row: Some(&on_row),
    };
    let outcome = grid_search_with(&y, &split.train, &split.val, &grid, options)?;
    run.record(PARTIAL_FILE);
    run.write(GRID_FILE, &outcome.result.to_csv(false))?;

    let heatmap = export_heatmap(&outcome.result, outcome.best.rank, run.cfg.tune.heatmap)?;
    run.write(&format!("heatmap_K{}.csv", outcome.best.rank), &heatmap)?;

    let evaluate = |point: GridPoint| {
        test_evaluation(
            &y,
            &split.train,
            &split.test,
            point,
            grid.n_restarts,
            grid.base_seed,
            &grid,
            run.jobs,
        )
    };
    let best_eval = evaluate(outcome.best)?;
    let uniform = best_uniform_point(&outcome.result)
        .map(|p| if p == outcome.best { Ok(best_eval.clone()) } else { evaluate(p) })
        .transpose()?;

    let mut restarts = best_eval.restarts.clone();
    if let Some(u) = &uniform {
        if u.point != outcome.best {
            restarts.extend(u.restarts.iter().cloned());
        }
    }
    run.write(TEST_RESTARTS_FILE, &GridResult { rows: restarts }.to_csv(false))?;

    let summary = TuneSummary {
        log_base: "nats".into(),
        best: outcome.best,
        best_val_perplexity: outcome.best_val_perplexity,
        test: RestartSummary::from(&best_eval),
        uniform_prior: uniform.as_ref().map(RestartSummary::from),
    };
    run.write(SUMMARY_FILE, &(serde_json::to_string_pretty(&summary)? + "\n"))?;

    console.result(&format!(
        "best: K={} alpha={} beta={} (validation perplexity {})",
        outcome.best.rank, outcome.best.alpha, outcome.best.beta, outcome.best_val_perplexity
    ));
    console.result(&format!(
        "median test perplexity over {} restarts: {}",
        grid.n_restarts, best_eval.summary.median
    ));
    if let Some(u) = &uniform {
        console.result(&format!(
            "alpha=beta=1 at K={}: median test perplexity {}",
            u.point.rank, u.summary.median
        ));
    }
    Ok(())
}

/// Lowest validation perplexity among the alpha = beta = 1 rows.
fn best_uniform_point(result: &GridResult) -> Option<GridPoint> {
    let rows: Vec<GridRow> = result
        .rows
        .iter()
        .filter(|r| r.alpha == 1.0 && r.beta == 1.0)
        .cloned()
        .collect();
    GridResult { rows }.best().ok().map(|(p, _)| p)
}

fn cmd_report(cfg: &RunConfig, console: &mut dyn Console) -> Outcome<()> {
    let dir = &cfg.out_dir;
    let y = load_coordinate_file(&cfg.dataset)?;
    console.result(&format!(
        "dataset {}: {}x{}, {} ones",
        cfg.dataset.display(),
        y.n_rows(),
        y.n_cols(),
        y.ones().len()
    ));
    let mut found = false;
    if let Ok(text) = fs::read_to_string(dir.join(FIT_REPORT_FILE)) {
        let r = FitReport::from_json(&text)?;
        found = true;
        console.result(&format!(
            "fit: {} iterations, converged={}, objective {}",
            r.n_iter,
            r.converged,
            r.final_objective()
        ));
    }
    if let Ok(text) = fs::read_to_string(dir.join(EVAL_JSON_FILE)) {
        let r = nbmf_core::CompletionReport::from_json(&text)?;
        found = true;
        console.result(&format!(
            "eval: validation perplexity {}, test perplexity {} ({})",
            r.validation.perplexity, r.test.perplexity, r.log_base
        ));
    }
    if let Ok(text) = fs::read_to_string(dir.join(SUMMARY_FILE)) {
        let s: TuneSummary = serde_json::from_str(&text)?;
        found = true;
        console.result(&format!(
            "tune: best K={} alpha={} beta={}, validation {}, test median {} [q1 {}, q3 {}]",
            s.best.rank,
            s.best.alpha,
            s.best.beta,
            s.best_val_perplexity,
            s.test.stats.median,
            s.test.stats.q1,
            s.test.stats.q3
        ));
        if let Some(u) = s.uniform_prior {
            console.result(&format!(
                "tune: alpha=beta=1 at K={}, test median {}",
                u.point.rank, u.stats.median
            ));
        }
    }
    if !found {
        return Err(CliError::Runtime(format!("no run artifacts in {}", dir.display())));
    }
    Ok(())
}
