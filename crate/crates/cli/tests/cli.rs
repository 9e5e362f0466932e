//! End-to-end runs of the `nbmf` binary.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nbmf_cli::run::{
    manifest_file, EVAL_CSV_FILE, EVAL_JSON_FILE, FIT_REPORT_FILE, GRID_FILE, LOCK_FILE,
    PARTIAL_FILE, SUMMARY_FILE, TEST_RESTARTS_FILE, TRAIN_MASK_FILE,
};
use nbmf_cli::Mode;
use nbmf_core::CompletionReport;
use serde_json::Value;

const DATA: &str = "\
# 6 x 5 toy matrix
6 5
0 0
0 1
1 0
1 1
2 2
2 3
3 2
3 3
4 4
5 4
5 0
";

fn nbmf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbmf"))
        .args(args)
        .current_dir(dir)
        .env_remove("NBMF_JOBS")
        .output()
        .expect("binary runs")
}

fn setup(extra: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("y.txt"), DATA).unwrap();
    let cfg = format!(
        "[data]\npath = \"y.txt\"\n[fit]\nrank = 2\nalpha = 1.5\nbeta = 1.5\n[output]\ndir = \"out\"\n{extra}"
    );
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let out = dir.path().join("out");
    (dir, out)
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_GRID: &str = "[tune]\nranks = [1, 2]\nalphas = [1.0, 2.0]\nbetas = [1.0, 3.0]\nrestarts = 3\n";

#[test]
fn fit_writes_factors_report_masks_and_manifest() {
    let (dir, out) = setup("");
    let o = nbmf(dir.path(), &["fit", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["W.txt", "H.txt", "factors.json", FIT_REPORT_FILE, TRAIN_MASK_FILE, "val_mask.txt", "test_mask.txt"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let manifest: Value = serde_json::from_str(&read(out.join(manifest_file(Mode::Fit)))).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["seeds"]["fit"], 0);
    assert!(manifest["artifacts"].as_array().unwrap().iter().any(|a| a == "W.txt"));
}

#[test]
fn missing_dataset_exits_with_config_error_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[data]\npath = \"absent.txt\"\n[fit]\nrank = 2\n").unwrap();
    let o = nbmf(dir.path(), &["fit", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.txt"), "{}", stderr(&o));
}

#[test]
fn malformed_config_and_bad_flags_exit_2() {
    let (dir, _) = setup("[fit.extra]\nx = 1\n");
    assert_eq!(nbmf(dir.path(), &["fit", "--config", "run.toml"]).status.code(), Some(2));
    let (dir, _) = setup("");
    assert_eq!(nbmf(dir.path(), &["fit"]).status.code(), Some(2));
    assert_eq!(nbmf(dir.path(), &["fit", "--config", "run.toml", "--jobs", "0"]).status.code(), Some(2));
    assert_eq!(nbmf(dir.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unparsable_dataset_exits_1() {
    let (dir, _) = setup("");
    fs::write(dir.path().join("y.txt"), "3 3\n0 7\n").unwrap();
    let o = nbmf(dir.path(), &["fit", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn fit_rerun_is_byte_identical_and_seed_flag_changes_it() {
    let (dir, out) = setup("");
    assert!(nbmf(dir.path(), &["fit", "--config", "run.toml"]).status.success());
    let first: Vec<String> = ["W.txt", "H.txt", "factors.json"].iter().map(|f| read(out.join(f))).collect();
    assert!(nbmf(dir.path(), &["fit", "--config", "run.toml"]).status.success());
    let second: Vec<String> = ["W.txt", "H.txt", "factors.json"].iter().map(|f| read(out.join(f))).collect();
    assert_eq!(first, second);

    assert!(nbmf(dir.path(), &["fit", "--config", "run.toml", "--seed", "7", "--out", "other"]).status.success());
    let other = dir.path().join("other");
    assert_ne!(read(other.join("W.txt")), first[0]);
    // the split seed stays with the config
    assert_eq!(read(other.join(TRAIN_MASK_FILE)), read(out.join(TRAIN_MASK_FILE)));
}

#[test]
fn progress_lines_follow_cadence() {
    let (dir, _) = setup("");
    let cfg = read(dir.path().join("run.toml")).replace("beta = 1.5\n", "beta = 1.5\nprogress_every = 1\n");
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let o = nbmf(dir.path(), &["fit", "--config", "run.toml"]);
    assert!(o.status.success());
    let report: Value = serde_json::from_str(&read(dir.path().join("out").join(FIT_REPORT_FILE))).unwrap();
    let lines = stderr(&o).lines().filter(|l| l.starts_with("iter ")).count();
    assert_eq!(lines, report["n_iter"].as_u64().unwrap() as usize);
}

#[test]
fn eval_after_fit_reports_finite_perplexities() {
    let (dir, out) = setup("");
    assert!(nbmf(dir.path(), &["fit", "--config", "run.toml"]).status.success());
    let o = nbmf(dir.path(), &["eval", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = CompletionReport::from_json(&read(out.join(EVAL_JSON_FILE))).unwrap();
    assert!(report.validation.perplexity.is_finite() && report.test.perplexity.is_finite());
    assert_eq!(read(out.join(EVAL_CSV_FILE)).lines().count(), 2);
}

#[test]
fn eval_with_wrong_width_factors_exits_1() {
    let (dir, out) = setup("");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("W.txt"), "1\n".repeat(6)).unwrap();
    fs::write(out.join("H.txt"), "0.5 0.5 0.5 0.5\n").unwrap();
    let o = nbmf(dir.path(), &["eval", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn eval_of_constant_half_factors_is_log_two() {
    let (dir, out) = setup("");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("W.txt"), "1\n".repeat(6)).unwrap();
    fs::write(out.join("H.txt"), "0.5 0.5 0.5 0.5 0.5\n").unwrap();
    let o = nbmf(dir.path(), &["eval", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = CompletionReport::from_json(&read(out.join(EVAL_JSON_FILE))).unwrap();
    assert!((report.validation.perplexity - 2f64.ln()).abs() < 1e-12);
    assert!((report.test.perplexity - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn single_point_tune_writes_all_artifacts() {
    let (dir, out) = setup("[tune]\nranks = [2]\nalphas = [1.5]\nbetas = [1.0]\nrestarts = 2\n");
    let o = nbmf(dir.path(), &["tune", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read(out.join(GRID_FILE)).lines().count(), 2);
    assert_eq!(read(out.join("heatmap_K2.csv")), format!("alpha\\beta,1\n1.5,{}\n", {
        let line = read(out.join(GRID_FILE));
        let row: Vec<String> = line.lines().nth(1).unwrap().split(',').map(String::from).collect();
        row[4].clone()
    }));
    let summary: Value = serde_json::from_str(&read(out.join(SUMMARY_FILE))).unwrap();
    assert_eq!(summary["test"]["test_perplexities"].as_array().unwrap().len(), 2);
    assert!(summary["uniform_prior"].is_null());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("best: K=2 alpha=1.5 beta=1"), "{stdout}");
    assert!(stdout.contains("median test perplexity"), "{stdout}");

    let o = nbmf(dir.path(), &["report", "--config", "run.toml"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("tune: best K=2"));
}

#[test]
fn tune_is_deterministic_across_runs_and_job_counts() {
    let (dir, out) = setup(SMALL_GRID);
    let files = [GRID_FILE, "heatmap_K1.csv", TEST_RESTARTS_FILE, SUMMARY_FILE];
    let collect = |o: &Output| {
        assert!(o.status.success(), "{}", stderr(o));
        let best = String::from_utf8_lossy(&o.stdout).lines().next().unwrap().to_string();
        let k = best.split("K=").nth(1).unwrap().split(' ').next().unwrap().to_string();
        let mut v: Vec<String> = files.iter().map(|f| read(out.join(f.replace("K1", &format!("K{k}"))))).collect();
        v.push(best);
        v
    };
    let a = collect(&nbmf(dir.path(), &["tune", "--config", "run.toml", "--jobs", "1"]));
    fs::remove_file(out.join(PARTIAL_FILE)).unwrap();
    let b = collect(&nbmf(dir.path(), &["tune", "--config", "run.toml", "--jobs", "4"]));
    assert_eq!(a, b);
}

#[test]
fn tune_resumes_from_truncated_partial_file() {
    let (dir, out) = setup(SMALL_GRID);
    let o = nbmf(dir.path(), &["tune", "--config", "run.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let full = read(out.join(GRID_FILE));
    let summary = read(out.join(SUMMARY_FILE));

    // keep the marker, the header, two rows and half of a third
    let partial = read(out.join(PARTIAL_FILE));
    let lines: Vec<&str> = partial.lines().collect();
    assert_eq!(lines.len(), 2 + 8);
    let cut = format!("{}\n{}\n{}\n{}\n{}", lines[0], lines[1], lines[2], lines[3], &lines[4][..lines[4].len() / 2]);
    fs::write(out.join(PARTIAL_FILE), cut).unwrap();
    for f in [GRID_FILE, SUMMARY_FILE] {
        fs::remove_file(out.join(f)).unwrap();
    }

    let o = nbmf(dir.path(), &["tune", "--config", "run.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("resuming: 2 grid fits"), "{}", stderr(&o));
    assert_eq!(stderr(&o).lines().filter(|l| l.starts_with("grid ")).count(), 6);
    assert_eq!(read(out.join(GRID_FILE)), full);
    assert_eq!(read(out.join(SUMMARY_FILE)), summary);
    assert_eq!(read(out.join(PARTIAL_FILE)).lines().count(), 10);
}

#[test]
fn partial_file_from_other_config_is_ignored() {
    let (dir, out) = setup(SMALL_GRID);
    assert!(nbmf(dir.path(), &["tune", "--config", "run.toml"]).status.success());
    let o = nbmf(dir.path(), &["tune", "--config", "run.toml", "--seed", "3"]);
    assert!(o.status.success());
    assert!(!stderr(&o).contains("resuming"));
    assert_eq!(stderr(&o).lines().filter(|l| l.starts_with("grid ")).count(), 8);
    assert!(read(out.join(manifest_file(Mode::Tune))).contains("\"tune_base\": 3"));
}

#[test]
fn concurrent_run_on_same_output_is_rejected() {
    let (dir, out) = setup("");
    fs::create_dir_all(&out).unwrap();
    let held = OpenOptions::new().create(true).truncate(false).write(true).open(out.join(LOCK_FILE)).unwrap();
    held.lock().unwrap();
    let o = nbmf(dir.path(), &["fit", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("in use"), "{}", stderr(&o));
    held.unlock().unwrap();
    assert!(nbmf(dir.path(), &["fit", "--config", "run.toml"]).status.success());
}

#[test]
fn report_without_artifacts_exits_1() {
    let (dir, _) = setup("");
    assert_eq!(nbmf(dir.path(), &["report", "--config", "run.toml"]).status.code(), Some(1));
}
