//! Run configuration, read from a TOML file.
//!
//! ```toml
//! [data]
//! path = "animals.txt"   # relative paths resolve against the config file
//!
//! [split]                # optional; defaults to 0.7 / 0.15 / 0.15, seed 0
//! train = 0.7
//! val = 0.15
//! test = 0.15
//! seed = 0
//!
//! [fit]                  # `rank` is required for `fit`
//! rank = 4
//! alpha = 1.5
//! beta = 1.0
//!
//! [tune]
//! ranks = [2, 4, 8]
//! alphas = [1.0, 1.5, 2.0]
//! betas = [1.0, 1.5, 2.0]
//!
//! [output]
//! dir = "runs/animals"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nbmf_core::nbmf::{DEFAULT_EPSILON, DEFAULT_MAX_ITER, DEFAULT_TOL};
use nbmf_core::tune::Aggregate;
use nbmf_core::{BetaPrior, FitConfig, GridSpec, SplitSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fit,
    Eval,
    Tune,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let s = SplitSpec::default();
        SplitSection {
            train: s.train_frac,
            val: s.val_frac,
            test: s.test_frac,
            seed: s.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub rank: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Print a progress line every this many sweeps; 0 disables it.
    pub progress_every: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            rank: None,
            alpha: 1.0,
            beta: 1.0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            progress_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    pub ranks: Vec<usize>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub restarts: usize,
    pub base_seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
    pub heatmap: Aggregate,
}

impl Default for TuneSection {
    fn default() -> Self {
        let g = GridSpec::default();
        TuneSection {
            ranks: g.ranks,
            alphas: g.alphas,
            betas: g.betas,
            restarts: g.n_restarts,
            base_seed: g.base_seed,
            tol: g.tol,
            max_iter: g.max_iter,
            epsilon: g.epsilon,
            heatmap: Aggregate::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("nbmf-out"),
        }
    }
}

/// The file as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub data: DataSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub tune: TuneSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Validated configuration for one run, with paths resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub dataset: PathBuf,
    pub split: SplitSection,
    pub fit: FitSection,
    pub tune: TuneSection,
    pub out_dir: PathBuf,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn load(path: &Path, mode: Mode, overrides: &Overrides) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let file: ConfigFile = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_file(file, base, mode, overrides)
    }

    pub fn from_file(
        mut file: ConfigFile,
        base: &Path,
        mode: Mode,
        overrides: &Overrides,
    ) -> Result<Self, CliError> {
        if let Some(seed) = overrides.seed {
            file.fit.seed = seed;
            file.tune.base_seed = seed;
        }
        let out_dir = match &overrides.out {
            Some(dir) => dir.clone(),
            None => resolve(base, &file.output.dir),
        };
        let cfg = RunConfig {
            mode,
            dataset: resolve(base, &file.data.path),
            split: file.split,
            fit: file.fit,
            tune: file.tune,
            out_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.dataset.is_file() {
            return Err(CliError::Config(format!(
                "dataset path {} does not exist",
                self.dataset.display()
            )));
        }
        self.split_spec()?;
        match self.mode {
            Mode::Fit => {
                self.fit_config()?;
            }
            Mode::Tune => {
                self.grid_spec().validate()?;
            }
            Mode::Eval | Mode::Report => {}
        }
        Ok(())
    }

    pub fn split_spec(&self) -> Result<SplitSpec, CliError> {
        Ok(SplitSpec::new(
            self.split.train,
            self.split.val,
            self.split.test,
            self.split.seed,
        )?)
    }

    pub fn fit_config(&self) -> Result<FitConfig, CliError> {
        let rank = self
            .fit
            .rank
            .ok_or_else(|| CliError::Config("[fit] rank is required".into()))?;
        let cfg = FitConfig {
            rank,
            prior: BetaPrior::new(self.fit.alpha, self.fit.beta)?,
            tol: self.fit.tol,
            max_iter: self.fit.max_iter,
            epsilon: self.fit.epsilon,
            seed: self.fit.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            ranks: self.tune.ranks.clone(),
            alphas: self.tune.alphas.clone(),
            betas: self.tune.betas.clone(),
            n_restarts: self.tune.restarts,
            base_seed: self.tune.base_seed,
            tol: self.tune.tol,
            max_iter: self.tune.max_iter,
            epsilon: self.tune.epsilon,
        }
    }

    /// SHA-256 of the effective configuration, used to tie artifacts to it.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn defaults_follow_protocol() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "y.txt", "2 2\n0 0\n");
        let cfg_path = write(dir.path(), "run.toml", "[data]\npath = \"y.txt\"\n[fit]\nrank = 2\n");
        let cfg = RunConfig::load(&cfg_path, Mode::Fit, &Overrides::default()).unwrap();
        assert_eq!(cfg.dataset, dir.path().join("y.txt"));
        assert_eq!((cfg.split.train, cfg.split.val, cfg.split.test), (0.7, 0.15, 0.15));
        let fit = cfg.fit_config().unwrap();
        assert_eq!((fit.tol, fit.max_iter), (1e-5, 2000));
        assert_eq!(cfg.out_dir, dir.path().join("nbmf-out"));
    }

    #[test]
    fn missing_dataset_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = write(dir.path(), "run.toml", "[data]\npath = \"nope.txt\"\n");
        match RunConfig::load(&cfg_path, Mode::Eval, &Overrides::default()) {
            Err(CliError::Config(msg)) => assert!(msg.contains("nope.txt")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "y.txt", "2 2\n");
        for text in [
            "[data]\npath = \"y.txt\"\n[fit]\nrank = 2\nlearning_rate = 3\n",
            "[data]\npath = \"y.txt\"\n[fit]\nrank = 2\nalpha = 0.5\n",
            "[data]\npath = \"y.txt\"\n",
            "[data]\npath = \"y.txt\"\n[split]\ntrain = 0.9\n",
        ] {
            let p = write(dir.path(), "bad.toml", text);
            assert!(matches!(
                RunConfig::load(&p, Mode::Fit, &Overrides::default()),
                Err(CliError::Config(_))
            ), "{text}");
        }
    }

    #[test]
    fn seed_override_changes_hash() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "y.txt", "2 2\n");
        let p = write(dir.path(), "run.toml", "[data]\npath = \"y.txt\"\n[fit]\nrank = 1\n");
        let a = RunConfig::load(&p, Mode::Fit, &Overrides::default()).unwrap();
        let b = RunConfig::load(&p, Mode::Fit, &Overrides { seed: Some(9), out: None }).unwrap();
        assert_eq!(b.fit.seed, 9);
        assert_eq!(b.tune.base_seed, 9);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), RunConfig::load(&p, Mode::Fit, &Overrides::default()).unwrap().hash());
    }
}
