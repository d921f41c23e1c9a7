//! Experiment configuration.
//!
//! A run is described by one TOML file plus command-line overrides; flags win
//! over the file, the file wins over `TYPLAB_SEED`, and per-experiment
//! defaults fill whatever is left. The resolved [`ExperimentConfig`] is what
//! gets echoed into every output and hashed into its metadata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use typlab_core::RandomSeed;

use crate::error::{Result, TyplabError};
use crate::spec::{EnsembleSpec, ObservableSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Bound,
    Scaling,
    Dichotomy,
    Decompose,
    Dynamics,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bound => "bound",
            Self::Scaling => "scaling",
            Self::Dichotomy => "dichotomy",
            Self::Decompose => "decompose",
            Self::Dynamics => "dynamics",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
    Both,
}

impl Mode {
    pub fn exact(self) -> bool {
        matches!(self, Self::Exact | Self::Both)
    }

    pub fn mc(self) -> bool {
        matches!(self, Self::Mc | Self::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// On-disk shape: every field optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub dims: Option<Vec<usize>>,
    pub ensemble: Option<EnsembleSpec>,
    pub observables: Option<Vec<ObservableSpec>>,
    pub n_samples: Option<u64>,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub mode: Option<Mode>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: OutputFile,
    #[serde(default)]
    pub bound: BoundFile,
    #[serde(default)]
    pub dynamics: DynamicsFile,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundFile {
    pub cells: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsFile {
    pub hamiltonian: Option<ObservableSpec>,
    pub t_max: Option<f64>,
    pub n_times: Option<usize>,
    pub instances: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TyplabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Field-wise overlay; `Some` values in `top` replace those in `self`.
    pub fn overlay(self, top: Self) -> Self {
        Self {
            experiment: top.experiment.or(self.experiment),
            dims: top.dims.or(self.dims),
            ensemble: top.ensemble.or(self.ensemble),
            observables: top.observables.or(self.observables),
            n_samples: top.n_samples.or(self.n_samples),
            seed: top.seed.or(self.seed),
            stream: top.stream.or(self.stream),
            mode: top.mode.or(self.mode),
            workers: top.workers.or(self.workers),
            output: OutputFile {
                path: top.output.path.or(self.output.path),
                format: top.output.format.or(self.output.format),
            },
            bound: BoundFile {
                cells: top.bound.cells.or(self.bound.cells),
            },
            dynamics: DynamicsFile {
                hamiltonian: top.dynamics.hamiltonian.or(self.dynamics.hamiltonian),
                t_max: top.dynamics.t_max.or(self.dynamics.t_max),
                n_times: top.dynamics.n_times.or(self.dynamics.n_times),
                instances: top.dynamics.instances.or(self.dynamics.instances),
            },
        }
    }

    /// Fills defaults and validates. `env_seed` is the `TYPLAB_SEED` value, if any.
    pub fn resolve(self, env_seed: Option<u64>) -> Result<(ExperimentConfig, RunOptions)> {
        let experiment = self
            .experiment
            .ok_or_else(|| TyplabError::Usage("no experiment given".into()))?;
        let seed = self.seed.or(env_seed).unwrap_or(0);
        let defaults = Defaults::for_experiment(experiment, seed);

        let config = ExperimentConfig {
            experiment,
            dims: self.dims.unwrap_or(defaults.dims),
            ensemble: self.ensemble.unwrap_or(defaults.ensemble),
            observables: self.observables.unwrap_or(defaults.observables),
            n_samples: self.n_samples.unwrap_or(100_000),
            seed: RandomSeed::new(seed, self.stream.unwrap_or(0)),
            mode: self.mode.unwrap_or(defaults.mode),
            bound: BoundSettings {
                cells: self.bound.cells.unwrap_or(1000),
            },
            dynamics: DynamicsSettings {
                hamiltonian: self
                    .dynamics
                    .hamiltonian
                    .unwrap_or(ObservableSpec::RandomHermitian(seed)),
                t_max: self.dynamics.t_max.unwrap_or(50.0),
                n_times: self.dynamics.n_times.unwrap_or(100),
                instances: self.dynamics.instances.unwrap_or(1),
            },
        };
        config.validate()?;

        let path = self.output.path;
        let format = self.output.format.unwrap_or_else(|| match &path {
            Some(p) if p.extension().is_some_and(|e| e == "json") => Format::Json,
            _ => Format::Csv,
        });
        let workers = self.workers.unwrap_or(1);
        if workers == 0 {
            return Err(TyplabError::Config("workers must be at least 1".into()));
        }
        Ok((config, RunOptions { workers, path, format }))
    }
}

struct Defaults {
    dims: Vec<usize>,
    ensemble: EnsembleSpec,
    observables: Vec<ObservableSpec>,
    mode: Mode,
}

impl Defaults {
    fn for_experiment(experiment: Experiment, seed: u64) -> Self {
        use ObservableSpec::*;
        let diag = DiagLinear { a: 0.0, d: 1.0 };
        match experiment {
            Experiment::Scaling => Self {
                dims: vec![64, 128, 256, 512, 1024],
                ensemble: EnsembleSpec::GmcUniform,
                observables: vec![FourierLinear],
                mode: Mode::Exact,
            },
            Experiment::Dichotomy => Self {
                dims: vec![8],
                ensemble: EnsembleSpec::GmcUniform,
                observables: vec![diag, FourierLinear],
                mode: Mode::Exact,
            },
            Experiment::Bound => Self {
                dims: (2..=32).collect(),
                ensemble: EnsembleSpec::Dirichlet(vec![1.0]),
                observables: vec![RandomHermitian(seed)],
                mode: Mode::Exact,
            },
            Experiment::Decompose => Self {
                dims: vec![4],
                ensemble: EnsembleSpec::GmcUniform,
                observables: vec![FourierLinear, diag],
                mode: Mode::Both,
            },
            Experiment::Dynamics => Self {
                dims: vec![8, 16, 32, 64],
                ensemble: EnsembleSpec::Haar,
                observables: vec![RandomHermitian(seed)],
                mode: Mode::Exact,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSettings {
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSettings {
    pub hamiltonian: ObservableSpec,
    pub t_max: f64,
    pub n_times: usize,
    pub instances: usize,
}

impl DynamicsSettings {
    /// `n_times` evenly spaced points on `[0, t_max]`; a single point is `{0}`.
    pub fn times(&self) -> Vec<f64> {
        match self.n_times {
            0 => Vec::new(),
            1 => vec![0.0],
            k => (0..k).map(|i| self.t_max * i as f64 / (k - 1) as f64).collect(),
        }
    }
}

/// Everything that determines the numbers a run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dims: Vec<usize>,
    pub ensemble: EnsembleSpec,
    pub observables: Vec<ObservableSpec>,
    pub n_samples: u64,
    pub seed: RandomSeed,
    pub mode: Mode,
    pub bound: BoundSettings,
    pub dynamics: DynamicsSettings,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(TyplabError::Config(m.into()));
        if self.dims.is_empty() {
            return fail("dims must be nonempty");
        }
        if self.dims.contains(&0) {
            return fail("every dimension must be at least 1");
        }
        if self.observables.is_empty() {
            return fail("at least one observable is required");
        }
        if self.mode.mc() && self.n_samples < 2 {
            return fail("n_samples must be at least 2 when mode includes mc");
        }
        if self.bound.cells == 0 {
            return fail("bound.cells must be at least 1");
        }
        if self.dynamics.n_times == 0 || self.dynamics.instances == 0 {
            return fail("dynamics.n_times and dynamics.instances must be at least 1");
        }
        if !self.dynamics.t_max.is_finite() {
            return fail("dynamics.t_max must be finite");
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Execution settings that do not affect any computed number.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub workers: usize,
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
experiment = "scaling"
dims = [4, 8]
ensemble = "gmc-uniform"
observables = ["fourier-linear", "diag-linear:0,1"]
seed = 7

[output]
path = "out.json"

[dynamics]
t_max = 10.0
"#;

    #[test]
    fn parses_and_resolves() {
        let (cfg, opts) = ConfigFile::parse(SAMPLE).unwrap().resolve(None).unwrap();
        assert_eq!(cfg.dims, vec![4, 8]);
        assert_eq!(cfg.observables.len(), 2);
        assert_eq!(cfg.seed, RandomSeed::new(7, 0));
        assert_eq!(cfg.dynamics.t_max, 10.0);
        assert_eq!(cfg.dynamics.n_times, 100);
        assert_eq!(opts.format, Format::Json);
    }

    #[test]
    fn flags_win_then_file_then_env() {
        let file = ConfigFile::parse(SAMPLE).unwrap();
        let flags = ConfigFile {
            dims: Some(vec![16]),
            seed: Some(99),
            ..Default::default()
        };
        let (cfg, _) = file.clone().overlay(flags).resolve(Some(5)).unwrap();
        assert_eq!(cfg.dims, vec![16]);
        assert_eq!(cfg.seed.seed, 99);

        let (cfg, _) = file.resolve(Some(5)).unwrap();
        assert_eq!(cfg.seed.seed, 7);

        let bare = ConfigFile {
            experiment: Some(Experiment::Bound),
            ..Default::default()
        };
        assert_eq!(bare.resolve(Some(5)).unwrap().0.seed.seed, 5);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ConfigFile::parse("bogus = 1").is_err());
        assert!(ConfigFile::parse("ensemble = \"nope\"").is_err());
        let no_exp = ConfigFile::default();
        assert!(matches!(no_exp.resolve(None), Err(TyplabError::Usage(_))));

        let cfg = |text: &str| ConfigFile::parse(text).unwrap().resolve(None);
        assert!(cfg("experiment = \"scaling\"\ndims = []").is_err());
        assert!(cfg("experiment = \"scaling\"\ndims = [0]").is_err());
        assert!(cfg("experiment = \"scaling\"\nmode = \"mc\"\nn_samples = 1").is_err());
        assert!(cfg("experiment = \"scaling\"\nworkers = 0").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let (a, _) = ConfigFile::parse(SAMPLE).unwrap().resolve(None).unwrap();
        let (b, _) = ConfigFile::parse(SAMPLE).unwrap().resolve(None).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.n_samples += 1;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn time_grid() {
        let mut d = DynamicsSettings {
            hamiltonian: ObservableSpec::Identity,
            t_max: 50.0,
            n_times: 1,
            instances: 1,
        };
        assert_eq!(d.times(), vec![0.0]);
        d.n_times = 3;
        assert_eq!(d.times(), vec![0.0, 25.0, 50.0]);
    }
}
