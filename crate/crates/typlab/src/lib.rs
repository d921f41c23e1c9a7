//! Experiment runner: configuration, the five experiments and their CSV /
//! JSON records. The `typlab` binary is a thin clap front end over [`run`].

pub mod config;
pub mod error;
pub mod experiments;
pub mod record;
pub mod spec;

pub use config::{ConfigFile, Experiment, ExperimentConfig, Format, Mode, RunOptions};
pub use error::{Result, TyplabError};
pub use experiments::run;
pub use record::RunRecord;
pub use spec::{EnsembleSpec, ObservableSpec};
