use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use typlab::{
    config::{BoundFile, DynamicsFile, OutputFile},
    ConfigFile, EnsembleSpec, Experiment, Format, Mode, ObservableSpec, TyplabError,
};

/// Typicality statistics of random pure-state ensembles.
#[derive(Debug, Parser)]
#[command(name = "typlab", version, about)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,

    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Comma-separated dimensions, e.g. 2,4,8.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,

    /// gmc-uniform | gmc-pure | gmc:p0,p1,... | dirichlet:a0,... | haar
    #[arg(long)]
    ensemble: Option<EnsembleSpec>,

    /// diag-linear:a,d | fourier-linear | projector:n | random-hermitian:seed | identity.
    /// Repeat for several observables.
    #[arg(long = "observable")]
    observables: Vec<ObservableSpec>,

    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<u64>,

    /// Seed; defaults to $TYPLAB_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,

    /// Random stream.
    #[arg(long)]
    stream: Option<u64>,

    #[arg(long, value_enum)]
    mode: Option<Mode>,

    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,

    /// Cells in the bound sweep.
    #[arg(long)]
    cells: Option<usize>,

    /// Hamiltonian for the dynamics experiment (observable syntax).
    #[arg(long)]
    hamiltonian: Option<ObservableSpec>,

    /// Upper end of the dynamics time grid.
    #[arg(long)]
    t_max: Option<f64>,

    /// Number of dynamics time points.
    #[arg(long)]
    n_times: Option<usize>,

    /// Random instances per dimension in the dynamics experiment.
    #[arg(long)]
    instances: Option<usize>,
}

impl Cli {
    fn overrides(&self) -> ConfigFile {
        ConfigFile {
            experiment: Some(self.experiment),
            dims: self.dims.clone(),
            ensemble: self.ensemble.clone(),
            observables: (!self.observables.is_empty()).then(|| self.observables.clone()),
            n_samples: self.samples,
            seed: self.seed,
            stream: self.stream,
            mode: self.mode,
            workers: self.workers,
            output: OutputFile {
                path: self.out.clone(),
                format: self.format,
            },
            bound: BoundFile { cells: self.cells },
            dynamics: DynamicsFile {
                hamiltonian: self.hamiltonian.clone(),
                t_max: self.t_max,
                n_times: self.n_times,
                instances: self.instances,
            },
        }
    }
}

fn env_seed() -> Result<Option<u64>, TyplabError> {
    match std::env::var("TYPLAB_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| TyplabError::Config(format!("TYPLAB_SEED={s:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: &Cli) -> Result<(), TyplabError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let (config, opts) = file.overlay(cli.overrides()).resolve(env_seed()?)?;
    let record = typlab::run(&config, &opts)?;

    match &opts.path {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            record.write(opts.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            record.write(opts.format, &mut lock)?;
        }
    }
    for w in &record.warnings {
        log::warn!("{w}");
    }
    if record.failures.is_empty() {
        Ok(())
    } else {
        Err(TyplabError::Validation(record.failures.clone()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap's own usage exit code (2) is reserved for validation failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("typlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
