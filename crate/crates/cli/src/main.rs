use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irs_core::harness::config::{ArmParam, ModelSpec, OutputFormat};
use irs_core::harness::{self, export};
use irs_core::rng::role;
use irs_core::{bounds, policies, ExperimentConfig, IrsError, PenaltyKind, PolicyKind, RngStream};

const JOBS_ENV: &str = "IRS_JOBS";

#[derive(Parser)]
#[command(name = "irs", version, about = "Information relaxation sampling for finite-horizon Bayesian bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid from a TOML config and print or save the regret table.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Monte Carlo estimate of a performance bound.
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        penalty: PenaltyKind,
        #[arg(long = "T", alias = "horizon")]
        horizon: usize,
        #[arg(long = "S", alias = "samples", default_value_t = 20_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// First action (1-based arm) of a policy at the prior.
    Decide {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        policy: PolicyKind,
        #[arg(long = "T", alias = "horizon")]
        horizon: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Optimal Bayesian value by exact dynamic programming (Beta models).
    Opt {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "T", alias = "horizon")]
        horizon: usize,
    },
    /// Run an experiment grid and write regret.csv and bounds.csv.
    Curves {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Beta,
    Gaussian,
}

/// Prior flags. Each parameter takes one value for all arms or a comma list.
#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Family,
    #[arg(long)]
    arms: usize,
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    mean: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    variance: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    noise_variance: Vec<f64>,
}

fn param(values: &[f64], default: f64) -> ArmParam {
    match values {
        [] => ArmParam::Scalar(default),
        [v] => ArmParam::Scalar(*v),
        vs => ArmParam::PerArm(vs.to_vec()),
    }
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, CliError> {
        let reject = |flags: &[(&str, &Vec<f64>)], family: &str| -> Result<(), CliError> {
            match flags.iter().find(|(_, v)| !v.is_empty()) {
                Some((name, _)) => Err(CliError::Usage(format!("--{name} does not apply to a {family} model"))),
                None => Ok(()),
            }
        };
        let spec = match self.model {
            Family::Beta => {
                reject(
                    &[("mean", &self.mean), ("variance", &self.variance), ("noise-variance", &self.noise_variance)],
                    "beta",
                )?;
                ModelSpec::Beta {
                    arms: self.arms,
                    alpha: param(&self.alpha, 1.0),
                    beta: param(&self.beta, 1.0),
                }
            }
            Family::Gaussian => {
                reject(&[("alpha", &self.alpha), ("beta", &self.beta)], "gaussian")?;
                ModelSpec::Gaussian {
                    arms: self.arms,
                    mean: param(&self.mean, 0.0),
                    variance: param(&self.variance, 1.0),
                    noise_variance: param(&self.noise_variance, 1.0),
                }
            }
        };
        spec.belief()?;
        Ok(spec)
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(IrsError),
}

impl From<IrsError> for CliError {
    fn from(e: IrsError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(IrsError::Io(e))
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid arguments: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn env_jobs() -> Result<Option<usize>, CliError> {
    match std::env::var(JOBS_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{JOBS_ENV} must be a positive integer, got '{s}'"))),
        Err(_) => Ok(None),
    }
}

/// `--jobs` beats the environment, which beats the config file.
fn resolve_jobs(flag: Option<usize>, config: Option<usize>) -> Result<Option<usize>, CliError> {
    let jobs = match flag {
        Some(n) => Some(n),
        None => env_jobs()?.or(config),
    };
    if jobs == Some(0) {
        return Err(CliError::Usage("jobs must be at least 1".into()));
    }
    Ok(jobs)
}

fn load_config(path: &Path, jobs: Option<usize>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    cfg.jobs = resolve_jobs(jobs, cfg.jobs)?;
    Ok(cfg)
}

fn report_failures(table: &irs_core::RegretTable) {
    for f in &table.failures {
        eprintln!("note: {} {} at T={}: {}", f.kind.name(), f.name, f.horizon, f.reason);
    }
}

fn run(cli: Cli, out: &mut impl Write) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            out: path,
            format,
            jobs,
        } => {
            let mut cfg = load_config(&config, jobs)?;
            if let Some(f) = format {
                cfg.format = match f {
                    Format::Csv => OutputFormat::Csv,
                    Format::Json => OutputFormat::Json,
                };
            }
            let table = harness::run_experiment(&cfg)?;
            report_failures(&table);
            match path.or(cfg.out.clone()) {
                Some(p) => export::export(&table, cfg.format, &p)?,
                None => out.write_all(export::render(&table, cfg.format)?.as_bytes())?,
            }
        }
        Command::Bound {
            model,
            penalty,
            horizon,
            samples,
            seed,
            jobs,
        } => {
            let prior = model.spec()?.belief()?;
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = resolve_jobs(jobs, None)? {
                builder = builder.num_threads(n);
            }
            let pool = builder
                .build()
                .map_err(|e| CliError::Core(IrsError::Numerical(e.to_string())))?;
            let est = pool.install(|| {
                bounds::estimate_bound(penalty, horizon, &prior, samples, RngStream::from_seed(seed))
            })?;
            writeln!(out, "{:.6} ± {:.6}", est.mean, est.stderr)?;
        }
        Command::Decide {
            model,
            policy,
            horizon,
            seed,
        } => {
            let prior = model.spec()?.belief()?;
            let mut rng = RngStream::from_seed(seed).derive(role::DECIDE, 0).rng();
            let arm = policies::decide(policy, horizon, &prior, &mut rng)?;
            writeln!(out, "{}", arm + 1)?;
        }
        Command::Opt { model, horizon } => {
            let prior = model.spec()?.belief()?;
            writeln!(out, "{:.6}", policies::opt_dp(horizon, &prior)?.value())?;
        }
        Command::Curves { config, out_dir, jobs } => {
            let cfg = load_config(&config, jobs)?;
            let table = harness::run_experiment(&cfg)?;
            report_failures(&table);
            for p in export::write_curves(&table, &out_dir)? {
                writeln!(out, "{}", p.display())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock).and_then(|()| lock.flush().map_err(CliError::from)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
