use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mlmc_core::experiments::{self, Precision, RunConfig};
use mlmc_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mlmc", version, about = "Adaptive multilevel Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run one experiment and write levels.csv, summary.csv and samples.csv.
    Run(RunArgs),
    /// Run several configs with a shared seed and print a comparison table.
    Compare(CompareArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RunArgs {
    /// TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated list of TOML configs.
    #[arg(long, value_delimiter = ',', required = true)]
    configs: Vec<PathBuf>,
    /// Shared seed; defaults to the first config's.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// uniform, dwr or meso.
    #[arg(long)]
    refinement: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    dump_grids: bool,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n_schedule: Option<Vec<usize>>,
    #[arg(long)]
    max_levels: Option<usize>,
    #[arg(long)]
    max_failure_rate: Option<f64>,
    #[arg(long)]
    initial_intervals: Option<usize>,
    #[arg(long)]
    adjoint_refinement: Option<usize>,
    /// f32 or f64.
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    dwr_fraction: Option<f64>,
    #[arg(long)]
    dwr_factor: Option<usize>,
    #[arg(long)]
    uniform_factor: Option<usize>,
    #[arg(long)]
    meso_q: Option<f64>,
    #[arg(long)]
    meso_target_multiplier: Option<f64>,
}

impl Overrides {
    fn apply(self, cfg: &mut RunConfig) -> Result<()> {
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = self.$flag { $field = v; })*
            };
        }
        set! {
            experiment => cfg.experiment,
            refinement => cfg.refinement.strategy,
            seed => cfg.seed,
            jobs => cfg.jobs,
            output_dir => cfg.output_dir,
            n_schedule => cfg.n_schedule,
            max_levels => cfg.max_levels,
            max_failure_rate => cfg.max_failure_rate,
            uniform_factor => cfg.refinement.uniform_factor,
            meso_q => cfg.refinement.meso_q,
            meso_target_multiplier => cfg.refinement.meso_target_multiplier,
        }
        cfg.epsilon = self.epsilon.or(cfg.epsilon);
        cfg.initial_intervals = self.initial_intervals.or(cfg.initial_intervals);
        cfg.adjoint_refinement = self.adjoint_refinement.or(cfg.adjoint_refinement);
        cfg.refinement.dwr_fraction = self.dwr_fraction.or(cfg.refinement.dwr_fraction);
        cfg.refinement.dwr_factor = self.dwr_factor.or(cfg.refinement.dwr_factor);
        cfg.dump_grids |= self.dump_grids;
        if let Some(p) = self.precision {
            cfg.precision = match p.as_str() {
                "f32" => Precision::F32,
                "f64" => Precision::F64,
                other => return Err(Error::Config(format!("unknown precision '{other}' (expected f32 or f64)"))),
            };
        }
        cfg.resolve().map(|_| ())
    }
}

fn run(args: RunArgs) -> Result<bool> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    args.overrides.apply(&mut cfg)?;
    log::info!("running {} with {} refinement", cfg.experiment, cfg.refinement.strategy);
    let est = experiments::run(&cfg)?;
    print!("{}", experiments::summary_csv(&est)?);
    if !est.converged {
        log::warn!("stopped at {} levels without meeting the bias criterion", est.n_levels());
    }
    Ok(est.converged)
}

fn compare(args: CompareArgs) -> Result<bool> {
    let mut configs = args
        .configs
        .iter()
        .map(|p| RunConfig::from_file(p))
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = configs.first_mut() {
        if let Some(seed) = args.seed {
            first.seed = seed;
        }
    }
    if let Some(jobs) = args.jobs {
        configs.iter_mut().for_each(|c| c.jobs = jobs);
    }
    let rows = experiments::compare(&configs);
    print!("{}", experiments::format_comparison(&rows));
    let mut converged = true;
    for row in rows {
        converged &= row.outcome?.converged;
    }
    Ok(converged)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
