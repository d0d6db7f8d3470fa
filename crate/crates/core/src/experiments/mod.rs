//! Experiment presets, run configuration, orchestration and reports.

mod config;
mod io;
mod presets;

pub use config::{Precision, RefinementSection, ResolvedConfig, RunConfig};
pub use io::{
    fmt_f64, levels_csv, parse_levels_csv, samples_csv, summary_csv, write_reports, LEVELS_HEADER,
    SAMPLES_HEADER, SUMMARY_HEADER,
};
pub use presets::{OdeEvaluator, Preset, PresetDefaults};

use crate::bvp::BvpEvaluator;
use crate::error::{Error, Result};
use crate::mesh::Mesh1d;
use crate::mlmc::{run_adaptive_mlmc, MlmcEstimate, SampleEvaluator};

/// Runs the configured experiment without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<MlmcEstimate> {
    let r = cfg.resolve()?;
    let mesh = Mesh1d::uniform(r.domain_end, r.initial_intervals)?;
    let evaluator: Box<dyn SampleEvaluator> = match r.preset.ode() {
        Some((problem, qoi)) => {
            let adj = r.adjoint_refinement.unwrap_or(crate::estimate::DEFAULT_ADJOINT_REFINEMENT);
            match cfg.precision {
                Precision::F64 => Box::new(OdeEvaluator::<f64>::new(problem, qoi).with_adjoint_refinement(adj)),
                Precision::F32 => Box::new(OdeEvaluator::<f32>::new(problem, qoi).with_adjoint_refinement(adj)),
            }
        }
        None => {
            let mut e = BvpEvaluator::standard();
            if let Some(adj) = r.adjoint_refinement {
                e.adjoint_refinement = adj;
            }
            Box::new(e)
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", cfg.jobs)))?;
    pool.install(|| run_adaptive_mlmc(evaluator.as_ref(), &r.refinement, mesh, &r.mlmc))
}

/// Runs the experiment and writes its reports to `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<MlmcEstimate> {
    let est = execute(cfg)?;
    write_reports(&cfg.output_dir, &est, cfg.dump_grids)?;
    Ok(est)
}

/// One line of a strategy comparison.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub experiment: String,
    pub strategy: String,
    pub outcome: Result<MlmcEstimate>,
}

/// Runs every config with the seed of the first one.
pub fn compare(configs: &[RunConfig]) -> Vec<CompareRow> {
    let seed = configs.first().map(|c| c.seed).unwrap_or_default();
    configs
        .iter()
        .map(|c| {
            let cfg = RunConfig { seed, ..c.clone() };
            CompareRow {
                experiment: cfg.experiment.clone(),
                strategy: cfg.refinement.strategy.clone(),
                outcome: execute(&cfg),
            }
        })
        .collect()
}

/// Plain-text comparison table.
pub fn format_comparison(rows: &[CompareRow]) -> String {
    let mut out = format!(
        "{:<22} {:<8} {:>6} {:>14} {:>24} {:>24} {:>9}\n",
        "experiment", "strategy", "levels", "total_cost", "estimate", "mse", "converged"
    );
    for r in rows {
        match &r.outcome {
            Ok(e) => out.push_str(&format!(
                "{:<22} {:<8} {:>6} {:>14.2} {:>24} {:>24} {:>9}\n",
                r.experiment,
                r.strategy,
                e.n_levels(),
                e.total_cost,
                fmt_f64(e.value),
                fmt_f64(e.mse),
                e.converged
            )),
            Err(err) => out.push_str(&format!("{:<22} {:<8} FAILED: {err}\n", r.experiment, r.strategy)),
        }
    }
    out
}
