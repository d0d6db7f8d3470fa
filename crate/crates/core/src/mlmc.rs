//! Adaptive MLMC driver: level management, statistics, optimal sample
//! allocation and the bias-based stopping rule.

use log::{debug, info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::ErrorDecomposition;
use crate::mesh::Mesh1d;
use crate::models::{sample_parameters, ParameterDistribution, ParameterSample};
use crate::refine::{refine_level, RefinementConfig};

/// QoI value of one sample on one mesh, optionally with its error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub qoi: f64,
    pub estimate: Option<ErrorDecomposition<f64>>,
}

/// Computes QoI values (and estimates) for parameter samples.
pub trait SampleEvaluator: Sync {
    fn parameter_spec(&self) -> &[ParameterDistribution];

    fn evaluate(&self, w: &ParameterSample, mesh: &Mesh1d<f64>, with_estimate: bool) -> Result<Evaluation>;
}

/// Produces the mesh of a new level from the current highest level.
pub trait LevelRefiner {
    fn next_mesh(&self, mesh: &Mesh1d<f64>, decomps: &[ErrorDecomposition<f64>]) -> Result<Mesh1d<f64>>;
}

impl LevelRefiner for RefinementConfig {
    fn next_mesh(&self, mesh: &Mesh1d<f64>, decomps: &[ErrorDecomposition<f64>]) -> Result<Mesh1d<f64>> {
        refine_level(mesh, decomps, self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlmcConfig {
    /// Target mean squared error.
    pub epsilon: f64,
    /// Initial sample counts per level; the last entry repeats.
    pub n_schedule: Vec<usize>,
    pub master_seed: u64,
    pub max_levels: usize,
    pub max_failure_rate: f64,
}

impl Default for MlmcConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            n_schedule: vec![100, 50, 20],
            master_seed: 0,
            max_levels: 10,
            max_failure_rate: 0.01,
        }
    }
}

impl MlmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.n_schedule.is_empty() || self.n_schedule.iter().any(|&n| n < 2) {
            return Err(Error::Config(
                "n_schedule must be nonempty with entries of at least 2".into(),
            ));
        }
        if self.max_levels == 0 {
            return Err(Error::Config("max_levels must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.max_failure_rate) {
            return Err(Error::Config(format!(
                "max_failure_rate must lie in [0, 1), got {}",
                self.max_failure_rate
            )));
        }
        Ok(())
    }

    pub fn initial_samples(&self, level: usize) -> usize {
        self.n_schedule[level.min(self.n_schedule.len() - 1)]
    }
}

/// One accepted sample `Y_l = Q_l - Q_{l-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub level: usize,
    pub index: u64,
    pub parameters: Vec<f64>,
    pub q_fine: f64,
    pub q_coarse: f64,
    pub y: f64,
    /// Estimate of `Q(u) - Q(U_l)` (highest level only).
    pub error_estimate: Option<f64>,
    pub denominator: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LevelState {
    pub level: usize,
    pub mesh: Mesh1d<f64>,
    pub coarser_mesh: Option<Mesh1d<f64>>,
    pub samples: Vec<SampleRecord>,
    pub cost_per_sample: f64,
    /// Decompositions of the fine solves, kept while this is the highest level.
    pub decompositions: Vec<ErrorDecomposition<f64>>,
    next_index: u64,
}

impl LevelState {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }
}

/// Per-level row of the result.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub elems: usize,
    pub cost_per_sample: f64,
    pub n_samples: usize,
    /// Sample variance `V_l` of `Y_l`.
    pub variance: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct MlmcEstimate {
    pub value: f64,
    /// `Σ V_l / N_l`.
    pub total_variance: f64,
    pub bias: f64,
    pub squared_bias: f64,
    pub mse: f64,
    pub total_cost: f64,
    pub converged: bool,
    pub levels: Vec<LevelSummary>,
    pub samples: Vec<SampleRecord>,
    pub meshes: Vec<Mesh1d<f64>>,
    pub failures: usize,
    pub attempts: usize,
}

impl MlmcEstimate {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }
}

/// Two-pass unbiased sample variance (`n - 1` normalisation).
pub fn level_variance(samples: &[f64]) -> f64 {
    let n = samples.len();
    assert!(n >= 2, "variance needs at least two samples");
    let mean = samples.iter().sum::<f64>() / n as f64;
    samples.iter().map(|&y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1) as f64
}

/// `-mean(error estimates)`: the estimated bias `E[Q_L - Q]`.
pub fn level_bias(estimates: &[f64]) -> f64 {
    if estimates.is_empty() {
        return 0.0;
    }
    -estimates.iter().sum::<f64>() / estimates.len() as f64
}

/// `N_l = ⌈(2/ε) sqrt(V_l/C_l) Σ_k sqrt(V_k/C_k)⌉`.
pub fn optimal_samples(variances: &[f64], costs: &[f64], epsilon: f64) -> Result<Vec<usize>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if variances.len() != costs.len() {
        return Err(Error::InvalidParameter("one cost per variance is required".into()));
    }
    if let Some(v) = variances.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidParameter(format!("variance must be nonnegative, got {v}")));
    }
    if let Some(c) = costs.iter().find(|c| !(**c > 0.0)) {
        return Err(Error::InvalidParameter(format!("cost must be positive, got {c}")));
    }
    let r: Vec<f64> = variances.iter().zip(costs).map(|(v, c)| (v / c).sqrt()).collect();
    let sum: f64 = r.iter().sum();
    Ok(r.iter().map(|x| (2.0 / epsilon * x * sum).ceil() as usize).collect())
}

/// `C_0 = 1`, `C_l = (elems_l + elems_{l-1}) / elems_0`.
pub fn level_cost(elems: &[usize], level: usize) -> f64 {
    if level == 0 {
        1.0
    } else {
        (elems[level] + elems[level - 1]) as f64 / elems[0] as f64
    }
}

/// The driver's mutable state; one instance per run.
pub struct MlmcRun<'a, E: ?Sized, R: ?Sized> {
    evaluator: &'a E,
    refiner: &'a R,
    cfg: MlmcConfig,
    levels: Vec<LevelState>,
    attempts: usize,
    failures: usize,
}

/// Runs the adaptive algorithm from `initial_mesh`.
pub fn run_adaptive_mlmc<E, R>(
    evaluator: &E,
    refiner: &R,
    initial_mesh: Mesh1d<f64>,
    cfg: &MlmcConfig,
) -> Result<MlmcEstimate>
where
    E: SampleEvaluator + ?Sized,
    R: LevelRefiner + ?Sized,
{
    cfg.validate()?;
    let mut run = MlmcRun {
        evaluator,
        refiner,
        cfg: cfg.clone(),
        levels: Vec::new(),
        attempts: 0,
        failures: 0,
    };
    run.execute(initial_mesh)
}

impl<E, R> MlmcRun<'_, E, R>
where
    E: SampleEvaluator + ?Sized,
    R: LevelRefiner + ?Sized,
{
    fn execute(&mut self, initial_mesh: Mesh1d<f64>) -> Result<MlmcEstimate> {
        let eps = self.cfg.epsilon;
        self.push_level(initial_mesh);
        self.take(0, self.cfg.initial_samples(0))?;
        self.top_up()?;
        let mut bias = self.current_bias();
        info!("level 0: bias^2 = {:.3e}", bias * bias);

        while bias * bias > eps / 2.0 && self.levels.len() < self.cfg.max_levels {
            let top = self.levels.len() - 1;
            let decomps = std::mem::take(&mut self.levels[top].decompositions);
            let mesh = self.refiner.next_mesh(&self.levels[top].mesh, &decomps)?;
            let coarse = self.levels[top].mesh.clone();
            info!(
                "adding level {} with {} intervals (from {})",
                top + 1,
                mesh.intervals(),
                coarse.intervals()
            );
            self.push_level(mesh);
            self.take(top + 1, self.cfg.initial_samples(top + 1))?;
            self.top_up()?;
            bias = self.current_bias();
            info!("level {}: bias^2 = {:.3e}", top + 1, bias * bias);
        }
        Ok(self.finish(bias, bias * bias <= eps / 2.0))
    }

    fn push_level(&mut self, mesh: Mesh1d<f64>) {
        let level = self.levels.len();
        let coarser_mesh = self.levels.last().map(|l| l.mesh.clone());
        let mut elems: Vec<usize> = self.levels.iter().map(|l| l.mesh.intervals()).collect();
        elems.push(mesh.intervals());
        self.levels.push(LevelState {
            level,
            mesh,
            coarser_mesh,
            samples: Vec::new(),
            cost_per_sample: level_cost(&elems, level),
            decompositions: Vec::new(),
            next_index: 0,
        });
    }

    /// Recomputes `N_opt` on every level and takes the missing samples.
    fn top_up(&mut self) -> Result<()> {
        let v: Vec<f64> = self.levels.iter().map(|l| level_variance(&l.values())).collect();
        let c: Vec<f64> = self.levels.iter().map(|l| l.cost_per_sample).collect();
        let n_opt = optimal_samples(&v, &c, self.cfg.epsilon)?;
        debug!("variances {v:?}, optimal samples {n_opt:?}");
        if n_opt.iter().zip(&self.levels).all(|(&n, l)| n < l.n_samples()) {
            debug!("optimal sample counts {n_opt:?} are below the samples already taken on every level");
        }
        for (level, &n) in n_opt.iter().enumerate() {
            let have = self.levels[level].n_samples();
            if n > have {
                self.take(level, n - have)?;
            }
        }
        Ok(())
    }

    fn current_bias(&self) -> f64 {
        let top = self.levels.last().expect("at least one level");
        let est: Vec<f64> = top.samples.iter().filter_map(|s| s.error_estimate).collect();
        level_bias(&est)
    }

    /// Takes `n` accepted samples on `level`, redrawing failures with fresh indices.
    fn take(&mut self, level: usize, n: usize) -> Result<()> {
        let highest = level + 1 == self.levels.len();
        let mut missing = n;
        while missing > 0 {
            let state = &self.levels[level];
            let first = state.next_index;
            let (evaluator, spec, seed) = (self.evaluator, self.evaluator.parameter_spec(), self.cfg.master_seed);
            let (mesh, coarse) = (&state.mesh, state.coarser_mesh.as_ref());
            let results: Vec<Result<(SampleRecord, Option<ErrorDecomposition<f64>>)>> = (first
                ..first + missing as u64)
                .into_par_iter()
                .map(|index| {
                    let w = sample_parameters(spec, seed, level, index);
                    let fine = evaluator.evaluate(&w, mesh, highest)?;
                    let q_coarse = match coarse {
                        Some(m) => evaluator.evaluate(&w, m, false)?.qoi,
                        None => 0.0,
                    };
                    let decomposition = fine.estimate;
                    Ok((
                        SampleRecord {
                            level,
                            index,
                            parameters: w.values,
                            q_fine: fine.qoi,
                            q_coarse,
                            y: fine.qoi - q_coarse,
                            error_estimate: decomposition.as_ref().map(|d| d.total),
                            denominator: decomposition.as_ref().map(|d| d.denominator),
                        },
                        decomposition,
                    ))
                })
                .collect();

            self.levels[level].next_index += missing as u64;
            for r in results {
                self.attempts += 1;
                match r {
                    Ok((record, decomp)) => {
                        let state = &mut self.levels[level];
                        state.samples.push(record);
                        if let Some(d) = decomp {
                            state.decompositions.push(d);
                        }
                        missing -= 1;
                    }
                    Err(e) if e.is_sample_failure() => {
                        self.failures += 1;
                        debug!("sample failed on level {level}: {e}");
                        self.check_failure_rate(&e)?;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(())
    }

    fn check_failure_rate(&self, last: &Error) -> Result<()> {
        let rate = self.failures as f64 / self.attempts as f64;
        if self.attempts >= 100 && rate > self.cfg.max_failure_rate {
            return Err(Error::FailureRate {
                rate,
                allowed: self.cfg.max_failure_rate,
                failures: self.failures,
                attempts: self.attempts,
                last: last.to_string(),
            });
        }
        Ok(())
    }

    fn finish(&mut self, bias: f64, converged: bool) -> MlmcEstimate {
        let levels: Vec<LevelSummary> = self
            .levels
            .iter()
            .map(|l| {
                let y = l.values();
                LevelSummary {
                    level: l.level,
                    elems: l.mesh.intervals(),
                    cost_per_sample: l.cost_per_sample,
                    n_samples: y.len(),
                    variance: level_variance(&y),
                    mean: y.iter().sum::<f64>() / y.len() as f64,
                }
            })
            .collect();
        let value = levels.iter().map(|l| l.mean).sum();
        let total_variance = levels.iter().map(|l| l.variance / l.n_samples as f64).sum::<f64>();
        let squared_bias = bias * bias;
        let total_cost = levels.iter().map(|l| l.n_samples as f64 * l.cost_per_sample).sum();
        if self.failures > 0 {
            warn!("{} of {} samples failed and were redrawn", self.failures, self.attempts);
        }
        MlmcEstimate {
            value,
            total_variance,
            bias,
            squared_bias,
            mse: total_variance + squared_bias,
            total_cost,
            converged,
            meshes: self.levels.iter().map(|l| l.mesh.clone()).collect(),
            samples: self.levels.iter_mut().flat_map(|l| std::mem::take(&mut l.samples)).collect(),
            levels,
            failures: self.failures,
            attempts: self.attempts,
        }
    }
}
