use std::marker::PhantomData;

use crate::error::{Error, Result};
use crate::estimate::{estimate_event_time_error, estimate_standard_error, ErrorDecomposition, DEFAULT_ADJOINT_REFINEMENT};
use crate::galerkin::solve_forward_cg1;
use crate::mesh::Mesh1d;
use crate::mlmc::{Evaluation, SampleEvaluator};
use crate::models::{ModelKind, OdeProblem, ParameterDistribution, ParameterSample};
use crate::qoi::{eval_event_time, eval_standard, NonstandardQoi, Qoi, StandardQoi};
use crate::scalar::Real;

/// Named experiment setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    HarmonicStandard,
    HarmonicNonstandard,
    Lorenz,
    TwoBody,
    AdvectionDiffusion,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::HarmonicStandard,
        Preset::HarmonicNonstandard,
        Preset::Lorenz,
        Preset::TwoBody,
        Preset::AdvectionDiffusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::HarmonicStandard => "harmonic-standard",
            Preset::HarmonicNonstandard => "harmonic-nonstandard",
            Preset::Lorenz => "lorenz",
            Preset::TwoBody => "two-body",
            Preset::AdvectionDiffusion => "advection-diffusion",
        }
    }

    pub fn defaults(self) -> PresetDefaults {
        let (epsilon, initial_intervals, domain_end) = match self {
            Preset::HarmonicStandard => (1e-3, 27, 3.0),
            Preset::HarmonicNonstandard => (1e-5, 18, 3.0),
            Preset::Lorenz => (1e-4, 24, 2.0),
            Preset::TwoBody => (1e-3, 40, 10.0),
            Preset::AdvectionDiffusion => (1e-8, 8, 3.0),
        };
        let stationary = self == Preset::AdvectionDiffusion;
        PresetDefaults {
            epsilon,
            initial_intervals,
            domain_end,
            dwr_fraction: if stationary { 0.25 } else { 0.5 },
            dwr_factor: if stationary { 2 } else { 3 },
        }
    }

    /// The ODE problem and quantity of interest (`None` for the stationary preset).
    pub fn ode(self) -> Option<(OdeProblem, Qoi<f64>)> {
        let psi1 = |d: usize| {
            let mut v = vec![0.0; d];
            v[0] = 1.0;
            v
        };
        let event = |d, threshold, occurrence| {
            Qoi::EventTime(NonstandardQoi {
                psi: psi1(d),
                threshold,
                occurrence,
            })
        };
        Some(match self {
            Preset::HarmonicStandard => (
                OdeProblem {
                    kind: ModelKind::Harmonic,
                    parameters: vec![
                        ParameterDistribution::normal("k", 50.0, 2.0),
                        ParameterDistribution::uniform("m", 0.225, 0.275),
                    ],
                },
                Qoi::Standard(StandardQoi { psi: psi1(2), t_star: 3.0 }),
            ),
            Preset::HarmonicNonstandard => (
                OdeProblem {
                    kind: ModelKind::Harmonic,
                    parameters: vec![
                        ParameterDistribution::normal("k", 50.0, 1.0),
                        ParameterDistribution::uniform("m", 0.235, 0.265),
                    ],
                },
                event(2, 0.0, 5),
            ),
            Preset::Lorenz => (
                OdeProblem {
                    kind: ModelKind::Lorenz,
                    parameters: vec![ParameterDistribution::uniform("theta", 0.0, 2.0)],
                },
                event(3, 3.0, 2),
            ),
            Preset::TwoBody => (
                OdeProblem {
                    kind: ModelKind::TwoBody,
                    parameters: vec![ParameterDistribution::uniform("theta", 1.97, 2.0)],
                },
                event(4, 0.0, 3),
            ),
            Preset::AdvectionDiffusion => return None,
        })
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
            Error::Config(format!("unknown experiment `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetDefaults {
    pub epsilon: f64,
    pub initial_intervals: usize,
    pub domain_end: f64,
    pub dwr_fraction: f64,
    pub dwr_factor: usize,
}

/// Evaluates an ODE quantity of interest with the solvers running in scalar type `T`.
#[derive(Debug, Clone)]
pub struct OdeEvaluator<T = f64> {
    pub problem: OdeProblem,
    pub qoi: Qoi<f64>,
    pub adjoint_refinement: usize,
    scalar: PhantomData<T>,
}

impl<T: Real> OdeEvaluator<T> {
    pub fn new(problem: OdeProblem, qoi: Qoi<f64>) -> Self {
        Self {
            problem,
            qoi,
            adjoint_refinement: DEFAULT_ADJOINT_REFINEMENT,
            scalar: PhantomData,
        }
    }

    pub fn with_adjoint_refinement(mut self, factor: usize) -> Self {
        self.adjoint_refinement = factor;
        self
    }
}

fn cast<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn widen<T: Real>(d: ErrorDecomposition<T>) -> ErrorDecomposition<f64> {
    ErrorDecomposition {
        contributions: d.contributions.iter().map(|x| x.as_f64()).collect(),
        total: d.total.as_f64(),
        denominator: d.denominator.as_f64(),
        kind: d.kind,
    }
}

impl<T: Real> SampleEvaluator for OdeEvaluator<T> {
    fn parameter_spec(&self) -> &[ParameterDistribution] {
        &self.problem.parameters
    }

    fn evaluate(&self, w: &ParameterSample, mesh: &Mesh1d<f64>, with_estimate: bool) -> Result<Evaluation> {
        let system = self.problem.instantiate::<T>(w)?;
        let mesh = Mesh1d::from_nodes(cast::<T>(mesh.nodes()))?;
        let traj = solve_forward_cg1(system.as_ref(), &mesh)?;
        let r = self.adjoint_refinement;
        let (qoi, estimate) = match &self.qoi {
            Qoi::Standard(q) => {
                let q = StandardQoi { psi: cast(&q.psi), t_star: T::lit(q.t_star) };
                let value = eval_standard(&traj, &q)?;
                let est = with_estimate
                    .then(|| estimate_standard_error(system.as_ref(), &traj, &q, r))
                    .transpose()?;
                (value, est)
            }
            Qoi::EventTime(q) => {
                let q = NonstandardQoi {
                    psi: cast(&q.psi),
                    threshold: T::lit(q.threshold),
                    occurrence: q.occurrence,
                };
                let tc = eval_event_time(&traj, &q)?;
                let est = with_estimate
                    .then(|| estimate_event_time_error(system.as_ref(), &traj, &q, tc, r))
                    .transpose()?;
                (tc, est)
            }
        };
        Ok(Evaluation {
            qoi: qoi.as_f64(),
            estimate: estimate.map(widen),
        })
    }
}
