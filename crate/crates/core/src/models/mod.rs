//! ODE problem definitions and random-parameter sampling.

mod sampling;
mod systems;

pub use sampling::{sample_parameters, Distribution, ParameterDistribution, ParameterSample};
pub use systems::{harmonic_oscillator, lorenz, two_body, HarmonicOscillator, Lorenz, TwoBody};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::Real;

/// A deterministic initial value problem `du/dt = f(u, t)`, `u(0) = u0` on `(0, T]`.
///
/// Random parameters are bound when the system is constructed, so one value
/// of this trait corresponds to one parameter sample `w`.
pub trait OdeSystem<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn horizon(&self) -> T;

    fn initial(&self) -> Vec<T>;

    /// Writes `f(u, t)` into `out`.
    fn rhs(&self, u: &[T], t: T, out: &mut [T]) -> Result<()>;

    /// Writes the Jacobian `∇_u f(u, t)` into `out`.
    fn jacobian(&self, u: &[T], t: T, out: &mut Matrix<T>) -> Result<()>;
}

impl<T: Real, S: OdeSystem<T> + ?Sized> OdeSystem<T> for Box<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn horizon(&self) -> T {
        (**self).horizon()
    }
    fn initial(&self) -> Vec<T> {
        (**self).initial()
    }
    fn rhs(&self, u: &[T], t: T, out: &mut [T]) -> Result<()> {
        (**self).rhs(u, t, out)
    }
    fn jacobian(&self, u: &[T], t: T, out: &mut Matrix<T>) -> Result<()> {
        (**self).jacobian(u, t, out)
    }
}

/// The named ODE families with random parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Parameters `(k, m)`.
    Harmonic,
    /// Parameter `theta`, the initial `u1`.
    Lorenz,
    /// Parameter `theta`, the initial `u4`.
    TwoBody,
}

/// An ODE family together with the law of its random parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeProblem {
    pub kind: ModelKind,
    pub parameters: Vec<ParameterDistribution>,
}

impl OdeProblem {
    /// Binds the sampled parameter values.
    pub fn instantiate<T: Real>(&self, w: &ParameterSample) -> Result<Box<dyn OdeSystem<T>>> {
        let v = |i: usize| T::lit(w.values[i]);
        Ok(match self.kind {
            ModelKind::Harmonic => Box::new(harmonic_oscillator(v(0), v(1))?),
            ModelKind::Lorenz => Box::new(lorenz(v(0))),
            ModelKind::TwoBody => Box::new(two_body(v(0))),
        })
    }
}
