//! Adjoint-based estimates of the QoI error and their interval decompositions.

use crate::error::{Error, Result};
use crate::galerkin::{residual_pairing, solve_adjoint, AdjointPair, Trajectory};
use crate::linalg::Matrix;
use crate::models::OdeSystem;
use crate::qoi::{NonstandardQoi, StandardQoi};
use crate::scalar::{dot, Real};

/// Default uniform refinement of the adjoint mesh relative to the forward mesh.
pub const DEFAULT_ADJOINT_REFINEMENT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    Standard,
    Nonstandard,
}

/// Per-interval error contributions and the estimate they add up to.
///
/// `total = Σ contributions / denominator` estimates `Q(u) - Q(U)`; the
/// denominator is 1 for standard quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDecomposition<T> {
    pub contributions: Vec<T>,
    pub total: T,
    pub denominator: T,
    pub kind: EstimateKind,
}

impl<T: Real> ErrorDecomposition<T> {
    pub fn new(contributions: Vec<T>, denominator: T, kind: EstimateKind) -> Self {
        let total = contributions.iter().fold(T::zero(), |a, &b| a + b) / denominator;
        Self {
            contributions,
            total,
            denominator,
            kind,
        }
    }

    pub fn standard(contributions: Vec<T>) -> Self {
        Self::new(contributions, T::one(), EstimateKind::Standard)
    }

    pub fn len(&self) -> usize {
        self.contributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contributions.is_empty()
    }
}

/// `E_k = |Σ_{i<=k} e_i|`.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulatedError<T> {
    pub values: Vec<T>,
}

pub fn accumulate<T: Real>(decomp: &ErrorDecomposition<T>) -> AccumulatedError<T> {
    let mut sum = T::zero();
    let values = decomp
        .contributions
        .iter()
        .map(|&e| {
            sum += e;
            sum.abs()
        })
        .collect();
    AccumulatedError { values }
}

/// Estimate of `Q(u) - Q(U)` for `Q(u) = u(t*)·ψ`.
pub fn estimate_standard_error<T: Real, S: OdeSystem<T> + ?Sized>(
    system: &S,
    forward: &Trajectory<T>,
    q: &StandardQoi<T>,
    adjoint_refinement: usize,
) -> Result<ErrorDecomposition<T>> {
    let phi = solve_adjoint(system, forward, q.t_star, &q.psi, adjoint_refinement)?;
    let e = residual_pairing(system, forward, &phi, q.t_star)?;
    Ok(ErrorDecomposition::standard(e))
}

/// Solves the two adjoint problems an event-time estimate needs: terminal
/// values `ψ` and `J(U(t_c), t_c)^T ψ` at `t_c`.
pub fn event_time_adjoints<T: Real, S: OdeSystem<T> + ?Sized>(
    system: &S,
    forward: &Trajectory<T>,
    q: &NonstandardQoi<T>,
    t_c: T,
    adjoint_refinement: usize,
) -> Result<AdjointPair<T>> {
    let d = system.dim();
    let mut u = vec![T::zero(); d];
    forward.eval(t_c, &mut u)?;
    let mut jac = Matrix::zeros(d);
    system.jacobian(&u, t_c, &mut jac)?;
    let mut grad = vec![T::zero(); d];
    jac.mul_transpose_vec(&q.psi, &mut grad);
    Ok(AdjointPair {
        phi1: solve_adjoint(system, forward, t_c, &q.psi, adjoint_refinement)?,
        phi2: Some(solve_adjoint(system, forward, t_c, &grad, adjoint_refinement)?),
    })
}

/// Estimate of `t_true - t_c` for an event-time quantity.
///
/// Linearising `G(u(t)) = R` about `t_c` gives
/// `t_true - t_c ≈ Σ e_i / C` with `e_i` the adjoint-weighted residuals for
/// terminal value `ψ` and `C = -(f(U(t_c), t_c)·ψ + e(t_c)·∇_u[ψ·f])`; the
/// second term is itself estimated with the adjoint for `J^T ψ`.
pub fn estimate_event_time_error<T: Real, S: OdeSystem<T> + ?Sized>(
    system: &S,
    forward: &Trajectory<T>,
    q: &NonstandardQoi<T>,
    t_c: T,
    adjoint_refinement: usize,
) -> Result<ErrorDecomposition<T>> {
    let pair = event_time_adjoints(system, forward, q, t_c, adjoint_refinement)?;
    let numerator = residual_pairing(system, forward, &pair.phi1, t_c)?;
    let phi2 = pair.phi2.expect("event-time adjoints come in pairs");
    let second: T = residual_pairing(system, forward, &phi2, t_c)?
        .into_iter()
        .fold(T::zero(), |a, b| a + b);

    let d = system.dim();
    let mut u = vec![T::zero(); d];
    let mut f = vec![T::zero(); d];
    forward.eval(t_c, &mut u)?;
    system.rhs(&u, t_c, &mut f)?;
    let speed = dot(&f, &q.psi);
    let denominator = -(speed + second);
    if !(denominator.abs() >= T::lit(1e-10) * (T::one() + speed.abs())) {
        return Err(Error::DegenerateDenominator {
            value: denominator.as_f64(),
        });
    }
    Ok(ErrorDecomposition::new(numerator, denominator, EstimateKind::Nonstandard))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh1d;

    /// Constant velocity (1, 0) from (-1, 0).
    struct Drift;

    impl OdeSystem<f64> for Drift {
        fn dim(&self) -> usize {
            2
        }
        fn horizon(&self) -> f64 {
            2.0
        }
        fn initial(&self) -> Vec<f64> {
            vec![-1.0, 0.0]
        }
        fn rhs(&self, _u: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
            out.copy_from_slice(&[1.0, 0.0]);
            Ok(())
        }
        fn jacobian(&self, _u: &[f64], _t: f64, out: &mut Matrix<f64>) -> Result<()> {
            out.fill(0.0);
            Ok(())
        }
    }

    #[test]
    fn accumulate_examples() {
        let d = ErrorDecomposition::standard(vec![1.0, -1.0, 1.0]);
        assert_eq!(accumulate(&d).values, vec![1.0, 0.0, 1.0]);
        let z = ErrorDecomposition::standard(vec![0.0; 4]);
        assert!(accumulate(&z).values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn total_is_sum_over_denominator() {
        let d = ErrorDecomposition::new(vec![0.5, 1.5, -1.0], 4.0, EstimateKind::Nonstandard);
        assert_eq!(d.total * d.denominator, 1.0);
    }

    #[test]
    fn exact_event_gives_zero_estimate() {
        let mesh = Mesh1d::uniform(2.0, 8).unwrap();
        let u = crate::galerkin::solve_forward_cg1(&Drift, &mesh).unwrap();
        let q = NonstandardQoi { psi: vec![1.0, 0.0], threshold: 0.0, occurrence: 1 };
        let tc = crate::qoi::eval_event_time(&u, &q).unwrap();
        assert!((tc - 1.0).abs() < 1e-15);
        let e = estimate_event_time_error(&Drift, &u, &q, tc, 2).unwrap();
        assert_eq!(e.total, 0.0);
        assert_eq!(e.denominator, -1.0);
    }

    #[test]
    fn shifted_trajectory_estimate_has_the_right_sign() {
        // U ahead of u by delta: the computed event is early by delta
        let delta = 1e-3;
        let mesh = Mesh1d::uniform(2.0, 8).unwrap();
        let exact = crate::galerkin::solve_forward_cg1(&Drift, &mesh).unwrap();
        let shifted: Vec<f64> = exact
            .nodal_values()
            .chunks(2)
            .flat_map(|c| [c[0] + delta, c[1]])
            .collect();
        let u = Trajectory::new(mesh, 2, shifted).unwrap();
        let q = NonstandardQoi { psi: vec![1.0, 0.0], threshold: 0.0, occurrence: 1 };
        let tc = crate::qoi::eval_event_time(&u, &q).unwrap();
        assert!((tc - (1.0 - delta)).abs() < 1e-14);
        let e = estimate_event_time_error(&Drift, &u, &q, tc, 2).unwrap();
        assert!((e.total - delta).abs() < 1e-14, "{}", e.total);
    }
}
