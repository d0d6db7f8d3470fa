//! cG(1) forward solver, the linearised backward adjoint solver and the
//! adjoint-weighted residual both error estimators are built on.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mesh::Mesh1d;
use crate::models::OdeSystem;
use crate::quadrature::gauss_legendre_5;
use crate::scalar::{dot, Real};

/// Maximum Newton iterations per time step.
pub const NEWTON_MAX_ITER: usize = 25;

/// Absolute per-component Newton residual tolerance.
pub const NEWTON_TOL: f64 = 1e-12;

/// Continuous piecewise-linear function of time with values in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    mesh: Mesh1d<T>,
    dim: usize,
    /// Node-major: value at node `i` is `values[i*dim..(i+1)*dim]`.
    values: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(mesh: Mesh1d<T>, dim: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != dim * mesh.nodes().len() {
            return Err(Error::DomainMismatch(format!(
                "{} nodal values for {} nodes of dimension {dim}",
                values.len(),
                mesh.nodes().len()
            )));
        }
        Ok(Self { mesh, dim, values })
    }

    pub fn mesh(&self) -> &Mesh1d<T> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self, i: usize) -> &[T] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodal_values(&self) -> &[T] {
        &self.values
    }

    /// Value at `t` by linear interpolation.
    pub fn eval(&self, t: T, out: &mut [T]) -> Result<()> {
        let i = self.mesh.locate(t).ok_or(Error::TimeOutOfRange {
            time: t.as_f64(),
            horizon: self.mesh.end().as_f64(),
        })?;
        self.eval_in(i, t, out);
        Ok(())
    }

    /// Value at `t`, interpolating on interval `i` (extrapolates if `t` is outside it).
    pub fn eval_in(&self, i: usize, t: T, out: &mut [T]) {
        let (a, b) = self.mesh.interval(i);
        let s = (t - a) / (b - a);
        let (u0, u1) = (self.node(i), self.node(i + 1));
        for k in 0..self.dim {
            out[k] = u0[k] + s * (u1[k] - u0[k]);
        }
    }

    /// Time derivative on interval `i` (constant).
    pub fn slope(&self, i: usize, out: &mut [T]) {
        let h = self.mesh.width(i);
        let (u0, u1) = (self.node(i), self.node(i + 1));
        for k in 0..self.dim {
            out[k] = (u1[k] - u0[k]) / h;
        }
    }
}

/// Adjoint solutions used by one error estimate; `phi2` is only present for
/// event-time quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointPair<T> {
    pub phi1: Trajectory<T>,
    pub phi2: Option<Trajectory<T>>,
}

/// Solves `du/dt = f(u, t)` with the cG(1) method on `mesh`.
///
/// On each interval the new nodal value satisfies
/// `U1 - U0 = ∫ f(U(t), t) dt` with `U` linear in `t`, the integral taken with
/// the five-point Gauss rule; the step equation is solved by Newton.
pub fn solve_forward_cg1<T: Real, S: OdeSystem<T> + ?Sized>(
    system: &S,
    mesh: &Mesh1d<T>,
) -> Result<Trajectory<T>> {
    let d = system.dim();
    let u0 = system.initial();
    if u0.len() != d {
        return Err(Error::DomainMismatch(format!(
            "initial value has {} components, system has {d}",
            u0.len()
        )));
    }
    let quad = gauss_legendre_5::<T>();
    let mut values = Vec::with_capacity(d * mesh.nodes().len());
    values.extend_from_slice(&u0);

    let mut prev = u0;
    let mut next = vec![T::zero(); d];
    let mut residual = vec![T::zero(); d];
    let mut f = vec![T::zero(); d];
    let mut state = vec![T::zero(); d];
    let mut jac = Matrix::zeros(d);
    let mut newton = Matrix::zeros(d);
    let eps = T::epsilon();

    for n in 0..mesh.intervals() {
        let (ta, tb) = mesh.interval(n);
        let h = tb - ta;
        system.rhs(&prev, ta, &mut f)?;
        for k in 0..d {
            next[k] = prev[k] + h * f[k];
        }

        let mut converged = false;
        let mut last_res = T::infinity();
        for _ in 0..NEWTON_MAX_ITER {
            // residual and Jacobian at the current iterate
            residual.copy_from_slice(&next);
            for k in 0..d {
                residual[k] -= prev[k];
            }
            newton.fill(T::zero());
            for q in &quad {
                let t = ta + q.s * h;
                for k in 0..d {
                    state[k] = prev[k] + q.s * (next[k] - prev[k]);
                }
                system.rhs(&state, t, &mut f)?;
                system.jacobian(&state, t, &mut jac)?;
                for k in 0..d {
                    residual[k] -= h * q.weight * f[k];
                }
                newton.add_scaled(-h * q.weight * q.s, &jac);
            }
            for k in 0..d {
                newton[(k, k)] += T::one();
            }

            let res = max_abs(&residual);
            if !res.is_finite() {
                return Err(Error::NonFinite { time: tb.as_f64() });
            }
            let scale = T::one() + max_abs(&next).max(max_abs(&prev));
            let tol = T::lit(NEWTON_TOL).max(T::lit(64.0) * eps * scale);
            last_res = res;
            if res <= tol {
                converged = true;
                break;
            }
            newton.solve_into(&mut residual)?;
            for k in 0..d {
                next[k] -= residual[k];
            }
        }
        if !converged {
            return Err(Error::NewtonDiverged {
                interval: n,
                residual: last_res.as_f64(),
            });
        }
        values.extend_from_slice(&next);
        std::mem::swap(&mut prev, &mut next);
    }
    Trajectory::new(mesh.clone(), d, values)
}

/// Mesh the adjoint is solved on: `forward` truncated at `t_star`, then
/// uniformly refined by `refinement`.
pub fn adjoint_mesh<T: Real>(forward: &Mesh1d<T>, t_star: T, refinement: usize) -> Result<Mesh1d<T>> {
    forward.truncate(t_star)?.uniform_refine(refinement)
}

/// Solves `-dφ/dt = J(U(t), t)^T φ` backwards from `φ(t_star) = terminal`,
/// with `J` the Jacobian along the forward interpolant `U`.
///
/// The cG(1) step on `[t_n, t_{n+1}]` is the linear system
/// `(I - h Σ w_q (1 - s_q) A_q) φ_n = (I + h Σ w_q s_q A_q) φ_{n+1}`,
/// `A_q = J(U(t_q), t_q)^T`.
pub fn solve_adjoint<T: Real, S: OdeSystem<T> + ?Sized>(
    system: &S,
    forward: &Trajectory<T>,
    t_star: T,
    terminal: &[T],
    refinement: usize,
) -> Result<Trajectory<T>> {
    let d = system.dim();
    if terminal.len() != d || forward.dim() != d {
        return Err(Error::DomainMismatch(format!(
            "terminal value has {} components, system has {d}",
            terminal.len()
        )));
    }
    let mesh = adjoint_mesh(forward.mesh(), t_star, refinement)?;
    let n_nodes = mesh.nodes().len();
    let quad = gauss_legendre_5::<T>();

    let mut values = vec![T::zero(); d * n_nodes];
    values[(n_nodes - 1) * d..].copy_from_slice(terminal);

    let mut state = vec![T::zero(); d];
    let mut jac = Matrix::zeros(d);
    let mut lhs = Matrix::zeros(d);
    let mut rhs_op = Matrix::zeros(d);
    let mut rhs = vec![T::zero(); d];

    for n in (0..mesh.intervals()).rev() {
        let (ta, tb) = mesh.interval(n);
        let h = tb - ta;
        let fi = forward_interval(forward.mesh(), ta, tb);
        lhs.fill(T::zero());
        rhs_op.fill(T::zero());
        for q in &quad {
            let t = ta + q.s * h;
            forward.eval_in(fi, t, &mut state);
            system.jacobian(&state, t, &mut jac)?;
            let at = jac.transpose();
            lhs.add_scaled(-h * q.weight * (T::one() - q.s), &at);
            rhs_op.add_scaled(h * q.weight * q.s, &at);
        }
        for k in 0..d {
            lhs[(k, k)] += T::one();
            rhs_op[(k, k)] += T::one();
        }
        let (head, tail) = values.split_at_mut((n + 1) * d);
        rhs_op.mul_vec(&tail[..d], &mut rhs);
        lhs.solve_into(&mut rhs)?;
        if rhs.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { time: ta.as_f64() });
        }
        head[n * d..].copy_from_slice(&rhs);
    }
    Trajectory::new(mesh, d, values)
}

/// Forward interval containing the sub-interval `[a, b]` (located by its midpoint).
fn forward_interval<T: Real>(mesh: &Mesh1d<T>, a: T, b: T) -> usize {
    mesh.locate(T::lit(0.5) * (a + b)).expect("adjoint mesh lies inside the forward mesh")
}

/// Adjoint-weighted residual `∫ (f(U, t) - dU/dt)·φ dt` over `(0, t_star)`,
/// split onto the intervals of the forward mesh.
///
/// The returned vector has one entry per forward interval; intervals beyond
/// `t_star` contribute zero. The initial-data term `(u0 - U(0))·φ(0)`, zero for
/// trajectories produced by [`solve_forward_cg1`], is added to the first entry.
pub fn residual_pairing<T: Real, S: OdeSystem<T> + ?Sized>(
    system: &S,
    forward: &Trajectory<T>,
    adjoint: &Trajectory<T>,
    t_star: T,
) -> Result<Vec<T>> {
    let d = system.dim();
    let fmesh = forward.mesh();
    let amesh = adjoint.mesh();
    let tol = T::lit(crate::mesh::COINCIDENCE_TOL);
    if adjoint.dim() != d || forward.dim() != d {
        return Err(Error::DomainMismatch("trajectory dimensions differ".into()));
    }
    if !crate::scalar::close(amesh.end(), t_star, tol) || t_star > fmesh.end() * (T::one() + tol) {
        return Err(Error::DomainMismatch(format!(
            "adjoint ends at {}, forward at {}, evaluation time {t_star}",
            amesh.end(),
            fmesh.end()
        )));
    }
    if !amesh.contains_nodes_of(&fmesh.truncate(t_star)?) {
        return Err(Error::DomainMismatch(
            "adjoint mesh is not a refinement of the forward mesh".into(),
        ));
    }

    let quad = gauss_legendre_5::<T>();
    let mut out = vec![T::zero(); fmesh.intervals()];
    let mut u = vec![T::zero(); d];
    let mut du = vec![T::zero(); d];
    let mut f = vec![T::zero(); d];
    let mut phi = vec![T::zero(); d];

    for n in 0..amesh.intervals() {
        let (a, b) = amesh.interval(n);
        let h = b - a;
        let fi = forward_interval(fmesh, a, b);
        forward.slope(fi, &mut du);
        let mut acc = T::zero();
        for q in &quad {
            let t = a + q.s * h;
            forward.eval_in(fi, t, &mut u);
            system.rhs(&u, t, &mut f)?;
            adjoint.eval_in(n, t, &mut phi);
            for k in 0..d {
                f[k] -= du[k];
            }
            acc += q.weight * dot(&f, &phi);
        }
        out[fi] += h * acc;
    }

    let u0 = system.initial();
    let e0: Vec<T> = u0.iter().zip(forward.node(0)).map(|(&x, &y)| x - y).collect();
    out[0] += dot(&e0, adjoint.node(0));
    Ok(out)
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::harmonic_oscillator;

    /// du/dt = a u (scalar), exact solution exp(a t).
    struct Linear(f64);

    impl OdeSystem<f64> for Linear {
        fn dim(&self) -> usize {
            1
        }
        fn horizon(&self) -> f64 {
            1.0
        }
        fn initial(&self) -> Vec<f64> {
            vec![1.0]
        }
        fn rhs(&self, u: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
            out[0] = self.0 * u[0];
            Ok(())
        }
        fn jacobian(&self, _u: &[f64], _t: f64, out: &mut Matrix<f64>) -> Result<()> {
            out[(0, 0)] = self.0;
            Ok(())
        }
    }

    struct Still;

    impl OdeSystem<f64> for Still {
        fn dim(&self) -> usize {
            2
        }
        fn horizon(&self) -> f64 {
            2.0
        }
        fn initial(&self) -> Vec<f64> {
            vec![3.0, -1.0]
        }
        fn rhs(&self, _u: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
            out.fill(0.0);
            Ok(())
        }
        fn jacobian(&self, _u: &[f64], _t: f64, out: &mut Matrix<f64>) -> Result<()> {
            out.fill(0.0);
            Ok(())
        }
    }

    #[test]
    fn constant_solution() {
        let mesh = Mesh1d::from_nodes(vec![0.0, 0.3, 1.1, 2.0]).unwrap();
        let u = solve_forward_cg1(&Still, &mesh).unwrap();
        for i in 0..4 {
            assert_eq!(u.node(i), &[3.0, -1.0]);
        }
        let phi = solve_adjoint(&Still, &u, 1.5, &[0.5, 2.0], 2).unwrap();
        for i in 0..phi.mesh().nodes().len() {
            assert_eq!(phi.node(i), &[0.5, 2.0]);
        }
        let e = residual_pairing(&Still, &u, &phi, 1.5).unwrap();
        assert!(e.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn decay_matches_trapezoidal_update() {
        // for a linear problem cG(1) with exact quadrature is the trapezoidal rule
        let n = 20;
        let mesh = Mesh1d::uniform(1.0, n).unwrap();
        let u = solve_forward_cg1(&Linear(-1.0), &mesh).unwrap();
        let h = 1.0 / n as f64;
        let g: f64 = (1.0 - h / 2.0) / (1.0 + h / 2.0);
        for i in 0..=n {
            assert!((u.node(i)[0] - g.powi(i as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn newton_failure_is_reported() {
        struct Blowup;
        impl OdeSystem<f64> for Blowup {
            fn dim(&self) -> usize {
                1
            }
            fn horizon(&self) -> f64 {
                1.0
            }
            fn initial(&self) -> Vec<f64> {
                vec![1.0]
            }
            fn rhs(&self, u: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
                out[0] = u[0].powi(2) * 1e3 + 1e3;
                Ok(())
            }
            fn jacobian(&self, u: &[f64], _t: f64, out: &mut Matrix<f64>) -> Result<()> {
                out[(0, 0)] = 2e3 * u[0];
                Ok(())
            }
        }
        let mesh = Mesh1d::uniform(1.0, 2).unwrap();
        let err = solve_forward_cg1(&Blowup, &mesh).unwrap_err();
        assert!(err.is_sample_failure(), "{err}");
    }

    #[test]
    fn adjoint_is_linear_in_terminal_value() {
        let sys = harmonic_oscillator(50.0_f64, 0.25).unwrap();
        let mesh = Mesh1d::uniform(3.0, 27).unwrap();
        let u = solve_forward_cg1(&sys, &mesh).unwrap();
        let a = solve_adjoint(&sys, &u, 3.0, &[1.0, 0.0], 2).unwrap();
        let b = solve_adjoint(&sys, &u, 3.0, &[0.0, 1.0], 2).unwrap();
        let c = solve_adjoint(&sys, &u, 3.0, &[2.0, -3.0], 2).unwrap();
        for ((x, y), z) in a.nodal_values().iter().zip(b.nodal_values()).zip(c.nodal_values()) {
            assert!((2.0 * x - 3.0 * y - z).abs() <= 1e-12 * (1.0 + z.abs()));
        }
    }

    #[test]
    fn pairing_rejects_foreign_adjoint_mesh() {
        let sys = harmonic_oscillator(50.0_f64, 0.25).unwrap();
        let u = solve_forward_cg1(&sys, &Mesh1d::uniform(3.0, 9).unwrap()).unwrap();
        let other = solve_forward_cg1(&sys, &Mesh1d::uniform(3.0, 10).unwrap()).unwrap();
        let phi = solve_adjoint(&sys, &other, 3.0, &[1.0, 0.0], 2).unwrap();
        assert!(matches!(
            residual_pairing(&sys, &u, &phi, 3.0),
            Err(Error::DomainMismatch(_))
        ));
    }
}
