//! Quantities of interest: terminal linear functionals and event times.

use crate::error::{Error, Result};
use crate::galerkin::Trajectory;
use crate::scalar::{dot, Real};

/// `Q(u) = u(t*)·ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardQoi<T> {
    pub psi: Vec<T>,
    pub t_star: T,
}

/// Time of the `occurrence`-th crossing of `u(t)·ψ = threshold` in `(0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonstandardQoi<T> {
    pub psi: Vec<T>,
    pub threshold: T,
    pub occurrence: usize,
}

/// Either kind of quantity of interest.
#[derive(Debug, Clone, PartialEq)]
pub enum Qoi<T> {
    Standard(StandardQoi<T>),
    EventTime(NonstandardQoi<T>),
}

pub fn eval_standard<T: Real>(traj: &Trajectory<T>, q: &StandardQoi<T>) -> Result<T> {
    check_dim(traj, &q.psi)?;
    let mut u = vec![T::zero(); traj.dim()];
    traj.eval(q.t_star, &mut u)?;
    Ok(dot(&u, &q.psi))
}

/// All crossing times of `G(t) - R`, in increasing order.
///
/// A crossing is a strict sign change inside an interval (solved exactly on
/// the linear piece) or a node where `G - R` vanishes, counted once. The
/// initial time is excluded.
pub fn crossings<T: Real>(traj: &Trajectory<T>, psi: &[T], threshold: T) -> Result<Vec<T>> {
    check_dim(traj, psi)?;
    let nodes = traj.mesh().nodes();
    let g: Vec<T> = (0..nodes.len())
        .map(|i| dot(traj.node(i), psi) - threshold)
        .collect();
    let mut out = Vec::new();
    for i in 0..nodes.len() - 1 {
        let (ga, gb) = (g[i], g[i + 1]);
        if (ga < T::zero() && gb > T::zero()) || (ga > T::zero() && gb < T::zero()) {
            let (ta, tb) = (nodes[i], nodes[i + 1]);
            out.push(ta + (tb - ta) * ga / (ga - gb));
        }
        if gb == T::zero() {
            out.push(nodes[i + 1]);
        }
    }
    Ok(out)
}

/// The `occurrence`-th crossing time.
pub fn eval_event_time<T: Real>(traj: &Trajectory<T>, q: &NonstandardQoi<T>) -> Result<T> {
    if q.occurrence == 0 {
        return Err(Error::InvalidParameter("event occurrence counts from 1".into()));
    }
    let c = crossings(traj, &q.psi, q.threshold)?;
    c.get(q.occurrence - 1).copied().ok_or(Error::EventNotFound {
        wanted: q.occurrence,
        found: c.len(),
    })
}

/// A separating time `t̂` for occurrence `k`: the midpoint of crossings
/// `k-1` and `k` (or half of crossing 1 when `k = 1`).
pub fn separating_time<T: Real>(traj: &Trajectory<T>, q: &NonstandardQoi<T>) -> Result<T> {
    let tc = eval_event_time(traj, q)?;
    let c = crossings(traj, &q.psi, q.threshold)?;
    let before = if q.occurrence >= 2 { c[q.occurrence - 2] } else { T::zero() };
    Ok(T::lit(0.5) * (before + tc))
}

fn check_dim<T: Real>(traj: &Trajectory<T>, psi: &[T]) -> Result<()> {
    if psi.len() != traj.dim() {
        return Err(Error::DomainMismatch(format!(
            "psi has {} components, trajectory has {}",
            psi.len(),
            traj.dim()
        )));
    }
    Ok(())
}
