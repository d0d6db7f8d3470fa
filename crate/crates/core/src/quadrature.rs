//! Five-point Gauss–Legendre rule on the unit interval.
//!
//! Exact for polynomials up to degree 9, which covers every product of
//! piecewise-linear trial/test functions with polynomial data used here.

use crate::scalar::Real;

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];

const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Quadrature point on `[0, 1]`: local coordinate `s` and weight (weights sum to 1).
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint<T> {
    pub s: T,
    pub weight: T,
}

/// The five Gauss–Legendre points mapped to `[0, 1]`.
pub fn gauss_legendre_5<T: Real>() -> [QuadPoint<T>; 5] {
    let half = T::lit(0.5);
    std::array::from_fn(|i| QuadPoint {
        s: half * (T::one() + T::lit(GL5_NODES[i])),
        weight: half * T::lit(GL5_WEIGHTS[i]),
    })
}

/// `∫_a^b g(x) dx` with the five-point rule.
pub fn integrate<T: Real>(a: T, b: T, mut g: impl FnMut(T) -> T) -> T {
    let h = b - a;
    gauss_legendre_5::<T>()
        .iter()
        .fold(T::zero(), |acc, q| acc + q.weight * g(a + q.s * h))
        * h
}
