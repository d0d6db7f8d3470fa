use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::OdeSystem;

/// Forced damped oscillator `m u'' + c u' + k u = F0 cos(nu t)` written as a
/// first-order system, with `c = 1`, `F0 = 50`, `nu = 10`, `u(0) = (5, 0)`, `T = 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicOscillator<T> {
    pub k: T,
    pub m: T,
}

pub fn harmonic_oscillator<T: Real>(k: T, m: T) -> Result<HarmonicOscillator<T>> {
    if m == T::zero() || !m.is_finite() || !k.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "harmonic oscillator needs finite k and nonzero m (k = {k}, m = {m})"
        )));
    }
    Ok(HarmonicOscillator { k, m })
}

impl<T: Real> OdeSystem<T> for HarmonicOscillator<T> {
    fn dim(&self) -> usize {
        2
    }

    fn horizon(&self) -> T {
        T::lit(3.0)
    }

    fn initial(&self) -> Vec<T> {
        vec![T::lit(5.0), T::zero()]
    }

    fn rhs(&self, u: &[T], t: T, out: &mut [T]) -> Result<()> {
        let forcing = T::lit(50.0) * (T::lit(10.0) * t).cos();
        out[0] = u[1];
        out[1] = (forcing - self.k * u[0] - u[1]) / self.m;
        Ok(())
    }

    fn jacobian(&self, _u: &[T], _t: T, out: &mut Matrix<T>) -> Result<()> {
        out[(0, 0)] = T::zero();
        out[(0, 1)] = T::one();
        out[(1, 0)] = -self.k / self.m;
        out[(1, 1)] = -T::one() / self.m;
        Ok(())
    }
}

/// Lorenz system with `sigma = 10`, `r = 28`, `b = 8/3`, `u(0) = (theta, 0, 24)`, `T = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz<T> {
    pub theta: T,
    pub sigma: T,
    pub r: T,
    pub b: T,
}

pub fn lorenz<T: Real>(theta: T) -> Lorenz<T> {
    Lorenz {
        theta,
        sigma: T::lit(10.0),
        r: T::lit(28.0),
        b: T::lit(8.0 / 3.0),
    }
}

impl<T: Real> OdeSystem<T> for Lorenz<T> {
    fn dim(&self) -> usize {
        3
    }

    fn horizon(&self) -> T {
        T::lit(2.0)
    }

    fn initial(&self) -> Vec<T> {
        vec![self.theta, T::zero(), T::lit(24.0)]
    }

    fn rhs(&self, u: &[T], _t: T, out: &mut [T]) -> Result<()> {
        out[0] = self.sigma * (u[1] - u[0]);
        out[1] = self.r * u[0] - u[1] - u[0] * u[2];
        out[2] = u[0] * u[1] - self.b * u[2];
        Ok(())
    }

    fn jacobian(&self, u: &[T], _t: T, out: &mut Matrix<T>) -> Result<()> {
        out[(0, 0)] = -self.sigma;
        out[(0, 1)] = self.sigma;
        out[(0, 2)] = T::zero();
        out[(1, 0)] = self.r - u[2];
        out[(1, 1)] = -T::one();
        out[(1, 2)] = -u[0];
        out[(2, 0)] = u[1];
        out[(2, 1)] = u[0];
        out[(2, 2)] = -self.b;
        Ok(())
    }
}

/// Planar Kepler problem: positions `(u1, u2)`, velocities `(u3, u4)`,
/// `u(0) = (0.4, 0, 0, theta)`, `T = 10`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBody<T> {
    pub theta: T,
}

pub fn two_body<T: Real>(theta: T) -> TwoBody<T> {
    TwoBody { theta }
}

impl<T: Real> TwoBody<T> {
    fn radius_sq(u: &[T], t: T) -> Result<T> {
        let r2 = u[0] * u[0] + u[1] * u[1];
        if r2 == T::zero() {
            return Err(Error::SingularRhs { time: t.as_f64() });
        }
        Ok(r2)
    }
}

impl<T: Real> OdeSystem<T> for TwoBody<T> {
    fn dim(&self) -> usize {
        4
    }

    fn horizon(&self) -> T {
        T::lit(10.0)
    }

    fn initial(&self) -> Vec<T> {
        vec![T::lit(0.4), T::zero(), T::zero(), self.theta]
    }

    fn rhs(&self, u: &[T], t: T, out: &mut [T]) -> Result<()> {
        let r2 = Self::radius_sq(u, t)?;
        let r3 = r2 * r2.sqrt();
        out[0] = u[2];
        out[1] = u[3];
        out[2] = -u[0] / r3;
        out[3] = -u[1] / r3;
        Ok(())
    }

    fn jacobian(&self, u: &[T], t: T, out: &mut Matrix<T>) -> Result<()> {
        let r2 = Self::radius_sq(u, t)?;
        let r3 = r2 * r2.sqrt();
        let r5 = r3 * r2;
        let three = T::lit(3.0);
        out.fill(T::zero());
        out[(0, 2)] = T::one();
        out[(1, 3)] = T::one();
        out[(2, 0)] = three * u[0] * u[0] / r5 - T::one() / r3;
        out[(2, 1)] = three * u[0] * u[1] / r5;
        out[(3, 0)] = three * u[0] * u[1] / r5;
        out[(3, 1)] = three * u[1] * u[1] / r5 - T::one() / r3;
        Ok(())
    }
}
