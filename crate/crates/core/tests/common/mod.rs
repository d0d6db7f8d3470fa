//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use mlmc_core::linalg::Matrix;
use mlmc_core::models::OdeSystem;

/// Classical RK4 with `steps` equal steps; returns every state.
pub fn rk4<S: OdeSystem<f64> + ?Sized>(system: &S, t_end: f64, steps: usize) -> Vec<Vec<f64>> {
    let d = system.dim();
    let h = t_end / steps as f64;
    let mut u = system.initial();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(u.clone());
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    for n in 0..steps {
        let t = n as f64 * h;
        system.rhs(&u, t, &mut k1).unwrap();
        for i in 0..d {
            tmp[i] = u[i] + 0.5 * h * k1[i];
        }
        system.rhs(&tmp, t + 0.5 * h, &mut k2).unwrap();
        for i in 0..d {
            tmp[i] = u[i] + 0.5 * h * k2[i];
        }
        system.rhs(&tmp, t + 0.5 * h, &mut k3).unwrap();
        for i in 0..d {
            tmp[i] = u[i] + h * k3[i];
        }
        system.rhs(&tmp, t + h, &mut k4).unwrap();
        for i in 0..d {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(u.clone());
    }
    out
}

/// Time of the `occurrence`-th strict crossing of `u[0] = threshold` in an
/// RK4 path, located by linear interpolation between steps.
pub fn rk4_event(path: &[Vec<f64>], t_end: f64, threshold: f64, occurrence: usize) -> Option<f64> {
    let h = t_end / (path.len() - 1) as f64;
    let mut seen = 0;
    for (n, w) in path.windows(2).enumerate() {
        let (a, b) = (w[0][0] - threshold, w[1][0] - threshold);
        if a * b < 0.0 || (b == 0.0 && a != 0.0) {
            seen += 1;
            if seen == occurrence {
                return Some(h * (n as f64 + a / (a - b)));
            }
        }
    }
    None
}

/// `exp(A)` by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = a.len();
    let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scale = 0.5f64.powi(squarings);
    let scaled: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let mut result = identity(d);
    let mut term = identity(d);
    for k in 1..=30 {
        term = matmul(&term, &scaled);
        term.iter_mut().flatten().for_each(|x| *x /= k as f64);
        for i in 0..d {
            for j in 0..d {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

pub fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = a.len();
    (0..d)
        .map(|i| (0..d).map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn to_rows(m: &Matrix<f64>, d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|i| (0..d).map(|j| m[(i, j)]).collect()).collect()
}

/// `1/(2n(n-1)) Σ_i Σ_j (x_i - x_j)^2`, the pairwise form of the sample variance.
pub fn pairwise_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut s = 0.0;
    for a in x {
        for b in x {
            s += (a - b) * (a - b);
        }
    }
    s / (2.0 * n * (n - 1.0))
}

/// Three-point Gauss–Legendre on `[a, b]`; exact for quintics.
pub fn gauss3(a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    let x = (0.6f64).sqrt();
    r * (5.0 * g(m - r * x) + 8.0 * g(m) + 5.0 * g(m + r * x)) / 9.0
}

/// Central-difference Jacobian.
pub fn fd_jacobian<S: OdeSystem<f64> + ?Sized>(system: &S, u: &[f64], t: f64) -> Vec<Vec<f64>> {
    let d = u.len();
    let mut jac = vec![vec![0.0; d]; d];
    let (mut fp, mut fm) = (vec![0.0; d], vec![0.0; d]);
    for j in 0..d {
        let h = 1e-6 * (1.0 + u[j].abs());
        let mut up = u.to_vec();
        let mut um = u.to_vec();
        up[j] += h;
        um[j] -= h;
        system.rhs(&up, t, &mut fp).unwrap();
        system.rhs(&um, t, &mut fm).unwrap();
        for i in 0..d {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}
