use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Law of one random coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// Uniform on `(a, b]`.
    Uniform { a: f64, b: f64 },
    Normal { mean: f64, std_dev: f64 },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Uniform { a, b } if !(a < b) => Err(Error::InvalidParameter(format!(
                "uniform distribution needs a < b (a = {a}, b = {b})"
            ))),
            Distribution::Normal { std_dev, .. } if !(std_dev > 0.0) => Err(
                Error::InvalidParameter(format!("normal distribution needs std_dev > 0 (got {std_dev})")),
            ),
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => 0.5 * (a + b),
            Distribution::Normal { mean, .. } => mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDistribution {
    pub kind: Distribution,
    /// Name of the model coefficient the value is bound to.
    pub target: String,
}

impl ParameterDistribution {
    pub fn uniform(target: &str, a: f64, b: f64) -> Self {
        Self {
            kind: Distribution::Uniform { a, b },
            target: target.to_owned(),
        }
    }

    pub fn normal(target: &str, mean: f64, std_dev: f64) -> Self {
        Self {
            kind: Distribution::Normal { mean, std_dev },
            target: target.to_owned(),
        }
    }
}

/// One realisation `w` of the random parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSample {
    pub values: Vec<f64>,
    pub level: usize,
    pub index: u64,
    pub master_seed: u64,
}

const INDEX_BITS: u32 = 40;

/// Draws the parameters of sample `(level, index)`.
///
/// Each `(level, index)` pair owns a ChaCha20 stream keyed by `master_seed`,
/// so the result does not depend on the order in which samples are taken.
pub fn sample_parameters(
    spec: &[ParameterDistribution],
    master_seed: u64,
    level: usize,
    index: u64,
) -> ParameterSample {
    debug_assert!(index < 1 << INDEX_BITS);
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(((level as u64) << INDEX_BITS) | index);
    let values = spec
        .iter()
        .map(|p| match p.kind {
            Distribution::Uniform { a, b } => a + (b - a) * unit_open_closed(&mut rng),
            Distribution::Normal { mean, std_dev } => {
                let r = (-2.0 * unit_open_closed(&mut rng).ln()).sqrt();
                let theta = std::f64::consts::TAU * unit_open_closed(&mut rng);
                mean + std_dev * r * theta.cos()
            }
        })
        .collect();
    ParameterSample {
        values,
        level,
        index,
        master_seed,
    }
}

/// Uniform on `(0, 1]` from the top 53 bits of one draw.
fn unit_open_closed(rng: &mut ChaCha20Rng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_support() {
        let spec = [ParameterDistribution::uniform("theta", 0.0, 2.0)];
        for i in 0..2000 {
            let v = sample_parameters(&spec, 7, 1, i).values[0];
            assert!(v > 0.0 && v <= 2.0, "{v}");
        }
    }

    #[test]
    fn normal_mean() {
        let spec = [ParameterDistribution::normal("k", 50.0, 2.0)];
        let n = 100_000;
        let mean = (0..n)
            .map(|i| sample_parameters(&spec, 11, 0, i).values[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 50.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn deterministic_and_stream_dependent() {
        let spec = [
            ParameterDistribution::normal("k", 50.0, 2.0),
            ParameterDistribution::uniform("m", 0.225, 0.275),
        ];
        assert_eq!(sample_parameters(&spec, 3, 2, 9), sample_parameters(&spec, 3, 2, 9));
        assert_ne!(
            sample_parameters(&spec, 3, 2, 9).values,
            sample_parameters(&spec, 3, 1, 9).values
        );
        assert_ne!(
            sample_parameters(&spec, 3, 2, 9).values,
            sample_parameters(&spec, 4, 2, 9).values
        );
    }

    #[test]
    fn no_collisions_between_consecutive_streams() {
        let spec = [ParameterDistribution::uniform("x", 0.0, 1.0)];
        let mut prev = f64::NAN;
        for i in 0..10_000 {
            let v = sample_parameters(&spec, 5, 0, i).values[0];
            assert_ne!(v, prev);
            prev = v;
        }
    }

    #[test]
    fn invalid_distributions() {
        assert!(Distribution::Uniform { a: 1.0, b: 1.0 }.validate().is_err());
        assert!(Distribution::Normal { mean: 0.0, std_dev: 0.0 }.validate().is_err());
        assert!(Distribution::Normal { mean: 0.0, std_dev: 1.0 }.validate().is_ok());
    }
}
