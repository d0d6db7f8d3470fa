//! New-level mesh creation: uniform, multi-sample DWR and meso-scale.

use log::warn;

use crate::error::{Error, Result};
use crate::estimate::{accumulate, AccumulatedError, ErrorDecomposition};
use crate::mesh::{common_mesoregion_refinement, IntervalSet, Mesh1d, MesoRegion, MesoSpan};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Uniform,
    Dwr,
    Meso,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::Dwr => "dwr",
            Strategy::Meso => "meso",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Strategy::Uniform),
            "dwr" => Ok(Strategy::Dwr),
            "meso" => Ok(Strategy::Meso),
            other => Err(Error::Config(format!(
                "unknown refinement strategy `{other}` (expected uniform, dwr or meso)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementConfig {
    pub strategy: Strategy,
    pub dwr_fraction: f64,
    pub dwr_factor: usize,
    pub uniform_factor: usize,
    pub meso_q: f64,
    pub meso_target_multiplier: f64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Uniform,
            dwr_fraction: 0.5,
            dwr_factor: 3,
            uniform_factor: 2,
            meso_q: 2.0,
            meso_target_multiplier: 2.0,
        }
    }
}

impl RefinementConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dwr_fraction > 0.0 && self.dwr_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "dwr_fraction must lie in (0, 1], got {}",
                self.dwr_fraction
            )));
        }
        if self.dwr_factor < 2 || self.uniform_factor < 2 {
            return Err(Error::Config("refinement factors must be at least 2".into()));
        }
        if !(self.meso_q > 0.0) {
            return Err(Error::Config(format!("meso_q must be positive, got {}", self.meso_q)));
        }
        if !(self.meso_target_multiplier > 1.0) {
            return Err(Error::Config(format!(
                "meso_target_multiplier must exceed 1, got {}",
                self.meso_target_multiplier
            )));
        }
        Ok(())
    }
}

pub fn refine_uniform<T: Real>(mesh: &Mesh1d<T>, cfg: &RefinementConfig) -> Result<Mesh1d<T>> {
    mesh.uniform_refine(cfg.uniform_factor)
}

/// The `⌈fraction·N⌉` intervals with the largest `|e_i|`; ties go to the lower index.
pub fn dwr_select<T: Real>(decomp: &ErrorDecomposition<T>, fraction: f64) -> IntervalSet {
    let n = decomp.len();
    let take = ((fraction * n as f64).ceil() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (decomp.contributions[a].abs(), decomp.contributions[b].abs());
        eb.partial_cmp(&ea).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    order.into_iter().take(take).collect()
}

/// Refines the union of every sample's DWR selection.
pub fn refine_dwr_multisample<T: Real>(
    mesh: &Mesh1d<T>,
    decomps: &[ErrorDecomposition<T>],
    cfg: &RefinementConfig,
) -> Result<Mesh1d<T>> {
    let mut set = IntervalSet::new();
    for (k, d) in decomps.iter().enumerate() {
        if d.len() != mesh.intervals() {
            return Err(Error::DomainMismatch(format!(
                "decomposition {k} has {} entries for a mesh of {} intervals",
                d.len(),
                mesh.intervals()
            )));
        }
        set.union_with(&dwr_select(d, cfg.dwr_fraction));
    }
    if set.is_empty() {
        return Err(Error::InvalidParameter("no decompositions to refine from".into()));
    }
    mesh.refine_intervals(&set, cfg.dwr_factor)
}

/// Splits the interval range at the minima of the accumulated error.
///
/// From the current start the initial strictly increasing run of `E` is
/// skipped and the region ends at the last global minimiser of the rest.
/// Region errors are `E_end - E_start`, with `E_start = 0` for the first region.
pub fn find_meso_regions<T: Real>(acc: &AccumulatedError<T>) -> Vec<MesoRegion<T>> {
    let e = &acc.values;
    let n = e.len();
    let mut regions = Vec::new();
    let mut start = 0;
    while start < n {
        let base = if start == 0 { T::zero() } else { e[start] };
        let mut i = start;
        while i + 1 < n && e[i + 1] > e[i] {
            i += 1;
        }
        let end = if i + 1 >= n {
            n - 1
        } else {
            ((i + 1)..n).fold(i + 1, |best, j| if e[j] <= e[best] { j } else { best })
        };
        regions.push(MesoRegion {
            start_interval: start,
            end_interval: end,
            accumulated_error: e[end] - base,
        });
        start = end + 1;
    }
    regions
}

/// Interval counts `N̂_i` minimising the total meso-region error for `total`
/// intervals, assuming `ℰ_i = c_i / N_i^q`.
///
/// Regions with `c_i = 0` keep their current count. Counts are rounded half
/// up, clamped to at least 1, and the largest region absorbs the rounding
/// residual. If every `c_i` is zero the current counts are doubled.
pub fn allocate_meso<T: Real>(regions: &[MesoRegion<T>], total: usize, q: f64) -> Result<Vec<usize>> {
    if regions.is_empty() {
        return Err(Error::InvalidParameter("no meso regions".into()));
    }
    if total < regions.len() {
        return Err(Error::InvalidParameter(format!(
            "{total} intervals cannot cover {} regions",
            regions.len()
        )));
    }
    let c: Vec<f64> = regions
        .iter()
        .map(|r| r.accumulated_error.as_f64().abs() * (r.interval_count() as f64).powf(q))
        .collect();
    if c.iter().all(|&x| x == 0.0) {
        warn!("all meso-region errors vanish; doubling every region instead");
        return Ok(regions.iter().map(|r| 2 * r.interval_count()).collect());
    }

    let fixed: usize = regions
        .iter()
        .zip(&c)
        .filter(|(_, &ci)| ci == 0.0)
        .map(|(r, _)| r.interval_count())
        .sum();
    let active = c.iter().filter(|&&x| x > 0.0).count();
    let budget = total.saturating_sub(fixed).max(active);

    let p = 1.0 / (q + 1.0);
    let k = (c.iter().map(|x| x.powf(p)).sum::<f64>() / budget as f64).powf(q + 1.0);
    let mut counts: Vec<usize> = regions
        .iter()
        .zip(&c)
        .map(|(r, &ci)| {
            if ci == 0.0 {
                r.interval_count()
            } else {
                ((ci / k).powf(p) + 0.5).floor().max(1.0) as usize
            }
        })
        .collect();

    let assigned: usize = counts
        .iter()
        .zip(&c)
        .filter(|(_, &ci)| ci > 0.0)
        .map(|(&n, _)| n)
        .sum();
    let largest = (0..counts.len())
        .filter(|&i| c[i] > 0.0)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if counts[b] >= counts[i] => Some(b),
            _ => Some(i),
        })
        .expect("at least one active region");
    let adjusted = counts[largest] as i64 + budget as i64 - assigned as i64;
    counts[largest] = adjusted.max(1) as usize;
    Ok(counts)
}

/// Meso-scale refinement of `prev` driven by one sample's decomposition.
///
/// The tentative mesh puts `N̂_i` uniform intervals on each meso region of
/// `worst` (with `N̂ = multiplier × prev intervals`); the result is the common
/// refinement of the tentative layout and the uniform blocks of `prev`,
/// realised by subdividing `prev` so that none of its nodes is lost.
pub fn refine_meso<T: Real>(
    prev: &Mesh1d<T>,
    worst: &ErrorDecomposition<T>,
    cfg: &RefinementConfig,
) -> Result<Mesh1d<T>> {
    if worst.len() != prev.intervals() {
        return Err(Error::DomainMismatch(format!(
            "decomposition has {} entries for a mesh of {} intervals",
            worst.len(),
            prev.intervals()
        )));
    }
    let regions = find_meso_regions(&accumulate(worst));
    let target = ((cfg.meso_target_multiplier * prev.intervals() as f64).round() as usize).max(regions.len());
    let counts = allocate_meso(&regions, target, cfg.meso_q)?;
    let tentative: Vec<MesoSpan<T>> = regions
        .iter()
        .zip(&counts)
        .map(|(r, &n)| {
            let (start, end) = r.span(prev);
            MesoSpan { start, end, intervals: n }
        })
        .collect();
    let merged = common_mesoregion_refinement(&prev.uniform_blocks(), &tentative)?;
    let mesh = prev.refine_to_spans(&merged)?;
    if mesh.intervals() <= prev.intervals() {
        warn!("meso refinement did not add intervals; falling back to uniform refinement");
        return refine_uniform(prev, cfg);
    }
    Ok(mesh)
}

/// Most relevant decomposition for meso refinement: largest `|total|`
/// (first one on ties).
pub fn worst_sample<T: Real>(decomps: &[ErrorDecomposition<T>]) -> Option<&ErrorDecomposition<T>> {
    decomps
        .iter()
        .fold(None, |best: Option<&ErrorDecomposition<T>>, d| match best {
            Some(b) if b.total.abs() >= d.total.abs() => Some(b),
            _ => Some(d),
        })
}

/// Builds the next level's mesh with the configured strategy.
pub fn refine_level<T: Real>(
    mesh: &Mesh1d<T>,
    decomps: &[ErrorDecomposition<T>],
    cfg: &RefinementConfig,
) -> Result<Mesh1d<T>> {
    match cfg.strategy {
        Strategy::Uniform => refine_uniform(mesh, cfg),
        Strategy::Dwr => refine_dwr_multisample(mesh, decomps, cfg),
        Strategy::Meso => {
            let worst = worst_sample(decomps)
                .ok_or_else(|| Error::InvalidParameter("no decompositions to refine from".into()))?;
            refine_meso(mesh, worst, cfg)
        }
    }
}
