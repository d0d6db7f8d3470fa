use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlmc::MlmcConfig;
use crate::refine::{RefinementConfig, Strategy};

use super::presets::Preset;

/// Scalar type the solvers run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// `[refinement]` section. Unset knobs take the preset's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefinementSection {
    pub strategy: String,
    pub dwr_fraction: Option<f64>,
    pub dwr_factor: Option<usize>,
    pub uniform_factor: usize,
    pub meso_q: f64,
    pub meso_target_multiplier: f64,
}

impl Default for RefinementSection {
    fn default() -> Self {
        let d = RefinementConfig::default();
        Self {
            strategy: d.strategy.name().to_owned(),
            dwr_fraction: None,
            dwr_factor: None,
            uniform_factor: d.uniform_factor,
            meso_q: d.meso_q,
            meso_target_multiplier: d.meso_target_multiplier,
        }
    }
}

/// A complete run description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: String,
    /// MSE tolerance; the preset's value when unset.
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub n_schedule: Vec<usize>,
    pub max_levels: usize,
    pub max_failure_rate: f64,
    pub output_dir: PathBuf,
    pub dump_grids: bool,
    /// Worker threads for sampling; 0 uses all cores.
    pub jobs: usize,
    pub initial_intervals: Option<usize>,
    pub adjoint_refinement: Option<usize>,
    pub precision: Precision,
    pub refinement: RefinementSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = MlmcConfig::default();
        Self {
            experiment: Preset::HarmonicStandard.name().to_owned(),
            epsilon: None,
            seed: m.master_seed,
            n_schedule: m.n_schedule,
            max_levels: m.max_levels,
            max_failure_rate: m.max_failure_rate,
            output_dir: PathBuf::from("mlmc-output"),
            dump_grids: false,
            jobs: 0,
            initial_intervals: None,
            adjoint_refinement: None,
            precision: Precision::F64,
            refinement: RefinementSection::default(),
        }
    }
}

impl RunConfig {
    pub fn preset(experiment: Preset, strategy: Strategy) -> Self {
        let mut cfg = Self {
            experiment: experiment.name().to_owned(),
            ..Self::default()
        };
        cfg.refinement.strategy = strategy.name().to_owned();
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn experiment(&self) -> Result<Preset> {
        self.experiment.parse()
    }

    /// Validated driver and refinement settings with preset defaults filled in.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let preset = self.experiment()?;
        let d = preset.defaults();
        let refinement = RefinementConfig {
            strategy: self.refinement.strategy.parse()?,
            dwr_fraction: self.refinement.dwr_fraction.unwrap_or(d.dwr_fraction),
            dwr_factor: self.refinement.dwr_factor.unwrap_or(d.dwr_factor),
            uniform_factor: self.refinement.uniform_factor,
            meso_q: self.refinement.meso_q,
            meso_target_multiplier: self.refinement.meso_target_multiplier,
        };
        refinement.validate()?;
        let mlmc = MlmcConfig {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            n_schedule: self.n_schedule.clone(),
            master_seed: self.seed,
            max_levels: self.max_levels,
            max_failure_rate: self.max_failure_rate,
        };
        mlmc.validate()?;
        let initial_intervals = self.initial_intervals.unwrap_or(d.initial_intervals);
        if initial_intervals == 0 {
            return Err(Error::Config("initial_intervals must be positive".into()));
        }
        if self.adjoint_refinement == Some(0) {
            return Err(Error::Config("adjoint_refinement must be positive".into()));
        }
        Ok(ResolvedConfig {
            preset,
            mlmc,
            refinement,
            initial_intervals,
            domain_end: d.domain_end,
            adjoint_refinement: self.adjoint_refinement,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub preset: Preset,
    pub mlmc: MlmcConfig,
    pub refinement: RefinementConfig,
    pub initial_intervals: usize,
    pub domain_end: f64,
    pub adjoint_refinement: Option<usize>,
}
