//! Run configuration file and scorer backend selection.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swarmshape_core::navsim::SimConfig;
use swarmshape_core::optimizer::OptimizerConfig;
use swarmshape_core::showplan::{CostMetric, ShowPlane};
use swarmshape_core::{NamedColor, RasterImage, ScoreError, Scorer, SimilarityScore, TemplateScorer};

use crate::format::{self, FormatError};

pub const MODEL_DIR_ENV: &str = "SWARMSHAPE_MODEL_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Neural,
    Template,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    Euclidean,
    Squared,
}

impl From<MetricKind> for CostMetric {
    fn from(m: MetricKind) -> Self {
        match m {
            MetricKind::Euclidean => CostMetric::Euclidean,
            MetricKind::Squared => CostMetric::SquaredEuclidean,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub robots: usize,
    pub pool_size: usize,
    pub iterations: usize,
    pub elites: usize,
    pub shape_variants: usize,
    pub alpha_default: f64,
    pub sigma_shape: f64,
    pub sigma_subd: f64,
    pub sigma_one: f64,
    pub sigma_contour: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        OptimizerSection {
            robots: d.robots,
            pool_size: d.pool_size,
            iterations: d.iterations,
            elites: d.elites,
            shape_variants: d.shape_variants,
            alpha_default: d.alpha_default,
            sigma_shape: d.sigma_shape,
            sigma_subd: d.sigma_subd,
            sigma_one: d.sigma_one,
            sigma_contour: d.sigma_contour,
        }
    }
}

impl OptimizerSection {
    pub fn to_config(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            robots: self.robots,
            pool_size: self.pool_size,
            iterations: self.iterations,
            elites: self.elites,
            shape_variants: self.shape_variants,
            alpha_default: self.alpha_default,
            sigma_shape: self.sigma_shape,
            sigma_subd: self.sigma_subd,
            sigma_one: self.sigma_one,
            sigma_contour: self.sigma_contour,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlaneSection {
    pub distance: f64,
    pub base_height: f64,
    pub width: f64,
}

impl Default for PlaneSection {
    fn default() -> Self {
        let d = ShowPlane::default();
        PlaneSection {
            distance: d.distance,
            base_height: d.base_height,
            width: d.width,
        }
    }
}

impl PlaneSection {
    pub fn to_plane(&self) -> ShowPlane {
        ShowPlane {
            distance: self.distance,
            base_height: self.base_height,
            width: self.width,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub timestep: f64,
    pub time_horizon: f64,
    pub neighbor_radius: f64,
    pub goal_tolerance: f64,
    pub max_sim_time: f64,
    pub agent_radius: f64,
    pub max_speed: f64,
    /// Spacing of the ground grid the drones take off from, meters.
    pub grid_spacing: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        SimSection {
            timestep: d.timestep,
            time_horizon: d.time_horizon,
            neighbor_radius: d.neighbor_radius,
            goal_tolerance: d.goal_tolerance,
            max_sim_time: d.max_sim_time,
            agent_radius: d.agent_radius,
            max_speed: d.max_speed,
            grid_spacing: 3.0,
        }
    }
}

impl SimSection {
    pub fn to_config(&self) -> SimConfig {
        SimConfig {
            timestep: self.timestep,
            time_horizon: self.time_horizon,
            neighbor_radius: self.neighbor_radius,
            goal_tolerance: self.goal_tolerance,
            max_sim_time: self.max_sim_time,
            agent_radius: self.agent_radius,
            max_speed: self.max_speed,
        }
    }
}

/// Everything a run needs. Loaded from a JSON file; command-line flags
/// override individual fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub word: Option<String>,
    pub backend: Option<BackendKind>,
    pub model_dir: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub color: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub metric: MetricKind,
    pub optimizer: OptimizerSection,
    pub plane: PlaneSection,
    pub sim: SimSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| FormatError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn color(&self) -> Result<Option<NamedColor>, ConfigError> {
        self.color
            .as_deref()
            .map(|c| c.parse().map_err(|_| ConfigError::UnknownColor(c.to_owned())))
            .transpose()
    }

    /// The backend to use: explicit choice, else template when a mask is
    /// configured, else neural.
    pub fn backend_kind(&self) -> BackendKind {
        self.backend.unwrap_or(if self.mask.is_some() {
            BackendKind::Template
        } else {
            BackendKind::Neural
        })
    }

    /// Model directory from the configuration, falling back to the
    /// environment.
    pub fn resolved_model_dir(&self) -> Option<PathBuf> {
        self.model_dir
            .clone()
            .or_else(|| std::env::var_os(MODEL_DIR_ENV).map(PathBuf::from))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown color {0:?}")]
    UnknownColor(String),
    #[error("the template backend needs a target mask (--mask)")]
    MissingMask,
    #[error("the neural backend needs a model directory (--model-dir or {MODEL_DIR_ENV})")]
    MissingModelDir,
    #[error("this build has no neural backend (enable the `neural` feature)")]
    NeuralDisabled,
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// A loaded scorer.
pub enum Backend {
    Template(TemplateScorer),
    #[cfg(feature = "neural")]
    Neural(Box<crate::clip::ClipScorer>),
}

impl Backend {
    pub fn open(config: &RunConfig) -> Result<Backend, ConfigError> {
        match config.backend_kind() {
            BackendKind::Template => {
                let mask = config.mask.as_deref().ok_or(ConfigError::MissingMask)?;
                Ok(Backend::Template(format::load_mask(mask)?))
            }
            BackendKind::Neural => {
                let dir = config.resolved_model_dir().ok_or(ConfigError::MissingModelDir)?;
                open_neural(&dir)
            }
        }
    }
}

#[cfg(feature = "neural")]
fn open_neural(dir: &Path) -> Result<Backend, ConfigError> {
    Ok(Backend::Neural(Box::new(crate::clip::ClipScorer::load(dir)?)))
}

#[cfg(not(feature = "neural"))]
fn open_neural(_dir: &Path) -> Result<Backend, ConfigError> {
    Err(ConfigError::NeuralDisabled)
}

impl Scorer for Backend {
    fn supports_text(&self) -> bool {
        match self {
            Backend::Template(s) => s.supports_text(),
            #[cfg(feature = "neural")]
            Backend::Neural(s) => s.supports_text(),
        }
    }

    fn score_batch(&self, text: &str, images: &[&RasterImage]) -> Result<Vec<SimilarityScore>, ScoreError> {
        match self {
            Backend::Template(s) => s.score_batch(text, images),
            #[cfg(feature = "neural")]
            Backend::Neural(s) => s.score_batch(text, images),
        }
    }
}
