//! TOML configuration files for `gen` and `train`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use opnet_core::gridcodec::CameraModel;
use opnet_core::model::{ModelConfig, TrainConfig};
use opnet_core::scenegen::{AugmentParams, SceneConfig};
use serde::{Deserialize, Serialize};

/// `gen` configuration: object, camera, scene sampling and augmentation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    /// Object file, relative to the config file.
    pub object: Option<PathBuf>,
    pub camera: CameraModel,
    pub scene: SceneConfig,
    #[serde(default)]
    pub augment: AugmentParams,
}

/// Network layout without the fields derived from the object and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_input")]
    pub input_size: usize,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_stages")]
    pub stage_channels: Vec<usize>,
    #[serde(default = "default_convs")]
    pub convs_per_stage: usize,
    #[serde(default)]
    pub grid_channels: Vec<usize>,
}

fn default_input() -> usize {
    32
}
fn default_grid() -> usize {
    8
}
fn default_stages() -> Vec<usize> {
    vec![16, 32]
}
fn default_convs() -> usize {
    1
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            input_size: default_input(),
            grid_size: default_grid(),
            stage_channels: default_stages(),
            convs_per_stage: default_convs(),
            grid_channels: Vec::new(),
        }
    }
}

impl ModelSection {
    pub fn resolve(&self, output_channels: usize, seed: u64) -> ModelConfig {
        ModelConfig {
            input_size: self.input_size,
            grid_size: self.grid_size,
            stage_channels: self.stage_channels.clone(),
            convs_per_stage: self.convs_per_stage,
            grid_channels: self.grid_channels.clone(),
            output_channels,
            seed,
        }
    }
}

/// `train` configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub object: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainConfig,
    /// Number of trailing dataset scenes held out for validation.
    #[serde(default)]
    pub validation_scenes: usize,
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

/// The object path from the command line, else from the config (relative to it).
pub fn object_path(flag: Option<&Path>, from_config: Option<&Path>, config: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = flag {
        return Ok(p.to_path_buf());
    }
    match (from_config, config) {
        (Some(p), Some(cfg)) => Ok(cfg.parent().unwrap_or(Path::new(".")).join(p)),
        (Some(p), None) => Ok(p.to_path_buf()),
        _ => bail!("no object file given (use --object or set `object` in the config)"),
    }
}
