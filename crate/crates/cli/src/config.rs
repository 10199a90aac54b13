use std::path::{Path, PathBuf};

use chanimg_core::genmodel::ResamplerConfig;
use chanimg_core::{SurrogateConfig, WganGpHyperparams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Artifact locations. Command-line flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub codec: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub reports: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Receiver heights to evaluate; empty means every height in the data.
    pub heights: Vec<f64>,
    pub link_state_bin_m: f64,
    pub heatmap_distance_bin_m: f64,
    pub samples_per_link: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            heights: Vec::new(),
            link_state_bin_m: 100.0,
            heatmap_distance_bin_m: 25.0,
            samples_per_link: 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub surrogate: SurrogateConfig,
    pub wgan: WganGpHyperparams,
    pub resampler: ResamplerConfig,
    pub eval: EvalSettings,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::malformed(format!("{}: {}", path.display(), e.message())))
    }
}
