use crate::Format;
use anyhow::Context;
use sdde_core::harness::RateExperimentConfig;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// One JSON document per run. Top-level keys apply to every command;
/// command sections carry their own parameters.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub format: Option<Vec<Format>>,
    pub simulate: Option<SimulateSection>,
    pub converge: Option<RateExperimentConfig>,
    pub probe: Option<ProbeSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub model: Option<String>,
    pub n: Option<u64>,
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub model: Option<String>,
    pub radius: Option<f64>,
    pub samples: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}
