//! TOML run configuration, validated in full before any processing.
//!
//! ```toml
//! [taxonomy]
//! labels = ["anger", "disgust", "fear", "happiness", "sadness", "surprise", "neutral"]
//!
//! [fusion]
//! k_fer = 1.0
//! k_ser = 0.25
//! k_presence = 0.1
//! tick_period_ms = 100
//! w_fer = { happiness = 0.4364357804719848, anger = -0.4364357804719848 }
//!
//! [[channels]]
//! id = "fer_rmn"
//! modality = "FER"
//!
//! [[channels]]
//! id = "ser_ravdess"
//! modality = "SER"
//! labels = ["neutral", "calm", "happy", "sad", "angry", "fearful", "disgust", "surprised"]
//! mapping = { calm = "DROP", happy = "happiness", sad = "sadness" }
//!
//! [eval]
//! histogram_bins = 20
//! test_fraction = 0.25
//! seed = 7
//! ```
//!
//! Every section and key is optional except the channel list entries'
//! `id` and `modality`. Weight tables name taxonomy labels; unnamed labels
//! get weight 0. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::emotion::{EmotionTaxonomy, EmotionVector, Modality, TaxonomyError};
use crate::eval::DEFAULT_BINS;
use crate::reward::{
    default_weights, FusionConfig, FusionConfigError, MissingModalityPolicy, DEFAULT_FER_WINDOW_MS,
    DEFAULT_K_FER, DEFAULT_K_PRESENCE, DEFAULT_K_SER, DEFAULT_PRESENCE_WINDOW_MS,
    DEFAULT_SER_WINDOW_MS, DEFAULT_TICK_PERIOD_MS,
};
use crate::stream::{ChannelRegistry, FrameKind, RegistryError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Parse(String),
    #[error("taxonomy: {0}")]
    Taxonomy(#[from] TaxonomyError),
    #[error("fusion: {0}")]
    Fusion(#[from] FusionConfigError),
    #[error("channels: {0}")]
    Registry(#[from] RegistryError),
    #[error("fusion.{table}: {label:?} is not a taxonomy label")]
    UnknownWeightLabel { table: &'static str, label: String },
    #[error("channels: unknown modality {0:?} (expected FER, SER or PRESENCE)")]
    UnknownModality(String),
    #[error("eval: {0}")]
    Eval(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    taxonomy: RawTaxonomy,
    #[serde(default)]
    fusion: RawFusion,
    #[serde(default)]
    channels: Vec<RawChannel>,
    #[serde(default)]
    eval: RawEval,
    #[serde(default)]
    output: OutputOptions,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTaxonomy {
    labels: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFusion {
    w_fer: Option<BTreeMap<String, f64>>,
    w_ser: Option<BTreeMap<String, f64>>,
    k_fer: Option<f64>,
    k_ser: Option<f64>,
    k_presence: Option<f64>,
    tick_period_ms: Option<u64>,
    fer_window_ms: Option<u64>,
    ser_window_ms: Option<u64>,
    presence_window_ms: Option<u64>,
    missing_modality_policy: Option<RawPolicy>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawPolicy {
    ZeroContribution,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    id: String,
    modality: String,
    labels: Option<Vec<String>>,
    #[serde(default)]
    mapping: BTreeMap<String, String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEval {
    histogram_bins: Option<usize>,
    test_fraction: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub histogram_bins: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            histogram_bins: DEFAULT_BINS,
            test_fraction: 0.25,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    /// Reward stream destination for `run`/`replay`.
    pub samples: Option<PathBuf>,
    /// Report destination for evaluation commands.
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub taxonomy: EmotionTaxonomy,
    pub fusion: FusionConfig,
    pub registry: ChannelRegistry,
    pub eval: EvalOptions,
    pub output: OutputOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        let taxonomy = EmotionTaxonomy::default();
        Self {
            fusion: FusionConfig::default_for(&taxonomy)
                .expect("default taxonomy has default weights"),
            registry: ChannelRegistry::new(taxonomy.clone()),
            taxonomy,
            eval: EvalOptions::default(),
            output: OutputOptions::default(),
        }
    }
}

fn weights(
    table: &'static str,
    given: Option<&BTreeMap<String, f64>>,
    taxonomy: &EmotionTaxonomy,
) -> Result<Option<EmotionVector>, ConfigError> {
    let Some(given) = given else {
        return Ok(None);
    };
    let mut w = vec![0.0; taxonomy.len()];
    for (label, value) in given {
        let idx = taxonomy
            .index_of(label)
            .ok_or_else(|| ConfigError::UnknownWeightLabel {
                table,
                label: label.clone(),
            })?;
        w[idx] = *value;
    }
    Ok(Some(EmotionVector::new(w)))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;

        let taxonomy = match raw.taxonomy.labels {
            Some(labels) => EmotionTaxonomy::new(labels)?,
            None => EmotionTaxonomy::default(),
        };

        let f = &raw.fusion;
        let w_fer = weights("w_fer", f.w_fer.as_ref(), &taxonomy)?;
        let w_ser = weights("w_ser", f.w_ser.as_ref(), &taxonomy)?;
        let default_w = if w_fer.is_none() || w_ser.is_none() {
            Some(default_weights(&taxonomy)?)
        } else {
            None
        };
        let fusion = FusionConfig {
            w_fer: w_fer
                .or_else(|| default_w.clone())
                .expect("weights resolved"),
            w_ser: w_ser.or(default_w).expect("weights resolved"),
            k_fer: f.k_fer.unwrap_or(DEFAULT_K_FER),
            k_ser: f.k_ser.unwrap_or(DEFAULT_K_SER),
            k_presence: f.k_presence.unwrap_or(DEFAULT_K_PRESENCE),
            tick_period_ms: f.tick_period_ms.unwrap_or(DEFAULT_TICK_PERIOD_MS),
            fer_window_ms: f.fer_window_ms.unwrap_or(DEFAULT_FER_WINDOW_MS),
            ser_window_ms: f.ser_window_ms.unwrap_or(DEFAULT_SER_WINDOW_MS),
            presence_window_ms: f.presence_window_ms.unwrap_or(DEFAULT_PRESENCE_WINDOW_MS),
            missing_modality_policy: match f.missing_modality_policy {
                None | Some(RawPolicy::ZeroContribution) => MissingModalityPolicy::ZeroContribution,
            },
        };
        fusion.validate(taxonomy.len())?;

        let mut registry = ChannelRegistry::new(taxonomy.clone());
        for ch in &raw.channels {
            let kind = FrameKind::parse(&ch.modality)
                .ok_or_else(|| ConfigError::UnknownModality(ch.modality.clone()))?;
            match kind.modality() {
                None => {
                    if ch.labels.is_some() || !ch.mapping.is_empty() {
                        return Err(RegistryError::PresenceWithLabels(ch.id.clone()).into());
                    }
                    registry.register_presence(&ch.id)?;
                }
                Some(m) => {
                    let labels = ch
                        .labels
                        .clone()
                        .unwrap_or_else(|| taxonomy.labels().to_vec());
                    registry.register_emotion(&ch.id, m, labels, &ch.mapping)?;
                }
            }
        }

        let defaults = EvalOptions::default();
        let eval = EvalOptions {
            histogram_bins: raw.eval.histogram_bins.unwrap_or(defaults.histogram_bins),
            test_fraction: raw.eval.test_fraction.unwrap_or(defaults.test_fraction),
            seed: raw.eval.seed.unwrap_or(defaults.seed),
        };
        if eval.histogram_bins == 0 {
            return Err(ConfigError::Eval("histogram_bins must be > 0".into()));
        }
        if !(eval.test_fraction > 0.0 && eval.test_fraction < 1.0) {
            return Err(ConfigError::Eval(format!(
                "test_fraction must be in (0, 1), got {}",
                eval.test_fraction
            )));
        }

        Ok(Self {
            taxonomy,
            fusion,
            registry,
            eval,
            output: raw.output,
        })
    }

    /// Channel ids registered for `modality`.
    pub fn channels_of(&self, modality: Modality) -> Vec<&str> {
        self.registry
            .channels()
            .filter(|(_, spec)| spec.kind().modality() == Some(modality))
            .map(|(id, _)| id)
            .collect()
    }
}
