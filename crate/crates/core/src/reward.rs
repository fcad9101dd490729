//! Fusion parameters and the per-tick scalar reward.

use std::fmt;

use thiserror::Error;

use crate::emotion::{EmotionTaxonomy, EmotionVector, VectorError, NORM_TOLERANCE};

/// Default sign pattern of the modality weight vectors before normalization.
pub const DEFAULT_WEIGHT_PATTERN: [(&str, f64); 7] = [
    ("happiness", 1.0),
    ("surprise", 0.5),
    ("anger", -1.0),
    ("disgust", -1.0),
    ("fear", -1.0),
    ("sadness", -1.0),
    ("neutral", 0.0),
];

pub const DEFAULT_K_FER: f64 = 1.0;
pub const DEFAULT_K_SER: f64 = 0.25;
pub const DEFAULT_K_PRESENCE: f64 = 0.1;
pub const DEFAULT_TICK_PERIOD_MS: u64 = 100;
pub const DEFAULT_FER_WINDOW_MS: u64 = 500;
pub const DEFAULT_SER_WINDOW_MS: u64 = 2000;
pub const DEFAULT_PRESENCE_WINDOW_MS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionConfigError {
    #[error("{name} must have unit L2 norm (sum of squares = 1 within 1e-9), got norm {norm}")]
    WeightNotUnit { name: &'static str, norm: f64 },
    #[error("{name} has {actual} components, taxonomy has {expected}")]
    WeightDimension {
        name: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{name} must be finite")]
    NonFinite { name: &'static str },
    #[error("tick_period_ms must be > 0")]
    ZeroTickPeriod,
    #[error("{name} ({window} ms) must be >= tick_period_ms ({tick} ms)")]
    WindowShorterThanTick {
        name: &'static str,
        window: u64,
        tick: u64,
    },
    #[error("taxonomy has none of the default weight labels; weights must be given explicitly")]
    NoDefaultWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingModalityPolicy {
    /// An absent modality contributes exactly 0 to the reward.
    #[default]
    ZeroContribution,
}

/// Reward design parameters plus the windowing used by the fusion engine.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    pub w_fer: EmotionVector,
    pub w_ser: EmotionVector,
    pub k_fer: f64,
    pub k_ser: f64,
    pub k_presence: f64,
    pub tick_period_ms: u64,
    pub fer_window_ms: u64,
    pub ser_window_ms: u64,
    pub presence_window_ms: u64,
    pub missing_modality_policy: MissingModalityPolicy,
}

impl FusionConfig {
    /// Default parameters for `taxonomy`. Labels outside the default weight
    /// pattern get weight 0.
    pub fn default_for(taxonomy: &EmotionTaxonomy) -> Result<Self, FusionConfigError> {
        let w = default_weights(taxonomy)?;
        Ok(Self {
            w_fer: w.clone(),
            w_ser: w,
            k_fer: DEFAULT_K_FER,
            k_ser: DEFAULT_K_SER,
            k_presence: DEFAULT_K_PRESENCE,
            tick_period_ms: DEFAULT_TICK_PERIOD_MS,
            fer_window_ms: DEFAULT_FER_WINDOW_MS,
            ser_window_ms: DEFAULT_SER_WINDOW_MS,
            presence_window_ms: DEFAULT_PRESENCE_WINDOW_MS,
            missing_modality_policy: MissingModalityPolicy::ZeroContribution,
        })
    }

    pub fn validate(&self, k: usize) -> Result<(), FusionConfigError> {
        for (name, w) in [("w_fer", &self.w_fer), ("w_ser", &self.w_ser)] {
            if w.len() != k {
                return Err(FusionConfigError::WeightDimension {
                    name,
                    expected: k,
                    actual: w.len(),
                });
            }
            if w.check_finite().is_err() {
                return Err(FusionConfigError::NonFinite { name });
            }
            let sum_sq: f64 = w.values().iter().map(|x| x * x).sum();
            if (sum_sq - 1.0).abs() > NORM_TOLERANCE {
                return Err(FusionConfigError::WeightNotUnit {
                    name,
                    norm: sum_sq.sqrt(),
                });
            }
        }
        for (name, gain) in [
            ("k_fer", self.k_fer),
            ("k_ser", self.k_ser),
            ("k_presence", self.k_presence),
        ] {
            if !gain.is_finite() {
                return Err(FusionConfigError::NonFinite { name });
            }
        }
        if self.tick_period_ms == 0 {
            return Err(FusionConfigError::ZeroTickPeriod);
        }
        for (name, window) in [
            ("fer_window_ms", self.fer_window_ms),
            ("ser_window_ms", self.ser_window_ms),
            ("presence_window_ms", self.presence_window_ms),
        ] {
            if window < self.tick_period_ms {
                return Err(FusionConfigError::WindowShorterThanTick {
                    name,
                    window,
                    tick: self.tick_period_ms,
                });
            }
        }
        Ok(())
    }

    pub fn max_window_ms(&self) -> u64 {
        self.fer_window_ms
            .max(self.ser_window_ms)
            .max(self.presence_window_ms)
    }

    /// Upper bound on `|r_total|`: `|k_fer| + |k_ser| + |k_presence|`.
    pub fn reward_bound(&self) -> f64 {
        self.k_fer.abs() + self.k_ser.abs() + self.k_presence.abs()
    }
}

/// Unit-normalized default weight vector for `taxonomy`.
pub fn default_weights(taxonomy: &EmotionTaxonomy) -> Result<EmotionVector, FusionConfigError> {
    let raw: Vec<f64> = taxonomy
        .labels()
        .iter()
        .map(|label| {
            DEFAULT_WEIGHT_PATTERN
                .iter()
                .find(|(l, _)| l == label)
                .map_or(0.0, |(_, w)| *w)
        })
        .collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(FusionConfigError::NoDefaultWeights);
    }
    Ok(EmotionVector::new(
        raw.into_iter().map(|x| x / norm).collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("presence fraction {0} is outside [0, 1]")]
    PresenceOutOfRange(f64),
}

/// Reward decomposition for one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParts {
    pub total: f64,
    pub fer: f64,
    pub ser: f64,
    pub presence: f64,
}

/// Computes the scalar reward and its per-modality parts.
///
/// `total` is always `(fer + ser) + presence`, evaluated in that order.
pub fn reward(
    x_fer: Option<&EmotionVector>,
    x_ser: Option<&EmotionVector>,
    presence: f64,
    cfg: &FusionConfig,
) -> Result<RewardParts, RewardError> {
    if !(0.0..=1.0).contains(&presence) {
        return Err(RewardError::PresenceOutOfRange(presence));
    }
    let term = |x: Option<&EmotionVector>, w: &EmotionVector, k: f64| -> Result<f64, RewardError> {
        match x {
            None => Ok(0.0),
            Some(x) => {
                if x.len() != w.len() {
                    return Err(VectorError::DimensionMismatch {
                        expected: w.len(),
                        actual: x.len(),
                    }
                    .into());
                }
                x.check_finite()?;
                Ok(k * w.dot(x))
            }
        }
    };
    let fer = term(x_fer, &cfg.w_fer, cfg.k_fer)?;
    let ser = term(x_ser, &cfg.w_ser, cfg.k_ser)?;
    let presence = cfg.k_presence * presence;
    Ok(RewardParts {
        total: fer + ser + presence,
        fer,
        ser,
        presence,
    })
}

/// One emitted tick of the reward stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSample {
    pub tick_time: u64,
    pub r_total: f64,
    pub r_fer: f64,
    pub r_ser: f64,
    pub r_presence: f64,
    pub x_fer: Option<EmotionVector>,
    pub x_ser: Option<EmotionVector>,
    pub presence: f64,
}

impl RewardSample {
    pub fn from_parts(
        tick_time: u64,
        parts: RewardParts,
        x_fer: Option<EmotionVector>,
        x_ser: Option<EmotionVector>,
        presence: f64,
    ) -> Self {
        Self {
            tick_time,
            r_total: parts.total,
            r_fer: parts.fer,
            r_ser: parts.ser,
            r_presence: parts.presence,
            x_fer,
            x_ser,
            presence,
        }
    }

    /// Reward record line without the trailing newline.
    pub fn to_record(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RewardSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}|{}|{}|{}|{}|{}",
            self.tick_time, self.r_total, self.r_fer, self.r_ser, self.r_presence, self.presence
        )
    }
}
