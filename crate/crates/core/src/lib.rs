//! Real-time social reward fusion.
//!
//! Perceptor processes (facial and speech emotion classifiers, face and
//! voice detectors) stream timestamped frames into [`fusion::FusionEngine`],
//! which emits a scalar reward per tick: a gain-weighted inner product of
//! each modality's averaged, unit-normalized emotion estimate with a unit
//! weight vector, plus a presence term. The [`eval`] module scores reward
//! streams against human clip labels and measures component classifiers;
//! [`population`] aggregates individual returns through an internalisation
//! function.

pub mod cli;
pub mod config;
pub mod emotion;
pub mod eval;
pub mod fusion;
pub mod population;
pub mod reward;
pub mod stream;

pub use emotion::{
    average_modality, normalize_unit, EmotionTaxonomy, EmotionVector, Modality, ModalitySnapshot,
};
pub use fusion::{run, FusionEngine, RewardRecord, RunBounds};
pub use reward::{reward, FusionConfig, RewardParts, RewardSample};
