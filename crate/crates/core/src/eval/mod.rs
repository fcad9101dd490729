//! Offline evaluation: clip-level correlation against human labels and
//! component-model classification metrics.

mod classify;
mod clips;
mod stats;

use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

pub use classify::{
    confusion_matrix, shuffled_actors, split_by_actor, top_k_accuracy, ActorSplit, ConfusionMatrix,
    Normalize, PredictionRecord,
};
pub use clips::{
    build_report, clip_mean_reward, ClipLabel, ClipMeans, ClipRecord, ClipReport, ClipResult,
    RewardComponent,
};
pub use stats::{pearson, percentile_sorted, DescriptiveStats, Histogram};

use crate::emotion::EmotionTaxonomy;
use crate::fusion::{run, RewardRecord, RunBounds};
use crate::reward::FusionConfig;
use crate::stream::{read_trace, ChannelRegistry};

/// Default histogram bin count for clip reports.
pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("clip has no reward samples")]
    EmptyClip,
    #[error("zero variance: correlation is undefined")]
    ZeroVariance,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("no predictions")]
    EmptyPredictions,
    #[error("k = {k} is outside 1..={classes}")]
    InvalidK { k: usize, classes: usize },
    #[error("need at least 2 distinct actors, got {0}")]
    TooFewActors(usize),
    #[error("test fraction {0} is outside (0, 1)")]
    InvalidFraction(f64),
    #[error("invalid histogram: range [{lo}, {hi}] with {bins} bins")]
    InvalidHistogram { lo: f64, hi: f64, bins: usize },
    #[error("bad record: {0}")]
    BadRecord(String),
}

/// Reads a prediction file, reporting the first bad line by number.
pub fn read_predictions<B: BufRead>(
    reader: B,
    taxonomy: &EmotionTaxonomy,
) -> Result<Vec<PredictionRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EvalError::BadRecord(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            PredictionRecord::parse(&line, taxonomy)
                .map_err(|e| EvalError::BadRecord(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// Reads a clip manifest. Relative trace paths resolve against `base`.
pub fn read_manifest<B: BufRead>(reader: B, base: &Path) -> Result<Vec<ClipRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EvalError::BadRecord(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut rec = ClipRecord::parse(&line)
            .map_err(|e| EvalError::BadRecord(format!("line {}: {e}", i + 1)))?;
        if rec.trace_path.is_relative() {
            rec.trace_path = base.join(&rec.trace_path);
        }
        out.push(rec);
    }
    Ok(out)
}

/// Replays one clip trace and averages its reward samples. Trace lines that
/// fail to parse are reported in the error.
pub fn score_clip(
    clip: &ClipRecord,
    cfg: &FusionConfig,
    registry: &ChannelRegistry,
) -> Result<ClipMeans, String> {
    let file = std::fs::File::open(&clip.trace_path)
        .map_err(|e| format!("{}: {e}", clip.trace_path.display()))?;
    let (frames, diagnostics) = read_trace(std::io::BufReader::new(file), registry);
    if let Some(d) = diagnostics.first() {
        return Err(format!(
            "{} invalid trace line(s), first: {d}",
            diagnostics.len()
        ));
    }
    let samples = run(frames, cfg, registry, RunBounds::default()).map_err(|e| e.to_string())?;
    let records: Vec<RewardRecord> = samples.iter().map(RewardRecord::from).collect();
    clip_mean_reward(&records).map_err(|e| e.to_string())
}

/// Scores every clip through the fusion engine and builds the report.
/// Clips that fail are excluded with their error; n/a clips are skipped
/// without being replayed.
pub fn evaluate_clips(
    clips: &[ClipRecord],
    cfg: &FusionConfig,
    registry: &ChannelRegistry,
    bins: usize,
) -> Result<ClipReport, EvalError> {
    let mut results = Vec::new();
    let mut excluded = Vec::new();
    for clip in clips {
        if clip.label == ClipLabel::NotApplicable {
            excluded.push((clip.clip_id.clone(), "label n/a".to_string()));
            continue;
        }
        match score_clip(clip, cfg, registry) {
            Ok(means) => results.push(ClipResult {
                clip_id: clip.clip_id.clone(),
                label: clip.label,
                means,
            }),
            Err(e) => excluded.push((clip.clip_id.clone(), e)),
        }
    }
    build_report(results, excluded, bins, cfg.reward_bound())
}
