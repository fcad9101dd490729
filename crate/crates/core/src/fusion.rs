//! Tick-driven fusion of the merged frame stream into reward samples.
//!
//! Ticks fall on `epoch + i * tick_period`. At tick `T` each FER/SER channel
//! contributes its newest frame with `T - t < window` (sample-and-hold), the
//! contributing vectors are averaged per modality, and the presence fraction
//! is measured over the 1 ms slots of `(T - presence_window, T]` that lie at
//! or after the epoch. A presence observation holds from its timestamp until
//! the same channel's next observation, for at most one presence window.
//! A slot counts as present when any channel's held observation reports a
//! face or an active voice.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::emotion::{
    average_modality, normalize_unit, EmotionVector, Modality, ModalitySnapshot, VectorError,
};
use crate::reward::{reward, FusionConfig, FusionConfigError, RewardSample};
use crate::stream::{ChannelRegistry, FrameKind, FramePayload, PerceptorFrame};

/// File extension of reward sample streams.
pub const REWARD_EXTENSION: &str = "srfr";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error(transparent)]
    Config(#[from] FusionConfigError),
    #[error("frame at t={t} from {channel:?} arrived after tick {watermark} was emitted")]
    LateFrame {
        channel: String,
        t: u64,
        watermark: u64,
    },
    #[error("frame from unregistered channel {0:?}")]
    UnknownChannel(String),
    #[error("channel {channel:?} is registered as {expected}, frame is {actual}")]
    KindMismatch {
        channel: String,
        expected: FrameKind,
        actual: FrameKind,
    },
    #[error("channel {channel:?}: {source}")]
    Vector {
        channel: String,
        #[source]
        source: VectorError,
    },
}

#[derive(Debug, Clone)]
struct HeldEstimate {
    t: u64,
    modality: Modality,
    unit: EmotionVector,
}

/// Per-channel presence history: observations inside the window plus the
/// newest one at or before the window start.
#[derive(Debug, Clone, Default)]
struct PresenceHistory {
    obs: VecDeque<(u64, bool)>,
}

/// Owns the windowed state of one reward stream.
#[derive(Debug, Clone)]
pub struct FusionEngine {
    cfg: FusionConfig,
    registry: ChannelRegistry,
    epoch: Option<u64>,
    next_index: u64,
    watermark: Option<u64>,
    estimates: BTreeMap<String, HeldEstimate>,
    presence: BTreeMap<String, PresenceHistory>,
}

impl FusionEngine {
    /// The epoch is fixed by the first pushed frame unless given here.
    pub fn new(
        cfg: FusionConfig,
        registry: ChannelRegistry,
        epoch: Option<u64>,
    ) -> Result<Self, FusionError> {
        cfg.validate(registry.taxonomy().len())?;
        Ok(Self {
            cfg,
            registry,
            epoch,
            next_index: 0,
            watermark: None,
            estimates: BTreeMap::new(),
            presence: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &FusionConfig {
        &self.cfg
    }

    pub fn registry(&self) -> &ChannelRegistry {
        &self.registry
    }

    pub fn epoch(&self) -> Option<u64> {
        self.epoch
    }

    /// Time of the last emitted tick.
    pub fn watermark(&self) -> Option<u64> {
        self.watermark
    }

    fn next_tick_time(&self) -> Option<u64> {
        self.epoch
            .map(|e| e + self.next_index * self.cfg.tick_period_ms)
    }

    /// Emits every pending tick strictly before `frame.t`, then buffers the
    /// frame. A rejected frame leaves the engine unchanged.
    pub fn push(&mut self, frame: PerceptorFrame) -> Result<Vec<RewardSample>, FusionError> {
        if let Some(watermark) = self.watermark.filter(|w| frame.t <= *w) {
            return Err(FusionError::LateFrame {
                channel: frame.channel,
                t: frame.t,
                watermark,
            });
        }
        let spec = self
            .registry
            .get(&frame.channel)
            .ok_or_else(|| FusionError::UnknownChannel(frame.channel.clone()))?;
        if spec.kind() != frame.kind() {
            return Err(FusionError::KindMismatch {
                expected: spec.kind(),
                actual: frame.kind(),
                channel: frame.channel,
            });
        }
        let held = match &frame.payload {
            FramePayload::Emotion { modality, raw } => {
                let k = self.registry.taxonomy().len();
                let vector_err = |source| FusionError::Vector {
                    channel: frame.channel.clone(),
                    source,
                };
                if raw.len() != k {
                    return Err(vector_err(VectorError::DimensionMismatch {
                        expected: k,
                        actual: raw.len(),
                    }));
                }
                Some(HeldEstimate {
                    t: frame.t,
                    modality: *modality,
                    unit: normalize_unit(raw).map_err(vector_err)?,
                })
            }
            FramePayload::Presence(_) => None,
        };

        if self.epoch.is_none() {
            self.epoch = Some(frame.t);
        }
        let samples = match frame.t.checked_sub(1) {
            Some(before) => self.tick(before),
            None => Vec::new(),
        };
        match (held, &frame.payload) {
            (Some(h), _) => {
                self.estimates.insert(frame.channel, h);
            }
            (None, FramePayload::Presence(obs)) => {
                self.presence
                    .entry(frame.channel)
                    .or_default()
                    .obs
                    .push_back((frame.t, obs.is_present()));
            }
            (None, FramePayload::Emotion { .. }) => unreachable!(),
        }
        Ok(samples)
    }

    /// Emits one sample for every tick boundary `<= now` not yet emitted.
    /// Without an epoch (no frame seen and none configured) nothing is due.
    pub fn tick(&mut self, now: u64) -> Vec<RewardSample> {
        let mut out = Vec::new();
        while let Some(t) = self.next_tick_time().filter(|t| *t <= now) {
            out.push(self.sample_at(t));
            self.watermark = Some(t);
            self.next_index += 1;
            self.evict(t);
        }
        out
    }

    fn sample_at(&self, t: u64) -> RewardSample {
        let x_fer = self.modality_mean(Modality::Fer, t, self.cfg.fer_window_ms);
        let x_ser = self.modality_mean(Modality::Ser, t, self.cfg.ser_window_ms);
        let presence = self.presence_fraction(t);
        let parts = reward(x_fer.as_ref(), x_ser.as_ref(), presence, &self.cfg)
            .expect("engine state satisfies reward preconditions");
        RewardSample::from_parts(t, parts, x_fer, x_ser, presence)
    }

    fn modality_mean(&self, modality: Modality, t: u64, window: u64) -> Option<EmotionVector> {
        let k = self.registry.taxonomy().len();
        let mut snapshot = ModalitySnapshot::empty(modality);
        for (channel, est) in &self.estimates {
            if est.modality == modality && est.t <= t && t - est.t < window {
                snapshot
                    .push(k, channel.clone(), est.unit.clone())
                    .expect("held estimates are unit vectors of taxonomy length");
            }
        }
        average_modality(&snapshot)
    }

    fn presence_fraction(&self, t: u64) -> f64 {
        let window = self.cfg.presence_window_ms;
        let epoch = self.epoch.unwrap_or(0);
        let lo = (t + 1).saturating_sub(window).max(epoch);
        let hi = t + 1; // exclusive
        if lo >= hi {
            return 0.0;
        }
        let mut covered: Vec<(u64, u64)> = Vec::new();
        for hist in self.presence.values() {
            let obs: Vec<&(u64, bool)> = hist.obs.iter().filter(|(ot, _)| *ot <= t).collect();
            for (i, (ot, present)) in obs.iter().enumerate() {
                if !present {
                    continue;
                }
                let mut end = (ot + window).min(hi);
                if let Some((next_t, _)) = obs.get(i + 1) {
                    end = end.min(*next_t);
                }
                let start = (*ot).max(lo);
                if start < end {
                    covered.push((start, end));
                }
            }
        }
        covered.sort_unstable();
        let mut total = 0u64;
        let mut cursor = lo;
        for (start, end) in covered {
            let start = start.max(cursor);
            if end > start {
                total += end - start;
                cursor = end;
            }
        }
        total as f64 / (hi - lo) as f64
    }

    fn evict(&mut self, t: u64) {
        let max_window = self.cfg.max_window_ms();
        self.estimates
            .retain(|_, est| t - est.t.min(t) < max_window);
        let cutoff = t.saturating_sub(self.cfg.presence_window_ms);
        for hist in self.presence.values_mut() {
            // Keep the newest observation at or before the cutoff; it may
            // still hold into the next window.
            while hist.obs.len() > 1 && hist.obs[1].0 <= cutoff {
                hist.obs.pop_front();
            }
            if hist.obs.len() == 1 && hist.obs[0].0 + self.cfg.presence_window_ms <= cutoff {
                hist.obs.pop_front();
            }
        }
        self.presence.retain(|_, h| !h.obs.is_empty());
    }
}

/// Time range of a replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunBounds {
    /// Tick grid origin; defaults to the first frame's timestamp (or 0 for
    /// an empty stream with an `until`).
    pub epoch: Option<u64>,
    /// Emit ticks strictly before this time. Defaults to emitting every tick
    /// up to and including the last frame's timestamp.
    pub until: Option<u64>,
}

/// Runs a whole ordered frame stream through a fresh engine.
pub fn run<I>(
    frames: I,
    cfg: &FusionConfig,
    registry: &ChannelRegistry,
    bounds: RunBounds,
) -> Result<Vec<RewardSample>, FusionError>
where
    I: IntoIterator<Item = PerceptorFrame>,
{
    let mut engine = FusionEngine::new(cfg.clone(), registry.clone(), bounds.epoch)?;
    let mut samples = Vec::new();
    let mut last_t = None;
    for frame in frames {
        if bounds.until.is_some_and(|u| frame.t >= u) {
            break;
        }
        last_t = Some(frame.t);
        samples.extend(engine.push(frame)?);
    }
    finish(&mut engine, last_t, bounds.until, &mut samples);
    Ok(samples)
}

/// Flushes the ticks that close a stream, following [`RunBounds`] rules.
pub fn finish(
    engine: &mut FusionEngine,
    last_t: Option<u64>,
    until: Option<u64>,
    samples: &mut Vec<RewardSample>,
) {
    match until {
        Some(u) => {
            if engine.epoch.is_none() {
                engine.epoch = Some(0);
            }
            if let Some(end) = u.checked_sub(1) {
                samples.extend(engine.tick(end));
            }
        }
        None => {
            if let Some(t) = last_t {
                samples.extend(engine.tick(t));
            }
        }
    }
}

/// One `.srfr` line: the scalar parts of a [`RewardSample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardRecord {
    pub tick_time: u64,
    pub r_total: f64,
    pub r_fer: f64,
    pub r_ser: f64,
    pub r_presence: f64,
    pub presence: f64,
}

impl From<&RewardSample> for RewardRecord {
    fn from(s: &RewardSample) -> Self {
        Self {
            tick_time: s.tick_time,
            r_total: s.r_total,
            r_fer: s.r_fer,
            r_ser: s.r_ser,
            r_presence: s.r_presence,
            presence: s.presence,
        }
    }
}

impl fmt::Display for RewardRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}|{}|{}|{}|{}|{}",
            self.tick_time, self.r_total, self.r_fer, self.r_ser, self.r_presence, self.presence
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad reward record: {0}")]
pub struct RecordError(pub String);

impl FromStr for RewardRecord {
    type Err = RecordError;

    fn from_str(line: &str) -> Result<Self, RecordError> {
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 6 {
            return Err(RecordError(format!(
                "expected 6 fields, got {}",
                fields.len()
            )));
        }
        let tick_time = fields[0]
            .parse()
            .map_err(|_| RecordError(format!("bad tick time {:?}", fields[0])))?;
        let mut reals = [0.0; 5];
        for (slot, s) in reals.iter_mut().zip(&fields[1..]) {
            *slot = s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| RecordError(format!("bad real {s:?}")))?;
        }
        Ok(Self {
            tick_time,
            r_total: reals[0],
            r_fer: reals[1],
            r_ser: reals[2],
            r_presence: reals[3],
            presence: reals[4],
        })
    }
}

pub fn write_records<W: Write>(mut out: W, samples: &[RewardSample]) -> io::Result<()> {
    for s in samples {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

/// Reads a `.srfr` stream. Errors carry the 1-based line number.
pub fn read_records<B: BufRead>(reader: B) -> Result<Vec<RewardRecord>, (usize, RecordError)> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| (i + 1, RecordError(e.to_string())))?;
        out.push(line.parse().map_err(|e| (i + 1, e))?);
    }
    Ok(out)
}
