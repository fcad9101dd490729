//! Scripted synthetic perceptor traces for tests and demos.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use super::wire::{FrameKind, PerceptorFrame, PresenceObservation};
use crate::emotion::{EmotionTaxonomy, EmotionVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synth script: {0}")]
    InvalidSpec(String),
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Emission {
    /// Raw vector `profile + jitter * U[0,1)` per component.
    Emotion {
        kind: FrameKind,
        profile: EmotionVector,
        jitter: f64,
    },
    /// Each frame reports a face with probability `face_prob` and an active
    /// voice with probability `voice_prob`; `None` omits the field.
    Presence {
        face_prob: Option<f64>,
        voice_prob: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthChannel {
    pub id: String,
    pub rate_hz: f64,
    pub emission: Emission,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSegment {
    pub duration_ms: u64,
    pub channels: Vec<SynthChannel>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthScript {
    pub start_ms: u64,
    pub segments: Vec<SynthSegment>,
}

impl SynthScript {
    pub fn total_duration_ms(&self) -> u64 {
        self.segments.iter().map(|s| s.duration_ms).sum()
    }
}

fn check_prob(name: &str, p: Option<f64>) -> Result<(), SynthError> {
    match p {
        Some(p) if !(0.0..=1.0).contains(&p) => {
            Err(invalid(format!("{name} {p} is outside [0, 1]")))
        }
        _ => Ok(()),
    }
}

impl SynthChannel {
    fn validate(&self, k: usize) -> Result<(), SynthError> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(invalid(format!(
                "channel {:?}: rate_hz must be > 0",
                self.id
            )));
        }
        match &self.emission {
            Emission::Emotion {
                kind,
                profile,
                jitter,
            } => {
                if *kind == FrameKind::Presence {
                    return Err(invalid(format!(
                        "channel {:?}: emotion emission with PRESENCE kind",
                        self.id
                    )));
                }
                if profile.len() != k {
                    return Err(invalid(format!(
                        "channel {:?}: profile has {} values, taxonomy has {k}",
                        self.id,
                        profile.len()
                    )));
                }
                profile
                    .check_raw()
                    .map_err(|e| invalid(format!("channel {:?}: profile: {e}", self.id)))?;
                if !(jitter.is_finite() && *jitter >= 0.0) {
                    return Err(invalid(format!(
                        "channel {:?}: jitter must be >= 0",
                        self.id
                    )));
                }
            }
            Emission::Presence {
                face_prob,
                voice_prob,
            } => {
                if face_prob.is_none() && voice_prob.is_none() {
                    return Err(invalid(format!(
                        "channel {:?}: presence needs face_prob and/or voice_prob",
                        self.id
                    )));
                }
                check_prob("face_prob", *face_prob)?;
                check_prob("voice_prob", *voice_prob)?;
            }
        }
        Ok(())
    }

    fn kind(&self) -> FrameKind {
        match &self.emission {
            Emission::Emotion { kind, .. } => *kind,
            Emission::Presence { .. } => FrameKind::Presence,
        }
    }
}

/// Generates the frames described by `script`, deterministically for `seed`.
///
/// Within a segment starting at `s`, a channel at rate `f` emits at
/// `s + floor(i * 1000 / f)` for every `i` that stays inside the segment.
/// Output is sorted by `(t, channel)`.
pub fn synth_trace(
    script: &SynthScript,
    k: usize,
    seed: u64,
) -> Result<Vec<PerceptorFrame>, SynthError> {
    let mut kinds: HashMap<&str, FrameKind> = HashMap::new();
    for (si, seg) in script.segments.iter().enumerate() {
        if seg.duration_ms == 0 {
            return Err(invalid(format!("segment {si}: duration_ms must be > 0")));
        }
        for (ci, ch) in seg.channels.iter().enumerate() {
            if seg.channels[..ci].iter().any(|c| c.id == ch.id) {
                return Err(invalid(format!(
                    "segment {si}: channel {:?} listed twice",
                    ch.id
                )));
            }
            ch.validate(k)?;
            if let Some(prev) = kinds.insert(&ch.id, ch.kind()) {
                if prev != ch.kind() {
                    return Err(invalid(format!(
                        "channel {:?} changes modality between segments",
                        ch.id
                    )));
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::new();
    let mut seg_start = script.start_ms;
    for seg in &script.segments {
        for ch in &seg.channels {
            let period = 1000.0 / ch.rate_hz;
            for i in 0u64.. {
                let offset = (i as f64 * period).floor();
                if offset >= seg.duration_ms as f64 {
                    break;
                }
                let t = seg_start + offset as u64;
                let frame = match &ch.emission {
                    Emission::Emotion {
                        kind,
                        profile,
                        jitter,
                    } => {
                        let raw = profile
                            .values()
                            .iter()
                            .map(|p| {
                                if *jitter > 0.0 {
                                    p + jitter * rng.gen::<f64>()
                                } else {
                                    *p
                                }
                            })
                            .collect();
                        PerceptorFrame::emotion(
                            t,
                            ch.id.clone(),
                            kind.modality().expect("emotion kind"),
                            EmotionVector::new(raw),
                        )
                    }
                    Emission::Presence {
                        face_prob,
                        voice_prob,
                    } => {
                        let faces = face_prob.map(|p| u32::from(rng.gen::<f64>() < p));
                        let voice = voice_prob.map(|p| rng.gen::<f64>() < p);
                        PerceptorFrame::presence(
                            t,
                            ch.id.clone(),
                            PresenceObservation { faces, voice },
                        )
                    }
                };
                frames.push(frame);
            }
        }
        seg_start += seg.duration_ms;
    }
    frames.sort_by(|a, b| (a.t, &a.channel).cmp(&(b.t, &b.channel)));
    Ok(frames)
}

/// On-disk (TOML) form of a synth script. Emotion profiles are tables of
/// taxonomy label to mass; unlisted labels get 0.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthScriptFile {
    #[serde(default)]
    pub start_ms: u64,
    pub segments: Vec<SynthSegmentFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSegmentFile {
    pub duration_ms: u64,
    #[serde(default)]
    pub channels: Vec<SynthChannelFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthChannelFile {
    pub id: String,
    pub modality: String,
    pub rate_hz: f64,
    #[serde(default)]
    pub profile: BTreeMap<String, f64>,
    #[serde(default)]
    pub jitter: f64,
    pub face_prob: Option<f64>,
    pub voice_prob: Option<f64>,
}

impl SynthScriptFile {
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn to_script(&self, taxonomy: &EmotionTaxonomy) -> Result<SynthScript, SynthError> {
        let mut segments = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            let mut channels = Vec::with_capacity(seg.channels.len());
            for ch in &seg.channels {
                let kind = FrameKind::parse(&ch.modality).ok_or_else(|| {
                    invalid(format!(
                        "channel {:?}: unknown modality {:?}",
                        ch.id, ch.modality
                    ))
                })?;
                let emission = match kind {
                    FrameKind::Presence => {
                        if !ch.profile.is_empty() || ch.jitter != 0.0 {
                            return Err(invalid(format!(
                                "channel {:?}: presence channels take no profile or jitter",
                                ch.id
                            )));
                        }
                        Emission::Presence {
                            face_prob: ch.face_prob,
                            voice_prob: ch.voice_prob,
                        }
                    }
                    FrameKind::Fer | FrameKind::Ser => {
                        if ch.face_prob.is_some() || ch.voice_prob.is_some() {
                            return Err(invalid(format!(
                                "channel {:?}: emotion channels take no face_prob/voice_prob",
                                ch.id
                            )));
                        }
                        let mut profile = vec![0.0; taxonomy.len()];
                        for (label, mass) in &ch.profile {
                            let idx = taxonomy.index_of(label).ok_or_else(|| {
                                invalid(format!(
                                    "channel {:?}: unknown profile label {label:?}",
                                    ch.id
                                ))
                            })?;
                            profile[idx] = *mass;
                        }
                        Emission::Emotion {
                            kind,
                            profile: EmotionVector::new(profile),
                            jitter: ch.jitter,
                        }
                    }
                };
                channels.push(SynthChannel {
                    id: ch.id.clone(),
                    rate_hz: ch.rate_hz,
                    emission,
                });
            }
            segments.push(SynthSegment {
                duration_ms: seg.duration_ms,
                channels,
            });
        }
        Ok(SynthScript {
            start_ms: self.start_ms,
            segments,
        })
    }
}
