//! Perceptor frames, the channel registry and the pipe-delimited wire format.
//!
//! One frame per line:
//!
//! ```text
//! <t_ms>|<channel>|<FER|SER|PRESENCE>|<payload>
//! ```
//!
//! FER/SER payloads are comma-separated decimal reals in the channel's own
//! label order. PRESENCE payloads are `faces=<uint>` and/or `voice=<0|1>`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::emotion::{EmotionTaxonomy, EmotionVector, Modality, VectorError};

/// Mapping target that discards a perceptor label's mass.
pub const DROP_LABEL: &str = "DROP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameKind {
    Fer,
    Ser,
    Presence,
}

impl FrameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::Fer => "FER",
            FrameKind::Ser => "SER",
            FrameKind::Presence => "PRESENCE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "FER" => Some(FrameKind::Fer),
            "SER" => Some(FrameKind::Ser),
            "PRESENCE" => Some(FrameKind::Presence),
            _ => None,
        }
    }

    pub fn modality(self) -> Option<Modality> {
        match self {
            FrameKind::Fer => Some(Modality::Fer),
            FrameKind::Ser => Some(Modality::Ser),
            FrameKind::Presence => None,
        }
    }
}

impl From<Modality> for FrameKind {
    fn from(m: Modality) -> Self {
        match m {
            Modality::Fer => FrameKind::Fer,
            Modality::Ser => FrameKind::Ser,
        }
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A presence observation: detected face count and/or voice activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PresenceObservation {
    pub faces: Option<u32>,
    pub voice: Option<bool>,
}

impl PresenceObservation {
    /// A human is present when at least one face is seen or a voice is active.
    pub fn is_present(&self) -> bool {
        self.faces.is_some_and(|n| n > 0) || self.voice == Some(true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FramePayload {
    /// Raw (un-normalized) estimate in taxonomy order, label mapping applied.
    Emotion {
        modality: Modality,
        raw: EmotionVector,
    },
    Presence(PresenceObservation),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptorFrame {
    pub t: u64,
    pub channel: String,
    pub payload: FramePayload,
}

impl PerceptorFrame {
    pub fn emotion(
        t: u64,
        channel: impl Into<String>,
        modality: Modality,
        raw: EmotionVector,
    ) -> Self {
        Self {
            t,
            channel: channel.into(),
            payload: FramePayload::Emotion { modality, raw },
        }
    }

    pub fn presence(t: u64, channel: impl Into<String>, obs: PresenceObservation) -> Self {
        Self {
            t,
            channel: channel.into(),
            payload: FramePayload::Presence(obs),
        }
    }

    pub fn kind(&self) -> FrameKind {
        match &self.payload {
            FramePayload::Emotion { modality, .. } => (*modality).into(),
            FramePayload::Presence(_) => FrameKind::Presence,
        }
    }
}

impl fmt::Display for PerceptorFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}|{}|", self.t, self.channel, self.kind())?;
        match &self.payload {
            FramePayload::Emotion { raw, .. } => write!(f, "{raw}"),
            FramePayload::Presence(obs) => {
                let mut sep = "";
                if let Some(n) = obs.faces {
                    write!(f, "faces={n}")?;
                    sep = ",";
                }
                if let Some(v) = obs.voice {
                    write!(f, "{sep}voice={}", u8::from(v))?;
                }
                Ok(())
            }
        }
    }
}

/// Canonical wire line for `frame`, without the trailing newline. Emotion
/// values are written in taxonomy order, so the line re-parses to the same
/// frame under an identity-mapped channel.
pub fn format_frame(frame: &PerceptorFrame) -> String {
    frame.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelTarget {
    Axis(usize),
    Drop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    kind: FrameKind,
    perceptor_labels: Vec<String>,
    targets: Vec<LabelTarget>,
}

impl ChannelSpec {
    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    /// Labels in the order the perceptor writes its payload.
    pub fn perceptor_labels(&self) -> &[String] {
        &self.perceptor_labels
    }

    pub fn targets(&self) -> &[LabelTarget] {
        &self.targets
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("channel id {0:?} is invalid (must be non-empty, without '|', ',' or whitespace)")]
    InvalidChannelId(String),
    #[error("channel {0:?} registered twice")]
    DuplicateChannel(String),
    #[error("channel {channel:?}: label {label:?} has no mapping to the taxonomy")]
    UnknownLabel { channel: String, label: String },
    #[error("channel {channel:?}: mapping target {target:?} is not a taxonomy label")]
    UnknownTarget { channel: String, target: String },
    #[error("channel {0:?}: every label is dropped")]
    AllLabelsDropped(String),
    #[error("channel {channel:?}: duplicate perceptor label {label:?}")]
    DuplicatePerceptorLabel { channel: String, label: String },
    #[error("channel {0:?}: presence channels take no labels or mapping")]
    PresenceWithLabels(String),
}

impl AsRef<ChannelRegistry> for ChannelRegistry {
    fn as_ref(&self) -> &ChannelRegistry {
        self
    }
}

/// Known perceptor channels, their modality, and their label mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRegistry {
    taxonomy: EmotionTaxonomy,
    channels: BTreeMap<String, ChannelSpec>,
}

fn valid_channel_id(id: &str) -> bool {
    !id.is_empty()
        && !id
            .chars()
            .any(|c| c == '|' || c == ',' || c.is_whitespace() || c.is_control())
}

impl ChannelRegistry {
    pub fn new(taxonomy: EmotionTaxonomy) -> Self {
        Self {
            taxonomy,
            channels: BTreeMap::new(),
        }
    }

    pub fn taxonomy(&self) -> &EmotionTaxonomy {
        &self.taxonomy
    }

    pub fn get(&self, id: &str) -> Option<&ChannelSpec> {
        self.channels.get(id)
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, &ChannelSpec)> {
        self.channels.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    fn check_new_id(&self, id: &str) -> Result<(), RegistryError> {
        if !valid_channel_id(id) {
            return Err(RegistryError::InvalidChannelId(id.to_string()));
        }
        if self.channels.contains_key(id) {
            return Err(RegistryError::DuplicateChannel(id.to_string()));
        }
        Ok(())
    }

    pub fn register_presence(&mut self, id: &str) -> Result<(), RegistryError> {
        self.check_new_id(id)?;
        self.channels.insert(
            id.to_string(),
            ChannelSpec {
                kind: FrameKind::Presence,
                perceptor_labels: Vec::new(),
                targets: Vec::new(),
            },
        );
        Ok(())
    }

    /// Registers an emotion channel using the taxonomy's own label order.
    pub fn register_identity(&mut self, id: &str, modality: Modality) -> Result<(), RegistryError> {
        let labels = self.taxonomy.labels().to_vec();
        self.register_emotion(id, modality, labels, &BTreeMap::new())
    }

    /// Registers an emotion channel whose payload is ordered by
    /// `perceptor_labels`. Each label maps to the entry in `mapping`
    /// (a taxonomy label or [`DROP_LABEL`]); unmapped labels must be
    /// taxonomy labels and map to themselves.
    pub fn register_emotion(
        &mut self,
        id: &str,
        modality: Modality,
        perceptor_labels: Vec<String>,
        mapping: &BTreeMap<String, String>,
    ) -> Result<(), RegistryError> {
        self.check_new_id(id)?;
        for (i, label) in perceptor_labels.iter().enumerate() {
            if perceptor_labels[..i].contains(label) {
                return Err(RegistryError::DuplicatePerceptorLabel {
                    channel: id.to_string(),
                    label: label.clone(),
                });
            }
        }
        if let Some(extra) = mapping.keys().find(|k| !perceptor_labels.contains(k)) {
            return Err(RegistryError::UnknownLabel {
                channel: id.to_string(),
                label: extra.clone(),
            });
        }
        let mut targets = Vec::with_capacity(perceptor_labels.len());
        for label in &perceptor_labels {
            let target = match mapping.get(label) {
                Some(t) if t == DROP_LABEL => LabelTarget::Drop,
                Some(t) => LabelTarget::Axis(self.taxonomy.index_of(t).ok_or_else(|| {
                    RegistryError::UnknownTarget {
                        channel: id.to_string(),
                        target: t.clone(),
                    }
                })?),
                None => LabelTarget::Axis(self.taxonomy.index_of(label).ok_or_else(|| {
                    RegistryError::UnknownLabel {
                        channel: id.to_string(),
                        label: label.clone(),
                    }
                })?),
            };
            targets.push(target);
        }
        if targets.iter().all(|t| *t == LabelTarget::Drop) {
            return Err(RegistryError::AllLabelsDropped(id.to_string()));
        }
        self.channels.insert(
            id.to_string(),
            ChannelSpec {
                kind: modality.into(),
                perceptor_labels,
                targets,
            },
        );
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("malformed line: {0}")]
    MalformedLine(String),
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("channel {channel:?} is registered as {expected}, frame says {actual}")]
    ModalityMismatch {
        channel: String,
        expected: FrameKind,
        actual: FrameKind,
    },
    #[error("channel {channel:?}: timestamp {t} precedes previous timestamp {previous}")]
    NonMonotonicTimestamp {
        channel: String,
        t: u64,
        previous: u64,
    },
    #[error("bad vector: {0}")]
    BadVector(VectorError),
    #[error("timestamp {t} precedes previous timestamp {previous} in the same source")]
    SourceOutOfOrder { t: u64, previous: u64 },
    #[error("read error: {0}")]
    Io(String),
}

fn malformed(msg: impl Into<String>) -> FrameError {
    FrameError::MalformedLine(msg.into())
}

fn parse_presence(payload: &str) -> Result<PresenceObservation, FrameError> {
    let mut obs = PresenceObservation::default();
    for item in payload.split(',') {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| malformed(format!("presence item {item:?} is not key=value")))?;
        match key {
            "faces" if obs.faces.is_none() => {
                if !value.bytes().all(|b| b.is_ascii_digit()) || value.is_empty() {
                    return Err(malformed(format!(
                        "faces value {value:?} is not an unsigned integer"
                    )));
                }
                obs.faces = Some(
                    value
                        .parse()
                        .map_err(|_| malformed(format!("faces value {value:?} out of range")))?,
                );
            }
            "voice" if obs.voice.is_none() => {
                obs.voice = Some(match value {
                    "0" => false,
                    "1" => true,
                    _ => return Err(malformed(format!("voice value {value:?} must be 0 or 1"))),
                });
            }
            "faces" | "voice" => return Err(malformed(format!("duplicate presence key {key:?}"))),
            _ => return Err(malformed(format!("unknown presence key {key:?}"))),
        }
    }
    Ok(obs)
}

fn parse_real(s: &str) -> Result<f64, FrameError> {
    // Decimal reals only: reject the "inf"/"nan" spellings f64 accepts.
    let decimal = !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'));
    if !decimal {
        return Err(malformed(format!("{s:?} is not a decimal number")));
    }
    s.parse::<f64>()
        .map_err(|_| malformed(format!("{s:?} is not a decimal number")))
}

/// Parses and validates one wire line against `registry`, applying the
/// channel's label mapping. Does not check timestamp monotonicity; use
/// [`FrameParser`] for that.
pub fn parse_frame(line: &str, registry: &ChannelRegistry) -> Result<PerceptorFrame, FrameError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != 4 {
        return Err(malformed(format!(
            "expected 4 '|'-separated fields, got {}",
            fields.len()
        )));
    }
    let t_str = fields[0];
    if t_str.is_empty() || !t_str.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(format!(
            "timestamp {t_str:?} is not an unsigned integer"
        )));
    }
    let t: u64 = t_str
        .parse()
        .map_err(|_| malformed(format!("timestamp {t_str:?} out of range")))?;
    let channel = fields[1];
    let kind = FrameKind::parse(fields[2])
        .ok_or_else(|| malformed(format!("unknown modality {:?}", fields[2])))?;
    let spec = registry
        .get(channel)
        .ok_or_else(|| FrameError::UnknownChannel(channel.to_string()))?;
    if spec.kind != kind {
        return Err(FrameError::ModalityMismatch {
            channel: channel.to_string(),
            expected: spec.kind,
            actual: kind,
        });
    }
    let payload = fields[3];
    let payload = match kind.modality() {
        None => FramePayload::Presence(parse_presence(payload)?),
        Some(modality) => {
            let items: Vec<&str> = payload.split(',').collect();
            if items.len() != spec.perceptor_labels.len() {
                return Err(malformed(format!(
                    "expected {} values, got {}",
                    spec.perceptor_labels.len(),
                    items.len()
                )));
            }
            let mut raw = vec![0.0; registry.taxonomy.len()];
            for (index, (item, target)) in items.iter().zip(&spec.targets).enumerate() {
                let value = parse_real(item)?;
                if !value.is_finite() {
                    return Err(FrameError::BadVector(VectorError::NonFinite { index }));
                }
                if value < 0.0 {
                    return Err(FrameError::BadVector(VectorError::Negative {
                        index,
                        value,
                    }));
                }
                if let LabelTarget::Axis(axis) = target {
                    raw[*axis] += value;
                }
            }
            let raw = EmotionVector::new(raw);
            raw.check_raw().map_err(FrameError::BadVector)?;
            FramePayload::Emotion { modality, raw }
        }
    };
    Ok(PerceptorFrame {
        t,
        channel: channel.to_string(),
        payload,
    })
}

/// Byte-level entry point: invalid UTF-8 is a malformed line.
pub fn parse_frame_bytes(
    line: &[u8],
    registry: &ChannelRegistry,
) -> Result<PerceptorFrame, FrameError> {
    let line = std::str::from_utf8(line).map_err(|_| malformed("line is not valid UTF-8"))?;
    parse_frame(line, registry)
}

/// Stateful parser that also enforces per-channel timestamp monotonicity.
/// A rejected frame leaves the channel's last timestamp unchanged.
#[derive(Debug, Clone)]
pub struct FrameParser<R> {
    registry: R,
    last_t: HashMap<String, u64>,
}

impl<R: AsRef<ChannelRegistry>> FrameParser<R> {
    pub fn new(registry: R) -> Self {
        Self {
            registry,
            last_t: HashMap::new(),
        }
    }

    pub fn parse_line(&mut self, line: &[u8]) -> Result<PerceptorFrame, FrameError> {
        let frame = parse_frame_bytes(line, self.registry.as_ref())?;
        self.check(frame)
    }

    pub fn check(&mut self, frame: PerceptorFrame) -> Result<PerceptorFrame, FrameError> {
        match self.last_t.get_mut(&frame.channel) {
            Some(prev) if frame.t < *prev => Err(FrameError::NonMonotonicTimestamp {
                channel: frame.channel.clone(),
                t: frame.t,
                previous: *prev,
            }),
            Some(prev) => {
                *prev = frame.t;
                Ok(frame)
            }
            None => {
                self.last_t.insert(frame.channel.clone(), frame.t);
                Ok(frame)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> ChannelRegistry {
        let mut r = ChannelRegistry::new(EmotionTaxonomy::default());
        r.register_identity("fer_rmn", Modality::Fer).unwrap();
        r.register_identity("ser_a", Modality::Ser).unwrap();
        r.register_presence("presence_cam").unwrap();
        r
    }

    #[test]
    fn parses_emotion_frame() {
        let reg = registry();
        let f = parse_frame("1500|fer_rmn|FER|0.7,0.1,0.05,0.05,0.05,0.03,0.02", &reg).unwrap();
        assert_eq!(f.t, 1500);
        assert_eq!(f.channel, "fer_rmn");
        assert_eq!(
            f.payload,
            FramePayload::Emotion {
                modality: Modality::Fer,
                raw: EmotionVector::new(vec![0.7, 0.1, 0.05, 0.05, 0.05, 0.03, 0.02]),
            }
        );
        assert_eq!(
            format_frame(&f),
            "1500|fer_rmn|FER|0.7,0.1,0.05,0.05,0.05,0.03,0.02"
        );
    }

    #[test]
    fn parses_presence_frame() {
        let reg = registry();
        let f = parse_frame("1500|presence_cam|PRESENCE|faces=2", &reg).unwrap();
        assert_eq!(
            f.payload,
            FramePayload::Presence(PresenceObservation {
                faces: Some(2),
                voice: None
            })
        );
        let f = parse_frame("1500|presence_cam|PRESENCE|voice=1,faces=0\n", &reg).unwrap();
        assert_eq!(
            format_frame(&f),
            "1500|presence_cam|PRESENCE|faces=0,voice=1"
        );
        match f.payload {
            FramePayload::Presence(obs) => assert!(obs.is_present()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn arity_check() {
        let reg = registry();
        assert!(matches!(
            parse_frame("1500|fer_rmn|FER|0.7,0.1", &reg),
            Err(FrameError::MalformedLine(_))
        ));
    }

    #[test]
    fn rejects_bad_lines() {
        let reg = registry();
        let cases = [
            "",
            "1500|fer_rmn|FER",
            "1500|fer_rmn|FER|1,0,0,0,0,0,0|x",
            "-5|fer_rmn|FER|1,0,0,0,0,0,0",
            "+5|fer_rmn|FER|1,0,0,0,0,0,0",
            "15a|fer_rmn|FER|1,0,0,0,0,0,0",
            "99999999999999999999999|fer_rmn|FER|1,0,0,0,0,0,0",
            "1|fer_rmn|XYZ|1,0,0,0,0,0,0",
            "1|fer_rmn|FER|1,0,0,0,0,0,abc",
            "1|fer_rmn|FER|1,0,0,0,0,0,inf",
            "1|fer_rmn|FER|1,0,0,0,0,0,",
            "1|presence_cam|PRESENCE|",
            "1|presence_cam|PRESENCE|faces=-1",
            "1|presence_cam|PRESENCE|voice=2",
            "1|presence_cam|PRESENCE|faces=1,faces=2",
            "1|presence_cam|PRESENCE|smiles=1",
        ];
        for line in cases {
            assert!(
                matches!(parse_frame(line, &reg), Err(FrameError::MalformedLine(_))),
                "{line:?}"
            );
        }
        assert!(matches!(
            parse_frame("1|nobody|FER|1,0,0,0,0,0,0", &reg),
            Err(FrameError::UnknownChannel(_))
        ));
        assert!(matches!(
            parse_frame("1|fer_rmn|SER|1,0,0,0,0,0,0", &reg),
            Err(FrameError::ModalityMismatch { .. })
        ));
        assert!(matches!(
            parse_frame("1|fer_rmn|FER|0,0,0,0,0,0,0", &reg),
            Err(FrameError::BadVector(VectorError::ZeroVector))
        ));
        assert!(matches!(
            parse_frame("1|fer_rmn|FER|1,0,0,0,0,0,-0.5", &reg),
            Err(FrameError::BadVector(VectorError::Negative { .. }))
        ));
        assert!(matches!(
            parse_frame("1|fer_rmn|FER|1,0,0,0,0,0,1e999", &reg),
            Err(FrameError::BadVector(VectorError::NonFinite { .. }))
        ));
        assert!(matches!(
            parse_frame_bytes(b"1|fer_rmn|FER|\xff", &reg),
            Err(FrameError::MalformedLine(_))
        ));
    }

    #[test]
    fn label_mapping_and_drop() {
        let tax = EmotionTaxonomy::default();
        let mut reg = ChannelRegistry::new(tax.clone());
        let labels: Vec<String> = [
            "neutral",
            "calm",
            "happy",
            "sad",
            "angry",
            "fearful",
            "disgust",
            "surprised",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let mapping: BTreeMap<String, String> = [
            ("calm", "DROP"),
            ("happy", "happiness"),
            ("sad", "sadness"),
            ("angry", "anger"),
            ("fearful", "fear"),
            ("surprised", "surprise"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        reg.register_emotion("ser_ravdess", Modality::Ser, labels, &mapping)
            .unwrap();
        let f = parse_frame("10|ser_ravdess|SER|0.1,0.5,0.2,0,0,0,0,0.2", &reg).unwrap();
        let FramePayload::Emotion { raw, .. } = f.payload else {
            unreachable!()
        };
        let mut expected = vec![0.0; 7];
        expected[tax.index_of("neutral").unwrap()] = 0.1;
        expected[tax.index_of("happiness").unwrap()] = 0.2;
        expected[tax.index_of("surprise").unwrap()] = 0.2;
        assert_eq!(raw.values(), expected.as_slice());

        // All remaining mass on the dropped label.
        assert!(matches!(
            parse_frame("10|ser_ravdess|SER|0,1,0,0,0,0,0,0", &reg),
            Err(FrameError::BadVector(VectorError::ZeroVector))
        ));
    }

    #[test]
    fn registry_errors() {
        let mut reg = ChannelRegistry::new(EmotionTaxonomy::default());
        assert!(matches!(
            reg.register_presence("a|b"),
            Err(RegistryError::InvalidChannelId(_))
        ));
        reg.register_presence("cam").unwrap();
        assert!(matches!(
            reg.register_presence("cam"),
            Err(RegistryError::DuplicateChannel(_))
        ));
        let r = reg.register_emotion(
            "x",
            Modality::Fer,
            vec!["calm".into(), "anger".into()],
            &BTreeMap::new(),
        );
        assert!(matches!(r, Err(RegistryError::UnknownLabel { .. })));
        let mapping = BTreeMap::from([("calm".to_string(), "serenity".to_string())]);
        let r = reg.register_emotion("x", Modality::Fer, vec!["calm".into()], &mapping);
        assert!(matches!(r, Err(RegistryError::UnknownTarget { .. })));
        let mapping = BTreeMap::from([("calm".to_string(), "DROP".to_string())]);
        let r = reg.register_emotion("x", Modality::Fer, vec!["calm".into()], &mapping);
        assert!(matches!(r, Err(RegistryError::AllLabelsDropped(_))));
        let mapping = BTreeMap::from([("joy".to_string(), "happiness".to_string())]);
        let r = reg.register_emotion("x", Modality::Fer, vec!["anger".into()], &mapping);
        assert!(matches!(r, Err(RegistryError::UnknownLabel { .. })));
    }

    #[test]
    fn monotonic_per_channel() {
        let reg = registry();
        let mut p = FrameParser::new(&reg);
        p.parse_line(b"100|presence_cam|PRESENCE|faces=1").unwrap();
        p.parse_line(b"50|fer_rmn|FER|1,0,0,0,0,0,0").unwrap();
        p.parse_line(b"100|presence_cam|PRESENCE|faces=1").unwrap();
        assert!(matches!(
            p.parse_line(b"99|presence_cam|PRESENCE|faces=1"),
            Err(FrameError::NonMonotonicTimestamp { previous: 100, .. })
        ));
        // The rejected frame does not move the watermark.
        p.parse_line(b"100|presence_cam|PRESENCE|faces=0").unwrap();
    }
}
