//! Emotion taxonomy, emotion vectors and per-modality averaging.
//!
//! Perceptors emit probability-like raw vectors. Every vector that enters
//! the reward computation is first L2-normalized with [`normalize_unit`];
//! each modality then averages its models' normalized vectors with
//! [`average_modality`]. The mean is deliberately left un-normalized.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Absolute tolerance used for every unit-norm check in the crate.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Labels of the default seven-class taxonomy, in axis order.
pub const DEFAULT_LABELS: [&str; 7] = [
    "anger",
    "disgust",
    "fear",
    "happiness",
    "sadness",
    "surprise",
    "neutral",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VectorError {
    #[error("vector has zero L2 norm")]
    ZeroVector,
    #[error("vector component {index} is not finite")]
    NonFinite { index: usize },
    #[error("vector component {index} is negative ({value})")]
    Negative { index: usize, value: f64 },
    #[error("vector has {actual} components, taxonomy has {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("vector is not unit norm (norm {norm})")]
    NotUnitNorm { norm: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("taxonomy needs at least 2 labels, got {0}")]
    TooFewLabels(usize),
    #[error("taxonomy label is empty")]
    EmptyLabel,
    #[error("taxonomy label {0:?} must be lowercase")]
    NotLowercase(String),
    #[error("duplicate taxonomy label {0:?}")]
    DuplicateLabel(String),
}

/// Ordered set of emotion labels; the label order defines the vector axes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmotionTaxonomy {
    labels: Vec<String>,
}

impl EmotionTaxonomy {
    pub fn new<I, S>(labels: I) -> Result<Self, TaxonomyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(TaxonomyError::TooFewLabels(labels.len()));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if label.is_empty() {
                return Err(TaxonomyError::EmptyLabel);
            }
            if label.chars().any(char::is_uppercase) {
                return Err(TaxonomyError::NotLowercase(label.clone()));
            }
            if !seen.insert(label.as_str()) {
                return Err(TaxonomyError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of axes (`k`).
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }
}

impl Default for EmotionTaxonomy {
    fn default() -> Self {
        Self {
            labels: DEFAULT_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// A vector of per-emotion values indexed by an [`EmotionTaxonomy`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionVector(Vec<f64>);

impl EmotionVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// One-hot vector of length `k` with a 1 at `index`.
    pub fn one_hot(k: usize, index: usize) -> Self {
        let mut values = vec![0.0; k];
        values[index] = 1.0;
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Inner product. Panics if the lengths differ; callers check dimensions.
    pub fn dot(&self, other: &EmotionVector) -> f64 {
        assert_eq!(self.len(), other.len(), "dot product of mismatched vectors");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Index of the largest value; ties go to the lowest index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.0.iter().enumerate() {
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn check_finite(&self) -> Result<(), VectorError> {
        match self.0.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(VectorError::NonFinite { index }),
            None => Ok(()),
        }
    }

    /// Checks the raw-vector contract: finite, nonnegative, positive mass.
    pub fn check_raw(&self) -> Result<(), VectorError> {
        self.check_finite()?;
        if let Some((index, &value)) = self.0.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(VectorError::Negative { index, value });
        }
        if self.0.iter().all(|v| *v == 0.0) {
            return Err(VectorError::ZeroVector);
        }
        Ok(())
    }

    pub fn is_unit(&self) -> bool {
        (self.l2_norm() - 1.0).abs() <= NORM_TOLERANCE
    }
}

impl fmt::Display for EmotionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Scales a raw perceptor vector to unit L2 norm.
pub fn normalize_unit(raw: &EmotionVector) -> Result<EmotionVector, VectorError> {
    raw.check_raw()?;
    let norm = raw.l2_norm();
    if norm == 0.0 {
        // Subnormal inputs can square to zero.
        return Err(VectorError::ZeroVector);
    }
    if !norm.is_finite() {
        // Rescale before squaring when the components are huge.
        let max = raw.values().iter().fold(0.0_f64, |m, v| m.max(*v));
        let scaled = EmotionVector(raw.values().iter().map(|v| v / max).collect());
        return normalize_unit(&scaled);
    }
    Ok(EmotionVector(
        raw.values().iter().map(|v| v / norm).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Fer,
    Ser,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Fer => "FER",
            Modality::Ser => "SER",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The normalized estimates of every model contributing to one modality at
/// one instant, one row per model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalitySnapshot {
    modality: Modality,
    model_ids: Vec<String>,
    vectors: Vec<EmotionVector>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnapshotError {
    #[error("duplicate model id {0:?} in snapshot")]
    DuplicateModel(String),
    #[error("model {model:?}: {source}")]
    Vector {
        model: String,
        #[source]
        source: VectorError,
    },
}

impl ModalitySnapshot {
    pub fn empty(modality: Modality) -> Self {
        Self {
            modality,
            model_ids: Vec::new(),
            vectors: Vec::new(),
        }
    }

    /// Builds a snapshot from `(model_id, normalized vector)` rows.
    pub fn new<I>(modality: Modality, k: usize, rows: I) -> Result<Self, SnapshotError>
    where
        I: IntoIterator<Item = (String, EmotionVector)>,
    {
        let mut snapshot = Self::empty(modality);
        for (model, vector) in rows {
            snapshot.push(k, model, vector)?;
        }
        Ok(snapshot)
    }

    pub fn push(
        &mut self,
        k: usize,
        model: String,
        vector: EmotionVector,
    ) -> Result<(), SnapshotError> {
        if self.model_ids.contains(&model) {
            return Err(SnapshotError::DuplicateModel(model));
        }
        let check = if vector.len() != k {
            Err(VectorError::DimensionMismatch {
                expected: k,
                actual: vector.len(),
            })
        } else {
            vector.check_finite().and_then(|_| {
                if vector.is_unit() {
                    Ok(())
                } else {
                    Err(VectorError::NotUnitNorm {
                        norm: vector.l2_norm(),
                    })
                }
            })
        };
        check.map_err(|source| SnapshotError::Vector {
            model: model.clone(),
            source,
        })?;
        self.model_ids.push(model);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn vectors(&self) -> &[EmotionVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Arithmetic mean of the snapshot's rows, or `None` for an empty snapshot.
///
/// Rows are summed in snapshot order and the sum is divided by `n`.
pub fn average_modality(snapshot: &ModalitySnapshot) -> Option<EmotionVector> {
    let first = snapshot.vectors.first()?;
    let mut sum = vec![0.0; first.len()];
    for v in &snapshot.vectors {
        for (acc, x) in sum.iter_mut().zip(v.values()) {
            *acc += x;
        }
    }
    let n = snapshot.vectors.len() as f64;
    Some(EmotionVector(sum.into_iter().map(|s| s / n).collect()))
}
