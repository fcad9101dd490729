//! Clip-level evaluation against human labels.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use super::stats::{pearson, DescriptiveStats, Histogram};
use super::EvalError;
use crate::fusion::RewardRecord;

/// Human annotation of a clip on the ordinal -2..+2 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClipLabel {
    StronglyNegative,
    SlightlyNegative,
    Neutral,
    SlightlyPositive,
    StronglyPositive,
    NotApplicable,
}

impl ClipLabel {
    pub const SCORED: [ClipLabel; 5] = [
        ClipLabel::StronglyNegative,
        ClipLabel::SlightlyNegative,
        ClipLabel::Neutral,
        ClipLabel::SlightlyPositive,
        ClipLabel::StronglyPositive,
    ];

    /// Numeric value used for correlation; `None` for n/a clips.
    pub fn value(self) -> Option<f64> {
        match self {
            ClipLabel::StronglyNegative => Some(-2.0),
            ClipLabel::SlightlyNegative => Some(-1.0),
            ClipLabel::Neutral => Some(0.0),
            ClipLabel::SlightlyPositive => Some(1.0),
            ClipLabel::StronglyPositive => Some(2.0),
            ClipLabel::NotApplicable => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClipLabel::StronglyNegative => "-2",
            ClipLabel::SlightlyNegative => "-1",
            ClipLabel::Neutral => "0",
            ClipLabel::SlightlyPositive => "+1",
            ClipLabel::StronglyPositive => "+2",
            ClipLabel::NotApplicable => "na",
        }
    }
}

impl FromStr for ClipLabel {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        Ok(match s {
            "-2" => ClipLabel::StronglyNegative,
            "-1" => ClipLabel::SlightlyNegative,
            "0" => ClipLabel::Neutral,
            "+1" | "1" => ClipLabel::SlightlyPositive,
            "+2" | "2" => ClipLabel::StronglyPositive,
            "na" | "NA" | "n/a" => ClipLabel::NotApplicable,
            _ => return Err(EvalError::BadRecord(format!("unknown clip label {s:?}"))),
        })
    }
}

impl fmt::Display for ClipLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipRecord {
    pub clip_id: String,
    pub trace_path: PathBuf,
    pub label: ClipLabel,
}

impl ClipRecord {
    /// Parses a manifest line `<clip_id>|<trace_path>|<label>`.
    pub fn parse(line: &str) -> Result<Self, EvalError> {
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 3 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(EvalError::BadRecord(format!(
                "manifest line {line:?} is not <clip_id>|<trace_path>|<label>"
            )));
        }
        Ok(Self {
            clip_id: fields[0].to_string(),
            trace_path: PathBuf::from(fields[1]),
            label: fields[2].parse()?,
        })
    }
}

/// Which reward stream a statistic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RewardComponent {
    Total,
    Fer,
    Ser,
    Presence,
}

impl RewardComponent {
    pub const ALL: [RewardComponent; 4] = [
        RewardComponent::Total,
        RewardComponent::Fer,
        RewardComponent::Ser,
        RewardComponent::Presence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RewardComponent::Total => "total",
            RewardComponent::Fer => "fer",
            RewardComponent::Ser => "ser",
            RewardComponent::Presence => "presence",
        }
    }
}

/// Mean of each reward component over one clip's ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipMeans {
    pub total: f64,
    pub fer: f64,
    pub ser: f64,
    pub presence: f64,
}

impl ClipMeans {
    pub fn get(&self, c: RewardComponent) -> f64 {
        match c {
            RewardComponent::Total => self.total,
            RewardComponent::Fer => self.fer,
            RewardComponent::Ser => self.ser,
            RewardComponent::Presence => self.presence,
        }
    }
}

pub fn clip_mean_reward(samples: &[RewardRecord]) -> Result<ClipMeans, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptyClip);
    }
    let n = samples.len() as f64;
    let mean = |f: fn(&RewardRecord) -> f64| samples.iter().map(f).sum::<f64>() / n;
    Ok(ClipMeans {
        total: mean(|s| s.r_total),
        fer: mean(|s| s.r_fer),
        ser: mean(|s| s.r_ser),
        presence: mean(|s| s.r_presence),
    })
}

/// A scored clip, ready for aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipResult {
    pub clip_id: String,
    pub label: ClipLabel,
    pub means: ClipMeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipReport {
    /// Non-n/a clips, sorted by clip id.
    pub clips: Vec<ClipResult>,
    /// Pearson r of clip means against numeric labels; `None` when the
    /// component is constant across clips.
    pub pearson: Vec<(RewardComponent, Option<f64>)>,
    pub stats_by_label: BTreeMap<ClipLabel, DescriptiveStats>,
    pub histograms: Vec<(RewardComponent, Histogram)>,
    /// Clips excluded with the reason.
    pub excluded: Vec<(String, String)>,
}

/// Aggregates scored clips into the report tables. The result does not
/// depend on the order of `results`.
///
/// `range` is the histogram half-width; bins span `[-range, +range]`.
pub fn build_report(
    results: Vec<ClipResult>,
    mut excluded: Vec<(String, String)>,
    bins: usize,
    range: f64,
) -> Result<ClipReport, EvalError> {
    let mut clips: Vec<ClipResult> = Vec::new();
    for r in results {
        if r.label == ClipLabel::NotApplicable {
            excluded.push((r.clip_id, "label n/a".to_string()));
        } else {
            clips.push(r);
        }
    }
    clips.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    excluded.sort();
    if clips.len() < 2 {
        return Err(EvalError::TooFewPoints(clips.len()));
    }
    let labels: Vec<f64> = clips
        .iter()
        .map(|c| c.label.value().expect("scored"))
        .collect();
    let mut pearson_rows = Vec::new();
    for comp in RewardComponent::ALL {
        let xs: Vec<f64> = clips.iter().map(|c| c.means.get(comp)).collect();
        let r = match pearson(&xs, &labels) {
            Ok(r) => Some(r),
            Err(EvalError::ZeroVariance) if labels.iter().any(|l| *l != labels[0]) => None,
            Err(e) => return Err(e),
        };
        pearson_rows.push((comp, r));
    }
    let mut grouped: BTreeMap<ClipLabel, Vec<f64>> = BTreeMap::new();
    for c in &clips {
        grouped.entry(c.label).or_default().push(c.means.total);
    }
    let stats_by_label = grouped
        .into_iter()
        .map(|(label, v)| DescriptiveStats::from_values(&v).map(|s| (label, s)))
        .collect::<Result<_, _>>()?;
    let mut histograms = Vec::new();
    for comp in RewardComponent::ALL {
        let mut h = Histogram::new(-range, range, bins)?;
        for c in &clips {
            h.add(c.means.get(comp));
        }
        histograms.push((comp, h));
    }
    Ok(ClipReport {
        clips,
        pearson: pearson_rows,
        stats_by_label,
        histograms,
        excluded,
    })
}

impl ClipReport {
    pub fn pearson_of(&self, comp: RewardComponent) -> Option<f64> {
        self.pearson
            .iter()
            .find(|(c, _)| *c == comp)
            .and_then(|(_, r)| *r)
    }

    /// Renders every table as `|`-separated text, sections separated by a
    /// blank line and headed by `# <name>`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("# correlation_by_modality\nmodality|pearson_r|n\n");
        for (comp, r) in &self.pearson {
            let r = r.map_or_else(|| "na".to_string(), |r| r.to_string());
            let _ = writeln!(out, "{}|{}|{}", comp.as_str(), r, self.clips.len());
        }
        out.push_str(
            "\n# descriptive_stats_by_label\nlabel|count|mean|std|min|p25|median|p75|max\n",
        );
        for (label, s) in &self.stats_by_label {
            let _ = writeln!(out, "{label}|{s}");
        }
        out.push_str("\n# clip_means\nclip_id|label|total|fer|ser|presence\n");
        for c in &self.clips {
            let m = c.means;
            let _ = writeln!(
                out,
                "{}|{}|{}|{}|{}|{}",
                c.clip_id, c.label, m.total, m.fer, m.ser, m.presence
            );
        }
        out.push_str("\n# histograms\nmodality|bin|lower|upper|count\n");
        for (comp, h) in &self.histograms {
            for (i, count) in h.counts.iter().enumerate() {
                let (lo, hi) = h.edges(i);
                let _ = writeln!(out, "{}|{}|{}|{}|{}", comp.as_str(), i, lo, hi, count);
            }
        }
        if !self.excluded.is_empty() {
            out.push_str("\n# excluded\nclip_id|reason\n");
            for (id, why) in &self.excluded {
                let _ = writeln!(out, "{id}|{why}");
            }
        }
        out
    }
}
