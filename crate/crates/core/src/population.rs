//! Individual social return, internalisation functions and the internalised
//! population return.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fusion::RewardRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PopulationError {
    #[error("soft_equity scale must be finite and > 0, got {0}")]
    InvalidScale(f64),
    #[error("unknown internalisation function {0:?} (expected identity or soft_equity:<scale>)")]
    UnknownFunction(String),
    #[error("bad population manifest line {0:?}")]
    BadManifest(String),
}

/// Undiscounted sum of an individual's rewards; 0 for an empty stream.
pub fn social_return(samples: &[RewardRecord]) -> f64 {
    samples.iter().fold(0.0, |acc, s| acc + s.r_total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndividualReturn {
    pub individual_id: String,
    pub ret: f64,
}

/// A strictly increasing transform with `f(0) = 0` applied to each
/// individual's return before summing over the population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InternalisationFn {
    Identity,
    /// `a * ln(1 + R/a)` for `R >= 0`, `-a * (exp(-R/a) - 1)` for `R < 0`.
    /// Slope 1 at the origin, concave above it, and falling ever faster
    /// below it.
    SoftEquity {
        scale: f64,
    },
}

impl InternalisationFn {
    pub fn soft_equity(scale: f64) -> Result<Self, PopulationError> {
        if scale.is_finite() && scale > 0.0 {
            Ok(Self::SoftEquity { scale })
        } else {
            Err(PopulationError::InvalidScale(scale))
        }
    }

    pub fn apply(&self, r: f64) -> f64 {
        match *self {
            Self::Identity => r,
            Self::SoftEquity { scale: a } => {
                if r >= 0.0 {
                    a * (r / a).ln_1p()
                } else {
                    -a * (-r / a).exp_m1()
                }
            }
        }
    }
}

impl FromStr for InternalisationFn {
    type Err = PopulationError;

    /// `identity` or `soft_equity:<scale>`.
    fn from_str(s: &str) -> Result<Self, PopulationError> {
        if s == "identity" {
            return Ok(Self::Identity);
        }
        match s.split_once(':') {
            Some(("soft_equity", a)) => {
                let scale = a
                    .parse::<f64>()
                    .map_err(|_| PopulationError::UnknownFunction(s.to_string()))?;
                Self::soft_equity(scale)
            }
            _ => Err(PopulationError::UnknownFunction(s.to_string())),
        }
    }
}

impl fmt::Display for InternalisationFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => f.write_str("identity"),
            Self::SoftEquity { scale } => write!(f, "soft_equity:{scale}"),
        }
    }
}

pub fn internalise(f: &InternalisationFn, r: f64) -> f64 {
    f.apply(r)
}

/// Sum of internalised individual returns, accumulated left to right.
pub fn population_return(returns: &[IndividualReturn], f: &InternalisationFn) -> f64 {
    returns.iter().fold(0.0, |acc, r| acc + f.apply(r.ret))
}

/// Renders the `individual_id|R|f(R)` table with a closing `total|sum R|R'` row.
pub fn render_table(returns: &[IndividualReturn], f: &InternalisationFn) -> String {
    let mut out = String::from("individual_id|R|f(R)\n");
    for r in returns {
        out.push_str(&format!(
            "{}|{}|{}\n",
            r.individual_id,
            r.ret,
            f.apply(r.ret)
        ));
    }
    let total: f64 = returns.iter().map(|r| r.ret).sum();
    out.push_str(&format!(
        "total|{}|{}\n",
        total,
        population_return(returns, f)
    ));
    out
}

/// Parses a manifest line `<individual_id>|<path>`.
pub fn parse_manifest_line(line: &str) -> Result<(String, String), PopulationError> {
    match line.split_once('|') {
        Some((id, path)) if !id.is_empty() && !path.is_empty() && !path.contains('|') => {
            Ok((id.to_string(), path.to_string()))
        }
        _ => Err(PopulationError::BadManifest(line.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    fn rec(r: f64) -> RewardRecord {
        RewardRecord {
            tick_time: 0,
            r_total: r,
            r_fer: r,
            r_ser: 0.0,
            r_presence: 0.0,
            presence: 0.0,
        }
    }

    fn ind(id: &str, ret: f64) -> IndividualReturn {
        IndividualReturn {
            individual_id: id.into(),
            ret,
        }
    }

    #[test]
    fn social_return_examples() {
        assert_eq!(social_return(&[]), 0.0);
        assert_eq!(social_return(&[rec(1.0), rec(-1.0), rec(0.5)]), 0.5);
    }

    #[test]
    fn internalise_examples() {
        let soft = InternalisationFn::soft_equity(1.0).unwrap();
        assert_eq!(internalise(&InternalisationFn::Identity, 0.0), 0.0);
        assert_eq!(internalise(&soft, 0.0), 0.0);
        assert_eq!(internalise(&InternalisationFn::Identity, 3.7), 3.7);
        assert!((internalise(&soft, 1.0) - LN_2).abs() < 1e-12);
        assert!((internalise(&soft, -1.0) + (E - 1.0)).abs() < 1e-12);
        assert!((internalise(&soft, -1.0) + 1.718282).abs() < 1e-6);
    }

    #[test]
    fn population_examples() {
        assert_eq!(
            population_return(
                &[ind("a", 2.0), ind("b", 3.0)],
                &InternalisationFn::Identity
            ),
            5.0
        );
        assert_eq!(population_return(&[], &InternalisationFn::Identity), 0.0);
        let soft = InternalisationFn::soft_equity(1.0).unwrap();
        let r = population_return(&[ind("a", 1.0), ind("b", -1.0)], &soft);
        assert!((r - (LN_2 - (E - 1.0))).abs() < 1e-12);
        assert!((r + 1.025135).abs() < 1e-6);
    }

    #[test]
    fn parse_function_spec() {
        assert_eq!(
            "identity".parse::<InternalisationFn>().unwrap(),
            InternalisationFn::Identity
        );
        assert_eq!(
            "soft_equity:2.5".parse::<InternalisationFn>().unwrap(),
            InternalisationFn::SoftEquity { scale: 2.5 }
        );
        assert!(matches!(
            "soft_equity:0".parse::<InternalisationFn>(),
            Err(PopulationError::InvalidScale(_))
        ));
        assert!(matches!(
            "soft_equity:-1".parse::<InternalisationFn>(),
            Err(PopulationError::InvalidScale(_))
        ));
        assert!("log".parse::<InternalisationFn>().is_err());
        assert!(InternalisationFn::soft_equity(f64::INFINITY).is_err());
    }

    #[test]
    fn slope_one_at_origin() {
        let soft = InternalisationFn::soft_equity(1.7).unwrap();
        let h = 1e-6;
        let slope = (soft.apply(h) - soft.apply(-h)) / (2.0 * h);
        assert!((slope - 1.0).abs() < 1e-6);
    }

    #[test]
    fn table_rendering() {
        let t = render_table(
            &[ind("p1", 2.0), ind("p2", 3.0)],
            &InternalisationFn::Identity,
        );
        assert_eq!(t, "individual_id|R|f(R)\np1|2|2\np2|3|3\ntotal|5|5\n");
        assert_eq!(
            parse_manifest_line("p1|a.srfr").unwrap(),
            ("p1".into(), "a.srfr".into())
        );
        assert!(parse_manifest_line("p1").is_err());
        assert!(parse_manifest_line("|x").is_err());
    }
}
