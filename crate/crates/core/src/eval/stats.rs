//! Correlation, descriptive statistics and fixed-width histograms.
//!
//! Standard deviations are population (divide by `n`) throughout.
//! Percentiles interpolate linearly between order statistics at rank
//! `p * (n - 1)`.

use std::fmt;

use super::EvalError;

/// Pearson correlation coefficient of `x` and `y`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(EvalError::TooFewPoints(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Err(EvalError::ZeroVariance);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Linear-interpolation percentile of already sorted data, `p` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptiveStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
}

impl DescriptiveStats {
    pub fn from_values(values: &[f64]) -> Result<Self, EvalError> {
        if values.is_empty() {
            return Err(EvalError::TooFewPoints(0));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Self {
            count: values.len(),
            mean,
            std: var.sqrt(),
            min: sorted[0],
            p25: percentile_sorted(&sorted, 0.25),
            median: percentile_sorted(&sorted, 0.5),
            p75: percentile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }
}

impl fmt::Display for DescriptiveStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}|{}|{}|{}|{}|{}|{}|{}",
            self.count, self.mean, self.std, self.min, self.p25, self.median, self.p75, self.max
        )
    }
}

/// Fixed-width histogram over `[lo, hi]`. Values outside the range are
/// counted in the edge bins; `hi` itself lands in the last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self, EvalError> {
        if bins == 0 || !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(EvalError::InvalidHistogram { lo, hi, bins });
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
        })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_of(&self, value: f64) -> usize {
        let bins = self.counts.len();
        let idx = ((value - self.lo) / (self.hi - self.lo) * bins as f64).floor();
        if idx.is_nan() || idx < 0.0 {
            0
        } else {
            (idx as usize).min(bins - 1)
        }
    }

    pub fn add(&mut self, value: f64) {
        let b = self.bin_of(value);
        self.counts[b] += 1;
    }

    /// `(lower edge, upper edge)` of bin `i`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        let upper = if i + 1 == self.counts.len() {
            self.hi
        } else {
            self.lo + w * (i + 1) as f64
        };
        (self.lo + w * i as f64, upper)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        // cov = 1.0, var x = var y = 1.25
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(EvalError::LengthMismatch { left: 2, right: 1 })
        );
        assert_eq!(pearson(&[1.0], &[1.0]), Err(EvalError::TooFewPoints(1)));
        assert_eq!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(EvalError::ZeroVariance)
        );
        assert_eq!(
            pearson(&[0.1, 0.2], &[5.0, 5.0]),
            Err(EvalError::ZeroVariance)
        );
        assert_eq!(
            pearson(&[0.1, f64::NAN], &[5.0, 4.0]),
            Err(EvalError::NonFinite)
        );
    }

    #[test]
    fn descriptive_stats() {
        let s = DescriptiveStats::from_values(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.count, 4);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.std, 1.25f64.sqrt());
        assert_eq!((s.min, s.max), (1.0, 4.0));
        // ranks 0.75, 1.5, 2.25
        assert_eq!(s.p25, 1.75);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.p75, 3.25);
        let one = DescriptiveStats::from_values(&[7.0]).unwrap();
        assert_eq!(
            (one.std, one.p25, one.median, one.p75),
            (0.0, 7.0, 7.0, 7.0)
        );
        assert!(DescriptiveStats::from_values(&[]).is_err());
    }

    #[test]
    fn histogram_binning() {
        let mut h = Histogram::new(-1.0, 1.0, 4).unwrap();
        for v in [-1.0, -0.75, -0.5, 0.0, 0.49, 0.5, 1.0, 2.0, -3.0] {
            h.add(v);
        }
        assert_eq!(h.counts, vec![3, 1, 2, 3]);
        assert_eq!(h.total(), 9);
        assert_eq!(h.edges(3), (0.5, 1.0));
        assert!(Histogram::new(0.0, 0.0, 4).is_err());
        assert!(Histogram::new(0.0, 1.0, 0).is_err());
    }
}
