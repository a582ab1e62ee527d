//! Vector and summary-statistics primitives.
//!
//! Embeddings are held as `f32`; every reduction (dot products, norms, sums)
//! accumulates in `f64`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A dense, finite, non-empty embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f32>);

impl FeatureVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        check_finite_f32(&values)?;
        Ok(FeatureVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl AsRef<[f32]> for FeatureVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

fn check_finite_f32(values: &[f32]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// Inner product accumulated in `f64`. Panics on length mismatch only in
/// debug builds; callers validate dimensions first.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

pub fn norm(v: &[f32]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// Cosine of the angle between `u` and `v`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    check_dims(u.len(), v.len())?;
    let uu = dot(u, u);
    let vv = dot(v, v);
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::DegenerateVector);
    }
    // one sqrt of the product keeps cos(u, u) exactly 1
    Ok((dot(u, v) / libm::sqrt(uu * vv)).clamp(-1.0, 1.0))
}

/// Scales `v` to unit Euclidean length. The division happens in `f64` and the
/// result is rounded once to `f32`, so the stored norm is within a few ulps of 1.
pub fn l2_normalize(v: &FeatureVector) -> Result<FeatureVector> {
    let n = v.norm();
    if n == 0.0 {
        return Err(Error::DegenerateVector);
    }
    let out = v
        .as_slice()
        .iter()
        .map(|&x| (f64::from(x) / n) as f32)
        .collect();
    Ok(FeatureVector(out))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub count: usize,
}

/// Mean and median; the median of an even-length input is the average of
/// the two central order statistics.
pub fn summary_stats(xs: &[f64]) -> Result<SummaryStats> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_finite(xs)?;
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Ok(SummaryStats {
        mean,
        median,
        count: n,
    })
}

/// Maps each value to `(x - min) / (max - min)`. A constant input maps to 0.5
/// everywhere so that rankings over a flat column still proceed.
pub fn minmax_normalize(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_finite(xs)?;
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let range = hi - lo;
    if range == 0.0 {
        return Ok(alloc::vec![0.5; xs.len()]);
    }
    Ok(xs.iter().map(|&x| ((x - lo) / range).clamp(0.0, 1.0)).collect())
}
