//! Faithfulness of saliency heatmaps against binary lesion masks.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major raster of saliency values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl Heatmap {
    /// Out-of-range values are rejected rather than clamped.
    pub fn new(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        check_shape(height, width, values.len())?;
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    index,
                    value: f64::from(v),
                });
            }
        }
        Ok(Heatmap {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, values: Vec<bool>) -> Result<Self> {
        check_shape(height, width, values.len())?;
        Ok(BinaryMask {
            height,
            width,
            values,
        })
    }

    /// From raw bytes that must each be 0 or 1.
    pub fn from_bytes(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        let values = bytes
            .iter()
            .enumerate()
            .map(|(index, &b)| match b {
                0 => Ok(false),
                1 => Ok(true),
                value => Err(Error::InvalidMaskValue { index, value }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(height, width, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn positives(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }
}

fn check_shape(height: usize, width: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::EmptyInput);
    }
    let expected = height.checked_mul(width).ok_or(Error::Dimension {
        expected: usize::MAX,
        found: len,
    })?;
    if expected != len {
        return Err(Error::Dimension {
            expected,
            found: len,
        });
    }
    Ok(())
}

fn check_same_shape(h: &Heatmap, m: &BinaryMask) -> Result<()> {
    if h.height != m.height || h.width != m.width {
        return Err(Error::Dimension {
            expected: m.height * m.width,
            found: h.height * h.width,
        });
    }
    Ok(())
}

/// Per-pair scores. `positives` is the mask's positive-pixel count and
/// `hits` how many of the equally many brightest heatmap pixels fall on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XaiScore {
    pub mgt: f64,
    pub pcc: f64,
    pub rmse: f64,
    pub positives: usize,
    pub hits: usize,
}

/// Indices of the `p` brightest pixels; equal values favour the lower
/// row-major index.
pub fn top_pixels(h: &Heatmap, p: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..h.values.len()).collect();
    // stable, so ties keep ascending index
    idx.sort_by(|&a, &b| h.values[b].total_cmp(&h.values[a]));
    idx.truncate(p);
    idx
}

fn mgt_counts(h: &Heatmap, m: &BinaryMask) -> Result<(usize, usize)> {
    check_same_shape(h, m)?;
    let p = m.positives();
    if p == 0 {
        return Err(Error::EmptyMask);
    }
    let hits = top_pixels(h, p)
        .into_iter()
        .filter(|&i| m.values[i])
        .count();
    Ok((p, hits))
}

/// Matching-ground-truth ratio: of the `p` mask pixels, the fraction covered
/// by the `p` brightest heatmap pixels.
pub fn mgt(h: &Heatmap, m: &BinaryMask) -> Result<f64> {
    let (p, n) = mgt_counts(h, m)?;
    Ok(n as f64 / p as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PccVariant {
    /// `u1·u2 / (|u1| |u2|)` on the raw flattened rasters.
    #[default]
    Uncentered,
    /// Classical Pearson correlation (both operands mean-centred first).
    Centered,
}

/// Correlation between the flattened mask and heatmap.
pub fn pcc(h: &Heatmap, m: &BinaryMask, variant: PccVariant) -> Result<f64> {
    check_same_shape(h, m)?;
    let n = h.values.len() as f64;
    let (mean_h, mean_m) = match variant {
        PccVariant::Uncentered => (0.0, 0.0),
        PccVariant::Centered => (
            h.values.iter().map(|&v| f64::from(v)).sum::<f64>() / n,
            m.positives() as f64 / n,
        ),
    };
    let (mut dot, mut hh, mut mm) = (0.0, 0.0, 0.0);
    for (&hv, &mv) in h.values.iter().zip(&m.values) {
        let a = f64::from(hv) - mean_h;
        let b = f64::from(u8::from(mv)) - mean_m;
        dot += a * b;
        hh += a * a;
        mm += b * b;
    }
    if hh == 0.0 || mm == 0.0 {
        return Err(Error::DegenerateVector);
    }
    Ok((dot / libm::sqrt(hh * mm)).clamp(-1.0, 1.0))
}

/// Root-mean-square difference between mask and heatmap over all pixels.
pub fn rmse(h: &Heatmap, m: &BinaryMask) -> Result<f64> {
    check_same_shape(h, m)?;
    let sq: f64 = h
        .values
        .iter()
        .zip(&m.values)
        .map(|(&hv, &mv)| {
            let d = f64::from(u8::from(mv)) - f64::from(hv);
            d * d
        })
        .sum();
    Ok(libm::sqrt(sq / h.values.len() as f64))
}

pub fn score_pair(h: &Heatmap, m: &BinaryMask, variant: PccVariant) -> Result<XaiScore> {
    let (positives, hits) = mgt_counts(h, m)?;
    Ok(XaiScore {
        mgt: hits as f64 / positives as f64,
        pcc: pcc(h, m, variant)?,
        rmse: rmse(h, m)?,
        positives,
        hits,
    })
}

pub struct XaiPair<'a> {
    pub id: &'a str,
    pub tag: &'a str,
    pub heatmap: &'a Heatmap,
    pub mask: &'a BinaryMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub id: String,
    pub reason: Error,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XaiMeans {
    pub mgt: f64,
    pub pcc: f64,
    pub rmse: f64,
}

/// Per-tag means over the pairs that could be scored.
#[derive(Debug, Clone, PartialEq)]
pub struct XaiSummary {
    /// `None` when no pair under this tag could be scored.
    pub means: Option<XaiMeans>,
    pub evaluated: usize,
    pub excluded: Vec<Exclusion>,
}

/// Scores every pair and averages per model tag. Pairs that fail a
/// precondition are listed under `excluded`. Fails only when nothing at all
/// could be scored.
pub fn evaluate_xai<'a>(
    pairs: impl IntoIterator<Item = XaiPair<'a>>,
    variant: PccVariant,
) -> Result<BTreeMap<String, XaiSummary>> {
    let mut acc: BTreeMap<String, (Vec<XaiScore>, Vec<Exclusion>)> = BTreeMap::new();
    for pair in pairs {
        let slot = acc.entry(String::from(pair.tag)).or_default();
        match score_pair(pair.heatmap, pair.mask, variant) {
            Ok(s) => slot.0.push(s),
            Err(reason) => slot.1.push(Exclusion {
                id: String::from(pair.id),
                reason,
            }),
        }
    }
    if acc.values().all(|(scores, _)| scores.is_empty()) {
        return Err(Error::NoSamples);
    }
    Ok(acc
        .into_iter()
        .map(|(tag, (scores, excluded))| {
            let n = scores.len() as f64;
            let mean = |f: fn(&XaiScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
            let means = (!scores.is_empty()).then(|| XaiMeans {
                mgt: mean(|s| s.mgt),
                pcc: mean(|s| s.pcc),
                rmse: mean(|s| s.rmse),
            });
            let summary = XaiSummary {
                means,
                evaluated: scores.len(),
                excluded,
            };
            (tag, summary)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn hm(h: usize, w: usize, v: &[f32]) -> Heatmap {
        Heatmap::new(h, w, v.to_vec()).unwrap()
    }

    fn mk(h: usize, w: usize, v: &[u8]) -> BinaryMask {
        BinaryMask::from_bytes(h, w, v).unwrap()
    }

    #[test]
    fn mgt_perfect_alignment() {
        let mut m = vec![0u8; 16];
        let mut h = vec![0.1f32; 16];
        for i in [5, 6, 9, 10] {
            m[i] = 1;
            h[i] = 0.9;
        }
        assert_eq!(mgt(&hm(4, 4, &h), &mk(4, 4, &m)).unwrap(), 1.0);
    }

    #[test]
    fn mgt_three_of_four() {
        let mut m = vec![0u8; 16];
        for i in [5, 6, 9, 10] {
            m[i] = 1;
        }
        let mut h = vec![0.0f32; 16];
        h[5] = 0.9;
        h[6] = 0.8;
        h[9] = 0.7;
        h[0] = 0.95;
        h[10] = 0.2;
        assert_eq!(mgt(&hm(4, 4, &h), &mk(4, 4, &m)).unwrap(), 0.75);
    }

    #[test]
    fn mgt_ties_prefer_lower_index() {
        // all equal: the top-1 pixel is index 0
        let h = hm(1, 3, &[0.5, 0.5, 0.5]);
        assert_eq!(mgt(&h, &mk(1, 3, &[1, 0, 0])).unwrap(), 1.0);
        assert_eq!(mgt(&h, &mk(1, 3, &[0, 0, 1])).unwrap(), 0.0);
    }

    #[test]
    fn mgt_errors() {
        let h = hm(2, 2, &[0.0; 4]);
        assert_eq!(mgt(&h, &mk(2, 2, &[0; 4])), Err(Error::EmptyMask));
        assert!(matches!(
            mgt(&h, &mk(1, 4, &[1; 4])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn pcc_examples() {
        let m = mk(2, 2, &[1, 0, 0, 1]);
        let same = hm(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!((pcc(&same, &m, PccVariant::Uncentered).unwrap() - 1.0).abs() < 1e-12);
        let disjoint = hm(2, 2, &[0.0, 0.3, 0.7, 0.0]);
        assert_eq!(pcc(&disjoint, &m, PccVariant::Uncentered).unwrap(), 0.0);
        let v = pcc(
            &hm(1, 4, &[0.5, 0.5, 0.0, 0.0]),
            &mk(1, 4, &[1, 0, 0, 0]),
            PccVariant::Uncentered,
        )
        .unwrap();
        assert!((v - 0.70711).abs() < 1e-5);
        assert_eq!(
            pcc(&hm(2, 2, &[0.0; 4]), &m, PccVariant::Uncentered),
            Err(Error::DegenerateVector)
        );
    }

    #[test]
    fn pcc_centered_is_pearson() {
        // pearson((1,0,0,0), (0.8,0.2,0.4,0.0)):
        // centred mask (0.75,-0.25,-0.25,-0.25), centred heat (0.45,-0.15,0.05,-0.35)
        // dot 0.45, |m|^2 0.75, |h|^2 0.35 -> 0.45 / sqrt(0.2625)
        let v = pcc(
            &hm(1, 4, &[0.8, 0.2, 0.4, 0.0]),
            &mk(1, 4, &[1, 0, 0, 0]),
            PccVariant::Centered,
        )
        .unwrap();
        assert!((v - 0.45 / libm::sqrt(0.2625)).abs() < 1e-6);
        // a constant heatmap has no variance
        assert_eq!(
            pcc(&hm(1, 2, &[0.5, 0.5]), &mk(1, 2, &[1, 0]), PccVariant::Centered),
            Err(Error::DegenerateVector)
        );
    }

    #[test]
    fn rmse_examples() {
        let m = mk(2, 2, &[1, 0, 0, 1]);
        assert_eq!(rmse(&hm(2, 2, &[1.0, 0.0, 0.0, 1.0]), &m).unwrap(), 0.0);
        assert_eq!(rmse(&hm(2, 2, &[0.0; 4]), &mk(2, 2, &[1; 4])).unwrap(), 1.0);
        let v = rmse(&hm(2, 2, &[0.5, 0.0, 0.0, 0.5]), &m).unwrap();
        assert!((v - 0.35355).abs() < 1e-5);
    }

    #[test]
    fn heatmap_contract() {
        assert!(matches!(
            Heatmap::new(1, 2, vec![0.5, 1.5]),
            Err(Error::OutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            Heatmap::new(2, 2, vec![0.5; 3]),
            Err(Error::Dimension { .. })
        ));
        assert_eq!(
            BinaryMask::from_bytes(1, 2, &[0, 2]),
            Err(Error::InvalidMaskValue { index: 1, value: 2 })
        );
    }

    #[test]
    fn evaluate_means_and_exclusions() {
        let m = mk(1, 2, &[1, 0]);
        let perfect = hm(1, 2, &[1.0, 0.0]);
        let half = hm(2, 1, &[1.0, 0.0]);
        let m2 = mk(1, 4, &[1, 1, 0, 0]);
        let h2 = hm(1, 4, &[0.9, 0.1, 0.8, 0.0]);
        let pairs = vec![
            XaiPair { id: "a", tag: "m1", heatmap: &perfect, mask: &m },
            XaiPair { id: "b", tag: "m1", heatmap: &h2, mask: &m2 },
            XaiPair { id: "c", tag: "m1", heatmap: &half, mask: &m },
        ];
        let out = evaluate_xai(pairs, PccVariant::Uncentered).unwrap();
        let s = &out["m1"];
        assert_eq!(s.evaluated, 2);
        assert_eq!(s.excluded.len(), 1);
        assert_eq!(s.excluded[0].id, "c");
        assert!((s.means.unwrap().mgt - 0.75).abs() < 1e-12);

        let bad = vec![XaiPair { id: "c", tag: "m1", heatmap: &half, mask: &m }];
        assert_eq!(evaluate_xai(bad, PccVariant::Uncentered), Err(Error::NoSamples));
    }
}
