//! Object-detection evaluation: IoU, greedy matching, precision/recall
//! curves, average precision and the detection-level confusion matrix.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Axis-aligned box in pixel corner coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BoundingBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let b = BoundingBox { x1, y1, x2, y2 };
        b.validate()?;
        Ok(b)
    }

    /// From top-left corner plus width and height.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(x, y, x + w, y + h)
    }

    /// From centre plus width and height.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x1, self.y1, self.x2, self.y2]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x2 <= self.x1 || self.y2 <= self.y1 {
            return Err(Error::InvalidBox);
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1) * (self.y2 - self.y1)
    }
}

/// Intersection over union of two valid boxes; 0 when they do not overlap.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let w = a.x2.min(b.x2) - a.x1.max(b.x1);
    let h = a.y2.min(b.y2) - a.y1.max(b.y1);
    if w <= 0.0 || h <= 0.0 {
        return Ok(0.0);
    }
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub class_id: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl Detection {
    pub fn new(
        image_id: impl Into<String>,
        class_id: u32,
        bbox: BoundingBox,
        confidence: f64,
    ) -> Result<Self> {
        bbox.validate()?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidConfidence(confidence));
        }
        Ok(Detection {
            image_id: image_id.into(),
            class_id,
            bbox,
            confidence,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBox {
    pub image_id: String,
    pub class_id: u32,
    pub bbox: BoundingBox,
}

impl GroundTruthBox {
    pub fn new(image_id: impl Into<String>, class_id: u32, bbox: BoundingBox) -> Result<Self> {
        bbox.validate()?;
        Ok(GroundTruthBox {
            image_id: image_id.into(),
            class_id,
            bbox,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedDetection {
    pub detection: Detection,
    /// Index into [`MatchResult::ground_truths`] when this detection is a TP.
    pub matched_gt: Option<usize>,
}

impl MatchedDetection {
    pub fn is_true_positive(&self) -> bool {
        self.matched_gt.is_some()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub ground_truths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Every detection, in processing order (descending confidence, then
    /// image id, then input order).
    pub records: Vec<MatchedDetection>,
    pub ground_truths: Vec<GroundTruthBox>,
    /// For each ground truth, the index into `records` that consumed it.
    pub gt_matched_by: Vec<Option<usize>>,
    /// Every class seen in detections or ground truths.
    pub per_class: BTreeMap<u32, ClassCounts>,
    pub iou_threshold: f64,
}

impl MatchResult {
    pub fn classes(&self) -> impl Iterator<Item = u32> + '_ {
        self.per_class.keys().copied()
    }

    fn class_records(&self, class_id: u32) -> impl Iterator<Item = &MatchedDetection> {
        self.records
            .iter()
            .filter(move |r| r.detection.class_id == class_id)
    }
}

fn processing_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| compare_confidence(&dets[a], &dets[b]).then(a.cmp(&b)));
    order
}

/// Greedy matching: detections are visited by descending confidence and each
/// takes the unmatched same-image, same-class ground truth with the highest
/// IoU, provided that IoU reaches `iou_threshold`. Equal IoUs resolve to the
/// earlier ground truth.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    iou_threshold: f64,
) -> Result<MatchResult> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::InvalidThreshold(iou_threshold));
    }
    for d in dets {
        d.bbox.validate()?;
        if !(0.0..=1.0).contains(&d.confidence) {
            return Err(Error::InvalidConfidence(d.confidence));
        }
    }
    let mut buckets: BTreeMap<(&str, u32), Vec<usize>> = BTreeMap::new();
    let mut per_class: BTreeMap<u32, ClassCounts> = BTreeMap::new();
    for (i, g) in gts.iter().enumerate() {
        g.bbox.validate()?;
        buckets
            .entry((g.image_id.as_str(), g.class_id))
            .or_default()
            .push(i);
        per_class.entry(g.class_id).or_default().ground_truths += 1;
    }

    let mut gt_matched_by = vec![None; gts.len()];
    let mut records = Vec::with_capacity(dets.len());
    for i in processing_order(dets) {
        let d = &dets[i];
        let mut best: Option<(usize, f64)> = None;
        if let Some(cands) = buckets.get(&(d.image_id.as_str(), d.class_id)) {
            for &g in cands {
                if gt_matched_by[g].is_some() {
                    continue;
                }
                let v = iou(&d.bbox, &gts[g].bbox)?;
                if best.map_or(true, |(_, b)| v > b) {
                    best = Some((g, v));
                }
            }
        }
        let matched_gt = match best {
            Some((g, v)) if v >= iou_threshold => {
                gt_matched_by[g] = Some(records.len());
                Some(g)
            }
            _ => None,
        };
        let counts = per_class.entry(d.class_id).or_default();
        if matched_gt.is_some() {
            counts.true_positives += 1;
        } else {
            counts.false_positives += 1;
        }
        records.push(MatchedDetection {
            detection: d.clone(),
            matched_gt,
        });
    }
    for c in per_class.values_mut() {
        c.false_negatives = c.ground_truths - c.true_positives;
    }
    Ok(MatchResult {
        records,
        ground_truths: gts.to_vec(),
        gt_matched_by,
        per_class,
        iou_threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CurveKind {
    PrecisionRecall,
    PrecisionConfidence,
    RecallConfidence,
    F1Confidence,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::PrecisionRecall => "pr",
            CurveKind::PrecisionConfidence => "precision_confidence",
            CurveKind::RecallConfidence => "recall_confidence",
            CurveKind::F1Confidence => "f1_confidence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point with the largest `y`; the smallest `x` wins ties.
    pub fn peak(&self) -> Option<CurvePoint> {
        self.points.iter().copied().fold(None, |best, p| match best {
            Some(b) if p.y <= b.y => Some(b),
            _ => Some(p),
        })
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    num as f64 / den as f64
}

fn class_ground_truths(m: &MatchResult, class_id: u32) -> Result<usize> {
    match m.per_class.get(&class_id) {
        Some(c) if c.ground_truths > 0 => Ok(c.ground_truths),
        _ => Err(Error::UndefinedRecall { class_id }),
    }
}

/// Precision/recall after each distinct confidence level, walking detections
/// from most to least confident. Detections sharing a confidence are emitted
/// as one point, so the curve only depends on the confidence ranking.
/// A class with ground truths but no detections yields an empty curve.
pub fn pr_curve(m: &MatchResult, class_id: u32) -> Result<Curve> {
    let n_gt = class_ground_truths(m, class_id)?;
    let recs: Vec<&MatchedDetection> = m.class_records(class_id).collect();
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, r) in recs.iter().enumerate() {
        if r.is_true_positive() {
            tp += 1;
        } else {
            fp += 1;
        }
        let group_ends = recs
            .get(i + 1)
            .map_or(true, |n| n.detection.confidence != r.detection.confidence);
        if group_ends {
            points.push(CurvePoint {
                x: ratio(tp, n_gt),
                y: ratio(tp, tp + fp),
            });
        }
    }
    Ok(Curve {
        kind: CurveKind::PrecisionRecall,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApMethod {
    /// Exact area under the monotone precision envelope.
    #[default]
    AllPoint,
    /// Mean envelope precision at recall 0.00, 0.01, ..., 1.00.
    Interpolated101,
}

fn envelope(points: &[CurvePoint]) -> Vec<f64> {
    let mut env: Vec<f64> = points.iter().map(|p| p.y).collect();
    for i in (0..env.len().saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    env
}

/// Area under a precision-recall curve using the precision envelope
/// `p(r) = max { p(r') : r' >= r }`.
pub fn average_precision(c: &Curve, method: ApMethod) -> Result<f64> {
    if c.kind != CurveKind::PrecisionRecall {
        return Err(Error::InvalidRow(String::from(
            "average precision needs a precision-recall curve",
        )));
    }
    if c.points.is_empty() {
        return Err(Error::NoSamples);
    }
    let env = envelope(&c.points);
    let ap = match method {
        ApMethod::AllPoint => {
            let mut prev_r = 0.0;
            let mut area = 0.0;
            for (p, e) in c.points.iter().zip(&env) {
                area += (p.x - prev_r) * e;
                prev_r = p.x;
            }
            area
        }
        ApMethod::Interpolated101 => {
            let mut sum = 0.0;
            let mut j = 0;
            for step in 0..=100 {
                let r = step as f64 / 100.0;
                while j < c.points.len() && c.points[j].x < r {
                    j += 1;
                }
                if j < c.points.len() {
                    sum += env[j];
                }
            }
            sum / 101.0
        }
    };
    Ok(ap.clamp(0.0, 1.0))
}

/// AP for one class of a match result. A class that has ground truths but no
/// detections scores 0.
pub fn class_average_precision(m: &MatchResult, class_id: u32, method: ApMethod) -> Result<f64> {
    let curve = pr_curve(m, class_id)?;
    if curve.is_empty() {
        return Ok(0.0);
    }
    average_precision(&curve, method)
}

/// Unweighted mean of per-class APs.
pub fn mean_average_precision(aps: &BTreeMap<u32, f64>) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::NoSamples);
    }
    for &v in aps.values() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange { index: 0, value: v });
        }
    }
    Ok(aps.values().sum::<f64>() / aps.len() as f64)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceCurves {
    pub precision: Curve,
    pub recall: Curve,
    pub f1: Curve,
}

/// Precision, recall and F1 as functions of the confidence cut-off, sampled
/// at 0, 1 and every distinct detection confidence (ascending). Detections
/// with confidence >= the cut-off are kept; with none kept, precision is 1.
pub fn confidence_curves(m: &MatchResult, class_id: u32) -> Result<ConfidenceCurves> {
    let n_gt = class_ground_truths(m, class_id)?;
    let recs: Vec<&MatchedDetection> = m.class_records(class_id).collect();

    let mut cuts: Vec<f64> = recs.iter().map(|r| r.detection.confidence).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();

    let mut precision = Vec::with_capacity(cuts.len());
    let mut recall = Vec::with_capacity(cuts.len());
    let mut f1 = Vec::with_capacity(cuts.len());
    let (mut tp, mut fp, mut next) = (0usize, 0usize, 0usize);
    for &t in &cuts {
        while next < recs.len() && recs[next].detection.confidence >= t {
            if recs[next].is_true_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            next += 1;
        }
        let p = if tp + fp == 0 { 1.0 } else { ratio(tp, tp + fp) };
        let r = ratio(tp, n_gt);
        precision.push(CurvePoint { x: t, y: p });
        recall.push(CurvePoint { x: t, y: r });
        f1.push(CurvePoint {
            x: t,
            y: f1_score(p, r),
        });
    }
    precision.reverse();
    recall.reverse();
    f1.reverse();
    Ok(ConfidenceCurves {
        precision: Curve {
            kind: CurveKind::PrecisionConfidence,
            points: precision,
        },
        recall: Curve {
            kind: CurveKind::RecallConfidence,
            points: recall,
        },
        f1: Curve {
            kind: CurveKind::F1Confidence,
            points: f1,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    /// Class ids for rows/columns `0..classes.len()`; the last row and column
    /// are background.
    pub classes: Vec<u32>,
    /// `cells[predicted][true]`.
    pub cells: Vec<Vec<f64>>,
    pub normalized: bool,
}

impl ConfusionMatrix {
    pub fn background(&self) -> usize {
        self.classes.len()
    }

    pub fn index_of(&self, class_id: u32) -> Option<usize> {
        self.classes.binary_search(&class_id).ok()
    }

    pub fn column_sum(&self, col: usize) -> f64 {
        self.cells.iter().map(|row| row[col]).sum()
    }
}

/// Detection-level confusion matrix. A TP lands on the diagonal, an unmatched
/// detection in the background column of its predicted class, and a missed
/// ground truth in the background row of its class. Normalizing scales each
/// non-empty column to sum to 1.
pub fn confusion_matrix(m: &MatchResult, normalize: bool) -> ConfusionMatrix {
    let classes: Vec<u32> = m
        .records
        .iter()
        .map(|r| r.detection.class_id)
        .chain(m.ground_truths.iter().map(|g| g.class_id))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = classes.len() + 1;
    let bg = classes.len();
    let pos = |c: u32| classes.binary_search(&c).unwrap_or(bg);
    let mut cells = vec![vec![0.0; n]; n];
    for r in &m.records {
        let pred = pos(r.detection.class_id);
        let truth = match r.matched_gt {
            Some(g) => pos(m.ground_truths[g].class_id),
            None => bg,
        };
        cells[pred][truth] += 1.0;
    }
    for (g, by) in m.ground_truths.iter().zip(&m.gt_matched_by) {
        if by.is_none() {
            cells[bg][pos(g.class_id)] += 1.0;
        }
    }
    if normalize {
        for col in 0..n {
            let sum: f64 = cells.iter().map(|row| row[col]).sum();
            if sum > 0.0 {
                for row in cells.iter_mut() {
                    row[col] /= sum;
                }
            }
        }
    }
    ConfusionMatrix {
        classes,
        cells,
        normalized: normalize,
    }
}

/// Orders detections the way [`match_detections`] visits them.
pub fn compare_confidence(a: &Detection, b: &Detection) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| a.image_id.cmp(&b.image_id))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2).unwrap()
    }

    fn det(img: &str, class: u32, b: BoundingBox, conf: f64) -> Detection {
        Detection::new(img, class, b, conf).unwrap()
    }

    fn gt(img: &str, class: u32, b: BoundingBox) -> GroundTruthBox {
        GroundTruthBox::new(img, class, b).unwrap()
    }

    #[test]
    fn iou_examples() {
        let a = bb(0.0, 0.0, 1.0, 1.0);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &bb(2.0, 2.0, 3.0, 3.0)).unwrap(), 0.0);
        let v = iou(&bb(0.0, 0.0, 2.0, 2.0), &bb(1.0, 1.0, 3.0, 3.0)).unwrap();
        assert!((v - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_boxes() {
        assert_eq!(BoundingBox::new(1.0, 0.0, 1.0, 2.0), Err(Error::InvalidBox));
        assert_eq!(BoundingBox::new(0.0, 3.0, 1.0, 2.0), Err(Error::InvalidBox));
        let bad = BoundingBox {
            x1: 0.0,
            y1: 0.0,
            x2: 0.0,
            y2: 1.0,
        };
        assert_eq!(iou(&bad, &bb(0.0, 0.0, 1.0, 1.0)), Err(Error::InvalidBox));
    }

    #[test]
    fn center_conversion() {
        let b = BoundingBox::from_center(320.0, 320.0, 100.0, 100.0).unwrap();
        assert_eq!(b, bb(270.0, 270.0, 370.0, 370.0));
    }

    #[test]
    fn single_exact_match() {
        let b = bb(10.0, 10.0, 50.0, 50.0);
        let m = match_detections(&[det("i", 0, b, 0.9)], &[gt("i", 0, b)], 0.5).unwrap();
        let c = m.per_class[&0];
        assert_eq!((c.true_positives, c.false_positives, c.false_negatives), (1, 0, 0));
    }

    #[test]
    fn duplicate_detection_is_false_positive() {
        let b = bb(10.0, 10.0, 50.0, 50.0);
        let dets = [
            det("i", 0, bb(11.0, 10.0, 50.0, 50.0), 0.8),
            det("i", 0, b, 0.9),
        ];
        let m = match_detections(&dets, &[gt("i", 0, b)], 0.5).unwrap();
        assert_eq!(m.records[0].detection.confidence, 0.9);
        assert!(m.records[0].is_true_positive());
        assert!(!m.records[1].is_true_positive());
        let c = m.per_class[&0];
        assert_eq!((c.true_positives, c.false_positives, c.false_negatives), (1, 1, 0));
    }

    #[test]
    fn below_threshold_is_fp_and_fn() {
        let (d, g) = (bb(0.0, 0.0, 7.0, 1.0), bb(3.0, 0.0, 10.0, 1.0));
        // intersection 4, union 10
        assert!((iou(&d, &g).unwrap() - 0.4).abs() < 1e-12);
        let m = match_detections(&[det("i", 0, d, 0.9)], &[gt("i", 0, g)], 0.5).unwrap();
        let c = m.per_class[&0];
        assert_eq!((c.false_positives, c.false_negatives), (1, 1));
    }

    #[test]
    fn matching_respects_image_and_class() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let m = match_detections(
            &[det("a", 1, b, 0.9), det("b", 0, b, 0.8)],
            &[gt("a", 0, b)],
            0.5,
        )
        .unwrap();
        assert!(m.records.iter().all(|r| !r.is_true_positive()));
        assert_eq!(m.per_class[&0].false_negatives, 1);
    }

    fn one_gt_sequence(first_tp: bool) -> MatchResult {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let far = bb(100.0, 100.0, 110.0, 110.0);
        let (c1, c2) = if first_tp { (b, far) } else { (far, b) };
        match_detections(
            &[det("i", 0, c1, 0.9), det("i", 0, c2, 0.8)],
            &[gt("i", 0, b)],
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn pr_curve_examples() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let m = match_detections(&[det("i", 0, b, 0.9)], &[gt("i", 0, b)], 0.5).unwrap();
        assert_eq!(pr_curve(&m, 0).unwrap().points, vec![CurvePoint { x: 1.0, y: 1.0 }]);

        let c = pr_curve(&one_gt_sequence(true), 0).unwrap();
        assert_eq!(
            c.points,
            vec![CurvePoint { x: 1.0, y: 1.0 }, CurvePoint { x: 1.0, y: 0.5 }]
        );
        let c = pr_curve(&one_gt_sequence(false), 0).unwrap();
        assert_eq!(
            c.points,
            vec![CurvePoint { x: 0.0, y: 0.0 }, CurvePoint { x: 1.0, y: 0.5 }]
        );
    }

    #[test]
    fn pr_curve_without_ground_truth() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let m = match_detections(&[det("i", 3, b, 0.9)], &[], 0.5).unwrap();
        assert_eq!(pr_curve(&m, 3), Err(Error::UndefinedRecall { class_id: 3 }));
    }

    #[test]
    fn ap_examples() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let m = match_detections(&[det("i", 0, b, 0.9)], &[gt("i", 0, b)], 0.5).unwrap();
        assert_eq!(class_average_precision(&m, 0, ApMethod::AllPoint).unwrap(), 1.0);
        assert_eq!(
            class_average_precision(&one_gt_sequence(true), 0, ApMethod::AllPoint).unwrap(),
            1.0
        );
        assert_eq!(
            class_average_precision(&one_gt_sequence(false), 0, ApMethod::AllPoint).unwrap(),
            0.5
        );
        let empty = Curve {
            kind: CurveKind::PrecisionRecall,
            points: vec![],
        };
        assert_eq!(average_precision(&empty, ApMethod::AllPoint), Err(Error::NoSamples));
    }

    #[test]
    fn ap_101_point() {
        // recall 0.5 at precision 1, then recall 1 at precision 0.5
        let c = Curve {
            kind: CurveKind::PrecisionRecall,
            points: vec![CurvePoint { x: 0.5, y: 1.0 }, CurvePoint { x: 1.0, y: 0.5 }],
        };
        let ap = average_precision(&c, ApMethod::Interpolated101).unwrap();
        // r in 0.00..=0.50 -> 1.0 (51 points), r in 0.51..=1.00 -> 0.5 (50 points)
        assert!((ap - (51.0 + 25.0) / 101.0).abs() < 1e-12);
        assert_eq!(average_precision(&c, ApMethod::AllPoint).unwrap(), 0.75);
    }

    #[test]
    fn map_examples() {
        let aps: BTreeMap<u32, f64> = [(0, 0.931), (1, 0.963)].into_iter().collect();
        let v = mean_average_precision(&aps).unwrap();
        assert!((v - 0.947).abs() < 1e-12);
        let aps: BTreeMap<u32, f64> = [(0, 1.0)].into_iter().collect();
        assert_eq!(mean_average_precision(&aps).unwrap(), 1.0);
        let aps: BTreeMap<u32, f64> = [(0, 0.2), (1, 0.4), (2, 0.6)].into_iter().collect();
        assert!((mean_average_precision(&aps).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(mean_average_precision(&BTreeMap::new()), Err(Error::NoSamples));
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_score(0.6, 0.6), 0.6);
        assert_eq!(f1_score(1.0, 0.0), 0.0);
        assert_eq!(f1_score(0.0, 0.0), 0.0);
        assert!((f1_score(0.9, 0.8) - 0.84706).abs() < 1e-5);
    }

    #[test]
    fn confidence_curve_sampling() {
        let m = one_gt_sequence(true);
        let cc = confidence_curves(&m, 0).unwrap();
        let xs: Vec<f64> = cc.precision.points.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 0.8, 0.9, 1.0]);
        let ps: Vec<f64> = cc.precision.points.iter().map(|p| p.y).collect();
        assert_eq!(ps, vec![0.5, 0.5, 1.0, 1.0]);
        let rs: Vec<f64> = cc.recall.points.iter().map(|p| p.y).collect();
        assert_eq!(rs, vec![1.0, 1.0, 1.0, 0.0]);
        assert_eq!(cc.f1.points[3].y, 0.0);
        assert_eq!(cc.f1.points[2].y, 1.0);
        assert_eq!(cc.precision.peak(), Some(CurvePoint { x: 0.9, y: 1.0 }));
    }

    #[test]
    fn confusion_examples() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let b2 = bb(50.0, 50.0, 60.0, 60.0);
        let m = match_detections(
            &[det("i", 0, b, 0.9)],
            &[gt("i", 0, b), gt("i", 0, b2)],
            0.5,
        )
        .unwrap();
        let cm = confusion_matrix(&m, true);
        assert_eq!(cm.classes, vec![0]);
        assert_eq!(cm.cells[0][0], 0.5);
        assert_eq!(cm.cells[cm.background()][0], 0.5);
        assert_eq!(cm.column_sum(cm.background()), 0.0);

        let m = match_detections(
            &[det("i", 0, b, 0.9), det("i", 1, b2, 0.7)],
            &[gt("i", 0, b), gt("i", 1, b2)],
            0.5,
        )
        .unwrap();
        let cm = confusion_matrix(&m, true);
        assert_eq!(cm.cells[0][0], 1.0);
        assert_eq!(cm.cells[1][1], 1.0);
        assert_eq!(cm.cells[0][1] + cm.cells[1][0], 0.0);
    }
}
