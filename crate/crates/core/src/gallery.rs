//! In-domain reference gallery and the similarity gate built on it.
//!
//! A gallery holds unit-norm embeddings of known in-domain images. A query is
//! scored by exhaustive cosine search: the aggregate is the mean similarity of
//! its `k` nearest gallery entries, and the query is in-domain when that
//! aggregate reaches the threshold (boundary inclusive).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{self, FeatureVector};

pub const DEFAULT_THRESHOLD: f64 = 0.85;
pub const DEFAULT_K: usize = 1;

/// Maximum deviation from unit norm tolerated for stored gallery vectors.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vector: FeatureVector,
}

impl EmbeddingRecord {
    pub fn new(id: impl Into<String>, vector: FeatureVector) -> Self {
        EmbeddingRecord {
            id: id.into(),
            vector,
        }
    }
}

/// Checks ids are non-empty and unique and that every vector has the same
/// dimension. Returns that dimension.
pub fn validate_records(records: &[EmbeddingRecord]) -> Result<usize> {
    let first = records.first().ok_or(Error::EmptyInput)?;
    let dim = first.vector.dim();
    let mut seen = BTreeSet::new();
    for r in records {
        if r.id.is_empty() {
            return Err(Error::InvalidRow(String::from("empty record id")));
        }
        if !seen.insert(r.id.as_str()) {
            return Err(Error::DuplicateId(r.id.clone()));
        }
        if r.vector.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: r.vector.dim(),
            });
        }
    }
    Ok(dim)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    dimension: usize,
    records: Vec<EmbeddingRecord>,
    source_tag: String,
}

impl Gallery {
    /// Wraps records that are already unit-norm, as read back from disk.
    /// Nothing is renormalized, so stored bits are preserved exactly.
    pub fn from_normalized(
        records: Vec<EmbeddingRecord>,
        source_tag: impl Into<String>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyGallery);
        }
        let dimension = validate_records(&records)?;
        for r in &records {
            if (r.vector.norm() - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::InvalidRow(alloc::format!(
                    "gallery vector `{}` is not unit-norm",
                    r.id
                )));
            }
        }
        Ok(Gallery {
            dimension,
            records,
            source_tag: source_tag.into(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }
}

/// Normalizes every record once and keeps insertion order. Records with
/// identical vectors are distinct images and are all kept.
pub fn build_gallery(records: Vec<EmbeddingRecord>, source_tag: impl Into<String>) -> Result<Gallery> {
    if records.is_empty() {
        return Err(Error::EmptyGallery);
    }
    let dimension = validate_records(&records)?;
    let records = records
        .into_iter()
        .map(|r| {
            Ok(EmbeddingRecord {
                vector: numerics::l2_normalize(&r.vector)?,
                id: r.id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Gallery {
        dimension,
        records,
        source_tag: source_tag.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub gallery_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityResult {
    pub query_id: String,
    /// Sorted by descending similarity; ties keep gallery order.
    pub neighbors: Vec<Neighbor>,
    pub aggregate: f64,
    pub k_requested: usize,
    /// `k_requested` clamped to the gallery size.
    pub k_used: usize,
}

/// Exhaustive top-`k` cosine search. The aggregate is the mean similarity of
/// the `k` nearest entries, so `k = 1` is the single nearest neighbour.
pub fn query_similarity(g: &Gallery, q: &EmbeddingRecord, k: usize) -> Result<SimilarityResult> {
    if k == 0 {
        return Err(Error::InvalidK(k));
    }
    if q.vector.dim() != g.dimension {
        return Err(Error::Dimension {
            expected: g.dimension,
            found: q.vector.dim(),
        });
    }
    let qn = q.vector.norm();
    if qn == 0.0 {
        return Err(Error::DegenerateVector);
    }
    let qv = q.vector.as_slice();
    let mut scored: Vec<(usize, f64)> = g
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (i, (numerics::dot(r.vector.as_slice(), qv) / qn).clamp(-1.0, 1.0)))
        .collect();
    // stable sort: equal similarities stay in insertion order
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let k_used = k.min(scored.len());
    scored.truncate(k_used);
    let aggregate = (scored.iter().map(|s| s.1).sum::<f64>() / k_used as f64).clamp(-1.0, 1.0);
    Ok(SimilarityResult {
        query_id: q.id.clone(),
        neighbors: scored
            .into_iter()
            .map(|(i, similarity)| Neighbor {
                gallery_id: g.records[i].id.clone(),
                similarity,
            })
            .collect(),
        aggregate,
        k_requested: k,
        k_used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Domain {
    InDomain,
    OutOfDomain,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::InDomain => "InDomain",
            Domain::OutOfDomain => "OutOfDomain",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainDecision {
    pub query_id: String,
    pub verdict: Domain,
    pub aggregate: f64,
    pub threshold: f64,
}

pub fn check_threshold(threshold: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidThreshold(threshold));
    }
    Ok(())
}

/// Verdict for an already-computed aggregate similarity.
pub fn decide(query_id: impl Into<String>, aggregate: f64, threshold: f64) -> DomainDecision {
    DomainDecision {
        query_id: query_id.into(),
        verdict: if aggregate >= threshold {
            Domain::InDomain
        } else {
            Domain::OutOfDomain
        },
        aggregate,
        threshold,
    }
}

pub fn gate(g: &Gallery, q: &EmbeddingRecord, threshold: f64, k: usize) -> Result<DomainDecision> {
    check_threshold(threshold)?;
    let res = query_similarity(g, q, k)?;
    Ok(decide(q.id.clone(), res.aggregate, threshold))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainLabel {
    pub id: String,
    pub domain: Domain,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryAccuracy {
    pub category: String,
    pub total: usize,
    pub correct: usize,
    /// Fraction in `[0, 1]`.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainAccuracyReport {
    /// Ordered by category name.
    pub per_category: Vec<CategoryAccuracy>,
    pub overall_accuracy: f64,
    pub correct_in_domain: usize,
    pub correct_out_of_domain: usize,
    pub total_in_domain: usize,
    pub total_out_of_domain: usize,
}

fn label_index(labels: &[DomainLabel]) -> Result<BTreeMap<&str, &DomainLabel>> {
    let mut idx = BTreeMap::new();
    for l in labels {
        if idx.insert(l.id.as_str(), l).is_some() {
            return Err(Error::LabelMismatch(l.id.clone()));
        }
    }
    Ok(idx)
}

/// Scores verdicts against ground-truth domains, per category and overall.
/// Labels for ids that were never decided are ignored.
pub fn evaluate_domain_accuracy(
    decisions: &[DomainDecision],
    labels: &[DomainLabel],
) -> Result<DomainAccuracyReport> {
    if decisions.is_empty() {
        return Err(Error::NoSamples);
    }
    let idx = label_index(labels)?;
    let mut seen = BTreeSet::new();
    let mut cats: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let (mut c_id, mut c_ood, mut n_id, mut n_ood) = (0, 0, 0, 0);
    for d in decisions {
        let label = idx
            .get(d.query_id.as_str())
            .ok_or_else(|| Error::LabelMismatch(d.query_id.clone()))?;
        if !seen.insert(d.query_id.as_str()) {
            return Err(Error::DuplicateId(d.query_id.clone()));
        }
        let correct = d.verdict == label.domain;
        match label.domain {
            Domain::InDomain => {
                n_id += 1;
                c_id += usize::from(correct);
            }
            Domain::OutOfDomain => {
                n_ood += 1;
                c_ood += usize::from(correct);
            }
        }
        let slot = cats.entry(label.category.as_str()).or_default();
        slot.0 += 1;
        slot.1 += usize::from(correct);
    }
    Ok(DomainAccuracyReport {
        per_category: cats
            .into_iter()
            .map(|(name, (total, correct))| CategoryAccuracy {
                category: String::from(name),
                total,
                correct,
                accuracy: correct as f64 / total as f64,
            })
            .collect(),
        overall_accuracy: (c_id + c_ood) as f64 / (n_id + n_ood) as f64,
        correct_in_domain: c_id,
        correct_out_of_domain: c_ood,
        total_in_domain: n_id,
        total_out_of_domain: n_ood,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub threshold: f64,
    pub in_domain: usize,
    pub out_of_domain: usize,
    /// Present when labels were supplied.
    pub accuracy: Option<f64>,
}

/// `count` evenly spaced thresholds `start + i * step`, computed by index so
/// that the grid does not drift.
pub fn threshold_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::InvalidThreshold(step));
    }
    check_threshold(start)?;
    check_threshold(stop)?;
    let count = libm::floor((stop - start) / step + 1e-9) as usize + 1;
    Ok((0..count)
        .map(|i| {
            let t = start + i as f64 * step;
            // snap to 1e-12 so 0.5 + 35 * 0.01 prints and compares as 0.85
            libm::round(t * 1e12) / 1e12
        })
        .collect())
}

/// Verdict counts (and accuracy when labelled) at every threshold.
pub fn threshold_sweep(
    aggregates: &[(String, f64)],
    labels: Option<&[DomainLabel]>,
    thresholds: &[f64],
) -> Result<Vec<SweepPoint>> {
    if aggregates.is_empty() {
        return Err(Error::NoSamples);
    }
    thresholds
        .iter()
        .map(|&t| {
            check_threshold(t)?;
            let decisions: Vec<DomainDecision> = aggregates
                .iter()
                .map(|(id, a)| decide(id.clone(), *a, t))
                .collect();
            let in_domain = decisions
                .iter()
                .filter(|d| d.verdict == Domain::InDomain)
                .count();
            let accuracy = match labels {
                Some(l) => Some(evaluate_domain_accuracy(&decisions, l)?.overall_accuracy),
                None => None,
            };
            Ok(SweepPoint {
                threshold: t,
                in_domain,
                out_of_domain: decisions.len() - in_domain,
                accuracy,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(id: &str, v: &[f32]) -> EmbeddingRecord {
        EmbeddingRecord::new(id, FeatureVector::new(v.to_vec()).unwrap())
    }

    fn axes() -> Gallery {
        build_gallery(vec![rec("x", &[1.0, 0.0]), rec("y", &[0.0, 1.0])], "test").unwrap()
    }

    #[test]
    fn build_normalizes_and_keeps_order() {
        let g = build_gallery(
            vec![
                rec("a", &[1.0, 2.0, 3.0, 4.0]),
                rec("b", &[0.0, 0.0, 5.0, 0.0]),
                rec("c", &[1.0, 2.0, 3.0, 4.0]),
            ],
            "t",
        )
        .unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.dimension(), 4);
        let ids: Vec<&str> = g.records().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        for r in g.records() {
            assert!((r.vector.norm() - 1.0).abs() < UNIT_NORM_TOLERANCE);
        }
    }

    #[test]
    fn build_errors() {
        assert_eq!(build_gallery(vec![], "t"), Err(Error::EmptyGallery));
        assert_eq!(
            build_gallery(vec![rec("a", &[1.0]), rec("a", &[2.0])], "t"),
            Err(Error::DuplicateId("a".into()))
        );
        assert_eq!(
            build_gallery(vec![rec("a", &[1.0]), rec("b", &[2.0, 1.0])], "t"),
            Err(Error::Dimension {
                expected: 1,
                found: 2
            })
        );
        assert_eq!(
            build_gallery(vec![rec("a", &[1.0, 0.0]), rec("z", &[0.0, 0.0])], "t"),
            Err(Error::DegenerateVector)
        );
    }

    #[test]
    fn query_examples() {
        let g = axes();
        let s = core::f32::consts::FRAC_1_SQRT_2;
        let r = query_similarity(&g, &rec("q", &[s, s]), 2).unwrap();
        assert_eq!(r.neighbors.len(), 2);
        for n in &r.neighbors {
            assert!((n.similarity - 0.70711).abs() < 1e-5);
        }
        assert!((r.aggregate - 0.70711).abs() < 1e-5);
        // tie broken by insertion order
        assert_eq!(r.neighbors[0].gallery_id, "x");

        let r = query_similarity(&g, &rec("q", &[1.0, 0.0]), 1).unwrap();
        assert_eq!(r.aggregate, 1.0);
        assert_eq!(r.neighbors[0].gallery_id, "x");
    }

    #[test]
    fn query_clamps_k_and_rejects_bad_input() {
        let g = axes();
        let r = query_similarity(&g, &rec("q", &[1.0, 0.0]), 10).unwrap();
        assert_eq!((r.k_requested, r.k_used), (10, 2));
        assert!((r.aggregate - 0.5).abs() < 1e-12);
        assert_eq!(
            query_similarity(&g, &rec("q", &[1.0, 0.0]), 0),
            Err(Error::InvalidK(0))
        );
        assert_eq!(
            query_similarity(&g, &rec("q", &[1.0, 0.0, 0.0]), 1),
            Err(Error::Dimension {
                expected: 2,
                found: 3
            })
        );
    }

    #[test]
    fn decide_boundary_is_inclusive() {
        assert_eq!(decide("a", 0.90, 0.85).verdict, Domain::InDomain);
        assert_eq!(decide("a", 0.84, 0.85).verdict, Domain::OutOfDomain);
        assert_eq!(decide("a", 0.85, 0.85).verdict, Domain::InDomain);
    }

    #[test]
    fn gate_rejects_out_of_range_threshold() {
        let g = axes();
        assert_eq!(
            gate(&g, &rec("q", &[1.0, 0.0]), 1.01, 1),
            Err(Error::InvalidThreshold(1.01))
        );
    }

    fn label(id: &str, domain: Domain, cat: &str) -> DomainLabel {
        DomainLabel {
            id: id.into(),
            domain,
            category: cat.into(),
        }
    }

    #[test]
    fn accuracy_two_wrong_two_right() {
        let decisions = vec![
            decide("a", 0.1, 0.85),
            decide("b", 0.2, 0.85),
            decide("c", 0.3, 0.85),
            decide("d", 0.4, 0.85),
        ];
        let labels = vec![
            label("a", Domain::InDomain, "id"),
            label("b", Domain::InDomain, "id"),
            label("c", Domain::OutOfDomain, "ood"),
            label("d", Domain::OutOfDomain, "ood"),
        ];
        let r = evaluate_domain_accuracy(&decisions, &labels).unwrap();
        assert_eq!(r.overall_accuracy, 0.5);
        assert_eq!((r.correct_in_domain, r.correct_out_of_domain), (0, 2));
        assert_eq!((r.total_in_domain, r.total_out_of_domain), (2, 2));
        assert_eq!(r.per_category[0].category, "id");
        assert_eq!(r.per_category[0].accuracy, 0.0);
        assert_eq!(r.per_category[1].accuracy, 1.0);
    }

    #[test]
    fn accuracy_unmatched_id() {
        let decisions = vec![decide("a", 0.9, 0.85)];
        let labels = vec![label("b", Domain::InDomain, "id")];
        assert_eq!(
            evaluate_domain_accuracy(&decisions, &labels),
            Err(Error::LabelMismatch("a".into()))
        );
    }

    #[test]
    fn grid_default() {
        let grid = threshold_grid(0.50, 0.99, 0.01).unwrap();
        assert_eq!(grid.len(), 50);
        assert_eq!(grid[35], 0.85);
        assert_eq!(*grid.last().unwrap(), 0.99);
    }
}
