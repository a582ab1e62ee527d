//! Subcommand implementations. Each run returns a report [`Fragment`];
//! [`execute`] assembles fragments, the config echo and input digests into a
//! [`Report`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use oodgate_core::backbone::{
    compare_summary, pareto_front, rank_models, table_summary, BackboneRow, ReferenceStat,
    REFERENCE_TOLERANCE,
};
use oodgate_core::detection::{
    class_average_precision, confidence_curves, confusion_matrix, match_detections,
    mean_average_precision, pr_curve, ApMethod, Curve,
};
use oodgate_core::gallery::{
    build_gallery, decide, evaluate_domain_accuracy, query_similarity, threshold_sweep, Domain,
    DomainAccuracyReport, DomainDecision, Gallery, SimilarityResult,
};
use oodgate_core::saliency::{evaluate_xai, score_pair, PccVariant, XaiPair};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::formats;
use crate::manifest::{parse_manifest, sha256_digest, Manifest, ManifestEntry};
use crate::report::{Fragment, Node, Report, Table};
use crate::table::{read_backbone_csv, read_reference};

const DEFAULT_TAG: &str = "default";

/// Config as echoed into reports; the output location is left out so that
/// reports written to different directories stay identical.
pub fn config_echo(cfg: &PipelineConfig) -> Node {
    let value = serde_json::to_value(cfg).expect("config serializes");
    let mut node = from_json(&value);
    if let Node::Obj(m) = &mut node {
        m.remove("output_dir");
        m.remove("format");
    }
    node
}

fn from_json(v: &serde_json::Value) -> Node {
    use serde_json::Value;
    match v {
        Value::Null => Node::Null,
        Value::Bool(b) => Node::Bool(*b),
        Value::Number(n) => match n.as_i64() {
            Some(i) => Node::Int(i),
            None => Node::Num(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => Node::Str(s.clone()),
        Value::Array(a) => Node::Arr(a.iter().map(from_json).collect()),
        Value::Object(o) => Node::Obj(o.iter().map(|(k, v)| (k.clone(), from_json(v))).collect()),
    }
}

fn pct(fraction: f64) -> f64 {
    fraction * 100.0
}

fn file_label(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// Reads a gallery file once, returning it with its digest.
pub fn load_gallery_with_digest(path: &Path) -> Result<(Gallery, String)> {
    let bytes = formats::read_file(path)?;
    let g = formats::decode_gallery(&bytes, &file_label(path)).map_err(|e| e.at(path))?;
    Ok((g, sha256_digest(&bytes)))
}

// ---------------------------------------------------------------- gallery

pub fn run_gallery_build(inputs: &[PathBuf], output: &Path) -> Result<(Gallery, Fragment)> {
    if inputs.is_empty() {
        return Err(Error::Config("gallery-build needs at least one --input".into()));
    }
    let mut records = Vec::new();
    for p in inputs {
        records.extend(formats::read_embeddings(p)?);
    }
    if records.is_empty() {
        return Err(Error::NoSamples("input files hold no embeddings".into()));
    }
    let tag = inputs.iter().map(|p| file_label(p)).collect::<Vec<_>>().join(",");
    let g = build_gallery(records, tag)?;
    let bytes = formats::encode_gallery(&g)?;
    formats::write_file(output, &bytes)?;

    let mut t = Table::new("members", &["index", "id"]);
    for (i, r) in g.records().iter().enumerate() {
        t.push(vec![i.into(), Node::from(&r.id)]);
    }
    let data = Node::obj([
        ("dimension", Node::from(g.dimension())),
        ("size", Node::from(g.len())),
        ("digest", Node::from(sha256_digest(&bytes))),
    ]);
    Ok((g, Fragment { data, tables: vec![t] }))
}

// ---------------------------------------------------------------- gate

#[derive(Debug, Clone, PartialEq)]
pub struct GateOutcome {
    /// One per manifest entry, in image-id order.
    pub results: Vec<SimilarityResult>,
    pub decisions: Vec<DomainDecision>,
    pub pass_through: BTreeSet<String>,
    /// Present when at least one entry is labelled.
    pub accuracy: Option<DomainAccuracyReport>,
}

pub fn run_gate(cfg: &PipelineConfig, g: &Gallery, m: &Manifest) -> Result<GateOutcome> {
    if m.is_empty() {
        return Err(Error::NoSamples("manifest has no entries".into()));
    }
    let mut results = Vec::with_capacity(m.len());
    let mut decisions = Vec::with_capacity(m.len());
    for e in &m.entries {
        let q = m.embedding(&e.image_id).expect("resolved at load");
        let res = query_similarity(g, q, cfg.k)?;
        decisions.push(decide(e.image_id.clone(), res.aggregate, cfg.threshold));
        results.push(res);
    }
    let pass_through = decisions
        .iter()
        .filter(|d| d.verdict == Domain::InDomain)
        .map(|d| d.query_id.clone())
        .collect();
    let labels = m.labels();
    let accuracy = if labels.is_empty() {
        None
    } else {
        let labelled: BTreeSet<&str> = labels.iter().map(|l| l.id.as_str()).collect();
        let scored: Vec<DomainDecision> = decisions
            .iter()
            .filter(|d| labelled.contains(d.query_id.as_str()))
            .cloned()
            .collect();
        Some(evaluate_domain_accuracy(&scored, &labels)?)
    };
    Ok(GateOutcome {
        results,
        decisions,
        pass_through,
        accuracy,
    })
}

/// Gate run that requires every manifest entry to carry a domain label.
pub fn run_eval_ood(cfg: &PipelineConfig, g: &Gallery, m: &Manifest) -> Result<GateOutcome> {
    if let Some(e) = m.entries.iter().find(|e| e.domain.is_none()) {
        return Err(Error::parse(
            &m.path,
            format!("{}: eval-ood needs a domain_label on every entry", e.image_id),
        ));
    }
    run_gate(cfg, g, m)
}

fn accuracy_node(a: &DomainAccuracyReport) -> Node {
    let part = |c: usize, n: usize| {
        Node::obj([
            ("correct", Node::from(c)),
            ("total", Node::from(n)),
            ("accuracy_pct", if n == 0 { Node::Null } else { Node::from(pct(c as f64 / n as f64)) }),
        ])
    };
    Node::obj([
        ("overall_pct", Node::from(pct(a.overall_accuracy))),
        (
            "correct",
            Node::from(a.correct_in_domain + a.correct_out_of_domain),
        ),
        ("total", Node::from(a.total_in_domain + a.total_out_of_domain)),
        ("in_domain", part(a.correct_in_domain, a.total_in_domain)),
        ("out_of_domain", part(a.correct_out_of_domain, a.total_out_of_domain)),
        (
            "per_category",
            Node::Arr(
                a.per_category
                    .iter()
                    .map(|c| {
                        Node::obj([
                            ("category", Node::from(&c.category)),
                            ("total", Node::from(c.total)),
                            ("correct", Node::from(c.correct)),
                            ("accuracy_pct", Node::from(pct(c.accuracy))),
                        ])
                    })
                    .collect(),
            ),
        ),
    ])
}

pub fn gate_fragment(cfg: &PipelineConfig, g: &Gallery, out: &GateOutcome) -> Fragment {
    let mut dec_table = Table::new(
        "decisions",
        &["image_id", "aggregate", "verdict", "nearest_id", "nearest_similarity", "k_used"],
    );
    let mut decisions = Vec::with_capacity(out.decisions.len());
    for (d, r) in out.decisions.iter().zip(&out.results) {
        let nearest = r.neighbors.first();
        dec_table.push(vec![
            Node::from(&d.query_id),
            d.aggregate.into(),
            d.verdict.as_str().into(),
            nearest.map(|n| n.gallery_id.clone()).into(),
            nearest.map(|n| n.similarity).into(),
            r.k_used.into(),
        ]);
        decisions.push(Node::obj([
            ("image_id", Node::from(&d.query_id)),
            ("aggregate", d.aggregate.into()),
            ("verdict", d.verdict.as_str().into()),
            (
                "nearest",
                nearest.map_or(Node::Null, |n| {
                    Node::obj([
                        ("id", Node::from(&n.gallery_id)),
                        ("similarity", n.similarity.into()),
                    ])
                }),
            ),
        ]));
    }
    let mut fields = vec![
        ("threshold", Node::from(cfg.threshold)),
        ("k", Node::from(cfg.k)),
        ("gallery_size", Node::from(g.len())),
        ("decisions", Node::Arr(decisions)),
        ("pass_through", Node::arr(out.pass_through.iter().map(String::as_str))),
        (
            "counts",
            Node::obj([
                ("in_domain", Node::from(out.pass_through.len())),
                ("out_of_domain", Node::from(out.decisions.len() - out.pass_through.len())),
            ]),
        ),
    ];
    let mut tables = vec![dec_table];
    if let Some(a) = &out.accuracy {
        fields.push(("accuracy", accuracy_node(a)));
        let mut t = Table::new("accuracy", &["category", "total", "correct", "accuracy_pct"]);
        for c in &a.per_category {
            t.push(vec![
                Node::from(&c.category),
                c.total.into(),
                c.correct.into(),
                pct(c.accuracy).into(),
            ]);
        }
        t.push(vec![
            "overall".into(),
            (a.total_in_domain + a.total_out_of_domain).into(),
            (a.correct_in_domain + a.correct_out_of_domain).into(),
            pct(a.overall_accuracy).into(),
        ]);
        tables.push(t);
    }
    Fragment {
        data: Node::obj(fields),
        tables,
    }
}

// ---------------------------------------------------------------- detection

fn restrict<'a>(
    m: &'a Manifest,
    pick: impl Fn(&ManifestEntry) -> bool,
    pass: Option<&BTreeSet<String>>,
) -> (bool, Vec<&'a ManifestEntry>) {
    let eligible: Vec<&ManifestEntry> = m.entries.iter().filter(|e| pick(e)).collect();
    let any = !eligible.is_empty();
    let kept = eligible
        .into_iter()
        .filter(|e| pass.map_or(true, |p| p.contains(&e.image_id)))
        .collect();
    (any, kept)
}

fn curve_node(c: &Curve) -> Node {
    Node::Arr(c.points.iter().map(|p| Node::arr([p.x, p.y])).collect())
}

/// Detection metrics over the manifest entries that reference ground truth,
/// limited to `pass` when a gate ran first.
pub fn run_eval_det(
    cfg: &PipelineConfig,
    m: &Manifest,
    pass: Option<&BTreeSet<String>>,
) -> Result<Fragment> {
    if let Some(e) = m
        .entries
        .iter()
        .find(|e| e.detections_ref.is_some() && e.ground_truth_ref.is_none())
    {
        return Err(Error::parse(
            &m.path,
            format!("{}: detections_ref without ground_truth_ref", e.image_id),
        ));
    }
    let (any, entries) = restrict(m, |e| e.ground_truth_ref.is_some(), pass);
    if !any {
        return Err(Error::parse(&m.path, "no entry has a ground_truth_ref"));
    }
    if entries.is_empty() {
        return Err(Error::NoSamples("no image passed the gate for detection evaluation".into()));
    }
    let mut dets = Vec::new();
    let mut gts = Vec::new();
    for e in &entries {
        dets.extend(m.detections(e));
        gts.extend(m.ground_truth(e));
    }
    let method: ApMethod = cfg.ap_method.into();
    let mr = match_detections(&dets, &gts, cfg.iou_threshold)?;

    let mut aps = BTreeMap::new();
    let mut per_class = Vec::new();
    let mut ap_table = Table::new(
        "ap",
        &["class_id", "ap", "true_positives", "false_positives", "false_negatives", "ground_truths"],
    );
    let mut curve_table = Table::new("curves", &["class_id", "curve", "x", "y"]);
    for (&class, counts) in &mr.per_class {
        let mut fields = vec![
            ("true_positives", Node::from(counts.true_positives)),
            ("false_positives", Node::from(counts.false_positives)),
            ("false_negatives", Node::from(counts.false_negatives)),
            ("ground_truths", Node::from(counts.ground_truths)),
        ];
        let mut ap = None;
        if counts.ground_truths > 0 {
            let v = class_average_precision(&mr, class, method)?;
            aps.insert(class, v);
            ap = Some(v);
            let pr = pr_curve(&mr, class)?;
            let cc = confidence_curves(&mr, class)?;
            let peak = cc.f1.peak().expect("confidence curves always hold 0 and 1");
            fields.push((
                "f1_peak",
                Node::obj([("confidence", peak.x.into()), ("f1", peak.y.into())]),
            ));
            let curves = [&pr, &cc.precision, &cc.recall, &cc.f1];
            for c in curves {
                for p in &c.points {
                    curve_table.push(vec![class.into(), c.kind.as_str().into(), p.x.into(), p.y.into()]);
                }
            }
            fields.push((
                "curves",
                Node::obj(curves.map(|c| (c.kind.as_str(), curve_node(c)))),
            ));
        }
        fields.push(("ap", ap.into()));
        ap_table.push(vec![
            class.into(),
            ap.into(),
            counts.true_positives.into(),
            counts.false_positives.into(),
            counts.false_negatives.into(),
            counts.ground_truths.into(),
        ]);
        per_class.push((class.to_string(), Node::obj(fields)));
    }
    if aps.is_empty() {
        return Err(Error::NoSamples("no ground-truth boxes among evaluated images".into()));
    }
    let map = mean_average_precision(&aps)?;

    let cm = confusion_matrix(&mr, true);
    let labels: Vec<String> = cm
        .classes
        .iter()
        .map(u32::to_string)
        .chain(std::iter::once("background".to_owned()))
        .collect();
    let mut header = vec!["predicted"];
    header.extend(labels.iter().map(String::as_str));
    let mut cm_table = Table::new("confusion", &header);
    for (label, row) in labels.iter().zip(&cm.cells) {
        let mut cells = vec![Node::from(label)];
        cells.extend(row.iter().map(|&v| Node::from(v)));
        cm_table.push(cells);
    }

    let data = Node::obj([
        ("iou_threshold", Node::from(cfg.iou_threshold)),
        ("ap_method", Node::from(ap_method_name(method))),
        ("images", Node::arr(entries.iter().map(|e| e.image_id.as_str()))),
        ("map", Node::from(map)),
        ("per_class", Node::obj(per_class)),
        (
            "confusion_matrix",
            Node::obj([
                ("labels", Node::arr(labels.iter().map(String::as_str))),
                ("normalized", Node::from(cm.normalized)),
                ("cells", Node::Arr(cm.cells.iter().map(|r| Node::arr(r.iter().copied())).collect())),
            ]),
        ),
    ]);
    Ok(Fragment {
        data,
        tables: vec![ap_table, curve_table, cm_table],
    })
}

fn ap_method_name(m: ApMethod) -> &'static str {
    match m {
        ApMethod::AllPoint => "all_point",
        ApMethod::Interpolated101 => "101_point",
    }
}

// ---------------------------------------------------------------- saliency

pub fn run_eval_xai(
    cfg: &PipelineConfig,
    m: &Manifest,
    pass: Option<&BTreeSet<String>>,
) -> Result<Fragment> {
    if let Some(e) = m
        .entries
        .iter()
        .find(|e| e.heatmap_ref.is_some() != e.mask_ref.is_some())
    {
        return Err(Error::parse(
            &m.path,
            format!("{}: heatmap_ref and mask_ref must come together", e.image_id),
        ));
    }
    let (any, entries) = restrict(m, |e| e.heatmap_ref.is_some(), pass);
    if !any {
        return Err(Error::parse(&m.path, "no entry has a heatmap_ref and mask_ref"));
    }
    if entries.is_empty() {
        return Err(Error::NoSamples("no image passed the gate for saliency evaluation".into()));
    }
    let variant: PccVariant = cfg.pcc_variant.into();
    let tag = |e: &ManifestEntry| e.model_tag.clone().unwrap_or_else(|| DEFAULT_TAG.to_owned());
    let tags: Vec<String> = entries.iter().map(|e| tag(e)).collect();
    let pairs = entries.iter().zip(&tags).map(|(e, t)| XaiPair {
        id: &e.image_id,
        tag: t,
        heatmap: m.heatmap(e).expect("loaded with manifest"),
        mask: m.mask(e).expect("loaded with manifest"),
    });
    let summary = evaluate_xai(pairs, variant)?;

    let mut pair_table = Table::new(
        "pairs",
        &["image_id", "tag", "mgt", "pcc", "rmse", "positives", "hits", "excluded"],
    );
    let mut pair_nodes = Vec::with_capacity(entries.len());
    for (e, t) in entries.iter().zip(&tags) {
        let s = score_pair(m.heatmap(e).unwrap(), m.mask(e).unwrap(), variant);
        let node = match &s {
            Ok(s) => {
                pair_table.push(vec![
                    Node::from(&e.image_id),
                    Node::from(t),
                    s.mgt.into(),
                    s.pcc.into(),
                    s.rmse.into(),
                    s.positives.into(),
                    s.hits.into(),
                    Node::Null,
                ]);
                Node::obj([
                    ("image_id", Node::from(&e.image_id)),
                    ("tag", Node::from(t)),
                    ("mgt", s.mgt.into()),
                    ("pcc", s.pcc.into()),
                    ("rmse", s.rmse.into()),
                    ("positives", s.positives.into()),
                    ("hits", s.hits.into()),
                ])
            }
            Err(err) => {
                pair_table.push(vec![
                    Node::from(&e.image_id),
                    Node::from(t),
                    Node::Null,
                    Node::Null,
                    Node::Null,
                    Node::Null,
                    Node::Null,
                    err.to_string().into(),
                ]);
                Node::obj([
                    ("image_id", Node::from(&e.image_id)),
                    ("tag", Node::from(t)),
                    ("excluded", err.to_string().into()),
                ])
            }
        };
        pair_nodes.push(node);
    }

    let mut sum_table = Table::new("summary", &["tag", "evaluated", "excluded", "mgt", "pcc", "rmse"]);
    let mut per_tag = Vec::new();
    for (tag, s) in &summary {
        let mean = |f: fn(&oodgate_core::saliency::XaiMeans) -> f64| Node::from(s.means.as_ref().map(f));
        sum_table.push(vec![
            Node::from(tag),
            s.evaluated.into(),
            s.excluded.len().into(),
            mean(|m| m.mgt),
            mean(|m| m.pcc),
            mean(|m| m.rmse),
        ]);
        per_tag.push((
            tag.clone(),
            Node::obj([
                ("evaluated", Node::from(s.evaluated)),
                (
                    "excluded",
                    Node::Arr(
                        s.excluded
                            .iter()
                            .map(|x| {
                                Node::obj([
                                    ("image_id", Node::from(&x.id)),
                                    ("reason", Node::from(x.reason.to_string())),
                                ])
                            })
                            .collect(),
                    ),
                ),
                ("mgt", mean(|m| m.mgt)),
                ("pcc", mean(|m| m.pcc)),
                ("rmse", mean(|m| m.rmse)),
            ]),
        ));
    }
    let data = Node::obj([
        (
            "pcc_variant",
            Node::from(match variant {
                PccVariant::Uncentered => "uncentered",
                PccVariant::Centered => "centered",
            }),
        ),
        ("per_tag", Node::obj(per_tag)),
        ("pairs", Node::Arr(pair_nodes)),
    ]);
    Ok(Fragment {
        data,
        tables: vec![pair_table, sum_table],
    })
}

// ---------------------------------------------------------------- ranking

pub fn run_rank(cfg: &PipelineConfig, rows: &[BackboneRow], reference: &[ReferenceStat]) -> Result<Fragment> {
    let w = cfg.weights()?;
    let ranked = rank_models(rows, &w)?;
    let front: BTreeSet<&str> = pareto_front(rows).into_iter().map(|r| r.name.as_str()).collect();
    let by_name: BTreeMap<&str, &BackboneRow> = rows.iter().map(|r| (r.name.as_str(), r)).collect();

    let mut rank_table = Table::new(
        "ranking",
        &[
            "rank",
            "name",
            "score",
            "accuracy",
            "efficiency",
            "robustness",
            "pareto",
            "parameters_m",
            "total_time_s",
            "in_domain_acc",
            "mean_ood_acc",
        ],
    );
    let mut ranking = Vec::with_capacity(rows.len());
    for (i, name) in ranked.order.iter().enumerate() {
        let c = ranked.components[name];
        let score = ranked.scores[name];
        let row = by_name[name.as_str()];
        let on_front = front.contains(name.as_str());
        rank_table.push(vec![
            (i + 1).into(),
            Node::from(name),
            score.into(),
            c.accuracy.into(),
            c.efficiency.into(),
            c.robustness.into(),
            on_front.into(),
            row.parameters_m.into(),
            row.total_time_s.into(),
            row.in_domain_acc.into(),
            row.mean_ood_acc().into(),
        ]);
        ranking.push(Node::obj([
            ("rank", Node::from(i + 1)),
            ("name", Node::from(name)),
            ("score", score.into()),
            (
                "components",
                Node::obj([
                    ("accuracy", Node::from(c.accuracy)),
                    ("efficiency", c.efficiency.into()),
                    ("robustness", c.robustness.into()),
                ]),
            ),
            ("pareto", on_front.into()),
        ]));
    }

    let summary = table_summary(rows)?;
    let mut sum_table = Table::new("summary", &["column", "mean", "median", "count"]);
    for s in &summary {
        sum_table.push(vec![
            s.column.as_str().into(),
            s.stats.mean.into(),
            s.stats.median.into(),
            s.stats.count.into(),
        ]);
    }
    let deltas = compare_summary(&summary, reference, REFERENCE_TOLERANCE);
    let mut delta_table = Table::new(
        "reference_deltas",
        &["column", "statistic", "reference", "recomputed", "delta", "flagged"],
    );
    for d in &deltas {
        delta_table.push(vec![
            d.column.as_str().into(),
            d.statistic.as_str().into(),
            d.reference.into(),
            d.recomputed.into(),
            d.delta.into(),
            d.flagged.into(),
        ]);
    }

    let data = Node::obj([
        (
            "weights",
            Node::obj([
                ("accuracy", Node::from(w.accuracy)),
                ("efficiency", w.efficiency.into()),
                ("robustness", w.robustness.into()),
            ]),
        ),
        ("ranking", Node::Arr(ranking)),
        ("pareto_front", Node::arr(front.iter().copied())),
        (
            "summary",
            Node::obj(summary.iter().map(|s| {
                (
                    s.column.as_str(),
                    Node::obj([
                        ("mean", Node::from(s.stats.mean)),
                        ("median", s.stats.median.into()),
                        ("count", s.stats.count.into()),
                    ]),
                )
            })),
        ),
        ("reference_tolerance", Node::from(REFERENCE_TOLERANCE)),
        (
            "reference_deltas",
            Node::Arr(
                deltas
                    .iter()
                    .map(|d| {
                        Node::obj([
                            ("column", Node::from(d.column.as_str())),
                            ("statistic", d.statistic.as_str().into()),
                            ("reference", d.reference.into()),
                            ("recomputed", d.recomputed.into()),
                            ("delta", d.delta.into()),
                            ("flagged", d.flagged.into()),
                        ])
                    })
                    .collect(),
            ),
        ),
    ]);
    Ok(Fragment {
        data,
        tables: vec![rank_table, sum_table, delta_table],
    })
}

// ---------------------------------------------------------------- sweep

/// In-domain counts (and accuracy, when every entry is labelled) over the
/// configured threshold grid.
pub fn run_sweep_threshold(cfg: &PipelineConfig, g: &Gallery, m: &Manifest) -> Result<Fragment> {
    if m.is_empty() {
        return Err(Error::NoSamples("manifest has no entries".into()));
    }
    let grid = cfg.sweep.thresholds()?;
    let aggregates = m
        .entries
        .iter()
        .map(|e| {
            let q = m.embedding(&e.image_id).expect("resolved at load");
            Ok((e.image_id.clone(), query_similarity(g, q, cfg.k)?.aggregate))
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = m.fully_labelled().then(|| m.labels());
    let points = threshold_sweep(&aggregates, labels.as_deref(), &grid)?;

    let mut t = Table::new("sweep", &["threshold", "in_domain", "out_of_domain", "accuracy_pct"]);
    let mut nodes = Vec::with_capacity(points.len());
    for p in &points {
        let acc = p.accuracy.map(pct);
        t.push(vec![p.threshold.into(), p.in_domain.into(), p.out_of_domain.into(), acc.into()]);
        nodes.push(Node::obj([
            ("threshold", Node::from(p.threshold)),
            ("in_domain", p.in_domain.into()),
            ("out_of_domain", p.out_of_domain.into()),
            ("accuracy_pct", acc.into()),
        ]));
    }
    let data = Node::obj([
        ("k", Node::from(cfg.k)),
        (
            "grid",
            Node::obj([
                ("start", Node::from(cfg.sweep.start)),
                ("stop", cfg.sweep.stop.into()),
                ("step", cfg.sweep.step.into()),
            ]),
        ),
        ("labelled", Node::from(labels.is_some())),
        ("points", Node::Arr(nodes)),
    ]);
    Ok(Fragment {
        data,
        tables: vec![t],
    })
}

// ---------------------------------------------------------------- dispatch

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    GalleryBuild {
        inputs: Vec<PathBuf>,
        output: PathBuf,
    },
    Gate {
        gallery: PathBuf,
        manifest: PathBuf,
    },
    EvalOod {
        gallery: PathBuf,
        manifest: PathBuf,
    },
    EvalDet {
        gallery: Option<PathBuf>,
        manifest: PathBuf,
    },
    EvalXai {
        gallery: Option<PathBuf>,
        manifest: PathBuf,
    },
    Rank {
        table: PathBuf,
        reference: Option<PathBuf>,
    },
    SweepThreshold {
        gallery: PathBuf,
        manifest: PathBuf,
    },
    /// Gate, then every evaluation the manifest supports, plus ranking when
    /// a backbone table is given.
    Full {
        gallery: PathBuf,
        manifest: PathBuf,
        table: Option<PathBuf>,
        reference: Option<PathBuf>,
    },
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    report: Report,
}

impl Run<'_> {
    fn gallery(&mut self, p: &Path) -> Result<Gallery> {
        let (g, d) = load_gallery_with_digest(p)?;
        self.report.inputs.insert("gallery".into(), d);
        Ok(g)
    }

    fn manifest(&mut self, p: &Path) -> Result<Manifest> {
        let m = parse_manifest(p)?;
        self.report.inputs.extend(m.digests.clone());
        Ok(m)
    }

    fn digest(&mut self, role: &str, p: &Path) -> Result<()> {
        let bytes = formats::read_file(p)?;
        self.report.inputs.insert(role.into(), sha256_digest(&bytes));
        Ok(())
    }

    fn stage(&mut self, name: &str, f: Fragment) {
        self.report.stages.insert(name.into(), f);
    }

    /// Gate stage when a gallery is given; returns the pass-through set.
    fn maybe_gate(
        &mut self,
        gallery: Option<&Path>,
        m: &Manifest,
    ) -> Result<Option<(Gallery, BTreeSet<String>)>> {
        let Some(gp) = gallery else { return Ok(None) };
        let g = self.gallery(gp)?;
        let out = run_gate(self.cfg, &g, m)?;
        self.stage("gate", gate_fragment(self.cfg, &g, &out));
        Ok(Some((g, out.pass_through)))
    }

    fn rank(&mut self, table: &Path, reference: Option<&Path>) -> Result<()> {
        let rows = read_backbone_csv(table)?;
        self.digest("backbone_table", table)?;
        let refs = match reference {
            Some(r) => {
                self.digest("reference", r)?;
                read_reference(r)?
            }
            None => Vec::new(),
        };
        let f = run_rank(self.cfg, &rows, &refs)?;
        self.stage("rank", f);
        Ok(())
    }
}

fn skipped(err: &Error) -> Fragment {
    Fragment {
        data: Node::obj([("skipped", Node::from(err.to_string()))]),
        tables: Vec::new(),
    }
}

pub fn execute(cfg: &PipelineConfig, task: &Task) -> Result<Report> {
    cfg.validate()?;
    let mut run = Run {
        cfg,
        report: Report::new(config_echo(cfg)),
    };
    match task {
        Task::GalleryBuild { inputs, output } => {
            for (i, p) in inputs.iter().enumerate() {
                run.digest(&format!("embeddings[{i}]"), p)?;
            }
            let (_, f) = run_gallery_build(inputs, output)?;
            run.stage("gallery-build", f);
        }
        Task::Gate { gallery, manifest } => {
            let m = run.manifest(manifest)?;
            run.maybe_gate(Some(gallery), &m)?;
        }
        Task::EvalOod { gallery, manifest } => {
            let m = run.manifest(manifest)?;
            let g = run.gallery(gallery)?;
            let out = run_eval_ood(cfg, &g, &m)?;
            run.stage("eval-ood", gate_fragment(cfg, &g, &out));
        }
        Task::EvalDet { gallery, manifest } => {
            let m = run.manifest(manifest)?;
            let pass = run.maybe_gate(gallery.as_deref(), &m)?.map(|(_, p)| p);
            let f = run_eval_det(cfg, &m, pass.as_ref())?;
            run.stage("eval-det", f);
        }
        Task::EvalXai { gallery, manifest } => {
            let m = run.manifest(manifest)?;
            let pass = run.maybe_gate(gallery.as_deref(), &m)?.map(|(_, p)| p);
            let f = run_eval_xai(cfg, &m, pass.as_ref())?;
            run.stage("eval-xai", f);
        }
        Task::Rank { table, reference } => run.rank(table, reference.as_deref())?,
        Task::SweepThreshold { gallery, manifest } => {
            let m = run.manifest(manifest)?;
            let g = run.gallery(gallery)?;
            let f = run_sweep_threshold(cfg, &g, &m)?;
            run.stage("sweep-threshold", f);
        }
        Task::Full {
            gallery,
            manifest,
            table,
            reference,
        } => {
            let m = run.manifest(manifest)?;
            let (g, pass) = run.maybe_gate(Some(gallery), &m)?.expect("gallery given");
            let sweep = run_sweep_threshold(cfg, &g, &m)?;
            run.stage("sweep-threshold", sweep);
            if m.entries.iter().any(|e| e.ground_truth_ref.is_some()) {
                let f = run_eval_det(cfg, &m, Some(&pass)).or_else(|e| match e.exit_code() {
                    3 => Ok(skipped(&e)),
                    _ => Err(e),
                })?;
                run.stage("eval-det", f);
            }
            if m.entries.iter().any(|e| e.heatmap_ref.is_some()) {
                let f = run_eval_xai(cfg, &m, Some(&pass)).or_else(|e| match e.exit_code() {
                    3 => Ok(skipped(&e)),
                    _ => Err(e),
                })?;
                run.stage("eval-xai", f);
            }
            if let Some(t) = table {
                run.rank(t, reference.as_deref())?;
            }
        }
    }
    Ok(run.report)
}
