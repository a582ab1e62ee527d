#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oodgate::formats;
use oodgate_core::gallery::{build_gallery, EmbeddingRecord};
use oodgate_core::numerics::FeatureVector;
use oodgate_core::saliency::{BinaryMask, Heatmap};

pub const DIM: usize = 8;

pub const BACKBONE_CSV: &str = "\
name,parameters_m,flops_g,feature_time_s,total_time_s,in_domain_acc,ood1_acc,ood2_acc
ResNet18,11.7,1.8,175.6,199.21,100,100,81
ResNet34,21.8,3.6,283.2,354.12,100,99.73,66.67
ResNet50,25.6,4.1,335.07,335.79,97.06,100,100
ResNet101,44.5,7.9,581.67,606.28,91.18,100,100
ResNet152,60.2,11.6,826.25,859.8,88.24,100,100
VGG16,138.4,15.5,975.27,1065.13,88.24,100,47.62
VGG19,143.7,19.6,1254.71,1208.39,100,100,52.38
Inception v3,23.9,5.7,314.41,272.49,100,100,100
DenseNet121,8.0,2.9,277.63,240.58,100,100,85.71
DenseNet169,14.1,3.4,333.6,286.28,100,100,95.24
EfficientNet-b0,5.3,0.39,98.35,134.07,76.47,100,100
EfficientNet-b7,66,37,692.12,823.02,85.29,100,80.95
";

pub const REFERENCE_JSON: &str = r#"{
  "parameters_m": {"mean": 49.93, "median": 24.75},
  "flops_g": {"mean": 9.46, "median": 4.9},
  "feature_time_s": {"mean": 512.08, "median": 334.35},
  "total_time_s": {"mean": 529.58, "median": 344.96}
}
"#;

pub fn rec(id: &str, v: Vec<f32>) -> EmbeddingRecord {
    EmbeddingRecord::new(id, FeatureVector::new(v).unwrap())
}

/// `cos * e_axis + sin * e_spare`: cosine `cos` with basis vector `axis`,
/// orthogonal to every other basis vector except `spare`.
pub fn mix(axis: usize, cos: f64, spare: usize) -> Vec<f32> {
    let mut v = vec![0.0f32; DIM];
    v[axis] = cos as f32;
    v[spare] = (1.0 - cos * cos).max(0.0).sqrt() as f32;
    v
}

pub fn basis(axis: usize) -> Vec<f32> {
    mix(axis, 1.0, (axis + 1) % DIM)
}

pub fn write(path: &Path, body: &str) {
    if let Some(d) = path.parent() {
        fs::create_dir_all(d).unwrap();
    }
    fs::write(path, body).unwrap();
}

pub fn write_gallery(path: &Path, axes: &[usize]) {
    let recs = axes
        .iter()
        .map(|&a| rec(&format!("ref_{a}"), basis(a)))
        .collect();
    formats::persist_gallery(&build_gallery(recs, "fixture").unwrap(), path).unwrap();
}

pub struct Corpus {
    pub dir: tempfile::TempDir,
    pub gallery: PathBuf,
    pub manifest: PathBuf,
    pub table: PathBuf,
    pub reference: PathBuf,
}

impl Corpus {
    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }
}

fn det(image: &str, class: u32, b: [f64; 4], conf: f64) -> String {
    format!(
        "{{\"image_id\":\"{image}\",\"class_id\":{class},\"bbox\":[{},{},{},{}],\"confidence\":{conf}}}\n",
        b[0], b[1], b[2], b[3]
    )
}

fn gt(image: &str, class: u32, b: [f64; 4]) -> String {
    format!(
        "{{\"image_id\":\"{image}\",\"class_id\":{class},\"bbox\":[{},{},{},{}]}}\n",
        b[0], b[1], b[2], b[3]
    )
}

/// Four images against a six-member gallery:
///
/// | image | label     | similarity | detections              | saliency       |
/// |-------|-----------|------------|-------------------------|----------------|
/// | img_a | InDomain  | 0.95       | class 0 TP, class 1 FP+TP | perfect pair |
/// | img_b | InDomain  | 0.90       | class 0 TP + duplicate  | empty mask     |
/// | img_c | OOD       | 0.25       | missed class 0 box      | ordinary pair  |
/// | img_d | OOD       | 0.10       | none                    | none           |
///
/// Gated detection: class 0 AP 1, class 1 AP 0.5, mAP 0.75. Without the
/// gate img_c's missed box drops class 0 AP to 2/3.
pub fn corpus() -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let gallery = root.join("gallery.gal");
    write_gallery(&gallery, &[0, 1, 2, 3, 4, 5]);

    let queries = vec![
        rec("img_a", mix(0, 0.95, 6)),
        rec("img_b", mix(1, 0.90, 7)),
        rec("img_c", mix(2, 0.25, 6)),
        rec("img_d", mix(3, 0.10, 7)),
    ];
    formats::write_embeddings(&root.join("emb/queries.emb"), &queries).unwrap();

    write(
        &root.join("det/img_a.jsonl"),
        &[
            det("img_a", 0, [10.0, 10.0, 50.0, 50.0], 0.9),
            det("img_a", 1, [300.0, 300.0, 340.0, 340.0], 0.6),
            det("img_a", 1, [100.0, 100.0, 150.0, 150.0], 0.5),
        ]
        .concat(),
    );
    write(
        &root.join("gt/img_a.jsonl"),
        &[gt("img_a", 0, [10.0, 10.0, 50.0, 50.0]), gt("img_a", 1, [100.0, 100.0, 150.0, 150.0])].concat(),
    );
    write(
        &root.join("det/img_b.jsonl"),
        &[
            det("img_b", 0, [20.0, 20.0, 60.0, 60.0], 0.8),
            det("img_b", 0, [21.0, 21.0, 61.0, 61.0], 0.7),
        ]
        .concat(),
    );
    write(&root.join("gt/img_b.jsonl"), &gt("img_b", 0, [20.0, 20.0, 60.0, 60.0]));
    write(&root.join("det/img_c.jsonl"), "");
    write(&root.join("gt/img_c.jsonl"), &gt("img_c", 0, [5.0, 5.0, 25.0, 25.0]));

    let mask_a: Vec<u8> = (0..16).map(|i| u8::from(matches!(i, 5 | 6 | 9 | 10))).collect();
    let heat_a: Vec<f32> = mask_a.iter().map(|&m| f32::from(m)).collect();
    formats::write_mask(&root.join("xai/img_a.msk"), &BinaryMask::from_bytes(4, 4, &mask_a).unwrap()).unwrap();
    formats::write_heatmap(&root.join("xai/img_a.hmp"), &Heatmap::new(4, 4, heat_a).unwrap()).unwrap();
    formats::write_mask(&root.join("xai/img_b.msk"), &BinaryMask::from_bytes(4, 4, &[0; 16]).unwrap()).unwrap();
    formats::write_heatmap(&root.join("xai/img_b.hmp"), &Heatmap::new(4, 4, vec![0.5; 16]).unwrap()).unwrap();
    let heat_c: Vec<f32> = (0..16).map(|i| i as f32 / 15.0).collect();
    formats::write_mask(&root.join("xai/img_c.msk"), &BinaryMask::from_bytes(4, 4, &mask_a).unwrap()).unwrap();
    formats::write_heatmap(&root.join("xai/img_c.hmp"), &Heatmap::new(4, 4, heat_c).unwrap()).unwrap();

    let manifest = root.join("manifest.json");
    write(
        &manifest,
        r#"{"entries": [
  {"image_id": "img_a", "domain_label": "InDomain", "category": "mammogram",
   "embedding_ref": "emb/queries.emb", "detections_ref": "det/img_a.jsonl",
   "ground_truth_ref": "gt/img_a.jsonl", "heatmap_ref": "xai/img_a.hmp",
   "mask_ref": "xai/img_a.msk", "model_tag": "gradcam"},
  {"image_id": "img_b", "domain_label": "InDomain", "category": "mammogram",
   "embedding_ref": "emb/queries.emb", "detections_ref": "det/img_b.jsonl",
   "ground_truth_ref": "gt/img_b.jsonl", "heatmap_ref": "xai/img_b.hmp",
   "mask_ref": "xai/img_b.msk", "model_tag": "gradcam"},
  {"image_id": "img_c", "domain_label": "OOD", "category": "natural",
   "embedding_ref": "emb/queries.emb", "detections_ref": "det/img_c.jsonl",
   "ground_truth_ref": "gt/img_c.jsonl", "heatmap_ref": "xai/img_c.hmp",
   "mask_ref": "xai/img_c.msk", "model_tag": "gradcam"},
  {"image_id": "img_d", "domain_label": "OOD", "category": "natural",
   "embedding_ref": "emb/queries.emb"}
]}
"#,
    );
    let table = root.join("backbones.csv");
    write(&table, BACKBONE_CSV);
    let reference = root.join("reference.json");
    write(&reference, REFERENCE_JSON);
    Corpus {
        dir,
        gallery,
        manifest,
        table,
        reference,
    }
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oodgate"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

pub fn num(v: &serde_json::Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}
