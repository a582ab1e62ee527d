//! Image manifest: one entry per image, file references relative to the
//! manifest's own directory.
//!
//! ```json
//! {"entries": [
//!   {"image_id": "img_001", "domain_label": "InDomain", "category": "mammogram",
//!    "embedding_ref": "emb/img_001.emb", "detections_ref": "det/img_001.jsonl",
//!    "ground_truth_ref": "gt/img_001.jsonl", "heatmap_ref": "cam/img_001.hmp",
//!    "mask_ref": "mask/img_001.msk", "model_tag": "yolov8"}
//! ]}
//! ```
//!
//! Loading checks every reference, reads and parses every referenced file and
//! records a content digest for each.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use oodgate_core::detection::{Detection, GroundTruthBox};
use oodgate_core::gallery::{Domain, DomainLabel, EmbeddingRecord};
use oodgate_core::saliency::{BinaryMask, Heatmap};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::{formats, jsonl};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    entries: Vec<RawEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    image_id: String,
    domain_label: Option<String>,
    category: Option<String>,
    embedding_ref: String,
    detections_ref: Option<String>,
    ground_truth_ref: Option<String>,
    heatmap_ref: Option<String>,
    mask_ref: Option<String>,
    model_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image_id: String,
    pub domain: Option<Domain>,
    pub category: Option<String>,
    pub embedding_ref: String,
    pub detections_ref: Option<String>,
    pub ground_truth_ref: Option<String>,
    pub heatmap_ref: Option<String>,
    pub mask_ref: Option<String>,
    pub model_tag: Option<String>,
}

impl ManifestEntry {
    fn refs(&self) -> impl Iterator<Item = &str> {
        [
            Some(self.embedding_ref.as_str()),
            self.detections_ref.as_deref(),
            self.ground_truth_ref.as_deref(),
            self.heatmap_ref.as_deref(),
            self.mask_ref.as_deref(),
        ]
        .into_iter()
        .flatten()
    }

    /// Category used for accuracy breakdowns; falls back to the domain name.
    pub fn category_or_domain(&self) -> Option<String> {
        let d = self.domain?;
        Some(self.category.clone().unwrap_or_else(|| d.as_str().to_owned()))
    }
}

pub fn parse_domain(s: &str) -> Option<Domain> {
    match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
        "indomain" | "in_domain" | "id" => Some(Domain::InDomain),
        "ood" | "outofdomain" | "out_of_domain" => Some(Domain::OutOfDomain),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub path: PathBuf,
    pub root: PathBuf,
    /// Sorted by image id.
    pub entries: Vec<ManifestEntry>,
    embeddings: BTreeMap<String, EmbeddingRecord>,
    detections: BTreeMap<String, Vec<Detection>>,
    ground_truth: BTreeMap<String, Vec<GroundTruthBox>>,
    heatmaps: BTreeMap<String, Heatmap>,
    masks: BTreeMap<String, BinaryMask>,
    /// `sha256:<hex>` keyed by `manifest` and by each reference as written.
    pub digests: BTreeMap<String, String>,
}

pub fn sha256_digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&ManifestEntry> {
        self.entries
            .binary_search_by(|e| e.image_id.as_str().cmp(image_id))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Query embedding for an entry, carrying the entry's image id.
    pub fn embedding(&self, image_id: &str) -> Option<&EmbeddingRecord> {
        self.embeddings.get(image_id)
    }

    pub fn detections(&self, e: &ManifestEntry) -> Vec<Detection> {
        self.lines_for(&self.detections, e.detections_ref.as_deref(), &e.image_id, |d| &d.image_id)
    }

    pub fn ground_truth(&self, e: &ManifestEntry) -> Vec<GroundTruthBox> {
        self.lines_for(&self.ground_truth, e.ground_truth_ref.as_deref(), &e.image_id, |g| &g.image_id)
    }

    pub fn heatmap(&self, e: &ManifestEntry) -> Option<&Heatmap> {
        self.heatmaps.get(e.heatmap_ref.as_deref()?)
    }

    pub fn mask(&self, e: &ManifestEntry) -> Option<&BinaryMask> {
        self.masks.get(e.mask_ref.as_deref()?)
    }

    /// Labels for every entry that carries a domain label.
    pub fn labels(&self) -> Vec<DomainLabel> {
        self.entries
            .iter()
            .filter_map(|e| {
                Some(DomainLabel {
                    id: e.image_id.clone(),
                    domain: e.domain?,
                    category: e.category_or_domain()?,
                })
            })
            .collect()
    }

    pub fn fully_labelled(&self) -> bool {
        self.entries.iter().all(|e| e.domain.is_some())
    }

    fn lines_for<T: Clone>(
        &self,
        files: &BTreeMap<String, Vec<T>>,
        r: Option<&str>,
        image_id: &str,
        id: impl Fn(&T) -> &String,
    ) -> Vec<T> {
        r.and_then(|r| files.get(r))
            .map(|items| items.iter().filter(|x| id(x) == image_id).cloned().collect())
            .unwrap_or_default()
    }
}

struct Loader<'a> {
    root: &'a Path,
    digests: BTreeMap<String, String>,
}

impl Loader<'_> {
    fn read(&mut self, r: &str) -> Result<(PathBuf, Vec<u8>)> {
        let path = self.root.join(r);
        let bytes = formats::read_file(&path)?;
        self.digests.insert(r.to_owned(), sha256_digest(&bytes));
        Ok((path, bytes))
    }

    fn text(&mut self, r: &str) -> Result<(PathBuf, String)> {
        let (path, bytes) = self.read(r)?;
        let text = String::from_utf8(bytes).map_err(|_| Error::parse(&path, "not UTF-8"))?;
        Ok((path, text))
    }
}

pub fn parse_manifest(path: &Path) -> Result<Manifest> {
    let bytes = formats::read_file(path)?;
    let raw: RawManifest =
        serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.to_string()))?;
    let root = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();

    let mut ids = BTreeSet::new();
    let mut entries = Vec::with_capacity(raw.entries.len());
    for e in raw.entries {
        if e.image_id.is_empty() {
            return Err(Error::parse(path, "entry with empty image_id"));
        }
        if !ids.insert(e.image_id.clone()) {
            return Err(Error::DuplicateId(e.image_id));
        }
        let domain = match e.domain_label.as_deref() {
            None => None,
            Some(s) => Some(parse_domain(s).ok_or_else(|| {
                Error::parse(path, format!("{}: unknown domain_label `{s}`", e.image_id))
            })?),
        };
        entries.push(ManifestEntry {
            image_id: e.image_id,
            domain,
            category: e.category,
            embedding_ref: e.embedding_ref,
            detections_ref: e.detections_ref,
            ground_truth_ref: e.ground_truth_ref,
            heatmap_ref: e.heatmap_ref,
            mask_ref: e.mask_ref,
            model_tag: e.model_tag,
        });
    }
    entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    let missing: Vec<(String, PathBuf)> = entries
        .iter()
        .flat_map(|e| e.refs().map(move |r| (e, r)))
        .map(|(e, r)| (e.image_id.clone(), root.join(r)))
        .filter(|(_, p)| !p.is_file())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFiles(missing));
    }

    let mut ld = Loader {
        root: &root,
        digests: BTreeMap::new(),
    };
    ld.digests.insert("manifest".into(), sha256_digest(&bytes));

    let mut emb_files: BTreeMap<String, Vec<EmbeddingRecord>> = BTreeMap::new();
    let mut detections = BTreeMap::new();
    let mut ground_truth = BTreeMap::new();
    let mut heatmaps = BTreeMap::new();
    let mut masks = BTreeMap::new();
    for e in &entries {
        if !emb_files.contains_key(&e.embedding_ref) {
            let (p, b) = ld.read(&e.embedding_ref)?;
            let (_, recs) = formats::decode_embeddings(&b).map_err(|err| err.at(&p))?;
            emb_files.insert(e.embedding_ref.clone(), recs);
        }
        if let Some(r) = &e.detections_ref {
            if !detections.contains_key(r) {
                let (p, t) = ld.text(r)?;
                detections.insert(r.clone(), jsonl::parse_detections(&p, &t)?);
            }
        }
        if let Some(r) = &e.ground_truth_ref {
            if !ground_truth.contains_key(r) {
                let (p, t) = ld.text(r)?;
                ground_truth.insert(r.clone(), jsonl::parse_ground_truth(&p, &t)?);
            }
        }
        if let Some(r) = &e.heatmap_ref {
            if !heatmaps.contains_key(r) {
                let (p, b) = ld.read(r)?;
                heatmaps.insert(r.clone(), formats::decode_heatmap(&b).map_err(|err| err.at(&p))?);
            }
        }
        if let Some(r) = &e.mask_ref {
            if !masks.contains_key(r) {
                let (p, b) = ld.read(r)?;
                masks.insert(r.clone(), formats::decode_mask(&b).map_err(|err| err.at(&p))?);
            }
        }
    }

    let mut embeddings = BTreeMap::new();
    for e in &entries {
        let recs = &emb_files[&e.embedding_ref];
        let rec = recs
            .iter()
            .find(|r| r.id == e.image_id)
            .or_else(|| (recs.len() == 1).then(|| &recs[0]))
            .ok_or_else(|| {
                Error::parse(
                    root.join(&e.embedding_ref),
                    format!("no embedding for image `{}`", e.image_id),
                )
            })?;
        embeddings.insert(
            e.image_id.clone(),
            EmbeddingRecord::new(e.image_id.clone(), rec.vector.clone()),
        );
    }

    check_line_owners(&root, &entries, &detections, |e| e.detections_ref.as_deref(), |d: &Detection| &d.image_id)?;
    check_line_owners(&root, &entries, &ground_truth, |e| e.ground_truth_ref.as_deref(), |g: &GroundTruthBox| &g.image_id)?;

    Ok(Manifest {
        path: path.to_path_buf(),
        root: root.clone(),
        entries,
        embeddings,
        detections,
        ground_truth,
        heatmaps,
        masks,
        digests: ld.digests,
    })
}

/// Every line of a detection or ground-truth file must belong to an entry
/// that references that file; otherwise it would be dropped unseen.
fn check_line_owners<T>(
    root: &Path,
    entries: &[ManifestEntry],
    files: &BTreeMap<String, Vec<T>>,
    r: impl Fn(&ManifestEntry) -> Option<&str>,
    id: impl Fn(&T) -> &String,
) -> Result<()> {
    for (file, items) in files {
        let owners: BTreeSet<&str> = entries
            .iter()
            .filter(|e| r(e) == Some(file.as_str()))
            .map(|e| e.image_id.as_str())
            .collect();
        if let Some(stray) = items.iter().find(|x| !owners.contains(id(x).as_str())) {
            return Err(Error::parse(
                root.join(file),
                format!("image `{}` is not an entry referencing this file", id(stray)),
            ));
        }
    }
    Ok(())
}
