//! Detection and ground-truth JSON lines.
//!
//! ```text
//! {"image_id": "img_001", "class_id": 0, "bbox": [x1, y1, x2, y2], "confidence": 0.93}
//! ```
//!
//! Ground-truth lines have the same shape without `confidence`. Blank lines
//! are skipped; line numbers in errors are 1-based.

use std::path::Path;

use oodgate_core::detection::{BoundingBox, Detection, GroundTruthBox};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionLine {
    image_id: String,
    class_id: u32,
    bbox: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence: Option<f64>,
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_line(path: &Path, n: usize, line: &str) -> Result<(DetectionLine, BoundingBox)> {
    let raw: DetectionLine = serde_json::from_str(line)
        .map_err(|e| Error::parse(path, format!("line {n}: {e}")))?;
    let [x1, y1, x2, y2] = raw.bbox;
    let bbox = BoundingBox::new(x1, y1, x2, y2)
        .map_err(|e| Error::parse(path, format!("line {n}: {e}")))?;
    Ok((raw, bbox))
}

pub fn parse_detections(path: &Path, text: &str) -> Result<Vec<Detection>> {
    lines(text)
        .map(|(n, line)| {
            let (raw, bbox) = parse_line(path, n, line)?;
            let confidence = raw
                .confidence
                .ok_or_else(|| Error::parse(path, format!("line {n}: missing `confidence`")))?;
            Detection::new(raw.image_id, raw.class_id, bbox, confidence)
                .map_err(|e| Error::parse(path, format!("line {n}: {e}")))
        })
        .collect()
}

pub fn parse_ground_truth(path: &Path, text: &str) -> Result<Vec<GroundTruthBox>> {
    lines(text)
        .map(|(n, line)| {
            let (raw, bbox) = parse_line(path, n, line)?;
            if raw.confidence.is_some() {
                return Err(Error::parse(
                    path,
                    format!("line {n}: ground truth must not carry `confidence`"),
                ));
            }
            GroundTruthBox::new(raw.image_id, raw.class_id, bbox)
                .map_err(|e| Error::parse(path, format!("line {n}: {e}")))
        })
        .collect()
}

fn to_line(image_id: &str, class_id: u32, b: &BoundingBox, confidence: Option<f64>) -> String {
    let line = DetectionLine {
        image_id: image_id.to_owned(),
        class_id,
        bbox: [b.x1, b.y1, b.x2, b.y2],
        confidence,
    };
    serde_json::to_string(&line).expect("plain struct serializes")
}

pub fn detections_to_jsonl(dets: &[Detection]) -> String {
    dets.iter()
        .map(|d| to_line(&d.image_id, d.class_id, &d.bbox, Some(d.confidence)) + "\n")
        .collect()
}

pub fn ground_truth_to_jsonl(gts: &[GroundTruthBox]) -> String {
    gts.iter()
        .map(|g| to_line(&g.image_id, g.class_id, &g.bbox, None) + "\n")
        .collect()
}
