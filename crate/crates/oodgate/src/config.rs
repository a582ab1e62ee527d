//! Pipeline configuration: defaults, optional JSON file, flag overrides.

use std::path::{Path, PathBuf};

use oodgate_core::backbone::Weights;
use oodgate_core::detection::ApMethod;
use oodgate_core::gallery::{self, DEFAULT_K, DEFAULT_THRESHOLD};
use oodgate_core::saliency::PccVariant;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PccMode {
    #[default]
    Uncentered,
    Centered,
}

impl From<PccMode> for PccVariant {
    fn from(m: PccMode) -> Self {
        match m {
            PccMode::Uncentered => PccVariant::Uncentered,
            PccMode::Centered => PccVariant::Centered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApMode {
    #[default]
    AllPoint,
    #[serde(rename = "101_point")]
    Interpolated101,
}

impl From<ApMode> for ApMethod {
    fn from(m: ApMode) -> Self {
        match m {
            ApMode::AllPoint => ApMethod::AllPoint,
            ApMode::Interpolated101 => ApMethod::Interpolated101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            start: 0.50,
            stop: 0.99,
            step: 0.01,
        }
    }
}

impl SweepGrid {
    pub fn thresholds(&self) -> Result<Vec<f64>> {
        Ok(gallery::threshold_grid(self.start, self.stop, self.step)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub threshold: f64,
    pub k: usize,
    pub iou_threshold: f64,
    /// Accuracy, efficiency, robustness.
    pub weights: [f64; 3],
    pub output_dir: PathBuf,
    pub format: OutputFormat,
    pub pcc_variant: PccMode,
    pub ap_method: ApMode,
    pub sweep: SweepGrid,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            threshold: DEFAULT_THRESHOLD,
            k: DEFAULT_K,
            iou_threshold: oodgate_core::detection::DEFAULT_IOU_THRESHOLD,
            weights: [0.4, 0.3, 0.3],
            output_dir: PathBuf::from("oodgate-out"),
            format: OutputFormat::Json,
            pcc_variant: PccMode::Uncentered,
            ap_method: ApMode::AllPoint,
            sweep: SweepGrid::default(),
        }
    }
}

/// Flag values that replace file or default settings when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub threshold: Option<f64>,
    pub k: Option<usize>,
    pub iou_threshold: Option<f64>,
    pub weights: Option<[f64; 3]>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                Self::from_json(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        cfg.apply(ov);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(t) = ov.threshold {
            self.threshold = t;
        }
        if let Some(k) = ov.k {
            self.k = k;
        }
        if let Some(i) = ov.iou_threshold {
            self.iou_threshold = i;
        }
        if let Some(w) = ov.weights {
            self.weights = w;
        }
        if let Some(o) = &ov.output_dir {
            self.output_dir = o.clone();
        }
        if let Some(f) = ov.format {
            self.format = f;
        }
    }

    pub fn validate(&self) -> Result<()> {
        gallery::check_threshold(self.threshold)?;
        if self.k == 0 {
            return Err(oodgate_core::Error::InvalidK(0).into());
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "iou_threshold {} must lie in (0, 1]",
                self.iou_threshold
            )));
        }
        self.weights()?;
        self.sweep.thresholds()?;
        Ok(())
    }

    pub fn weights(&self) -> Result<Weights> {
        let [a, e, r] = self.weights;
        Ok(Weights::new(a, e, r)?)
    }
}

/// Parses `w1,w2,w3`.
pub fn parse_weights(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected three weights, got {}", v.len()))
}
