//! Allocation-only core of the `oodgate` toolkit.
//!
//! Everything here is a pure function over in-memory values: the cosine
//! gallery gate for out-of-domain filtering, detection metrics (IoU, greedy
//! matching, PR and confidence curves, AP/mAP, confusion matrix), saliency
//! faithfulness metrics (MGT, PCC, RMSE) and composite backbone ranking.
//! File formats, manifests and the CLI live in the `oodgate` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod backbone;
pub mod detection;
pub mod error;
pub mod gallery;
pub mod numerics;
pub mod saliency;

pub use error::{Error, Result};
