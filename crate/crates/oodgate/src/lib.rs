//! File formats, manifests, report emission and pipeline runs for the
//! `oodgate` command-line tool. The metrics themselves live in
//! `oodgate-core`.

pub mod config;
pub mod error;
pub mod formats;
pub mod jsonl;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod table;

pub use error::{Error, Result};
