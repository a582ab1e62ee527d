use alloc::string::String;
use core::fmt;

/// Errors raised by the numeric and metric routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands (or a record and its container) disagree on dimension.
    Dimension { expected: usize, found: usize },
    /// A zero vector (or all-zero raster) where a direction is required.
    DegenerateVector,
    /// A value that must be finite was NaN or infinite.
    NonFinite { index: usize },
    /// An operation that needs at least one element got none.
    EmptyInput,
    EmptyGallery,
    /// Neighbour count must be at least one.
    InvalidK(usize),
    DuplicateId(String),
    /// A decision id had no matching label, or a label was listed twice.
    LabelMismatch(String),
    InvalidBox,
    InvalidConfidence(f64),
    InvalidThreshold(f64),
    /// Recall is undefined for a class with no ground truths.
    UndefinedRecall { class_id: u32 },
    NoSamples,
    EmptyMask,
    /// A heatmap value outside `[0, 1]`.
    OutOfRange { index: usize, value: f64 },
    /// Mask byte other than 0 or 1.
    InvalidMaskValue { index: usize, value: u8 },
    Weights(String),
    InvalidRow(String),
    TooFewRows { needed: usize, found: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::DegenerateVector => f.write_str("degenerate (zero) vector"),
            Error::NonFinite { index } => write!(f, "non-finite value at index {index}"),
            Error::EmptyInput => f.write_str("empty input"),
            Error::EmptyGallery => f.write_str("gallery needs at least one record"),
            Error::InvalidK(k) => write!(f, "neighbour count k={k} must be at least 1"),
            Error::DuplicateId(id) => write!(f, "duplicate id `{id}`"),
            Error::LabelMismatch(id) => write!(f, "no unique label for id `{id}`"),
            Error::InvalidBox => f.write_str("bounding box must have x2 > x1 and y2 > y1"),
            Error::InvalidConfidence(c) => write!(f, "confidence {c} outside [0, 1]"),
            Error::InvalidThreshold(t) => write!(f, "threshold {t} outside its valid range"),
            Error::UndefinedRecall { class_id } => {
                write!(f, "class {class_id} has no ground truths; recall is undefined")
            }
            Error::NoSamples => f.write_str("no samples"),
            Error::EmptyMask => f.write_str("mask has no positive pixels"),
            Error::OutOfRange { index, value } => {
                write!(f, "heatmap value {value} at index {index} outside [0, 1]")
            }
            Error::InvalidMaskValue { index, value } => {
                write!(f, "mask value {value} at index {index} is not 0 or 1")
            }
            Error::Weights(msg) => write!(f, "invalid weights: {msg}"),
            Error::InvalidRow(msg) => write!(f, "invalid row: {msg}"),
            Error::TooFewRows { needed, found } => {
                write!(f, "need at least {needed} rows, found {found}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
