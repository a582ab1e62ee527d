//! Binary raster and embedding formats.
//!
//! Every file starts with one ASCII header line `<MAGIC> <a> <b>\n`:
//!
//! | magic   | a      | b     | payload                                            |
//! |---------|--------|-------|----------------------------------------------------|
//! | `EMBV1` | dim    | count | count x (u16 LE id length, UTF-8 id, dim x f32 LE) |
//! | `GALV1` | dim    | count | as `EMBV1`, vectors unit-norm                      |
//! | `HMPV1` | height | width | height * width f32 LE, row-major                   |
//! | `MSKV1` | height | width | height * width bytes, each 0x00 or 0x01            |
//!
//! Trailing bytes after the declared payload are rejected.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use oodgate_core::gallery::{EmbeddingRecord, Gallery, UNIT_NORM_TOLERANCE};
use oodgate_core::numerics::FeatureVector;
use oodgate_core::saliency::{BinaryMask, Heatmap};

use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: &str = "EMBV1";
pub const GALLERY_MAGIC: &str = "GALV1";
pub const HEATMAP_MAGIC: &str = "HMPV1";
pub const MASK_MAGIC: &str = "MSKV1";

const MAX_HEADER: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    pub offset: usize,
    pub message: String,
}

impl FormatError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        FormatError {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn at(self, path: &Path) -> Error {
        Error::Format {
            path: path.to_path_buf(),
            offset: self.offset,
            message: self.message,
        }
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "byte {}: {}", self.offset, self.message)
    }
}

type Decoded<T> = std::result::Result<T, FormatError>;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Decoded<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                FormatError::new(
                    self.pos,
                    format!(
                        "truncated {what}: need {n} bytes, {} left",
                        self.buf.len() - self.pos
                    ),
                )
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16_le(&mut self, what: &str) -> Decoded<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Decoded<Vec<f32>> {
        let bytes = self.take(n * 4, what)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    fn finish(&self) -> Decoded<()> {
        if self.pos != self.buf.len() {
            return Err(FormatError::new(
                self.pos,
                format!("{} unexpected trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

/// Parses `<magic> <a> <b>\n` and returns `(a, b)`.
fn read_header(r: &mut Reader<'_>, magic: &str) -> Decoded<(usize, usize)> {
    let window = &r.buf[..r.buf.len().min(MAX_HEADER)];
    let nl = window
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FormatError::new(0, "missing header line"))?;
    let line = std::str::from_utf8(&window[..nl])
        .ok()
        .filter(|l| l.is_ascii())
        .ok_or_else(|| FormatError::new(0, "header is not ASCII"))?;
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.first() != Some(&magic) {
        return Err(FormatError::new(
            0,
            format!("bad magic: expected `{magic}`, found `{}`", parts[0]),
        ));
    }
    if parts.len() != 3 {
        return Err(FormatError::new(0, "header must have exactly three fields"));
    }
    let num = |s: &str, off: usize| {
        s.parse::<usize>()
            .map_err(|_| FormatError::new(off, format!("invalid header number `{s}`")))
    };
    let a = num(parts[1], magic.len() + 1)?;
    let b = num(parts[2], magic.len() + 2 + parts[1].len())?;
    r.pos = nl + 1;
    Ok((a, b))
}

fn decode_records(bytes: &[u8], magic: &str) -> Decoded<(usize, Vec<EmbeddingRecord>)> {
    let mut r = Reader::new(bytes);
    let (dim, count) = read_header(&mut r, magic)?;
    if dim == 0 {
        return Err(FormatError::new(magic.len() + 1, "dimension must be at least 1"));
    }
    let mut seen = HashSet::new();
    // cap the pre-allocation; `count` is untrusted
    let mut records = Vec::with_capacity(count.min(1 << 16));
    for i in 0..count {
        let start = r.pos;
        let len = r.u16_le(&format!("id length of record {i}"))? as usize;
        let id_bytes = r.take(len, &format!("id of record {i}"))?;
        let id = std::str::from_utf8(id_bytes)
            .map_err(|_| FormatError::new(start + 2, format!("record {i}: id is not UTF-8")))?
            .to_owned();
        if id.is_empty() {
            return Err(FormatError::new(start, format!("record {i}: empty id")));
        }
        if !seen.insert(id.clone()) {
            return Err(FormatError::new(start, format!("duplicate id `{id}`")));
        }
        let vec_start = r.pos;
        let values = r.f32s(dim, &format!("vector of record {i} (`{id}`)"))?;
        let vector = FeatureVector::new(values)
            .map_err(|e| FormatError::new(vec_start, format!("record `{id}`: {e}")))?;
        records.push(EmbeddingRecord { id, vector });
    }
    r.finish()?;
    Ok((dim, records))
}

fn encode_records(magic: &str, dim: usize, records: &[EmbeddingRecord]) -> Result<Vec<u8>> {
    let mut out = format!("{magic} {dim} {}\n", records.len()).into_bytes();
    out.reserve(records.len() * (dim * 4 + 16));
    for rec in records {
        if rec.vector.dim() != dim {
            return Err(oodgate_core::Error::Dimension {
                expected: dim,
                found: rec.vector.dim(),
            }
            .into());
        }
        let id = rec.id.as_bytes();
        let len = u16::try_from(id.len())
            .map_err(|_| Error::Config(format!("id `{}` longer than 65535 bytes", rec.id)))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id);
        for v in rec.vector.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_embeddings(bytes: &[u8]) -> Decoded<(usize, Vec<EmbeddingRecord>)> {
    decode_records(bytes, EMBEDDING_MAGIC)
}

pub fn encode_embeddings(records: &[EmbeddingRecord]) -> Result<Vec<u8>> {
    let dim = records.first().map_or(0, |r| r.vector.dim());
    if dim == 0 {
        return Err(Error::NoSamples("no embeddings to write".into()));
    }
    encode_records(EMBEDDING_MAGIC, dim, records)
}

pub fn decode_gallery(bytes: &[u8], source_tag: &str) -> Decoded<Gallery> {
    let (_, records) = decode_records(bytes, GALLERY_MAGIC)?;
    if records.is_empty() {
        return Err(FormatError::new(0, "gallery has no records"));
    }
    if let Some(bad) = records
        .iter()
        .position(|r| (r.vector.norm() - 1.0).abs() > UNIT_NORM_TOLERANCE)
    {
        return Err(FormatError::new(
            0,
            format!("record {bad} (`{}`) is not unit-norm", records[bad].id),
        ));
    }
    Gallery::from_normalized(records, source_tag).map_err(|e| FormatError::new(0, e.to_string()))
}

pub fn encode_gallery(g: &Gallery) -> Result<Vec<u8>> {
    encode_records(GALLERY_MAGIC, g.dimension(), g.records())
}

pub fn decode_heatmap(bytes: &[u8]) -> Decoded<Heatmap> {
    let mut r = Reader::new(bytes);
    let (h, w) = read_header(&mut r, HEATMAP_MAGIC)?;
    let n = h
        .checked_mul(w)
        .ok_or_else(|| FormatError::new(0, "raster size overflows"))?;
    let start = r.pos;
    let values = r.f32s(n, "heatmap payload")?;
    r.finish()?;
    Heatmap::new(h, w, values).map_err(|e| match e {
        oodgate_core::Error::OutOfRange { index, .. } | oodgate_core::Error::NonFinite { index } => {
            FormatError::new(start + index * 4, e.to_string())
        }
        other => FormatError::new(0, other.to_string()),
    })
}

pub fn encode_heatmap(h: &Heatmap) -> Vec<u8> {
    let mut out = format!("{HEATMAP_MAGIC} {} {}\n", h.height(), h.width()).into_bytes();
    for v in h.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_mask(bytes: &[u8]) -> Decoded<BinaryMask> {
    let mut r = Reader::new(bytes);
    let (h, w) = read_header(&mut r, MASK_MAGIC)?;
    let n = h
        .checked_mul(w)
        .ok_or_else(|| FormatError::new(0, "raster size overflows"))?;
    let start = r.pos;
    let payload = r.take(n, "mask payload")?;
    r.finish()?;
    BinaryMask::from_bytes(h, w, payload).map_err(|e| match e {
        oodgate_core::Error::InvalidMaskValue { index, .. } => {
            FormatError::new(start + index, e.to_string())
        }
        other => FormatError::new(0, other.to_string()),
    })
}

pub fn encode_mask(m: &BinaryMask) -> Vec<u8> {
    let mut out = format!("{MASK_MAGIC} {} {}\n", m.height(), m.width()).into_bytes();
    out.extend(m.values().iter().map(|&v| u8::from(v)));
    out
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingRecord>> {
    let bytes = read_file(path)?;
    decode_embeddings(&bytes)
        .map(|(_, r)| r)
        .map_err(|e| e.at(path))
}

pub fn write_embeddings(path: &Path, records: &[EmbeddingRecord]) -> Result<()> {
    write_file(path, &encode_embeddings(records)?)
}

/// Loads a gallery; its source tag is the file name.
pub fn load_gallery(path: &Path) -> Result<Gallery> {
    let bytes = read_file(path)?;
    let tag = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_gallery(&bytes, &tag).map_err(|e| e.at(path))
}

pub fn persist_gallery(g: &Gallery, path: &Path) -> Result<()> {
    write_file(path, &encode_gallery(g)?)
}

pub fn read_heatmap(path: &Path) -> Result<Heatmap> {
    decode_heatmap(&read_file(path)?).map_err(|e| e.at(path))
}

pub fn write_heatmap(path: &Path, h: &Heatmap) -> Result<()> {
    write_file(path, &encode_heatmap(h))
}

pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    decode_mask(&read_file(path)?).map_err(|e| e.at(path))
}

pub fn write_mask(path: &Path, m: &BinaryMask) -> Result<()> {
    write_file(path, &encode_mask(m))
}
