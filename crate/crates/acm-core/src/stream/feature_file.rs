//! Binary carrier for precomputed feature streams.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic        "ACMF1\0"                       6 bytes
//! dim          u32                             4
//! record count u64                             8
//! class count  u32                             4
//! records      count x { id u64, timestamp i64,
//!                        label u32, dim x f32 }
//! ```
//!
//! A file is valid only if its byte length matches the header exactly;
//! trailing or missing bytes are rejected.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{FeatureVector, StreamRecord};

pub const FEATURE_MAGIC: &[u8; 6] = b"ACMF1\0";
const HEADER_LEN: usize = 6 + 4 + 8 + 4;

/// A loaded feature stream with its declared class count.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    pub dim: usize,
    pub class_count: u32,
    pub records: Vec<StreamRecord>,
}

/// Serialize records; labels must fit `class_count` and dims must agree.
pub fn write_feature_bytes(records: &[StreamRecord], class_count: u32, dim: usize) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + records.len() * (20 + 4 * dim));
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    out.extend_from_slice(&class_count.to_le_bytes());
    for r in records {
        if r.feature.dim() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                got: r.feature.dim(),
            });
        }
        if r.label >= class_count {
            return Err(Error::LabelOutOfRange {
                label: r.label,
                classes: class_count,
            });
        }
        out.extend_from_slice(&r.id.to_le_bytes());
        out.extend_from_slice(&r.timestamp.to_le_bytes());
        out.extend_from_slice(&r.label.to_le_bytes());
        for &v in r.feature.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_feature_file(
    path: impl AsRef<Path>,
    records: &[StreamRecord],
    class_count: u32,
    dim: usize,
) -> Result<()> {
    let bytes = write_feature_bytes(records, class_count, dim)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Parse and fully validate a feature byte buffer.
pub fn read_feature_bytes(bytes: &[u8]) -> Result<FeatureDataset> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..6] != FEATURE_MAGIC {
        return Err(Error::BadMagic { expected: "ACMF1" });
    }
    let dim = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let count = u64::from_le_bytes(bytes[10..18].try_into().expect("8 bytes")) as usize;
    let class_count = u32::from_le_bytes(bytes[18..22].try_into().expect("4 bytes"));
    if dim == 0 {
        return Err(Error::InvalidConfig("feature file declares zero dim".into()));
    }
    let record_len = 20 + 4 * dim;
    let expected = HEADER_LEN + count * record_len;
    if bytes.len() != expected {
        return Err(Error::TruncatedFile(format!(
            "header promises {expected} bytes, file holds {}",
            bytes.len()
        )));
    }

    let mut records = Vec::with_capacity(count);
    let mut off = HEADER_LEN;
    for _ in 0..count {
        let id = u64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"));
        let timestamp = i64::from_le_bytes(bytes[off + 8..off + 16].try_into().expect("8 bytes"));
        let label = u32::from_le_bytes(bytes[off + 16..off + 20].try_into().expect("4 bytes"));
        if label >= class_count {
            return Err(Error::LabelOutOfRange {
                label,
                classes: class_count,
            });
        }
        let mut values = Vec::with_capacity(dim);
        let mut fo = off + 20;
        for _ in 0..dim {
            let v = f32::from_le_bytes(bytes[fo..fo + 4].try_into().expect("4 bytes"));
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { record: id });
            }
            values.push(v);
            fo += 4;
        }
        records.push(StreamRecord {
            id,
            timestamp,
            label,
            feature: FeatureVector::from_raw(values),
        });
        off += record_len;
    }
    Ok(FeatureDataset {
        dim,
        class_count,
        records,
    })
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureDataset> {
    let bytes = fs::read(path)?;
    read_feature_bytes(&bytes)
}

/// One manifest line per dataset: path, dim, count, class count,
/// tab-separated.
pub fn manifest_line(path: &str, dim: usize, count: usize, class_count: u32) -> String {
    format!("{path}\t{dim}\t{count}\t{class_count}")
}

/// Parse a manifest document; ignores blank lines.
pub fn parse_manifest(text: &str) -> Result<Vec<(String, usize, usize, u32)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 {
            return Err(Error::InvalidConfig(format!(
                "manifest line {} has {} fields, expected 4",
                lineno + 1,
                parts.len()
            )));
        }
        let parse = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::InvalidConfig(format!("bad manifest number on line {}", lineno + 1)))
        };
        out.push((
            parts[0].to_string(),
            parse(parts[1])? as usize,
            parse(parts[2])? as usize,
            parse(parts[3])? as u32,
        ));
    }
    Ok(out)
}
