//! Binary snapshot of the graph index.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   "ACMIDX1\0"                                   8 bytes
//! params  m, m0, ef_construction, ef_search (u32 each)  16
//!         level_multiplier (f64), rng_seed (u64)        16
//! count   u64                                           8
//! dim     u32                                           4
//! nodes   count x { level u32, label u32, dim x f32 }
//! links   per node, per level 0..=level:
//!           { len u32, len x id u32 }
//! ```
//!
//! Save/load round-trips are bit-exact. The entry point is not stored;
//! it is recomputed on load as the first node attaining the top level,
//! which is exactly how insertion chose it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::hnsw::{HnswIndex, HnswParams};
use crate::error::{Error, Result};

pub const INDEX_MAGIC: &[u8; 8] = b"ACMIDX1\0";

fn eof(what: &str) -> Error {
    Error::TruncatedFile(format!("index snapshot ended inside {what}"))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| eof(what))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| eof(what))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| eof(what))?;
    Ok(f64::from_le_bytes(b))
}

impl HnswIndex {
    /// Serialize the whole index.
    pub fn save_to(&self, w: &mut impl Write) -> Result<()> {
        let (params, dim, vectors, labels, links) = self.raw_parts();
        w.write_all(INDEX_MAGIC)?;
        w.write_all(&(params.m as u32).to_le_bytes())?;
        w.write_all(&(params.m0 as u32).to_le_bytes())?;
        w.write_all(&(params.ef_construction as u32).to_le_bytes())?;
        w.write_all(&(params.ef_search as u32).to_le_bytes())?;
        w.write_all(&params.level_multiplier.to_le_bytes())?;
        w.write_all(&params.rng_seed.to_le_bytes())?;
        w.write_all(&(labels.len() as u64).to_le_bytes())?;
        w.write_all(&(dim as u32).to_le_bytes())?;
        for id in 0..labels.len() {
            let level = links[id].len() - 1;
            w.write_all(&(level as u32).to_le_bytes())?;
            w.write_all(&labels[id].to_le_bytes())?;
            for &v in &vectors[id * dim..(id + 1) * dim] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        for levels in links {
            for list in levels {
                w.write_all(&(list.len() as u32).to_le_bytes())?;
                for &nb in list {
                    w.write_all(&nb.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn save_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.save_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Deserialize an index. Rejects bad magic, truncation, and
    /// adjacency that references missing nodes.
    pub fn load_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| eof("magic"))?;
        if &magic != INDEX_MAGIC {
            return Err(Error::BadMagic { expected: "ACMIDX1" });
        }
        let params = HnswParams {
            m: read_u32(r, "params")? as usize,
            m0: read_u32(r, "params")? as usize,
            ef_construction: read_u32(r, "params")? as usize,
            ef_search: read_u32(r, "params")? as usize,
            level_multiplier: read_f64(r, "params")?,
            rng_seed: read_u64(r, "params")?,
        };
        let count = read_u64(r, "header")? as usize;
        let dim = read_u32(r, "header")? as usize;
        if dim == 0 {
            return Err(Error::CorruptSnapshot("zero dimension".into()));
        }

        let mut vectors = vec![0f32; count * dim];
        let mut labels = Vec::with_capacity(count);
        let mut levels = Vec::with_capacity(count);
        let mut feat = vec![0u8; dim * 4];
        for id in 0..count {
            levels.push(read_u32(r, "node record")? as usize);
            labels.push(read_u32(r, "node record")?);
            r.read_exact(&mut feat).map_err(|_| eof("node feature"))?;
            for (j, chunk) in feat.chunks_exact(4).enumerate() {
                vectors[id * dim + j] = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            }
        }

        let mut links = Vec::with_capacity(count);
        for &level in &levels {
            let mut per_level = Vec::with_capacity(level + 1);
            for _ in 0..=level {
                let len = read_u32(r, "adjacency")? as usize;
                let mut list = Vec::with_capacity(len);
                for _ in 0..len {
                    list.push(read_u32(r, "adjacency")?);
                }
                per_level.push(list);
            }
            links.push(per_level);
        }

        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::CorruptSnapshot("trailing bytes after adjacency".into()));
        }

        HnswIndex::from_parts(params, dim, vectors, labels, links)
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::load_from(&mut r)
    }
}
