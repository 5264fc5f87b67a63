//! Embedding sidecars (`LEMB`) and token-matrix files (`LTOK`), both little-endian.
//!
//! `LEMB`: magic, u32 embedding_dim, u32 count, then per entry a u16 id length,
//! the id bytes and `embedding_dim` f32 values.
//!
//! `LTOK`: magic, u32 tokens, u32 dim, u32 cls index (`0xFFFF_FFFF` for none),
//! then `tokens * dim` f32 values row-major.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use lyricnet_core::data::Corpus;
use lyricnet_core::pooling::TokenEmbeddingMatrix;
use lyricnet_core::DenseMatrix;

use crate::error::{Error, Result};

pub const LEMB_MAGIC: &[u8; 4] = b"LEMB";
pub const LTOK_MAGIC: &[u8; 4] = b"LTOK";
pub const NO_CLS: u32 = 0xFFFF_FFFF;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSidecar {
    pub dim: usize,
    /// In file order.
    pub entries: Vec<(String, Vec<f32>)>,
}

impl EmbeddingSidecar {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(12 + self.entries.len() * (8 + 4 * self.dim));
        out.extend_from_slice(LEMB_MAGIC);
        let n = u32::try_from(self.entries.len()).map_err(|_| Error::Usage("too many embeddings".into()))?;
        out.write_u32::<LE>(self.dim as u32).unwrap();
        out.write_u32::<LE>(n).unwrap();
        for (id, v) in &self.entries {
            let len = u16::try_from(id.len())
                .map_err(|_| Error::Usage(format!("track id longer than {} bytes", u16::MAX)))?;
            if v.len() != self.dim {
                return Err(Error::Usage(format!(
                    "embedding for `{id}` has {} values, sidecar dimension is {}",
                    v.len(),
                    self.dim
                )));
            }
            out.write_u16::<LE>(len).unwrap();
            out.extend_from_slice(id.as_bytes());
            for &x in v {
                out.write_f32::<LE>(x).unwrap();
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: Option<&Path>) -> Result<Self> {
        let mut c = Cursor::new(bytes);
        let at = |c: &Cursor<&[u8]>| format!("offset {}", c.position());
        let bad = |c: &Cursor<&[u8]>, e: std::io::Error| Error::data(path, at(c), format!("truncated sidecar: {e}"));
        let mut magic = [0u8; 4];
        c.read_exact(&mut magic).map_err(|e| bad(&c, e))?;
        if &magic != LEMB_MAGIC {
            return Err(Error::data(path, "offset 0", "not an LEMB sidecar (bad magic)"));
        }
        let dim = c.read_u32::<LE>().map_err(|e| bad(&c, e))? as usize;
        let count = c.read_u32::<LE>().map_err(|e| bad(&c, e))? as usize;
        if dim == 0 && count > 0 {
            return Err(Error::data(path, "offset 4", "embedding dimension is 0"));
        }
        let mut entries = Vec::with_capacity(count.min(1 << 20));
        let mut seen = BTreeSet::new();
        for _ in 0..count {
            let start = at(&c);
            let n = c.read_u16::<LE>().map_err(|e| bad(&c, e))? as usize;
            let mut id = vec![0u8; n];
            c.read_exact(&mut id).map_err(|e| bad(&c, e))?;
            let id = String::from_utf8(id).map_err(|_| Error::data(path, &start, "track id is not UTF-8"))?;
            let remaining = bytes.len() - c.position() as usize;
            if remaining < dim * 4 {
                return Err(Error::data(
                    path,
                    at(&c),
                    "truncated sidecar: embedding values cut short",
                ));
            }
            let mut v = vec![0f32; dim];
            c.read_f32_into::<LE>(&mut v).map_err(|e| bad(&c, e))?;
            if !seen.insert(id.clone()) {
                return Err(Error::data(path, start, format!("duplicate track id `{id}`")));
            }
            entries.push((id, v));
        }
        if c.position() as usize != bytes.len() {
            return Err(Error::data(
                path,
                at(&c),
                "trailing bytes after the declared entry count",
            ));
        }
        Ok(Self { dim, entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, Some(path))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    /// Sidecar holding the embeddings already attached to a corpus.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self {
            dim: corpus.header.embedding_dim,
            entries: corpus
                .records
                .iter()
                .filter_map(|r| r.lyric_embedding.clone().map(|e| (r.track_id.clone(), e)))
                .collect(),
        }
    }
}

/// Sets every record's lyric embedding from the sidecar and records the source label
/// in the header. Every record must have an entry; extra sidecar entries are ignored.
pub fn attach_embeddings(corpus: &mut Corpus, sidecar: &EmbeddingSidecar, source: &str) -> Result<()> {
    let mut by_id: BTreeMap<&str, &Vec<f32>> = BTreeMap::new();
    for (id, v) in &sidecar.entries {
        by_id.insert(id, v);
    }
    let missing: Vec<&str> = corpus
        .records
        .iter()
        .map(|r| r.track_id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::data(
            None,
            "sidecar",
            format!("{} tracks have no embedding (first: `{}`)", missing.len(), missing[0]),
        ));
    }
    corpus.header.embedding_dim = sidecar.dim;
    corpus.header.embedding_source = source.to_string();
    for r in &mut corpus.records {
        r.lyric_embedding = Some(by_id[r.track_id.as_str()].clone());
    }
    Ok(())
}

pub fn ltok_to_bytes(m: &TokenEmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * m.data().as_slice().len());
    out.extend_from_slice(LTOK_MAGIC);
    out.write_u32::<LE>(m.tokens() as u32).unwrap();
    out.write_u32::<LE>(m.dim() as u32).unwrap();
    out.write_u32::<LE>(m.cls_index().map_or(NO_CLS, |i| i as u32)).unwrap();
    for &x in m.data().as_slice() {
        out.write_f32::<LE>(x).unwrap();
    }
    out
}

pub fn ltok_from_bytes(bytes: &[u8], path: Option<&Path>) -> Result<TokenEmbeddingMatrix> {
    let mut c = Cursor::new(bytes);
    let bad = |e: std::io::Error| Error::data(path, "offset 0", format!("truncated token matrix: {e}"));
    let mut magic = [0u8; 4];
    c.read_exact(&mut magic).map_err(bad)?;
    if &magic != LTOK_MAGIC {
        return Err(Error::data(path, "offset 0", "not an LTOK file (bad magic)"));
    }
    let t = c.read_u32::<LE>().map_err(bad)? as usize;
    let d = c.read_u32::<LE>().map_err(bad)? as usize;
    let cls = c.read_u32::<LE>().map_err(bad)?;
    let n = t
        .checked_mul(d)
        .filter(|&n| n.checked_mul(4).is_some_and(|b| b == bytes.len() - 16))
        .ok_or_else(|| {
            Error::data(
                path,
                "offset 16",
                format!("expected {t}x{d} f32 values, file size disagrees"),
            )
        })?;
    let mut data = vec![0f32; n];
    c.read_f32_into::<LE>(&mut data).map_err(bad)?;
    let data = DenseMatrix::from_vec(t, d, data)?;
    let cls = (cls != NO_CLS).then_some(cls as usize);
    Ok(TokenEmbeddingMatrix::new(data, cls)?)
}

pub fn read_ltok(path: &Path) -> Result<TokenEmbeddingMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ltok_from_bytes(&bytes, Some(path))
}

pub fn write_ltok(path: &Path, m: &TokenEmbeddingMatrix) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&ltok_to_bytes(m)).map_err(|e| Error::io(path, e))
}
