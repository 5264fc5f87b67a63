use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// High-level audio descriptors, in order: danceability, energy, key,
/// loudness, mode, speechiness, acousticness, instrumentalness, liveness,
/// valence, tempo, duration, time signature.
pub const HL_DIM: usize = 13;
/// Low-level signal aggregates (mel, MFCC, tonnetz, chroma, spectral stats, ZCR).
pub const LL_DIM: usize = 209;
/// Artist followers, artist popularity, available-markets count.
pub const META_DIM: usize = 3;
/// Legacy stylometric lyric statistics, only used by the baseline model.
pub const STYLO_DIM: usize = 6;
/// Index of artist popularity within the metadata block.
pub const META_ARTIST_POPULARITY: usize = 1;

pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_LANGUAGES: [&str; 5] = ["en", "es", "pt", "fr", "de"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub schema_version: u32,
    /// Width of `lyric_embedding`; 0 when the corpus carries no embeddings.
    pub embedding_dim: usize,
    pub embedding_source: String,
    pub language_whitelist: Vec<String>,
}

impl Default for CorpusHeader {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            embedding_dim: 0,
            embedding_source: String::new(),
            language_whitelist: DEFAULT_LANGUAGES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl CorpusHeader {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub track_id: String,
    pub lyrics_char_count: u32,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub release_year: Option<i32>,
    pub popularity_raw: u8,
    pub hl_audio: Vec<f32>,
    pub ll_audio: Vec<f32>,
    pub metadata: Vec<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyric_embedding: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stylo_text: Option<Vec<f32>>,
}

fn check_block(id: &str, field: &'static str, v: &[f32], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Validation {
            record: id.into(),
            field,
            detail: format!("has length {}, expected {expected}", v.len()),
        });
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Validation {
            record: id.into(),
            field,
            detail: format!("has a non-finite value at index {i}"),
        });
    }
    Ok(())
}

impl TrackRecord {
    pub fn validate(&self, header: &CorpusHeader) -> Result<()> {
        let id = self.track_id.as_str();
        if id.is_empty() {
            return Err(Error::Validation {
                record: "<empty>".into(),
                field: "track_id",
                detail: "is empty".into(),
            });
        }
        if self.popularity_raw > 100 {
            return Err(Error::Validation {
                record: id.into(),
                field: "popularity_raw",
                detail: format!("{} outside [0, 100]", self.popularity_raw),
            });
        }
        check_block(id, "hl_audio", &self.hl_audio, HL_DIM)?;
        check_block(id, "ll_audio", &self.ll_audio, LL_DIM)?;
        check_block(id, "metadata", &self.metadata, META_DIM)?;
        if let Some(e) = &self.lyric_embedding {
            if header.embedding_dim == 0 {
                return Err(Error::Validation {
                    record: id.into(),
                    field: "lyric_embedding",
                    detail: "present but the corpus header declares no embedding dimension".into(),
                });
            }
            check_block(id, "lyric_embedding", e, header.embedding_dim)?;
        }
        if let Some(s) = &self.stylo_text {
            check_block(id, "stylo_text", s, STYLO_DIM)?;
        }
        Ok(())
    }

    pub fn artist_popularity(&self) -> f32 {
        self.metadata[META_ARTIST_POPULARITY]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub header: CorpusHeader,
    pub records: Vec<TrackRecord>,
}

impl Corpus {
    pub fn validate(&self) -> Result<()> {
        self.header.validate()?;
        let mut seen = alloc::collections::BTreeSet::new();
        for r in &self.records {
            r.validate(&self.header)?;
            if !seen.insert(r.track_id.as_str()) {
                return Err(Error::Validation {
                    record: r.track_id.clone(),
                    field: "track_id",
                    detail: "is duplicated".into(),
                });
            }
        }
        Ok(())
    }

    pub fn has_embeddings(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.lyric_embedding.is_some())
    }

    pub fn has_stylometrics(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.stylo_text.is_some())
    }
}

/// Maps a 0-100 popularity score onto `[0, 1]`.
pub fn normalize_popularity(raw: f32) -> Result<f32> {
    if !(0.0..=100.0).contains(&raw) {
        return Err(Error::InvalidArgument(format!("popularity {raw} outside [0, 100]")));
    }
    Ok(raw / 100.0)
}
