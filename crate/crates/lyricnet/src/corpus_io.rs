//! Corpus files: JSON lines and the `LNC1` binary layout.
//!
//! JSONL: line 1 is the header object tagged `"type": "header"`; every other
//! non-blank line is one track record (an optional `"type": "track"` tag is
//! accepted). Vectors are number arrays.
//!
//! Binary, all little-endian:
//!
//! ```text
//! "LNC1"
//! u32 schema_version, u32 embedding_dim, str embedding_source
//! u32 language count, str per language
//! u64 record count
//! per record:
//!   str track_id, u32 lyrics_char_count, str language
//!   u8 flags (1 = release year, 2 = embedding, 4 = stylometrics)
//!   i32 release_year (0 when absent), u8 popularity_raw
//!   f32 x 13 hl_audio, f32 x 209 ll_audio, f32 x 3 metadata
//!   f32 x embedding_dim lyric_embedding (flag 2), f32 x 6 stylo_text (flag 4)
//! ```
//!
//! `str` is a u32 byte length followed by UTF-8 bytes.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Cursor, Read, Write};
use std::path::Path;
use std::str::FromStr;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use lyricnet_core::data::{Corpus, CorpusHeader, TrackRecord, HL_DIM, LL_DIM, META_DIM, STYLO_DIM};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LNC1_MAGIC: &[u8; 4] = b"LNC1";

const FLAG_YEAR: u8 = 1;
const FLAG_EMBEDDING: u8 = 2;
const FLAG_STYLO: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Binary,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "binary" | "bin" | "lnc1" => Ok(CorpusFormat::Binary),
            _ => Err(Error::Usage(format!("unknown corpus format `{s}` (jsonl or binary)"))),
        }
    }
}

impl CorpusFormat {
    /// Binary when the file starts with the `LNC1` magic, JSONL otherwise.
    pub fn detect(path: &Path) -> Result<Self> {
        let mut head = [0u8; 4];
        let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
        let n = f.read(&mut head).map_err(|e| Error::io(path, e))?;
        Ok(if n == 4 && &head == LNC1_MAGIC {
            CorpusFormat::Binary
        } else {
            CorpusFormat::Jsonl
        })
    }
}

/// A record that failed validation and was skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadIssue {
    /// `line N` or `offset N`.
    pub location: String,
    pub track_id: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub issues: Vec<LoadIssue>,
}

/// Loads a corpus, detecting the format when `format` is `None`. Invalid records
/// abort the load in strict mode and are skipped (and listed) otherwise.
pub fn load_corpus(path: &Path, format: Option<CorpusFormat>, strict: bool) -> Result<LoadedCorpus> {
    let format = match format {
        Some(f) => f,
        None => CorpusFormat::detect(path)?,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file), Some(path), strict),
        CorpusFormat::Binary => {
            let mut bytes = Vec::new();
            BufReader::new(file)
                .read_to_end(&mut bytes)
                .map_err(|e| Error::io(path, e))?;
            read_binary(&bytes, Some(path), strict)
        }
    }
}

pub fn save_corpus(path: &Path, corpus: &Corpus, format: CorpusFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        CorpusFormat::Jsonl => write_jsonl(&mut w, corpus)?,
        CorpusFormat::Binary => write_binary(&mut w, corpus)?,
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    #[serde(rename = "type")]
    kind: String,
    #[serde(flatten)]
    header: CorpusHeader,
}

/// Accumulates records, applying validation and the strict-mode policy.
struct Collector<'a> {
    path: Option<&'a Path>,
    strict: bool,
    header: CorpusHeader,
    records: Vec<TrackRecord>,
    seen: BTreeSet<String>,
    issues: Vec<LoadIssue>,
}

impl<'a> Collector<'a> {
    fn new(path: Option<&'a Path>, strict: bool, header: CorpusHeader) -> Self {
        Self {
            path,
            strict,
            header,
            records: Vec::new(),
            seen: BTreeSet::new(),
            issues: Vec::new(),
        }
    }

    fn reject(&mut self, location: String, track_id: Option<String>, detail: String) -> Result<()> {
        if self.strict {
            return Err(Error::data(self.path, location, detail));
        }
        self.issues.push(LoadIssue {
            location,
            track_id,
            detail,
        });
        Ok(())
    }

    fn push(&mut self, location: String, record: TrackRecord) -> Result<()> {
        if let Err(e) = record.validate(&self.header) {
            return self.reject(location, Some(record.track_id), e.to_string());
        }
        if !self.seen.insert(record.track_id.clone()) {
            let detail = format!("duplicate track_id `{}`", record.track_id);
            return self.reject(location, Some(record.track_id), detail);
        }
        self.records.push(record);
        Ok(())
    }

    fn finish(self) -> LoadedCorpus {
        LoadedCorpus {
            corpus: Corpus {
                header: self.header,
                records: self.records,
            },
            issues: self.issues,
        }
    }
}

pub fn read_jsonl<R: BufRead>(reader: R, path: Option<&Path>, strict: bool) -> Result<LoadedCorpus> {
    let io = |e| match path {
        Some(p) => Error::io(p, e),
        None => Error::io(Path::new("<stream>"), e),
    };
    let mut lines = reader.lines().enumerate();
    let header = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::data(path, "line 1", "missing header line"));
        };
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let at = format!("line {}", i + 1);
        let parsed: HeaderLine =
            serde_json::from_str(&line).map_err(|e| Error::data(path, &at, format!("invalid header: {e}")))?;
        if parsed.kind != "header" {
            return Err(Error::data(
                path,
                at,
                "first line must be the header object (\"type\": \"header\")",
            ));
        }
        parsed
            .header
            .validate()
            .map_err(|e| Error::data(path, &at, e.to_string()))?;
        break parsed.header;
    };
    let mut out = Collector::new(path, strict, header);
    for (i, line) in lines {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let at = format!("line {}", i + 1);
        let mut value: serde_json::Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                out.reject(at, None, format!("invalid JSON: {e}"))?;
                continue;
            }
        };
        if let Some(obj) = value.as_object_mut() {
            match obj.remove("type") {
                None => {}
                Some(serde_json::Value::String(t)) if t == "track" => {}
                Some(t) => {
                    out.reject(at, None, format!("unexpected record type {t}"))?;
                    continue;
                }
            }
        }
        let id = value.get("track_id").and_then(|v| v.as_str()).map(String::from);
        match serde_json::from_value::<TrackRecord>(value) {
            Ok(r) => out.push(at, r)?,
            Err(e) => out.reject(at, id, e.to_string())?,
        }
    }
    Ok(out.finish())
}

pub fn write_jsonl<W: Write>(w: &mut W, corpus: &Corpus) -> Result<()> {
    let io = |e| Error::io(Path::new("<jsonl>"), e);
    let header = HeaderLine {
        kind: "header".into(),
        header: corpus.header.clone(),
    };
    serde_json::to_writer(&mut *w, &header).map_err(|e| io(e.into()))?;
    w.write_all(b"\n").map_err(io)?;
    for r in &corpus.records {
        serde_json::to_writer(&mut *w, r).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_u32::<LE>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn write_f32s<W: Write>(w: &mut W, v: &[f32]) -> std::io::Result<()> {
    for &x in v {
        w.write_f32::<LE>(x)?;
    }
    Ok(())
}

/// Writes the binary layout. The corpus must validate, since record blocks have fixed widths.
pub fn write_binary<W: Write>(w: &mut W, corpus: &Corpus) -> Result<()> {
    corpus.validate()?;
    let h = &corpus.header;
    let run = |w: &mut W| -> std::io::Result<()> {
        w.write_all(LNC1_MAGIC)?;
        w.write_u32::<LE>(h.schema_version)?;
        w.write_u32::<LE>(h.embedding_dim as u32)?;
        write_str(w, &h.embedding_source)?;
        w.write_u32::<LE>(h.language_whitelist.len() as u32)?;
        for l in &h.language_whitelist {
            write_str(w, l)?;
        }
        w.write_u64::<LE>(corpus.records.len() as u64)?;
        for r in &corpus.records {
            write_str(w, &r.track_id)?;
            w.write_u32::<LE>(r.lyrics_char_count)?;
            write_str(w, &r.language)?;
            let mut flags = 0u8;
            if r.release_year.is_some() {
                flags |= FLAG_YEAR;
            }
            if r.lyric_embedding.is_some() {
                flags |= FLAG_EMBEDDING;
            }
            if r.stylo_text.is_some() {
                flags |= FLAG_STYLO;
            }
            w.write_u8(flags)?;
            w.write_i32::<LE>(r.release_year.unwrap_or(0))?;
            w.write_u8(r.popularity_raw)?;
            write_f32s(w, &r.hl_audio)?;
            write_f32s(w, &r.ll_audio)?;
            write_f32s(w, &r.metadata)?;
            if let Some(e) = &r.lyric_embedding {
                write_f32s(w, e)?;
            }
            if let Some(s) = &r.stylo_text {
                write_f32s(w, s)?;
            }
        }
        Ok(())
    };
    run(w).map_err(|e| Error::io(Path::new("<binary>"), e))
}

fn read_str(c: &mut Cursor<&[u8]>) -> std::io::Result<String> {
    let n = c.read_u32::<LE>()? as usize;
    let remaining = c.get_ref().len() - c.position() as usize;
    if n > remaining {
        return Err(std::io::ErrorKind::UnexpectedEof.into());
    }
    let mut buf = vec![0u8; n];
    c.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

fn read_f32s(c: &mut Cursor<&[u8]>, n: usize) -> std::io::Result<Vec<f32>> {
    let remaining = c.get_ref().len() - c.position() as usize;
    if n.saturating_mul(4) > remaining {
        return Err(std::io::ErrorKind::UnexpectedEof.into());
    }
    let mut v = vec![0f32; n];
    c.read_f32_into::<LE>(&mut v)?;
    Ok(v)
}

pub fn read_binary(bytes: &[u8], path: Option<&Path>, strict: bool) -> Result<LoadedCorpus> {
    let mut c = Cursor::new(bytes);
    let fail = |c: &Cursor<&[u8]>, what: &str, e: std::io::Error| {
        Error::data(path, format!("offset {}", c.position()), format!("{what}: {e}"))
    };
    let mut magic = [0u8; 4];
    c.read_exact(&mut magic).map_err(|e| fail(&c, "magic", e))?;
    if &magic != LNC1_MAGIC {
        return Err(Error::data(path, "offset 0", "not an LNC1 corpus (bad magic)"));
    }
    let header = (|| -> std::io::Result<(CorpusHeader, u64)> {
        let schema_version = c.read_u32::<LE>()?;
        let embedding_dim = c.read_u32::<LE>()? as usize;
        let embedding_source = read_str(&mut c)?;
        let n_lang = c.read_u32::<LE>()?;
        let mut language_whitelist = Vec::new();
        for _ in 0..n_lang {
            language_whitelist.push(read_str(&mut c)?);
        }
        let count = c.read_u64::<LE>()?;
        Ok((
            CorpusHeader {
                schema_version,
                embedding_dim,
                embedding_source,
                language_whitelist,
            },
            count,
        ))
    })();
    let (header, count) = header.map_err(|e| fail(&c, "header", e))?;
    header
        .validate()
        .map_err(|e| Error::data(path, "offset 4", e.to_string()))?;
    let dim = header.embedding_dim;
    let mut out = Collector::new(path, strict, header);
    for _ in 0..count {
        let start = c.position();
        let rec = (|| -> std::io::Result<TrackRecord> {
            let track_id = read_str(&mut c)?;
            let lyrics_char_count = c.read_u32::<LE>()?;
            let language = read_str(&mut c)?;
            let flags = c.read_u8()?;
            let year = c.read_i32::<LE>()?;
            let popularity_raw = c.read_u8()?;
            Ok(TrackRecord {
                track_id,
                lyrics_char_count,
                language,
                release_year: (flags & FLAG_YEAR != 0).then_some(year),
                popularity_raw,
                hl_audio: read_f32s(&mut c, HL_DIM)?,
                ll_audio: read_f32s(&mut c, LL_DIM)?,
                metadata: read_f32s(&mut c, META_DIM)?,
                lyric_embedding: if flags & FLAG_EMBEDDING != 0 {
                    Some(read_f32s(&mut c, dim)?)
                } else {
                    None
                },
                stylo_text: if flags & FLAG_STYLO != 0 {
                    Some(read_f32s(&mut c, STYLO_DIM)?)
                } else {
                    None
                },
            })
        })();
        // a truncated block leaves no way to find the next record, so it is always fatal
        let rec = rec.map_err(|e| Error::data(path, format!("offset {start}"), format!("record: {e}")))?;
        out.push(format!("offset {start}"), rec)?;
    }
    if (c.position() as usize) != bytes.len() {
        return Err(Error::data(
            path,
            format!("offset {}", c.position()),
            "trailing bytes after the declared record count",
        ));
    }
    Ok(out.finish())
}
