//! The `LNCKPT1` checkpoint container.
//!
//! ```text
//! "LNCKPT1", u32 format version
//! u32 manifest length, manifest JSON (UTF-8)
//! u32 tensor count
//! per tensor: u16 name length, name, u8 rank, u32 x rank dims, f32 x prod(dims)
//! 32-byte SHA-256 of every preceding byte
//! ```
//!
//! Everything is little-endian. The checksum is verified before anything else
//! is parsed, so a damaged file never yields a partial load.

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use lyricnet_core::autoenc::{AutoencoderSpec, EpochLoss, TrainedAutoencoder};
use lyricnet_core::data::{BlockScaler, Corpus, InputScalers, Modality, ScaleKind};
use lyricnet_core::eval::MetricsReport;
use lyricnet_core::fusion::{FusionEpoch, FusionNet, TrainedPipeline};
use lyricnet_core::{DenseMatrix, LayerSpec, NetworkParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::manifest::{canonical_json, corpus_fingerprint, RunManifest};

pub const CHECKPOINT_MAGIC: &[u8; 7] = b"LNCKPT1";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointContainer {
    pub manifest: serde_json::Value,
    pub tensors: Vec<NamedTensor>,
}

fn integrity(msg: impl Into<String>) -> Error {
    Error::Integrity(msg.into())
}

impl CheckpointContainer {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let manifest = canonical_json(&self.manifest);
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.write_u32::<LE>(FORMAT_VERSION).unwrap();
        out.write_u32::<LE>(manifest.len() as u32).unwrap();
        out.extend_from_slice(manifest.as_bytes());
        out.write_u32::<LE>(self.tensors.len() as u32).unwrap();
        for t in &self.tensors {
            let n: usize = t.dims.iter().product();
            if n != t.data.len() {
                return Err(Error::Usage(format!(
                    "tensor `{}` has {} values for dims {:?}",
                    t.name,
                    t.data.len(),
                    t.dims
                )));
            }
            out.write_u16::<LE>(t.name.len() as u16).unwrap();
            out.extend_from_slice(t.name.as_bytes());
            out.write_u8(t.dims.len() as u8).unwrap();
            for &d in &t.dims {
                out.write_u32::<LE>(d as u32).unwrap();
            }
            for &x in &t.data {
                out.write_f32::<LE>(x).unwrap();
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < CHECKPOINT_MAGIC.len() + 4 + CHECKSUM_LEN {
            return Err(integrity(format!("checkpoint truncated ({} bytes)", bytes.len())));
        }
        if &bytes[..CHECKPOINT_MAGIC.len()] != CHECKPOINT_MAGIC {
            return Err(integrity("not an LNCKPT1 checkpoint (bad magic)"));
        }
        let (body, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        let computed = Sha256::digest(body);
        if computed.as_slice() != stored {
            return Err(integrity(format!(
                "checksum mismatch: stored {}, computed {}",
                hex::encode(stored),
                hex::encode(computed)
            )));
        }
        let mut c = Cursor::new(&body[CHECKPOINT_MAGIC.len()..]);
        let eof = |e: std::io::Error| integrity(format!("malformed checkpoint body: {e}"));
        let version = c.read_u32::<LE>().map_err(eof)?;
        if version != FORMAT_VERSION {
            return Err(integrity(format!("unsupported checkpoint version {version}")));
        }
        let len = c.read_u32::<LE>().map_err(eof)? as usize;
        let mut manifest = vec![0u8; len.min(body.len())];
        c.read_exact(&mut manifest).map_err(eof)?;
        let manifest: serde_json::Value =
            serde_json::from_slice(&manifest).map_err(|e| integrity(format!("manifest is not JSON: {e}")))?;
        let count = c.read_u32::<LE>().map_err(eof)?;
        let mut tensors = Vec::new();
        for _ in 0..count {
            let n = c.read_u16::<LE>().map_err(eof)? as usize;
            let mut name = vec![0u8; n];
            c.read_exact(&mut name).map_err(eof)?;
            let name = String::from_utf8(name).map_err(|_| integrity("tensor name is not UTF-8"))?;
            let rank = c.read_u8().map_err(eof)? as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(c.read_u32::<LE>().map_err(eof)? as usize);
            }
            let size: usize = dims.iter().product();
            let remaining = c.get_ref().len() - c.position() as usize;
            if size.saturating_mul(4) > remaining {
                return Err(integrity(format!("tensor `{name}` runs past the end of the file")));
            }
            let mut data = vec![0f32; size];
            c.read_f32_into::<LE>(&mut data).map_err(eof)?;
            tensors.push(NamedTensor { name, dims, data });
        }
        if c.position() as usize != c.get_ref().len() {
            return Err(integrity("trailing bytes before the checksum"));
        }
        Ok(Self { manifest, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetLayout {
    pub layers: Vec<LayerSpec>,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeLayout {
    pub spec: AutoencoderSpec,
    pub net: NetLayout,
    pub loss_history: Vec<EpochLoss>,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerKinds {
    pub hl: ScaleKind,
    pub ll: ScaleKind,
    pub lyr: ScaleKind,
    pub meta: ScaleKind,
    pub stylo: ScaleKind,
}

/// Everything about a trained pipeline except the tensor values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelLayout {
    pub fold: usize,
    pub scalers: ScalerKinds,
    pub audio_ae: Option<AeLayout>,
    pub lyrics_ae: Option<AeLayout>,
    pub baseline_ae: Option<AeLayout>,
    pub regressor: NetLayout,
    pub regressor_dropout: f32,
    pub fusion_input_width: usize,
    pub history: Vec<FusionEpoch>,
}

/// The manifest block stored in a pipeline checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub run: RunManifest,
    pub run_hash: String,
    pub model: ModelLayout,
    /// Metrics logged when the checkpoint was written.
    pub metrics: Option<MetricsReport>,
}

fn net_layout(p: &NetworkParams) -> NetLayout {
    NetLayout {
        layers: p.layers().to_vec(),
        rng_seed: p.rng_seed(),
    }
}

fn ae_layout(ae: &TrainedAutoencoder) -> AeLayout {
    AeLayout {
        spec: ae.spec.clone(),
        net: net_layout(&ae.params),
        loss_history: ae.loss_history.clone(),
        fingerprint: ae.fingerprint.clone(),
    }
}

fn push_net(out: &mut Vec<NamedTensor>, prefix: &str, p: &NetworkParams) {
    for t in p.tensors() {
        out.push(NamedTensor {
            name: format!("{prefix}.{}", t.name()),
            dims: t.dims(),
            data: t.data.to_vec(),
        });
    }
}

pub fn pipeline_to_checkpoint(
    pipeline: &TrainedPipeline,
    run: &RunManifest,
    metrics: Option<&MetricsReport>,
) -> Result<CheckpointContainer> {
    let s = &pipeline.scalers;
    let layout = ModelLayout {
        fold: pipeline.fold,
        scalers: ScalerKinds {
            hl: s.hl.kind,
            ll: s.ll.kind,
            lyr: s.lyr.kind,
            meta: s.meta.kind,
            stylo: s.stylo.kind,
        },
        audio_ae: pipeline.audio_ae.as_ref().map(ae_layout),
        lyrics_ae: pipeline.lyrics_ae.as_ref().map(ae_layout),
        baseline_ae: pipeline.baseline_ae.as_ref().map(ae_layout),
        regressor: net_layout(&pipeline.regressor.params),
        regressor_dropout: pipeline.regressor.dropout,
        fusion_input_width: pipeline.regressor.input_dim(),
        history: pipeline.history.clone(),
    };
    let mut tensors = Vec::new();
    for (name, b) in s.blocks() {
        for (part, v) in [("offset", &b.offset), ("scale", &b.scale)] {
            tensors.push(NamedTensor {
                name: format!("scaler.{name}.{part}"),
                dims: vec![v.len()],
                data: v.clone(),
            });
        }
    }
    for (prefix, ae) in [
        ("audio_ae", &pipeline.audio_ae),
        ("lyrics_ae", &pipeline.lyrics_ae),
        ("baseline_ae", &pipeline.baseline_ae),
    ] {
        if let Some(ae) = ae {
            push_net(&mut tensors, prefix, &ae.params);
        }
    }
    push_net(&mut tensors, "regressor", &pipeline.regressor.params);
    let manifest = CheckpointManifest {
        run: run.clone(),
        run_hash: run.hash(),
        model: layout,
        metrics: metrics.cloned(),
    };
    Ok(CheckpointContainer {
        manifest: serde_json::to_value(&manifest).map_err(|e| Error::Usage(e.to_string()))?,
        tensors,
    })
}

/// Reads tensors back in the order they were written, checking every name and shape.
struct TensorStream<'a> {
    iter: std::slice::Iter<'a, NamedTensor>,
}

impl TensorStream<'_> {
    fn next(&mut self, name: &str, dims: &[usize]) -> Result<Vec<f32>> {
        let t = self
            .iter
            .next()
            .ok_or_else(|| integrity(format!("missing tensor `{name}`")))?;
        if t.name != name || t.dims != dims {
            return Err(integrity(format!(
                "expected tensor `{name}` {dims:?}, found `{}` {:?}",
                t.name, t.dims
            )));
        }
        Ok(t.data.clone())
    }

    fn net(&mut self, prefix: &str, layout: &NetLayout) -> Result<NetworkParams> {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (i, l) in layout.layers.iter().enumerate() {
            if l.tied_to.is_none() {
                let w = self.next(&format!("{prefix}.layer{i}.weight"), &[l.in_dim, l.out_dim])?;
                weights.push(Some(DenseMatrix::from_vec(l.in_dim, l.out_dim, w)?));
            } else {
                weights.push(None);
            }
            biases.push(self.next(&format!("{prefix}.layer{i}.bias"), &[l.out_dim])?);
        }
        NetworkParams::from_parts(layout.layers.clone(), weights, biases, layout.rng_seed)
            .map_err(|e| integrity(format!("{prefix}: {e}")))
    }

    fn ae(&mut self, prefix: &str, layout: &Option<AeLayout>) -> Result<Option<TrainedAutoencoder>> {
        let Some(l) = layout else { return Ok(None) };
        Ok(Some(TrainedAutoencoder {
            spec: l.spec.clone(),
            params: self.net(prefix, &l.net)?,
            loss_history: l.loss_history.clone(),
            fingerprint: l.fingerprint.clone(),
        }))
    }
}

pub fn checkpoint_manifest(c: &CheckpointContainer) -> Result<CheckpointManifest> {
    let m: CheckpointManifest =
        serde_json::from_value(c.manifest.clone()).map_err(|e| integrity(format!("checkpoint manifest: {e}")))?;
    if m.run.hash() != m.run_hash {
        return Err(integrity(format!(
            "manifest hash mismatch: recorded {}, computed {}",
            m.run_hash,
            m.run.hash()
        )));
    }
    Ok(m)
}

pub fn checkpoint_to_pipeline(c: &CheckpointContainer) -> Result<(TrainedPipeline, CheckpointManifest)> {
    let m = checkpoint_manifest(c)?;
    let mut ts = TensorStream { iter: c.tensors.iter() };
    let mut scaler = |name: &str, kind: ScaleKind| -> Result<BlockScaler> {
        let width = c
            .tensors
            .iter()
            .find(|t| t.name == format!("scaler.{name}.offset"))
            .map_or(0, |t| t.data.len());
        Ok(BlockScaler {
            kind,
            offset: ts.next(&format!("scaler.{name}.offset"), &[width])?,
            scale: ts.next(&format!("scaler.{name}.scale"), &[width])?,
        })
    };
    let k = &m.model.scalers;
    let scalers = InputScalers {
        hl: scaler("hl", k.hl)?,
        ll: scaler("ll", k.ll)?,
        lyr: scaler("lyr", k.lyr)?,
        meta: scaler("meta", k.meta)?,
        stylo: scaler("stylo", k.stylo)?,
    };
    let audio_ae = ts.ae("audio_ae", &m.model.audio_ae)?;
    let lyrics_ae = ts.ae("lyrics_ae", &m.model.lyrics_ae)?;
    let baseline_ae = ts.ae("baseline_ae", &m.model.baseline_ae)?;
    let regressor = FusionNet {
        params: ts.net("regressor", &m.model.regressor)?,
        dropout: m.model.regressor_dropout,
    };
    if ts.iter.next().is_some() {
        return Err(integrity("unexpected extra tensors"));
    }
    let pipeline = TrainedPipeline {
        config: m.run.config.clone(),
        fold: m.model.fold,
        scalers,
        audio_ae,
        lyrics_ae,
        baseline_ae,
        regressor,
        history: m.model.history.clone(),
    };
    Ok((pipeline, m))
}

/// Refuses a corpus whose content or embedding width differs from the one the
/// checkpoint was trained on. `allow_other_corpus` relaxes the content check.
pub fn check_corpus(m: &CheckpointManifest, corpus: &Corpus, allow_other_corpus: bool) -> Result<()> {
    let needs_lr = m.run.config.required_blocks().contains(Modality::Lr);
    if needs_lr && corpus.header.embedding_dim != m.run.embedding_dim {
        return Err(integrity(format!(
            "checkpoint expects embedding_dim {}, corpus declares {}",
            m.run.embedding_dim, corpus.header.embedding_dim
        )));
    }
    if !allow_other_corpus {
        let fp = corpus_fingerprint(corpus);
        if fp != m.run.corpus_fingerprint {
            return Err(integrity(format!(
                "corpus fingerprint mismatch: checkpoint {}, corpus {fp}",
                m.run.corpus_fingerprint
            )));
        }
    }
    Ok(())
}
