//! Run manifests and content fingerprints.

use std::collections::BTreeMap;

use lyricnet_core::data::{Corpus, SplitPlan};
use lyricnet_core::fusion::{ModelKind, PipelineConfig};
use lyricnet_core::seed;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Interpretation choices baked into every run, recorded verbatim in manifests.
pub const INTERPRETATION_NOTES: &[&str] = &[
    "popularity normalised as raw / 100; all metrics on the [0, 1] scale",
    "stratification: equal-width bins on normalised popularity; the 20% test set is carved before the k folds",
    "lyrics kept when 100 <= characters <= 7000 (both bounds inclusive) and language in the header whitelist",
    "input scaling fitted on each fold's training rows, unclipped: min-max for HH, LL, M and stylometrics, z-score for LR; constant columns map to 0",
    "baseline inputs normalised exactly like the fusion pipeline",
    "all layer schedules use floor division",
    "lyrics autoencoder: tied weights with untied biases and an identity reconstruction output",
    "autoencoders are refit on the training rows of every fold and frozen before regressor training",
    "baseline head: three hidden layers [b, b/2, b/4] then one sigmoid unit, b = autoencoder bottleneck",
    "reported test metrics come from the fold model with the lower-median validation MAE",
    "ReLU biases start at 0.1; fusion hidden widths are floored at fusion_min_width",
    "early stopping restores the best parameters seen",
    "component seeds are root XOR the first 8 little-endian bytes of SHA-256(label)",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: PipelineConfig,
    pub corpus_fingerprint: String,
    pub n_records: usize,
    pub embedding_dim: usize,
    pub embedding_source: String,
    pub split_fingerprint: String,
    /// Root seed and every derived component seed, by label.
    pub seeds: BTreeMap<String, u64>,
    pub interpretation_notes: Vec<String>,
}

impl RunManifest {
    pub fn new(config: &PipelineConfig, corpus: &Corpus, split: &SplitPlan) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            config: config.clone(),
            corpus_fingerprint: corpus_fingerprint(corpus),
            n_records: corpus.records.len(),
            embedding_dim: corpus.header.embedding_dim,
            embedding_source: corpus.header.embedding_source.clone(),
            split_fingerprint: split.fingerprint(),
            seeds: component_seeds(config),
            interpretation_notes: INTERPRETATION_NOTES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// SHA-256 of the canonical JSON form; independent of field order.
    pub fn hash(&self) -> String {
        canonical_hash(self)
    }

    /// Short prefix printed next to emitted numbers.
    pub fn short_hash(&self) -> String {
        self.hash()[..12].to_string()
    }
}

pub fn component_seeds(config: &PipelineConfig) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    out.insert("root".to_string(), config.seed);
    let labels: &[&str] = match config.model {
        ModelKind::Full => &["audio_ae", "lyrics_ae", "fusion", "fusion_train"],
        ModelKind::Baseline => &["baseline_ae", "baseline_head", "fusion_train"],
    };
    out.insert("split".to_string(), config.seed);
    for fold in 0..config.folds() {
        for l in labels {
            let label = format!("{l}/fold{fold}");
            out.insert(label.clone(), seed::derive(config.seed, &label));
        }
    }
    out
}

/// Rewrites every object with keys in sorted order.
pub fn canonicalize(v: &Value) -> Value {
    match v {
        Value::Object(m) => {
            let sorted: BTreeMap<&String, Value> = m.iter().map(|(k, v)| (k, canonicalize(v))).collect();
            Value::Object(sorted.into_iter().map(|(k, v)| (k.clone(), v)).collect())
        }
        Value::Array(a) => Value::Array(a.iter().map(canonicalize).collect()),
        other => other.clone(),
    }
}

pub fn canonical_json<T: Serialize + ?Sized>(v: &T) -> String {
    let value = serde_json::to_value(v).expect("serialisable");
    serde_json::to_string(&canonicalize(&value)).expect("serialisable")
}

pub fn canonical_hash<T: Serialize + ?Sized>(v: &T) -> String {
    hex::encode(Sha256::digest(canonical_json(v).as_bytes()))
}

/// Content hash of the header and the records in order.
pub fn corpus_fingerprint(corpus: &Corpus) -> String {
    let mut h = Sha256::new();
    h.update(canonical_json(&corpus.header));
    for r in &corpus.records {
        h.update(b"\n");
        h.update(canonical_json(r));
    }
    hex::encode(h.finalize())
}
