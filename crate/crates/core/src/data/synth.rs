//! Synthetic corpora with a planted popularity signal.
//!
//! Each modality block is driven by its own pair of standard-normal latents
//! `(z0, z1)`. The normalised label is
//!
//! ```text
//! y = label_mean + label_scale * sum_m w_m * (0.8 z0_m + 0.6 (z1_m^2 - 1) / sqrt 2) + noise_std * eps
//! ```
//!
//! so every block carries an independent, partly nonlinear share of the
//! signal with unit variance before weighting. Low-level audio and lyric
//! embeddings additionally mix in nuisance latents that carry no signal.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::record::{Corpus, CorpusHeader, TrackRecord, HL_DIM, LL_DIM, META_DIM, STYLO_DIM};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedSignal {
    pub hh: f32,
    pub ll: f32,
    pub lr: f32,
    pub m: f32,
}

impl PlantedSignal {
    pub const ZERO: PlantedSignal = PlantedSignal {
        hh: 0.0,
        ll: 0.0,
        lr: 0.0,
        m: 0.0,
    };
}

impl Default for PlantedSignal {
    /// Metadata strongest, then lyrics, low-level audio, and high-level audio weakest.
    fn default() -> Self {
        Self {
            hh: 0.35,
            ll: 0.5,
            lr: 0.6,
            m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    /// 0 produces a corpus without lyric embeddings.
    pub embedding_dim: usize,
    pub signal: PlantedSignal,
    pub label_mean: f32,
    pub label_scale: f32,
    /// Standard deviation of the additive label noise on the normalised scale.
    pub noise_std: f32,
    pub with_stylometrics: bool,
}

impl SynthConfig {
    pub fn new(n: usize, seed: u64, embedding_dim: usize) -> Self {
        Self {
            n,
            seed,
            embedding_dim,
            signal: PlantedSignal::default(),
            label_mean: 0.41,
            label_scale: 0.12,
            noise_std: 0.05,
            with_stylometrics: false,
        }
    }
}

const LL_NUISANCE: usize = 3;
const LR_NUISANCE: usize = 3;
const LANGUAGES: [(&str, f32); 5] = [("en", 0.69), ("es", 0.12), ("pt", 0.08), ("fr", 0.06), ("de", 0.05)];

fn normal(rng: &mut seed::Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Unit-variance, zero-mean planted response of one modality.
fn response(z: [f64; 2]) -> f64 {
    0.8 * z[0] + 0.6 * (z[1] * z[1] - 1.0) / core::f64::consts::SQRT_2
}

fn mixing(rng: &mut seed::Rng, rows: usize, cols: usize) -> Vec<f64> {
    let s = 1.0 / libm::sqrt(cols as f64);
    (0..rows * cols).map(|_| normal(rng) * s).collect()
}

fn mix(matrix: &[f64], latents: &[f64], row: usize) -> f64 {
    let c = latents.len();
    matrix[row * c..(row + 1) * c]
        .iter()
        .zip(latents)
        .map(|(a, z)| a * z)
        .sum()
}

/// Generates a deterministic corpus. Every record passes the cleaning rules.
pub fn synth_dataset(cfg: &SynthConfig) -> Corpus {
    let mut mix_rng = seed::rng(seed::derive(cfg.seed, "synth/mixing"));
    let hh_mix = mixing(&mut mix_rng, HL_DIM, 2);
    let ll_mix = mixing(&mut mix_rng, LL_DIM, 2 + LL_NUISANCE);
    let lr_mix = mixing(&mut mix_rng, cfg.embedding_dim, 2 + LR_NUISANCE);
    // plausible ranges: danceability ... time signature
    const HL_CENTER: [f64; HL_DIM] = [0.6, 0.65, 5.0, -7.0, 0.6, 0.1, 0.3, 0.05, 0.18, 0.5, 120.0, 210.0, 4.0];
    const HL_SPREAD: [f64; HL_DIM] = [0.15, 0.18, 3.0, 3.0, 0.3, 0.08, 0.25, 0.1, 0.1, 0.2, 25.0, 45.0, 0.3];

    let mut rng = seed::rng(seed::derive(cfg.seed, "synth/records"));
    let w = cfg.signal;
    let mut records = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let z = |rng: &mut seed::Rng| [normal(rng), normal(rng)];
        let (z_hh, z_ll, z_lr, z_m) = (z(&mut rng), z(&mut rng), z(&mut rng), z(&mut rng));
        let score = w.hh as f64 * response(z_hh)
            + w.ll as f64 * response(z_ll)
            + w.lr as f64 * response(z_lr)
            + w.m as f64 * response(z_m);
        let y = cfg.label_mean as f64 + cfg.label_scale as f64 * score + cfg.noise_std as f64 * normal(&mut rng);
        let popularity_raw = libm::round(100.0 * y).clamp(0.0, 100.0) as u8;

        let hl_audio = (0..HL_DIM)
            .map(|j| (HL_CENTER[j] + HL_SPREAD[j] * (mix(&hh_mix, &z_hh, j) + 0.2 * normal(&mut rng))) as f32)
            .collect();

        let mut ll_lat = [0.0; 2 + LL_NUISANCE];
        ll_lat[..2].copy_from_slice(&z_ll);
        for v in &mut ll_lat[2..] {
            *v = normal(&mut rng);
        }
        let ll_audio = (0..LL_DIM)
            .map(|j| (0.5 + 0.15 * mix(&ll_mix, &ll_lat, j) + 0.01 * normal(&mut rng)) as f32)
            .collect();

        let lyric_embedding = (cfg.embedding_dim > 0).then(|| {
            let mut lat = [0.0; 2 + LR_NUISANCE];
            lat[..2].copy_from_slice(&z_lr);
            for v in &mut lat[2..] {
                *v = normal(&mut rng);
            }
            (0..cfg.embedding_dim)
                .map(|j| (mix(&lr_mix, &lat, j) + 0.05 * normal(&mut rng)) as f32)
                .collect()
        });

        let followers = libm::exp(9.0 + 0.7 * z_m[0] + 0.7 * normal(&mut rng));
        let artist_pop = (50.0 + 18.0 * z_m[0]).clamp(0.0, 100.0);
        let markets = libm::round(90.0 + 40.0 * z_m[1]).clamp(0.0, 185.0);
        let metadata: Vec<f32> = [followers, artist_pop, markets].iter().map(|&v| v as f32).collect();
        debug_assert_eq!(metadata.len(), META_DIM);

        let stylo_text = cfg
            .with_stylometrics
            .then(|| (0..STYLO_DIM).map(|_| rng.random_range(0.0f32..1.0)).collect());

        let u: f32 = rng.random();
        let mut acc = 0.0;
        let language = LANGUAGES
            .iter()
            .find(|(_, p)| {
                acc += p;
                u < acc
            })
            .map_or("en", |(l, _)| l)
            .to_string();

        records.push(TrackRecord {
            track_id: format!("trk{i:07}"),
            lyrics_char_count: rng.random_range(150..=6000),
            language,
            release_year: Some(rng.random_range(1960..=2020)),
            popularity_raw,
            hl_audio,
            ll_audio,
            metadata,
            lyric_embedding,
            stylo_text,
        });
    }

    Corpus {
        header: CorpusHeader {
            embedding_dim: cfg.embedding_dim,
            embedding_source: if cfg.embedding_dim > 0 {
                format!("synthetic:planted-latent:seed={}", cfg.seed)
            } else {
                String::new()
            },
            ..CorpusHeader::default()
        },
        records,
    }
}
