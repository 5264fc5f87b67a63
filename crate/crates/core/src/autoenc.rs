//! Feature-compression autoencoders.
//!
//! Two schedules are provided: the audio autoencoder (untied, `d/2, d/3`
//! encoder, `d/5` bottleneck, ReLU hidden layers, sigmoid reconstruction),
//! which is also the single autoencoder of the baseline model, and the lyrics
//! autoencoder (tied weights, `d/2, d/4, d/8` encoder, `d/12` or `d/16`
//! bottleneck, identity reconstruction). All widths use floor division.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::activation::Activation;
use crate::adam::AdamState;
use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::matrix::DenseMatrix;
use crate::network::{self, LayerSpec, NetworkParams};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderSpec {
    pub input_dim: usize,
    pub encoder_dims: Vec<usize>,
    pub bottleneck_dim: usize,
    /// Activation of every encoder layer (bottleneck included) and every
    /// decoder layer except the reconstruction.
    pub activation: Activation,
    pub output_activation: Activation,
    pub tied: bool,
    pub loss: Loss,
}

impl AutoencoderSpec {
    pub fn validate(&self) -> Result<()> {
        let mut prev = self.input_dim;
        for &d in self.encoder_dims.iter().chain(core::iter::once(&self.bottleneck_dim)) {
            if d == 0 || d >= prev {
                return Err(Error::InvalidArgument(format!(
                    "autoencoder widths must strictly decrease to a non-zero bottleneck: {} -> {:?} -> {}",
                    self.input_dim, self.encoder_dims, self.bottleneck_dim
                )));
            }
            prev = d;
        }
        Ok(())
    }

    /// Input width followed by every encoder width down to the bottleneck.
    fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.encoder_dims.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.encoder_dims);
        w.push(self.bottleneck_dim);
        w
    }

    /// Number of layers from the input up to and including the bottleneck.
    pub fn encoder_layers(&self) -> usize {
        self.encoder_dims.len() + 1
    }

    /// Decoder output widths, bottleneck side first.
    pub fn decoder_dims(&self) -> Vec<usize> {
        let mut w = self.widths();
        w.pop();
        w.reverse();
        w
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        let widths = self.widths();
        let n_enc = self.encoder_layers();
        let mut layers = Vec::with_capacity(2 * n_enc);
        for i in 0..n_enc {
            layers.push(LayerSpec::new(widths[i], widths[i + 1], self.activation));
        }
        for j in 0..n_enc {
            let (inp, out) = (widths[n_enc - j], widths[n_enc - j - 1]);
            let act = if j + 1 == n_enc {
                self.output_activation
            } else {
                self.activation
            };
            layers.push(if self.tied {
                LayerSpec::tied(inp, out, act, n_enc - 1 - j)
            } else {
                LayerSpec::new(inp, out, act)
            });
        }
        layers
    }

    pub fn param_count(&self) -> usize {
        network::param_count(&self.layers())
    }
}

/// Audio compression schedule; also used for the baseline's combined-feature autoencoder.
pub fn build_audio_ae(d: usize) -> Result<AutoencoderSpec> {
    let spec = AutoencoderSpec {
        input_dim: d,
        encoder_dims: alloc::vec![d / 2, d / 3],
        bottleneck_dim: d / 5,
        activation: Activation::Relu,
        output_activation: Activation::Sigmoid,
        tied: false,
        loss: Loss::Mse,
    };
    spec.validate().map_err(|_| {
        Error::InvalidArgument(format!("input dimension {d} is too small for a d/2, d/3, d/5 schedule"))
    })?;
    Ok(spec)
}

pub fn build_lyrics_ae(
    d: usize,
    bottleneck_divisor: usize,
    activation: Activation,
    loss: Loss,
) -> Result<AutoencoderSpec> {
    if bottleneck_divisor != 12 && bottleneck_divisor != 16 {
        return Err(Error::InvalidArgument(format!(
            "bottleneck divisor must be 12 or 16, got {bottleneck_divisor}"
        )));
    }
    if d < 32 {
        return Err(Error::InvalidArgument(format!("embedding dimension {d} is below 32")));
    }
    let spec = AutoencoderSpec {
        input_dim: d,
        encoder_dims: alloc::vec![d / 2, d / 4, d / 8],
        bottleneck_dim: d / bottleneck_divisor,
        activation,
        output_activation: Activation::Identity,
        tied: true,
        loss,
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub val_fraction: f64,
    /// Stop after this many epochs without validation improvement and keep
    /// the best parameters seen.
    pub patience: Option<usize>,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 1e-3,
            batch_size: 128,
            seed: 0,
            val_fraction: 0.1,
            patience: Some(10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    /// 0 is the untrained network.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedAutoencoder {
    pub spec: AutoencoderSpec,
    pub params: NetworkParams,
    pub loss_history: Vec<EpochLoss>,
    /// Hash of the spec and training configuration.
    pub fingerprint: String,
}

pub(crate) fn config_fingerprint(parts: &[&dyn core::fmt::Debug]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(format!("{p:?}\n"));
    }
    crate::data::hex_digest(&h.finalize())
}

/// Splits `0..n` into (train, validation) index lists.
pub(crate) fn holdout(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let mut n_val = libm::round(n as f64 * val_fraction.clamp(0.0, 1.0)) as usize;
    if n_val >= n {
        n_val = n.saturating_sub(1);
    }
    let val = idx.split_off(n - n_val);
    (idx, val)
}

pub(crate) fn mean_loss(params: &NetworkParams, loss: &Loss, x: &DenseMatrix, rows: &[usize]) -> Result<f64> {
    if rows.is_empty() {
        return Ok(0.0);
    }
    // chunked to bound memory on large corpora
    let mut total = 0.0;
    for chunk in rows.chunks(1024) {
        let batch = x.select_rows(chunk);
        let out = params.predict(&batch)?;
        total += loss.evaluate(&out, &batch)?.value * chunk.len() as f64;
    }
    Ok(total / rows.len() as f64)
}

pub fn train_autoencoder(
    spec: &AutoencoderSpec,
    features: &DenseMatrix,
    config: &AeTrainConfig,
) -> Result<TrainedAutoencoder> {
    spec.validate()?;
    if features.cols() != spec.input_dim {
        return Err(Error::shape(
            Some(0),
            format!(
                "features have {} columns, autoencoder expects {}",
                features.cols(),
                spec.input_dim
            ),
        ));
    }
    if !features.is_finite() {
        return Err(Error::Precondition("features contain non-finite values".into()));
    }
    if spec.output_activation == Activation::Sigmoid && features.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Precondition(
            "sigmoid reconstruction requires inputs scaled to [0, 1]".into(),
        ));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }

    let mut params = NetworkParams::new(spec.layers(), seed::derive(config.seed, "init"))?;
    let mut adam = AdamState::new(&params, config.learning_rate)?;
    let (mut train_rows, val_rows) = holdout(
        features.rows(),
        config.val_fraction,
        seed::derive(config.seed, "holdout"),
    );
    let mut shuffle_rng = seed::rng(seed::derive(config.seed, "epochs"));

    let evaluate = |p: &NetworkParams| -> Result<(f64, Option<f64>)> {
        let val = if val_rows.is_empty() {
            None
        } else {
            Some(mean_loss(p, &spec.loss, features, &val_rows)?)
        };
        Ok((mean_loss(p, &spec.loss, features, &train_rows)?, val))
    };
    let (train0, val0) = evaluate(&params)?;
    let mut history = alloc::vec![EpochLoss {
        epoch: 0,
        train_loss: train0,
        val_loss: val0,
    }];
    let mut best = (val0.unwrap_or(train0), params.clone());
    let mut stale = 0usize;

    for epoch in 1..=config.epochs {
        train_rows.shuffle(&mut shuffle_rng);
        let mut sum = 0.0;
        for (b, chunk) in train_rows.chunks(config.batch_size).enumerate() {
            let batch = features.select_rows(chunk);
            let trace = params.forward(&batch)?;
            let loss = spec.loss.evaluate(trace.output(), &batch)?;
            if !loss.value.is_finite() {
                return Err(Error::Diverged {
                    stage: "autoencoder".into(),
                    epoch,
                    batch: b,
                });
            }
            sum += loss.value * chunk.len() as f64;
            let grads = params.backward(&trace, &loss.gradient)?;
            adam.step(&mut params, &grads).map_err(|e| match e {
                Error::NonFiniteGradient { .. } => Error::Diverged {
                    stage: "autoencoder".into(),
                    epoch,
                    batch: b,
                },
                e => e,
            })?;
        }
        let train_loss = sum / train_rows.len().max(1) as f64;
        let val_loss = if val_rows.is_empty() {
            None
        } else {
            Some(mean_loss(&params, &spec.loss, features, &val_rows)?)
        };
        history.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });

        if let Some(patience) = config.patience {
            let score = val_loss.unwrap_or(train_loss);
            if score < best.0 {
                best = (score, params.clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    if config.patience.is_some() {
        params = best.1;
    }

    Ok(TrainedAutoencoder {
        spec: spec.clone(),
        params,
        loss_history: history,
        fingerprint: config_fingerprint(&[spec, config]),
    })
}

impl TrainedAutoencoder {
    pub fn bottleneck_dim(&self) -> usize {
        self.spec.bottleneck_dim
    }

    /// Encoder-only forward pass to the bottleneck.
    pub fn encode(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.spec.input_dim {
            return Err(Error::shape(
                Some(0),
                format!(
                    "input has {} columns, encoder expects {}",
                    x.cols(),
                    self.spec.input_dim
                ),
            ));
        }
        if x.rows() == 0 {
            return Ok(DenseMatrix::zeros(0, self.spec.bottleneck_dim));
        }
        self.params.forward_range(x, 0..self.spec.encoder_layers())
    }

    pub fn decode(&self, code: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.params.layers().len();
        if code.rows() == 0 {
            return Ok(DenseMatrix::zeros(0, self.spec.input_dim));
        }
        self.params.forward_range(code, self.spec.encoder_layers()..n)
    }

    pub fn reconstruct(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.params.predict(x)
    }

    /// Final recorded validation loss (training loss when no validation rows exist).
    pub fn final_loss(&self) -> f64 {
        let last = self.loss_history.last().expect("history holds epoch 0");
        last.val_loss.unwrap_or(last.train_loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn audio_schedules() {
        let s = build_audio_ae(209).unwrap();
        assert_eq!(s.encoder_dims, [104, 69]);
        assert_eq!(s.bottleneck_dim, 41);
        assert_eq!(s.decoder_dims(), [69, 104, 209]);
        let s = build_audio_ae(10).unwrap();
        assert_eq!((s.encoder_dims.as_slice(), s.bottleneck_dim), (&[5, 3][..], 2));
        assert!(build_audio_ae(4).is_err());
        assert!(build_audio_ae(5).is_err());
    }

    #[test]
    fn lyrics_schedules() {
        let s = build_lyrics_ae(3072, 16, Activation::Selu, Loss::Mse).unwrap();
        assert_eq!(s.encoder_dims, [1536, 768, 384]);
        assert_eq!(s.bottleneck_dim, 192);
        let s = build_lyrics_ae(1024, 12, Activation::Selu, Loss::Mse).unwrap();
        assert_eq!(s.encoder_dims, [512, 256, 128]);
        assert_eq!(s.bottleneck_dim, 85);
        assert!(build_lyrics_ae(1024, 10, Activation::Selu, Loss::Mse).is_err());
        assert!(build_lyrics_ae(31, 16, Activation::Selu, Loss::Mse).is_err());
        let layers = s.layers();
        assert_eq!(layers.len(), 8);
        assert_eq!(layers[4].tied_to, Some(3));
        assert_eq!(layers[7].tied_to, Some(0));
        assert_eq!(layers[7].activation, Activation::Identity);
        assert_eq!((layers[7].in_dim, layers[7].out_dim), (512, 1024));
    }

    #[test]
    fn tied_param_count_drops_decoder_weights() {
        let tied = build_lyrics_ae(64, 16, Activation::Selu, Loss::Mse).unwrap();
        let untied = AutoencoderSpec {
            tied: false,
            ..tied.clone()
        };
        let decoder_weights: usize = untied.layers()[tied.encoder_layers()..]
            .iter()
            .map(|l| l.in_dim * l.out_dim)
            .sum();
        assert_eq!(tied.param_count(), untied.param_count() - decoder_weights);
    }

    fn random_unit(n: usize, d: usize, seed: u64) -> DenseMatrix {
        let mut rng = seed::rng(seed);
        DenseMatrix::from_vec(n, d, (0..n * d).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_epochs_keeps_initialisation() {
        let spec = build_audio_ae(20).unwrap();
        let x = random_unit(30, 20, 1);
        let cfg = AeTrainConfig {
            epochs: 0,
            ..AeTrainConfig::default()
        };
        let ae = train_autoencoder(&spec, &x, &cfg).unwrap();
        assert_eq!(ae.loss_history.len(), 1);
        assert!(ae.loss_history[0].val_loss.is_some());
        let fresh = NetworkParams::new(spec.layers(), seed::derive(cfg.seed, "init")).unwrap();
        assert_eq!(ae.params, fresh);
    }

    #[test]
    fn training_is_deterministic_and_encodes_to_bottleneck() {
        let spec = build_audio_ae(20).unwrap();
        let x = random_unit(40, 20, 2);
        let cfg = AeTrainConfig {
            epochs: 5,
            batch_size: 8,
            ..AeTrainConfig::default()
        };
        let a = train_autoencoder(&spec, &x, &cfg).unwrap();
        let b = train_autoencoder(&spec, &x, &cfg).unwrap();
        assert_eq!(a, b);
        let code = a.encode(&x).unwrap();
        assert_eq!(code.shape(), (40, 4));
        assert_eq!(a.decode(&code).unwrap(), a.reconstruct(&x).unwrap());
        assert_eq!(a.encode(&DenseMatrix::zeros(0, 20)).unwrap().shape(), (0, 4));
        assert!(a.encode(&DenseMatrix::zeros(1, 19)).is_err());
    }

    #[test]
    fn sigmoid_output_requires_unit_range() {
        let spec = build_audio_ae(20).unwrap();
        let mut x = random_unit(10, 20, 3);
        x.set(0, 0, 1.5);
        let err = train_autoencoder(&spec, &x, &AeTrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn divergence_is_reported() {
        let spec = build_lyrics_ae(32, 16, Activation::Identity, Loss::Mse).unwrap();
        let x = random_unit(16, 32, 4).scale(1e18);
        let cfg = AeTrainConfig {
            epochs: 3,
            batch_size: 16,
            val_fraction: 0.0,
            learning_rate: 10.0,
            ..AeTrainConfig::default()
        };
        let err = train_autoencoder(&spec, &x, &cfg).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }
}
