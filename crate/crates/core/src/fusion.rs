//! Fusion regressor, the single-autoencoder baseline, and the staged training
//! pipeline that ties them to the feature autoencoders.
//!
//! Training a pipeline for one fold runs three stages: fit input scalers on the
//! fold's training rows, train the autoencoders on those rows, then freeze the
//! encoders and train the regressor on the encoded features. The first two
//! stages do not depend on the modality mask, so [`FoldEncoders`] can be shared
//! across ablation cells that use the same fold.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::adam::AdamState;
use crate::autoenc::{build_audio_ae, build_lyrics_ae, train_autoencoder, AeTrainConfig, TrainedAutoencoder};
use crate::data::{
    assemble_features_with, Corpus, FeatureBundle, InputScalers, Modality, ModalityMask, SplitPlan, TrackRecord,
};
use crate::error::{Error, Result};
use crate::loss::{mse_loss, Loss};
use crate::matrix::DenseMatrix;
use crate::network::{LayerSpec, NetworkParams};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Audio and lyrics autoencoders feeding the fusion regressor.
    Full,
    /// One autoencoder over the concatenated raw features plus a small head.
    Baseline,
}

impl core::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            ModelKind::Full => "full",
            ModelKind::Baseline => "baseline",
        })
    }
}

impl core::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ModelKind::Full),
            "baseline" => Ok(ModelKind::Baseline),
            _ => Err(Error::InvalidArgument(format!("unknown model kind `{s}`"))),
        }
    }
}

/// A regressor with a single sigmoid output and dropout after each hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionNet {
    pub params: NetworkParams,
    pub dropout: f32,
}

impl FusionNet {
    pub fn input_dim(&self) -> usize {
        self.params.input_dim()
    }

    pub fn predict(&self, x: &DenseMatrix) -> Result<Vec<f32>> {
        if x.rows() == 0 {
            return Ok(Vec::new());
        }
        Ok(self.params.predict(x)?.into_vec())
    }
}

fn check_dropout(dropout: f32) -> Result<()> {
    if !(0.0..1.0).contains(&dropout) {
        return Err(Error::InvalidArgument(format!("dropout {dropout} outside [0, 1)")));
    }
    Ok(())
}

fn head(widths: &[usize], dropout: f32, seed: u64) -> Result<FusionNet> {
    check_dropout(dropout)?;
    let mut layers: Vec<LayerSpec> = widths
        .windows(2)
        .map(|w| LayerSpec::new(w[0], w[1], Activation::Relu))
        .collect();
    layers.push(LayerSpec::new(
        *widths.last().expect("non-empty"),
        1,
        Activation::Sigmoid,
    ));
    Ok(FusionNet {
        params: NetworkParams::new(layers, seed)?,
        dropout,
    })
}

/// Input width followed by the hidden widths `[d, d/2, d/3]`, each raised to at
/// least `min_width`.
pub fn fusenet_widths(input_dim: usize, min_width: usize) -> Vec<usize> {
    alloc::vec![
        input_dim,
        input_dim.max(min_width),
        (input_dim / 2).max(min_width),
        (input_dim / 3).max(min_width)
    ]
}

/// Fusion regressor: ReLU hidden layers `[d, d/2, d/3]`, then one sigmoid unit.
pub fn build_fusenet(input_dim: usize, dropout: f32, seed: u64) -> Result<FusionNet> {
    build_fusenet_with(input_dim, 1, dropout, seed)
}

/// As [`build_fusenet`], with every hidden layer at least `min_width` wide.
///
/// For narrow inputs the plain schedule collapses to single-unit ReLU layers
/// (`3 -> [3, 1, 1]`), which die easily and then predict a constant.
pub fn build_fusenet_with(input_dim: usize, min_width: usize, dropout: f32, seed: u64) -> Result<FusionNet> {
    if input_dim < 3 {
        return Err(Error::InvalidArgument(format!(
            "fusion input width {input_dim} is below 3"
        )));
    }
    head(&fusenet_widths(input_dim, min_width.max(1)), dropout, seed)
}

/// The baseline: one untied autoencoder over all concatenated features, and
/// a head of three hidden layers `[b, b/2, b/4]` plus a sigmoid output, where
/// `b` is the autoencoder bottleneck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub ae: crate::autoenc::AutoencoderSpec,
    pub head_widths: Vec<usize>,
}

pub fn build_baseline(d_total: usize) -> Result<BaselineSpec> {
    let ae = build_audio_ae(d_total)?;
    let b = ae.bottleneck_dim;
    if b / 4 == 0 {
        return Err(Error::InvalidArgument(format!(
            "input dimension {d_total} leaves an empty baseline head (bottleneck {b})"
        )));
    }
    Ok(BaselineSpec {
        ae,
        head_widths: alloc::vec![b, b, b / 2, b / 4],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub model: ModelKind,
    pub modality_mask: ModalityMask,
    pub lyrics_activation: Activation,
    pub lyrics_loss: Loss,
    pub bottleneck_divisor: usize,
    /// Shared by the audio, lyrics and baseline autoencoders; the seed field is ignored
    /// in favour of per-stage derived seeds.
    pub ae: AeTrainConfig,
    pub fusion_dropout: f32,
    /// Lower bound on fusion hidden-layer widths.
    pub fusion_min_width: usize,
    pub fusion_lr: f64,
    pub fusion_epochs: usize,
    pub fusion_batch: usize,
    /// Early stopping on validation MAE.
    pub fusion_patience: Option<usize>,
    pub seed: u64,
    pub scv_k: usize,
    pub strat_bins: usize,
    /// Train only the first `n` folds of the cross-validation (all when `None`).
    pub max_folds: Option<usize>,
    /// Append stylometric columns to the baseline input when the corpus has them.
    pub baseline_stylometrics: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Full,
            modality_mask: ModalityMask::FULL,
            lyrics_activation: Activation::Selu,
            lyrics_loss: Loss::Mse,
            bottleneck_divisor: 16,
            ae: AeTrainConfig::default(),
            fusion_dropout: 0.2,
            fusion_min_width: 4,
            fusion_lr: 1e-3,
            fusion_epochs: 150,
            fusion_batch: 128,
            fusion_patience: Some(15),
            seed: 0,
            scv_k: 5,
            strat_bins: 10,
            max_folds: None,
            baseline_stylometrics: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        check_dropout(self.fusion_dropout)?;
        if self.scv_k < 2 {
            return Err(Error::InvalidArgument(format!(
                "scv_k must be at least 2, got {}",
                self.scv_k
            )));
        }
        if self.bottleneck_divisor != 12 && self.bottleneck_divisor != 16 {
            return Err(Error::InvalidArgument(format!(
                "bottleneck divisor must be 12 or 16, got {}",
                self.bottleneck_divisor
            )));
        }
        if self.modality_mask.is_empty() {
            return Err(Error::InvalidArgument("modality mask is empty".into()));
        }
        if self.fusion_batch == 0 || self.ae.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if self.fusion_lr <= 0.0 || self.ae.learning_rate <= 0.0 {
            return Err(Error::InvalidArgument("learning rates must be positive".into()));
        }
        if self.max_folds == Some(0) {
            return Err(Error::InvalidArgument("max_folds must be positive".into()));
        }
        Ok(())
    }

    /// Folds actually trained.
    pub fn folds(&self) -> usize {
        self.max_folds.map_or(self.scv_k, |m| m.min(self.scv_k))
    }

    /// Blocks the feature assembly must provide.
    pub fn required_blocks(&self) -> ModalityMask {
        match self.model {
            ModelKind::Full => self.modality_mask,
            ModelKind::Baseline => self.modality_mask.without(Modality::Lr),
        }
    }

    pub fn fingerprint(&self) -> String {
        crate::autoenc::config_fingerprint(&[self])
    }
}

/// Builds the stratified split for a cleaned corpus.
pub fn plan_split(corpus: &Corpus, config: &PipelineConfig) -> Result<SplitPlan> {
    let ids: Vec<&str> = corpus.records.iter().map(|r| r.track_id.as_str()).collect();
    let targets: Vec<f32> = corpus
        .records
        .iter()
        .map(|r| crate::data::normalize_popularity(r.popularity_raw as f32))
        .collect::<Result<_>>()?;
    crate::data::stratified_kfold(&ids, &targets, config.scv_k, config.strat_bins, config.seed)
}

/// Per-epoch fusion training record. Epoch 0 is the untrained network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionEpoch {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mae: Option<f64>,
    pub val_mse: Option<f64>,
}

/// Row indices of one fold within a feature bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldRows {
    pub fold: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl FoldRows {
    pub fn new(ids: &[String], split: &SplitPlan, fold: usize) -> Result<Self> {
        if fold >= split.k {
            return Err(Error::InvalidArgument(format!("fold {fold} outside k={}", split.k)));
        }
        let mut rows = FoldRows {
            fold,
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        };
        for (i, id) in ids.iter().enumerate() {
            match split.fold_of.get(id) {
                Some(&f) if f == fold => rows.val.push(i),
                Some(_) => rows.train.push(i),
                None if split.test_ids.contains(id) => rows.test.push(i),
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "record `{id}` is not covered by the split"
                    )))
                }
            }
        }
        if rows.train.is_empty() {
            return Err(Error::InvalidArgument(format!("fold {fold} has no training rows")));
        }
        Ok(rows)
    }
}

/// Scalers and frozen encoders of one fold; independent of the modality mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldEncoders {
    pub fold: usize,
    pub scalers: InputScalers,
    pub audio_ae: Option<TrainedAutoencoder>,
    pub lyrics_ae: Option<TrainedAutoencoder>,
}

fn restage(e: Error, stage: &str) -> Error {
    match e {
        Error::Diverged { epoch, batch, .. } => Error::Diverged {
            stage: stage.into(),
            epoch,
            batch,
        },
        e => e,
    }
}

fn ae_config(config: &PipelineConfig, label: &str, fold: usize) -> AeTrainConfig {
    AeTrainConfig {
        seed: seed::derive(config.seed, &format!("{label}/fold{fold}")),
        ..config.ae.clone()
    }
}

/// Stages 1 and 2: fit scalers on training rows and train the autoencoders
/// needed by `blocks` (audio when LL is present, lyrics when LR is present).
pub fn fit_encoders(
    bundle: &FeatureBundle,
    rows: &FoldRows,
    config: &PipelineConfig,
    blocks: ModalityMask,
) -> Result<FoldEncoders> {
    let scalers = InputScalers::fit(bundle, &rows.train)?;
    let mut audio_ae = None;
    let mut lyrics_ae = None;
    if config.model == ModelKind::Full && blocks.contains(Modality::Ll) {
        let x = scalers.ll.transform(&bundle.ll.select_rows(&rows.train))?;
        let spec = build_audio_ae(x.cols())?;
        audio_ae = Some(
            train_autoencoder(&spec, &x, &ae_config(config, "audio_ae", rows.fold))
                .map_err(|e| restage(e, "audio_ae"))?,
        );
    }
    if config.model == ModelKind::Full && blocks.contains(Modality::Lr) {
        let x = scalers.lyr.transform(&bundle.lyr.select_rows(&rows.train))?;
        let spec = build_lyrics_ae(
            x.cols(),
            config.bottleneck_divisor,
            config.lyrics_activation,
            config.lyrics_loss,
        )?;
        lyrics_ae = Some(
            train_autoencoder(&spec, &x, &ae_config(config, "lyrics_ae", rows.fold))
                .map_err(|e| restage(e, "lyrics_ae"))?,
        );
    }
    Ok(FoldEncoders {
        fold: rows.fold,
        scalers,
        audio_ae,
        lyrics_ae,
    })
}

/// A trained model and everything needed to reproduce its predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPipeline {
    pub config: PipelineConfig,
    pub fold: usize,
    pub scalers: InputScalers,
    pub audio_ae: Option<TrainedAutoencoder>,
    pub lyrics_ae: Option<TrainedAutoencoder>,
    /// The baseline's autoencoder over concatenated features.
    pub baseline_ae: Option<TrainedAutoencoder>,
    pub regressor: FusionNet,
    pub history: Vec<FusionEpoch>,
}

fn fusion_input(
    bundle: &FeatureBundle,
    mask: ModalityMask,
    audio_ae: Option<&TrainedAutoencoder>,
    lyrics_ae: Option<&TrainedAutoencoder>,
) -> Result<DenseMatrix> {
    let mut blocks: Vec<DenseMatrix> = Vec::with_capacity(4);
    if mask.contains(Modality::Ll) {
        let ae = audio_ae.ok_or_else(|| Error::MissingModality("LL requested without an audio autoencoder".into()))?;
        blocks.push(ae.encode(&bundle.ll)?);
    }
    if mask.contains(Modality::Lr) {
        let ae = lyrics_ae.ok_or_else(|| Error::MissingModality("LR requested without a lyrics autoencoder".into()))?;
        blocks.push(ae.encode(&bundle.lyr)?);
    }
    if mask.contains(Modality::Hh) {
        blocks.push(bundle.hl.clone());
    }
    if mask.contains(Modality::M) {
        blocks.push(bundle.meta.clone());
    }
    let refs: Vec<&DenseMatrix> = blocks.iter().collect();
    DenseMatrix::hstack(&refs)
}

fn keep(m: &DenseMatrix, on: bool) -> DenseMatrix {
    if on {
        m.clone()
    } else {
        DenseMatrix::zeros(m.rows(), 0)
    }
}

/// Drops the blocks a pipeline does not read.
fn restrict_bundle(b: &FeatureBundle, mask: ModalityMask, stylo: bool) -> FeatureBundle {
    FeatureBundle {
        ids: b.ids.clone(),
        hl: keep(&b.hl, mask.contains(Modality::Hh)),
        ll: keep(&b.ll, mask.contains(Modality::Ll)),
        lyr: keep(&b.lyr, mask.contains(Modality::Lr)),
        meta: keep(&b.meta, mask.contains(Modality::M)),
        stylo: keep(&b.stylo, stylo),
        target: b.target.clone(),
    }
}

fn restrict_scalers(s: &InputScalers, mask: ModalityMask, stylo: bool) -> InputScalers {
    let keep = |b: &crate::data::BlockScaler, on: bool| {
        if on {
            b.clone()
        } else {
            crate::data::BlockScaler {
                kind: b.kind,
                offset: Vec::new(),
                scale: Vec::new(),
            }
        }
    };
    InputScalers {
        hl: keep(&s.hl, mask.contains(Modality::Hh)),
        ll: keep(&s.ll, mask.contains(Modality::Ll)),
        lyr: keep(&s.lyr, mask.contains(Modality::Lr)),
        meta: keep(&s.meta, mask.contains(Modality::M)),
        stylo: keep(&s.stylo, stylo),
    }
}

fn baseline_input(bundle: &FeatureBundle) -> DenseMatrix {
    bundle.concat()
}

impl TrainedPipeline {
    pub fn mask(&self) -> ModalityMask {
        self.config.modality_mask
    }

    /// Regressor input for an already scaled bundle.
    pub fn regressor_input(&self, scaled: &FeatureBundle) -> Result<DenseMatrix> {
        match self.config.model {
            ModelKind::Full => fusion_input(scaled, self.mask(), self.audio_ae.as_ref(), self.lyrics_ae.as_ref()),
            ModelKind::Baseline => {
                let ae = self
                    .baseline_ae
                    .as_ref()
                    .ok_or_else(|| Error::Precondition("baseline without autoencoder".into()))?;
                ae.encode(&baseline_input(scaled))
            }
        }
    }

    /// Predictions for rows of a bundle assembled with this pipeline's blocks (unscaled).
    pub fn predict_bundle(&self, bundle: &FeatureBundle) -> Result<Vec<f32>> {
        let bundle = restrict_bundle(bundle, self.required_blocks(), self.uses_stylometrics());
        let scaled = self.scalers.transform(&bundle)?;
        let x = self.regressor_input(&scaled)?;
        self.regressor.predict(&x)
    }

    /// Blocks this pipeline reads from a record.
    pub fn required_blocks(&self) -> ModalityMask {
        self.config.required_blocks()
    }

    fn uses_stylometrics(&self) -> bool {
        self.config.model == ModelKind::Baseline && self.scalers.stylo.width() > 0
    }

    pub fn assemble(&self, records: &[TrackRecord]) -> Result<FeatureBundle> {
        assemble_features_with(records, self.required_blocks(), self.uses_stylometrics())
    }

    /// Eval-mode predictions in `(0, 1)`, one per record.
    pub fn predict_batch(&self, records: &[TrackRecord]) -> Result<Vec<f32>> {
        self.predict_bundle(&self.assemble(records)?)
    }
}

fn mean_abs_sq(pred: &[f32], target: &[f32]) -> (f64, f64) {
    let n = pred.len().max(1) as f64;
    let (mut a, mut s) = (0.0, 0.0);
    for (&p, &t) in pred.iter().zip(target) {
        let d = p as f64 - t as f64;
        a += d.abs();
        s += d * d;
    }
    (a / n, s / n)
}

/// Stage 3: trains a regressor on fixed inputs with Adam and MSE, early
/// stopping on validation MAE and restoring the best epoch.
pub fn train_regressor(
    net: &mut FusionNet,
    x: &DenseMatrix,
    y: &[f32],
    rows: &FoldRows,
    config: &PipelineConfig,
    seed: u64,
) -> Result<Vec<FusionEpoch>> {
    let targets = DenseMatrix::from_vec(y.len(), 1, y.to_vec())?;
    let mut adam = AdamState::new(&net.params, config.fusion_lr)?;
    let mut order = rows.train.clone();
    let mut shuffle_rng = seed::rng(seed::derive(seed, "shuffle"));
    let mut dropout_rng = seed::rng(seed::derive(seed, "dropout"));
    let x_val = x.select_rows(&rows.val);
    let y_val: Vec<f32> = rows.val.iter().map(|&i| y[i]).collect();
    let x_train = x.select_rows(&rows.train);
    let y_train: Vec<f32> = rows.train.iter().map(|&i| y[i]).collect();

    let measure = |net: &FusionNet| -> Result<(f64, Option<f64>, Option<f64>)> {
        let train_mse = mean_abs_sq(&net.predict(&x_train)?, &y_train).1;
        if rows.val.is_empty() {
            return Ok((train_mse, None, None));
        }
        let (mae, mse) = mean_abs_sq(&net.predict(&x_val)?, &y_val);
        Ok((train_mse, Some(mae), Some(mse)))
    };

    let (t0, m0, s0) = measure(net)?;
    let mut history = alloc::vec![FusionEpoch {
        epoch: 0,
        train_mse: t0,
        val_mae: m0,
        val_mse: s0,
    }];
    let mut best = (m0.unwrap_or(t0), net.params.clone());
    let mut stale = 0usize;

    for epoch in 1..=config.fusion_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sum = 0.0;
        for (b, chunk) in order.chunks(config.fusion_batch).enumerate() {
            let xb = x.select_rows(chunk);
            let yb = targets.select_rows(chunk);
            let trace = net.params.forward_train(&xb, net.dropout, &mut dropout_rng)?;
            let loss = mse_loss(trace.output(), &yb)?;
            let diverged = || Error::Diverged {
                stage: "fusion".into(),
                epoch,
                batch: b,
            };
            if !loss.value.is_finite() {
                return Err(diverged());
            }
            sum += loss.value * chunk.len() as f64;
            let grads = net.params.backward(&trace, &loss.gradient)?;
            adam.step(&mut net.params, &grads).map_err(|e| match e {
                Error::NonFiniteGradient { .. } => diverged(),
                e => e,
            })?;
        }
        let (_, val_mae, val_mse) = measure(net)?;
        history.push(FusionEpoch {
            epoch,
            train_mse: sum / order.len() as f64,
            val_mae,
            val_mse,
        });
        if let Some(patience) = config.fusion_patience {
            let score = val_mae.unwrap_or(sum / order.len() as f64);
            if score < best.0 {
                best = (score, net.params.clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    if config.fusion_patience.is_some() {
        net.params = best.1;
    }
    Ok(history)
}

/// Stage 3 on top of precomputed fold encoders. `bundle` must hold every block of
/// `config.required_blocks()`.
pub fn train_with_encoders(
    bundle: &FeatureBundle,
    rows: &FoldRows,
    encoders: &FoldEncoders,
    config: &PipelineConfig,
) -> Result<TrainedPipeline> {
    config.validate()?;
    if encoders.fold != rows.fold {
        return Err(Error::InvalidArgument(format!(
            "encoders of fold {} used for fold {}",
            encoders.fold, rows.fold
        )));
    }
    let fold = rows.fold;
    let mask = config.modality_mask;
    let stylo = config.model == ModelKind::Baseline && bundle.stylo.cols() > 0;
    let bundle = &restrict_bundle(bundle, config.required_blocks(), stylo);
    let mut pipeline = TrainedPipeline {
        config: config.clone(),
        fold,
        scalers: restrict_scalers(&encoders.scalers, config.required_blocks(), stylo),
        audio_ae: None,
        lyrics_ae: None,
        baseline_ae: None,
        regressor: FusionNet {
            params: NetworkParams::new(alloc::vec![LayerSpec::new(1, 1, Activation::Identity)], 0)?,
            dropout: 0.0,
        },
        history: Vec::new(),
    };
    let scaled = pipeline.scalers.transform(bundle)?;
    match config.model {
        ModelKind::Full => {
            if mask.contains(Modality::Ll) {
                pipeline.audio_ae = encoders.audio_ae.clone();
            }
            if mask.contains(Modality::Lr) {
                pipeline.lyrics_ae = encoders.lyrics_ae.clone();
            }
            let x = pipeline.regressor_input(&scaled)?;
            pipeline.regressor = build_fusenet_with(
                x.cols(),
                config.fusion_min_width,
                config.fusion_dropout,
                seed::derive(config.seed, &format!("fusion/fold{fold}")),
            )?;
        }
        ModelKind::Baseline => {
            let x = baseline_input(&scaled);
            let spec = build_baseline(x.cols())?;
            let ae = train_autoencoder(
                &spec.ae,
                &x.select_rows(&rows.train),
                &ae_config(config, "baseline_ae", fold),
            )
            .map_err(|e| restage(e, "baseline_ae"))?;
            pipeline.baseline_ae = Some(ae);
            pipeline.regressor = head(
                &spec.head_widths,
                config.fusion_dropout,
                seed::derive(config.seed, &format!("baseline_head/fold{fold}")),
            )?;
        }
    }
    let x = pipeline.regressor_input(&scaled)?;
    let train_seed = seed::derive(config.seed, &format!("fusion_train/fold{fold}"));
    pipeline.history =
        train_regressor(&mut pipeline.regressor, &x, &bundle.target, rows, config, train_seed).map_err(|e| {
            restage(
                e,
                if config.model == ModelKind::Full {
                    "fusion"
                } else {
                    "baseline_head"
                },
            )
        })?;
    Ok(pipeline)
}

/// Trains every stage for one validation fold of `split`.
pub fn train_pipeline(
    corpus: &Corpus,
    split: &SplitPlan,
    val_fold: usize,
    config: &PipelineConfig,
) -> Result<TrainedPipeline> {
    config.validate()?;
    let include_stylo =
        config.model == ModelKind::Baseline && config.baseline_stylometrics && corpus.has_stylometrics();
    let bundle = assemble_features_with(&corpus.records, config.required_blocks(), include_stylo)?;
    let rows = FoldRows::new(&bundle.ids, split, val_fold)?;
    let encoders = fit_encoders(&bundle, &rows, config, config.required_blocks())?;
    train_with_encoders(&bundle, &rows, &encoders, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fusenet_schedule() {
        let net = build_fusenet(300, 0.2, 1).unwrap();
        let dims: Vec<(usize, usize)> = net.params.layers().iter().map(|l| (l.in_dim, l.out_dim)).collect();
        assert_eq!(dims, [(300, 300), (300, 150), (150, 100), (100, 1)]);
        assert_eq!(net.params.layers()[3].activation, Activation::Sigmoid);
        assert!(build_fusenet(2, 0.2, 1).is_err());
        assert!(build_fusenet(10, 1.0, 1).is_err());
        assert_eq!(fusenet_widths(3, 1), [3, 3, 1, 1]);
        assert_eq!(fusenet_widths(3, 4), [3, 4, 4, 4]);
        assert_eq!(fusenet_widths(300, 4), [300, 300, 150, 100]);
    }

    #[test]
    fn baseline_widths() {
        let b = build_baseline(225).unwrap();
        assert_eq!(b.ae.bottleneck_dim, 45);
        assert_eq!(b.head_widths, [45, 45, 22, 11]);
        assert_eq!(build_baseline(231).unwrap().ae.bottleneck_dim, 46);
        assert!(build_baseline(4).is_err());
        let net = head(&b.head_widths, 0.0, 3).unwrap();
        let y = net.predict(&DenseMatrix::zeros(1, 45)).unwrap();
        assert!(y[0] > 0.0 && y[0] < 1.0);
    }

    #[test]
    fn zero_dropout_train_equals_eval() {
        let net = build_fusenet(12, 0.0, 4).unwrap();
        let x = DenseMatrix::from_vec(3, 12, (0..36).map(|i| i as f32 / 36.0).collect()).unwrap();
        let mut rng = seed::rng(0);
        let t = net.params.forward_train(&x, 0.0, &mut rng).unwrap();
        assert_eq!(t.output(), &net.params.predict(&x).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = [
            PipelineConfig {
                fusion_dropout: 1.0,
                ..Default::default()
            },
            PipelineConfig {
                scv_k: 1,
                ..Default::default()
            },
            PipelineConfig {
                bottleneck_divisor: 8,
                ..Default::default()
            },
            PipelineConfig {
                modality_mask: ModalityMask::EMPTY,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }
}
