//! Metrics, cross-validation, modality ablations and residual reports.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{assemble_features_with, strat_bin, Corpus, FeatureBundle, ModalityMask, SplitPlan, TrackRecord};
use crate::error::{Error, Result};
use crate::fusion::{
    fit_encoders, plan_split, train_with_encoders, FoldEncoders, FoldRows, ModelKind, PipelineConfig, TrainedPipeline,
};

/// Absolute and squared error means on the normalised scale.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
}

pub fn compute_metrics(preds: &[f32], targets: &[f32]) -> Result<Metrics> {
    if preds.len() != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} targets",
            preds.len(),
            targets.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::InvalidArgument("metrics of an empty set".into()));
    }
    let (mut a, mut s) = (0.0f64, 0.0f64);
    for (&p, &t) in preds.iter().zip(targets) {
        let d = p as f64 - t as f64;
        a += d.abs();
        s += d * d;
    }
    let n = preds.len() as f64;
    Ok(Metrics { mae: a / n, mse: s / n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub train: Metrics,
    pub val: Metrics,
    pub test: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Means over trained folds.
    pub mae_train: f64,
    pub mae_val: f64,
    /// From the fold model with the median validation MAE.
    pub mae_test: f64,
    pub mse_train: f64,
    pub mse_val: f64,
    pub mse_test: f64,
    pub folds: Vec<FoldMetrics>,
    pub selected_fold: usize,
    pub config_fingerprint: String,
    pub split_fingerprint: String,
}

/// Fold whose validation MAE is the (lower) median; ties go to the lower fold index.
pub fn median_fold(folds: &[FoldMetrics]) -> usize {
    let mut order: Vec<&FoldMetrics> = folds.iter().collect();
    order.sort_by(|a, b| a.val.mae.total_cmp(&b.val.mae).then(a.fold.cmp(&b.fold)));
    order[(order.len() - 1) / 2].fold
}

fn mean_of(folds: &[FoldMetrics], f: impl Fn(&FoldMetrics) -> f64) -> f64 {
    folds.iter().map(f).sum::<f64>() / folds.len() as f64
}

#[derive(Debug, Clone)]
pub struct ScvOutcome {
    pub report: MetricsReport,
    /// The selected fold's model.
    pub pipeline: TrainedPipeline,
    pub test_ids: Vec<String>,
    pub test_predictions: Vec<f32>,
    pub test_targets: Vec<f32>,
}

/// Shared state for runs over one corpus and split: assembled features and
/// per-fold encoders, which are reused across modality masks.
struct Experiment {
    bundle: FeatureBundle,
    split: SplitPlan,
    encoders: BTreeMap<usize, FoldEncoders>,
    config: PipelineConfig,
}

impl Experiment {
    fn new(corpus: &Corpus, config: &PipelineConfig, blocks: ModalityMask) -> Result<Self> {
        config.validate()?;
        let split = plan_split(corpus, config)?;
        let stylo = config.model == ModelKind::Baseline && config.baseline_stylometrics && corpus.has_stylometrics();
        let bundle = assemble_features_with(&corpus.records, blocks, stylo)?;
        Ok(Self {
            bundle,
            split,
            encoders: BTreeMap::new(),
            config: config.clone(),
        })
    }

    fn run(&mut self, mask: ModalityMask) -> Result<ScvOutcome> {
        let config = PipelineConfig {
            modality_mask: mask,
            ..self.config.clone()
        };
        config.validate()?;
        let mut folds = Vec::with_capacity(config.folds());
        let mut models = Vec::with_capacity(config.folds());
        for fold in 0..config.folds() {
            let rows = FoldRows::new(&self.bundle.ids, &self.split, fold)?;
            if !self.encoders.contains_key(&fold) {
                let enc = fit_encoders(&self.bundle, &rows, &self.config, self.config.required_blocks())?;
                self.encoders.insert(fold, enc);
            }
            let pipeline = train_with_encoders(&self.bundle, &rows, &self.encoders[&fold], &config)?;
            let preds = pipeline.predict_bundle(&self.bundle)?;
            let part = |idx: &[usize]| -> Result<Metrics> {
                if idx.is_empty() {
                    return Ok(Metrics::default());
                }
                let p: Vec<f32> = idx.iter().map(|&i| preds[i]).collect();
                let t: Vec<f32> = idx.iter().map(|&i| self.bundle.target[i]).collect();
                compute_metrics(&p, &t)
            };
            folds.push(FoldMetrics {
                fold,
                train: part(&rows.train)?,
                val: part(&rows.val)?,
                test: part(&rows.test)?,
            });
            models.push((pipeline, rows.test, preds));
        }
        let selected = median_fold(&folds);
        let (pipeline, test_rows, preds) = models.swap_remove(selected);
        let chosen = folds[selected];
        let report = MetricsReport {
            mae_train: mean_of(&folds, |f| f.train.mae),
            mae_val: mean_of(&folds, |f| f.val.mae),
            mae_test: chosen.test.mae,
            mse_train: mean_of(&folds, |f| f.train.mse),
            mse_val: mean_of(&folds, |f| f.val.mse),
            mse_test: chosen.test.mse,
            folds,
            selected_fold: selected,
            config_fingerprint: config.fingerprint(),
            split_fingerprint: self.split.fingerprint(),
        };
        Ok(ScvOutcome {
            report,
            pipeline,
            test_ids: test_rows.iter().map(|&i| self.bundle.ids[i].clone()).collect(),
            test_predictions: test_rows.iter().map(|&i| preds[i]).collect(),
            test_targets: test_rows.iter().map(|&i| self.bundle.target[i]).collect(),
        })
    }
}

/// Stratified cross-validation of `config` on a cleaned corpus.
pub fn run_scv(corpus: &Corpus, config: &PipelineConfig) -> Result<ScvOutcome> {
    let mut exp = Experiment::new(corpus, config, config.required_blocks())?;
    exp.run(config.modality_mask)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub modality_mask: ModalityMask,
    pub report: MetricsReport,
}

/// One cross-validated run per mask over a single shared split. Each fold's
/// scalers and autoencoders are trained once and reused by every mask.
pub fn run_ablation(corpus: &Corpus, masks: &[ModalityMask], config: &PipelineConfig) -> Result<Vec<AblationCell>> {
    if masks.is_empty() {
        return Err(Error::InvalidArgument("no masks to evaluate".into()));
    }
    let mut union = ModalityMask::EMPTY;
    for &m in masks {
        if m.is_empty() {
            return Err(Error::InvalidArgument("empty modality mask".into()));
        }
        union = union.union(m);
    }
    let base = PipelineConfig {
        modality_mask: union,
        ..config.clone()
    };
    if base.model == ModelKind::Baseline {
        // the baseline autoencoder depends on the mask, so nothing is shared beyond the split
        let mut cells = Vec::with_capacity(masks.len());
        for &m in masks {
            let cfg = PipelineConfig {
                modality_mask: m,
                ..config.clone()
            };
            let mut exp = Experiment::new(corpus, &cfg, cfg.required_blocks())?;
            cells.push(AblationCell {
                modality_mask: m,
                report: exp.run(m)?.report,
            });
        }
        return Ok(cells);
    }
    let mut exp = Experiment::new(corpus, &base, base.required_blocks())?;
    masks
        .iter()
        .map(|&m| {
            Ok(AblationCell {
                modality_mask: m,
                report: exp.run(m)?.report,
            })
        })
        .collect()
}

pub const TAIL_LOW: f32 = 0.2;
pub const TAIL_HIGH: f32 = 0.8;
pub const CALIBRATION_BINS: usize = 10;
/// Years with fewer test tracks are left out of the year-wise section.
pub const MIN_TRACKS_PER_YEAR: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFractions {
    pub predicted_below: f64,
    pub predicted_above: f64,
    pub actual_below: f64,
    pub actual_above: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub mean_predicted: Option<f64>,
    pub mean_actual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMae {
    pub segment: String,
    /// Artist-popularity range covered by the segment.
    pub min_artist_popularity: f32,
    pub max_artist_popularity: f32,
    pub count: usize,
    pub mae: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearError {
    pub year: i32,
    pub count: usize,
    pub mae: f64,
    /// Nearest-rank quartiles of the absolute error.
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub n: usize,
    /// Prediction minus actual, in input order.
    pub residuals: Vec<f32>,
    pub residual_mean: f64,
    pub residual_std: f64,
    pub mean_actual: f64,
    pub mean_predicted: f64,
    pub metrics: Metrics,
    pub tail_fractions: TailFractions,
    pub calibration_bins: Vec<CalibrationBin>,
    pub segment_mae: Option<Vec<SegmentMae>>,
    pub yearwise: Option<Vec<YearError>>,
    /// One line per omitted or truncated section.
    pub notices: Vec<String>,
}

/// 1-based nearest rank `ceil(q n)` of a sample of size `n`, at least 1.
fn nearest_rank(q: f64, n: usize) -> usize {
    (libm::ceil(q * n as f64) as usize).clamp(1, n)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    sorted[nearest_rank(q, sorted.len()) - 1]
}

fn mean_abs(idx: &[usize], preds: &[f32], targets: &[f32]) -> f64 {
    idx.iter()
        .map(|&i| (preds[i] as f64 - targets[i] as f64).abs())
        .sum::<f64>()
        / idx.len() as f64
}

pub fn residual_report(preds: &[f32], targets: &[f32], records: &[TrackRecord]) -> Result<ResidualReport> {
    let metrics = compute_metrics(preds, targets)?;
    if records.len() != preds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} records for {} predictions",
            records.len(),
            preds.len()
        )));
    }
    let n = preds.len();
    let nf = n as f64;
    let residuals: Vec<f32> = preds.iter().zip(targets).map(|(p, t)| p - t).collect();
    let residual_mean = preds
        .iter()
        .zip(targets)
        .map(|(&p, &t)| p as f64 - t as f64)
        .sum::<f64>()
        / nf;
    let residual_var = preds
        .iter()
        .zip(targets)
        .map(|(&p, &t)| (p as f64 - t as f64 - residual_mean).powi(2))
        .sum::<f64>()
        / nf;
    let frac = |v: &[f32], f: fn(f32) -> bool| v.iter().filter(|&&x| f(x)).count() as f64 / nf;
    let tail_fractions = TailFractions {
        predicted_below: frac(preds, |x| x < TAIL_LOW),
        predicted_above: frac(preds, |x| x > TAIL_HIGH),
        actual_below: frac(targets, |x| x < TAIL_LOW),
        actual_above: frac(targets, |x| x > TAIL_HIGH),
    };

    let mut sums = [(0usize, 0.0f64, 0.0f64); CALIBRATION_BINS];
    for (&p, &t) in preds.iter().zip(targets) {
        let s = &mut sums[strat_bin(p, CALIBRATION_BINS)];
        s.0 += 1;
        s.1 += p as f64;
        s.2 += t as f64;
    }
    let calibration_bins = sums
        .iter()
        .enumerate()
        .map(|(b, &(count, sp, st))| CalibrationBin {
            lower: b as f64 / CALIBRATION_BINS as f64,
            upper: (b + 1) as f64 / CALIBRATION_BINS as f64,
            count,
            mean_predicted: (count > 0).then(|| sp / count as f64),
            mean_actual: (count > 0).then(|| st / count as f64),
        })
        .collect();

    let mut notices = Vec::new();
    let segment_mae = if n < 3 {
        notices.push(format!("artist segments omitted: {n} tracks, at least 3 required"));
        None
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            records[a]
                .artist_popularity()
                .total_cmp(&records[b].artist_popularity())
                .then_with(|| records[a].track_id.cmp(&records[b].track_id))
        });
        let c1 = nearest_rank(1.0 / 3.0, n);
        let c2 = nearest_rank(2.0 / 3.0, n);
        let parts = [("low", &order[..c1]), ("mid", &order[c1..c2]), ("high", &order[c2..])];
        Some(
            parts
                .iter()
                .filter(|(_, idx)| !idx.is_empty())
                .map(|(name, idx)| SegmentMae {
                    segment: String::from(*name),
                    min_artist_popularity: records[idx[0]].artist_popularity(),
                    max_artist_popularity: records[idx[idx.len() - 1]].artist_popularity(),
                    count: idx.len(),
                    mae: mean_abs(idx, preds, targets),
                })
                .collect(),
        )
    };

    let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    let mut missing = 0usize;
    for (i, r) in records.iter().enumerate() {
        match r.release_year {
            Some(y) => by_year.entry(y).or_default().push(i),
            None => missing += 1,
        }
    }
    let yearwise = if by_year.is_empty() {
        notices.push(String::from(
            "year-wise section omitted: no record carries a release year",
        ));
        None
    } else {
        if missing > 0 {
            notices.push(format!(
                "year-wise section skips {missing} records without a release year"
            ));
        }
        let sparse = by_year.values().filter(|v| v.len() < MIN_TRACKS_PER_YEAR).count();
        if sparse > 0 {
            notices.push(format!(
                "year-wise section skips {sparse} years with fewer than {MIN_TRACKS_PER_YEAR} tracks"
            ));
        }
        Some(
            by_year
                .iter()
                .filter(|(_, idx)| idx.len() >= MIN_TRACKS_PER_YEAR)
                .map(|(&year, idx)| {
                    let mut err: Vec<f64> = idx
                        .iter()
                        .map(|&i| (preds[i] as f64 - targets[i] as f64).abs())
                        .collect();
                    err.sort_by(f64::total_cmp);
                    YearError {
                        year,
                        count: idx.len(),
                        mae: mean_abs(idx, preds, targets),
                        q1: quantile_sorted(&err, 0.25),
                        median: quantile_sorted(&err, 0.5),
                        q3: quantile_sorted(&err, 0.75),
                    }
                })
                .collect(),
        )
    };

    Ok(ResidualReport {
        n,
        residuals,
        residual_mean,
        residual_std: libm::sqrt(residual_var),
        mean_actual: targets.iter().map(|&t| t as f64).sum::<f64>() / nf,
        mean_predicted: preds.iter().map(|&p| p as f64).sum::<f64>() / nf,
        metrics,
        tail_fractions,
        calibration_bins,
        segment_mae,
        yearwise,
        notices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::record::tests_support::record;
    use alloc::vec;

    #[test]
    fn metrics_examples() {
        let m = compute_metrics(&[0.5, 0.5], &[0.4, 0.6]).unwrap();
        assert!((m.mae - 0.1).abs() < 1e-7 && (m.mse - 0.01).abs() < 1e-8);
        assert_eq!(compute_metrics(&[0.3], &[0.3]).unwrap(), Metrics { mae: 0.0, mse: 0.0 });
        assert!(compute_metrics(&[], &[]).is_err());
        assert!(compute_metrics(&[0.1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn median_fold_selection() {
        let f = |fold, mae| FoldMetrics {
            fold,
            train: Metrics::default(),
            val: Metrics { mae, mse: 0.0 },
            test: Metrics::default(),
        };
        assert_eq!(median_fold(&[f(0, 0.3), f(1, 0.1), f(2, 0.2)]), 2);
        assert_eq!(median_fold(&[f(0, 0.3), f(1, 0.1), f(2, 0.2), f(3, 0.4)]), 2);
        assert_eq!(median_fold(&[f(0, 0.2), f(1, 0.2)]), 0);
    }

    #[test]
    fn perfect_predictions() {
        let recs: Vec<TrackRecord> = (0..7).map(|i| record(&format!("r{i}"), 0.0)).collect();
        let t = [0.05, 0.15, 0.33, 0.5, 0.71, 0.85, 0.95];
        let r = residual_report(&t, &t, &recs).unwrap();
        assert_eq!(r.metrics, Metrics::default());
        for b in &r.calibration_bins {
            assert_eq!(b.mean_predicted, b.mean_actual);
        }
        assert!(r.segment_mae.unwrap().iter().all(|s| s.mae == 0.0));
        assert_eq!(r.calibration_bins.iter().map(|b| b.count).sum::<usize>(), 7);
        let years = r.yearwise.unwrap();
        assert_eq!(years.len(), 1);
        assert_eq!((years[0].year, years[0].count), (2010, 7));
    }

    #[test]
    fn missing_years_are_noticed() {
        let mut recs = vec![record("a", 0.0), record("b", 0.0), record("c", 0.0)];
        for r in &mut recs {
            r.release_year = None;
        }
        let r = residual_report(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3], &recs).unwrap();
        assert!(r.yearwise.is_none());
        assert_eq!(r.notices.len(), 1);
    }
}
