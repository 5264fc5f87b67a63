//! JSON and CSV artifacts. Every CSV row carries the hash of the manifest that
//! produced it.

use std::path::Path;

use lyricnet_core::autoenc::EpochLoss;
use lyricnet_core::eval::{MetricsReport, ResidualReport};
use lyricnet_core::fusion::FusionEpoch;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e.into()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::data(Some(path), "json", e.to_string()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub mae_train: MeanStd,
    pub mae_val: MeanStd,
    pub mae_test: MeanStd,
    pub mse_train: MeanStd,
    pub mse_val: MeanStd,
    pub mse_test: MeanStd,
}

impl MetricsSummary {
    pub fn of(reports: &[&MetricsReport]) -> Self {
        let f = |g: fn(&MetricsReport) -> f64| MeanStd::of(&reports.iter().map(|r| g(r)).collect::<Vec<_>>());
        Self {
            mae_train: f(|r| r.mae_train),
            mae_val: f(|r| r.mae_val),
            mae_test: f(|r| r.mae_test),
            mse_train: f(|r| r.mse_train),
            mse_val: f(|r| r.mse_val),
            mse_test: f(|r| r.mse_test),
        }
    }
}

#[derive(Serialize)]
struct MetricRow<'a> {
    split: &'a str,
    mae: f64,
    mse: f64,
    manifest_hash: &'a str,
}

pub fn metrics_csv(path: &Path, r: &MetricsReport, hash: &str) -> Result<()> {
    let rows = [
        ("train", r.mae_train, r.mse_train),
        ("val", r.mae_val, r.mse_val),
        ("test", r.mae_test, r.mse_test),
    ]
    .map(|(split, mae, mse)| MetricRow {
        split,
        mae,
        mse,
        manifest_hash: hash,
    });
    write_csv(path, &rows)
}

#[derive(Serialize)]
struct FoldRow<'a> {
    fold: usize,
    selected: bool,
    train_mae: f64,
    train_mse: f64,
    val_mae: f64,
    val_mse: f64,
    test_mae: f64,
    test_mse: f64,
    manifest_hash: &'a str,
}

pub fn folds_csv(path: &Path, r: &MetricsReport, hash: &str) -> Result<()> {
    let rows: Vec<FoldRow> = r
        .folds
        .iter()
        .map(|f| FoldRow {
            fold: f.fold,
            selected: f.fold == r.selected_fold,
            train_mae: f.train.mae,
            train_mse: f.train.mse,
            val_mae: f.val.mae,
            val_mse: f.val.mse,
            test_mae: f.test.mae,
            test_mse: f.test.mse,
            manifest_hash: hash,
        })
        .collect();
    write_csv(path, &rows)
}

#[derive(Serialize)]
struct AeRow<'a> {
    epoch: usize,
    train_loss: f64,
    val_loss: Option<f64>,
    manifest_hash: &'a str,
}

pub fn ae_history_csv(path: &Path, history: &[EpochLoss], hash: &str) -> Result<()> {
    let rows: Vec<AeRow> = history
        .iter()
        .map(|e| AeRow {
            epoch: e.epoch,
            train_loss: e.train_loss,
            val_loss: e.val_loss,
            manifest_hash: hash,
        })
        .collect();
    write_csv(path, &rows)
}

#[derive(Serialize)]
struct FusionRow<'a> {
    epoch: usize,
    train_mse: f64,
    val_mae: Option<f64>,
    val_mse: Option<f64>,
    manifest_hash: &'a str,
}

pub fn fusion_history_csv(path: &Path, history: &[FusionEpoch], hash: &str) -> Result<()> {
    let rows: Vec<FusionRow> = history
        .iter()
        .map(|e| FusionRow {
            epoch: e.epoch,
            train_mse: e.train_mse,
            val_mae: e.val_mae,
            val_mse: e.val_mse,
            manifest_hash: hash,
        })
        .collect();
    write_csv(path, &rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub modality_mask: String,
    pub seeds: usize,
    pub mae_train_mean: f64,
    pub mae_val_mean: f64,
    pub mae_test_mean: f64,
    pub mae_test_std: f64,
    pub mse_test_mean: f64,
    pub mse_test_std: f64,
    pub manifest_hash: String,
}

/// Writes `residuals.csv`, `calibration.csv`, `segments.csv` and `yearwise.csv`;
/// absent sections produce no file.
pub fn residual_csvs(
    dir: &Path,
    ids: &[String],
    preds: &[f32],
    targets: &[f32],
    r: &ResidualReport,
    hash: &str,
) -> Result<()> {
    #[derive(Serialize)]
    struct Residual<'a> {
        track_id: &'a str,
        predicted: f32,
        actual: f32,
        residual: f32,
        manifest_hash: &'a str,
    }
    let rows: Vec<Residual> = ids
        .iter()
        .zip(preds)
        .zip(targets)
        .zip(&r.residuals)
        .map(|(((id, &p), &t), &res)| Residual {
            track_id: id,
            predicted: p,
            actual: t,
            residual: res,
            manifest_hash: hash,
        })
        .collect();
    write_csv(&dir.join("residuals.csv"), &rows)?;

    #[derive(Serialize)]
    struct Bin<'a> {
        lower: f64,
        upper: f64,
        count: usize,
        mean_predicted: Option<f64>,
        mean_actual: Option<f64>,
        manifest_hash: &'a str,
    }
    let bins: Vec<Bin> = r
        .calibration_bins
        .iter()
        .map(|b| Bin {
            lower: b.lower,
            upper: b.upper,
            count: b.count,
            mean_predicted: b.mean_predicted,
            mean_actual: b.mean_actual,
            manifest_hash: hash,
        })
        .collect();
    write_csv(&dir.join("calibration.csv"), &bins)?;

    if let Some(seg) = &r.segment_mae {
        #[derive(Serialize)]
        struct Seg<'a> {
            segment: &'a str,
            min_artist_popularity: f32,
            max_artist_popularity: f32,
            count: usize,
            mae: f64,
            manifest_hash: &'a str,
        }
        let rows: Vec<Seg> = seg
            .iter()
            .map(|s| Seg {
                segment: &s.segment,
                min_artist_popularity: s.min_artist_popularity,
                max_artist_popularity: s.max_artist_popularity,
                count: s.count,
                mae: s.mae,
                manifest_hash: hash,
            })
            .collect();
        write_csv(&dir.join("segments.csv"), &rows)?;
    }
    if let Some(years) = &r.yearwise {
        #[derive(Serialize)]
        struct Year<'a> {
            year: i32,
            count: usize,
            mae: f64,
            q1: f64,
            median: f64,
            q3: f64,
            manifest_hash: &'a str,
        }
        let rows: Vec<Year> = years
            .iter()
            .map(|y| Year {
                year: y.year,
                count: y.count,
                mae: y.mae,
                q1: y.q1,
                median: y.median,
                q3: y.q3,
                manifest_hash: hash,
            })
            .collect();
        write_csv(&dir.join("yearwise.csv"), &rows)?;
    }
    Ok(())
}
