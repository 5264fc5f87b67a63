use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mask::{Modality, ModalityMask};
use super::record::{normalize_popularity, TrackRecord, HL_DIM, LL_DIM, META_DIM, STYLO_DIM};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Feature blocks for a set of records. Blocks outside the requested mask
/// have zero columns. Concatenation order is HH, LL, LR, M (then the optional
/// stylometric block).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub ids: Vec<String>,
    pub hl: DenseMatrix,
    pub ll: DenseMatrix,
    pub lyr: DenseMatrix,
    pub meta: DenseMatrix,
    pub stylo: DenseMatrix,
    /// Popularity on `[0, 1]`.
    pub target: Vec<f32>,
}

fn block<F>(records: &[TrackRecord], width: usize, on: bool, get: F) -> Result<DenseMatrix>
where
    F: Fn(&TrackRecord) -> Option<&[f32]>,
{
    if !on {
        return Ok(DenseMatrix::zeros(records.len(), 0));
    }
    let mut data = Vec::with_capacity(records.len() * width);
    for r in records {
        let v = get(r).ok_or_else(|| {
            Error::MissingModality(format!("record `{}` lacks a requested feature block", r.track_id))
        })?;
        if v.len() != width {
            return Err(Error::shape(
                None,
                format!("record `{}` block width {} != {width}", r.track_id, v.len()),
            ));
        }
        data.extend_from_slice(v);
    }
    DenseMatrix::from_vec(records.len(), width, data)
}

/// Gathers the masked feature blocks and normalised targets, unscaled.
pub fn assemble_features(records: &[TrackRecord], mask: ModalityMask) -> Result<FeatureBundle> {
    assemble_features_with(records, mask, false)
}

pub fn assemble_features_with(
    records: &[TrackRecord],
    mask: ModalityMask,
    include_stylo: bool,
) -> Result<FeatureBundle> {
    let lyr_width = if mask.contains(Modality::Lr) {
        let w = records.first().and_then(|r| r.lyric_embedding.as_ref()).map(Vec::len);
        match (w, records.is_empty()) {
            (Some(w), _) => w,
            (None, true) => 0,
            (None, false) => {
                return Err(Error::MissingModality(format!(
                    "LR requested but record `{}` has no lyric embedding",
                    records[0].track_id
                )))
            }
        }
    } else {
        0
    };
    let lyr = block(records, lyr_width, mask.contains(Modality::Lr), |r| {
        r.lyric_embedding.as_deref()
    })
    .map_err(|e| match e {
        Error::MissingModality(m) => Error::MissingModality(format!("LR: {m}")),
        e => e,
    })?;
    Ok(FeatureBundle {
        ids: records.iter().map(|r| r.track_id.clone()).collect(),
        hl: block(records, HL_DIM, mask.contains(Modality::Hh), |r| Some(&r.hl_audio))?,
        ll: block(records, LL_DIM, mask.contains(Modality::Ll), |r| Some(&r.ll_audio))?,
        lyr,
        meta: block(records, META_DIM, mask.contains(Modality::M), |r| Some(&r.metadata))?,
        stylo: block(records, STYLO_DIM, include_stylo, |r| r.stylo_text.as_deref())?,
        target: records
            .iter()
            .map(|r| normalize_popularity(r.popularity_raw as f32))
            .collect::<Result<_>>()?,
    })
}

impl FeatureBundle {
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn widths(&self) -> [usize; 5] {
        [
            self.hl.cols(),
            self.ll.cols(),
            self.lyr.cols(),
            self.meta.cols(),
            self.stylo.cols(),
        ]
    }

    pub fn concat(&self) -> DenseMatrix {
        DenseMatrix::hstack(&[&self.hl, &self.ll, &self.lyr, &self.meta, &self.stylo])
            .expect("blocks share a row count")
    }

    pub fn select(&self, rows: &[usize]) -> FeatureBundle {
        FeatureBundle {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            hl: self.hl.select_rows(rows),
            ll: self.ll.select_rows(rows),
            lyr: self.lyr.select_rows(rows),
            meta: self.meta.select_rows(rows),
            stylo: self.stylo.select_rows(rows),
            target: rows.iter().map(|&i| self.target[i]).collect(),
        }
    }

    pub fn target_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_vec(self.len(), 1, self.target.clone()).expect("n x 1")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    /// `(x - min) / (max - min)`, constant columns map to 0.
    MinMax,
    /// `(x - mean) / std`, constant columns map to 0.
    Standard,
}

/// Per-column affine scaler fitted on training rows only. Values outside the
/// fitted range are not clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockScaler {
    pub kind: ScaleKind,
    /// Column minimum (min-max) or mean (standard).
    pub offset: Vec<f32>,
    /// Column range (min-max) or standard deviation (standard); zero marks a constant column.
    pub scale: Vec<f32>,
}

impl BlockScaler {
    pub fn fit(kind: ScaleKind, x: &DenseMatrix, rows: &[usize]) -> Result<Self> {
        let d = x.cols();
        if d > 0 && rows.is_empty() {
            return Err(Error::InvalidArgument("cannot fit a scaler on zero rows".into()));
        }
        let (offset, scale) = match kind {
            ScaleKind::MinMax => {
                let mut lo = vec![f32::INFINITY; d];
                let mut hi = vec![f32::NEG_INFINITY; d];
                for &r in rows {
                    for ((l, h), &v) in lo.iter_mut().zip(hi.iter_mut()).zip(x.row(r)) {
                        *l = l.min(v);
                        *h = h.max(v);
                    }
                }
                let range = lo.iter().zip(&hi).map(|(&l, &h)| h - l).collect();
                (lo, range)
            }
            ScaleKind::Standard => {
                let n = rows.len() as f64;
                let mut sum = vec![0.0f64; d];
                for &r in rows {
                    for (s, &v) in sum.iter_mut().zip(x.row(r)) {
                        *s += v as f64;
                    }
                }
                let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
                let mut ss = vec![0.0f64; d];
                for &r in rows {
                    for ((s, &m), &v) in ss.iter_mut().zip(&mean).zip(x.row(r)) {
                        let dv = v as f64 - m;
                        *s += dv * dv;
                    }
                }
                (
                    mean.iter().map(|&m| m as f32).collect(),
                    ss.iter().map(|&s| libm::sqrt(s / n) as f32).collect(),
                )
            }
        };
        Ok(Self { kind, offset, scale })
    }

    pub fn width(&self) -> usize {
        self.offset.len()
    }

    pub fn transform(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.width() {
            return Err(Error::shape(
                None,
                format!("scaler fitted on {} columns applied to {}", self.width(), x.cols()),
            ));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, &o), &s) in out.row_mut(r).iter_mut().zip(&self.offset).zip(&self.scale) {
                *v = if s > 0.0 {
                    ((*v as f64 - o as f64) / s as f64) as f32
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }
}

/// Scalers for every feature block: min-max for audio, metadata and
/// stylometrics, standardisation for lyric embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct InputScalers {
    pub hl: BlockScaler,
    pub ll: BlockScaler,
    pub lyr: BlockScaler,
    pub meta: BlockScaler,
    pub stylo: BlockScaler,
}

impl InputScalers {
    pub fn fit(bundle: &FeatureBundle, train_rows: &[usize]) -> Result<Self> {
        Ok(Self {
            hl: BlockScaler::fit(ScaleKind::MinMax, &bundle.hl, train_rows)?,
            ll: BlockScaler::fit(ScaleKind::MinMax, &bundle.ll, train_rows)?,
            lyr: BlockScaler::fit(ScaleKind::Standard, &bundle.lyr, train_rows)?,
            meta: BlockScaler::fit(ScaleKind::MinMax, &bundle.meta, train_rows)?,
            stylo: BlockScaler::fit(ScaleKind::MinMax, &bundle.stylo, train_rows)?,
        })
    }

    pub fn transform(&self, bundle: &FeatureBundle) -> Result<FeatureBundle> {
        Ok(FeatureBundle {
            ids: bundle.ids.clone(),
            hl: self.hl.transform(&bundle.hl)?,
            ll: self.ll.transform(&bundle.ll)?,
            lyr: self.lyr.transform(&bundle.lyr)?,
            meta: self.meta.transform(&bundle.meta)?,
            stylo: self.stylo.transform(&bundle.stylo)?,
            target: bundle.target.clone(),
        })
    }

    pub fn blocks(&self) -> [(&'static str, &BlockScaler); 5] {
        [
            ("hl", &self.hl),
            ("ll", &self.ll),
            ("lyr", &self.lyr),
            ("meta", &self.meta),
            ("stylo", &self.stylo),
        ]
    }
}
