//! Pooling of per-token hidden states into fixed-size lyric vectors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Last-layer hidden states for one lyric, one row per token.
/// Padding tokens are expected to be stripped already.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddingMatrix {
    data: DenseMatrix,
    cls_index: Option<usize>,
}

impl TokenEmbeddingMatrix {
    pub fn new(data: DenseMatrix, cls_index: Option<usize>) -> Result<Self> {
        if let Some(c) = cls_index {
            if c >= data.rows() {
                return Err(Error::InvalidArgument(format!(
                    "CLS index {c} outside {} tokens",
                    data.rows()
                )));
            }
        }
        Ok(Self { data, cls_index })
    }

    pub fn tokens(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn cls_index(&self) -> Option<usize> {
        self.cls_index
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.data
    }

    fn require_tokens(&self) -> Result<()> {
        if self.tokens() == 0 {
            return Err(Error::Degenerate("token matrix has no rows".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Mean,
    Max,
    /// Column-wise max followed by the CLS row: output width `2 * D`.
    ConcatMaxCls,
}

impl Pooling {
    pub fn apply(self, m: &TokenEmbeddingMatrix) -> Result<Vec<f32>> {
        match self {
            Pooling::Mean => mean_pool(m),
            Pooling::Max => max_pool(m),
            Pooling::ConcatMaxCls => concat_max_cls(m),
        }
    }

    pub fn output_dim(self, dim: usize) -> usize {
        match self {
            Pooling::ConcatMaxCls => 2 * dim,
            _ => dim,
        }
    }
}

pub fn mean_pool(m: &TokenEmbeddingMatrix) -> Result<Vec<f32>> {
    m.require_tokens()?;
    let mut acc = vec![0.0f64; m.dim()];
    for r in 0..m.tokens() {
        for (a, &v) in acc.iter_mut().zip(m.data.row(r)) {
            *a += v as f64;
        }
    }
    let t = m.tokens() as f64;
    Ok(acc.into_iter().map(|a| (a / t) as f32).collect())
}

pub fn max_pool(m: &TokenEmbeddingMatrix) -> Result<Vec<f32>> {
    m.require_tokens()?;
    let mut out = m.data.row(0).to_vec();
    for r in 1..m.tokens() {
        for (o, &v) in out.iter_mut().zip(m.data.row(r)) {
            if v > *o {
                *o = v;
            }
        }
    }
    Ok(out)
}

pub fn concat_max_cls(m: &TokenEmbeddingMatrix) -> Result<Vec<f32>> {
    let cls = m
        .cls_index
        .ok_or_else(|| Error::InvalidArgument("concat max+CLS pooling needs a CLS token index".into()))?;
    let mut out = max_pool(m)?;
    out.extend_from_slice(m.data.row(cls));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm(rows: &[[f32; 2]], cls: Option<usize>) -> TokenEmbeddingMatrix {
        TokenEmbeddingMatrix::new(DenseMatrix::from_rows(rows).unwrap(), cls).unwrap()
    }

    #[test]
    fn hand_cases() {
        let m = tm(&[[1.0, 3.0], [5.0, 7.0]], Some(0));
        assert_eq!(mean_pool(&m).unwrap(), vec![3.0, 5.0]);
        assert_eq!(max_pool(&m).unwrap(), vec![5.0, 7.0]);
        assert_eq!(concat_max_cls(&m).unwrap(), vec![5.0, 7.0, 1.0, 3.0]);
        let single = tm(&[[2.0, -1.0]], Some(0));
        assert_eq!(mean_pool(&single).unwrap(), vec![2.0, -1.0]);
        assert_eq!(concat_max_cls(&single).unwrap(), vec![2.0, -1.0, 2.0, -1.0]);
        let same = tm(&[[4.0, 4.5], [4.0, 4.5], [4.0, 4.5]], None);
        assert_eq!(max_pool(&same).unwrap(), vec![4.0, 4.5]);
    }

    #[test]
    fn error_cases() {
        let empty = TokenEmbeddingMatrix::new(DenseMatrix::zeros(0, 3), None).unwrap();
        assert!(mean_pool(&empty).is_err());
        assert!(max_pool(&empty).is_err());
        assert!(concat_max_cls(&tm(&[[1.0, 2.0]], None)).is_err());
        assert!(TokenEmbeddingMatrix::new(DenseMatrix::zeros(2, 3), Some(2)).is_err());
        assert_eq!(Pooling::ConcatMaxCls.output_dim(768), 1536);
    }
}
