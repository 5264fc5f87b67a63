//! Reconstruction and regression losses.

use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub value: f64,
    /// dLoss/dPrediction, same shape as the prediction.
    pub gradient: DenseMatrix,
}

/// Loss choice for autoencoder training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Loss {
    Mse,
    /// `alpha1 * MSE + alpha2 * mean row-wise cosine distance`.
    Directional {
        alpha1: f32,
        alpha2: f32,
    },
}

impl Loss {
    /// The weighting used for embedding compression experiments: 0.5 and 0.5 / 5.
    pub const DIRECTIONAL_DEFAULT: Loss = Loss::Directional {
        alpha1: 0.5,
        alpha2: 0.1,
    };

    pub fn evaluate(&self, pred: &DenseMatrix, target: &DenseMatrix) -> Result<LossResult> {
        match *self {
            Loss::Mse => mse_loss(pred, target),
            Loss::Directional { alpha1, alpha2 } => directional_loss(pred, target, alpha1, alpha2),
        }
    }
}

fn check_shapes(pred: &DenseMatrix, target: &DenseMatrix) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(
            None,
            format!("prediction {:?} vs target {:?}", pred.shape(), target.shape()),
        ));
    }
    Ok(())
}

/// Mean squared error over every element; gradient `2 (pred - target) / N`.
pub fn mse_loss(pred: &DenseMatrix, target: &DenseMatrix) -> Result<LossResult> {
    check_shapes(pred, target)?;
    let n = pred.as_slice().len();
    let mut gradient = DenseMatrix::zeros(pred.rows(), pred.cols());
    if n == 0 {
        return Ok(LossResult { value: 0.0, gradient });
    }
    let inv_n = 1.0 / n as f64;
    let mut sum = 0.0f64;
    for ((g, &p), &t) in gradient
        .as_mut_slice()
        .iter_mut()
        .zip(pred.as_slice())
        .zip(target.as_slice())
    {
        let d = p as f64 - t as f64;
        sum += d * d;
        *g = (2.0 * d * inv_n) as f32;
    }
    Ok(LossResult {
        value: sum * inv_n,
        gradient,
    })
}

/// Mean over rows of `1 - cos(pred_row, target_row)`.
///
/// Rows with zero norm have no direction and are rejected.
pub fn cosine_distance(pred: &DenseMatrix, target: &DenseMatrix) -> Result<LossResult> {
    check_shapes(pred, target)?;
    let rows = pred.rows();
    let mut gradient = DenseMatrix::zeros(rows, pred.cols());
    if rows == 0 {
        return Ok(LossResult { value: 0.0, gradient });
    }
    let inv_rows = 1.0 / rows as f64;
    let mut total = 0.0f64;
    for r in 0..rows {
        let (p, t) = (pred.row(r), target.row(r));
        let (mut dot, mut pp, mut tt) = (0.0f64, 0.0f64, 0.0f64);
        for (&a, &b) in p.iter().zip(t) {
            let (a, b) = (a as f64, b as f64);
            dot += a * b;
            pp += a * a;
            tt += b * b;
        }
        if pp == 0.0 || tt == 0.0 {
            let which = if pp == 0.0 { "prediction" } else { "target" };
            return Err(Error::Degenerate(format!(
                "{which} row {r} is all zeros; cosine distance is undefined"
            )));
        }
        let (np, nt) = (libm::sqrt(pp), libm::sqrt(tt));
        let cos = dot / (np * nt);
        total += 1.0 - cos;
        // d(1 - cos)/dp = -(t / (|p||t|) - cos * p / |p|^2)
        for ((g, &a), &b) in gradient.row_mut(r).iter_mut().zip(p).zip(t) {
            let d = -(b as f64 / (np * nt) - cos * a as f64 / pp);
            *g = (d * inv_rows) as f32;
        }
    }
    Ok(LossResult {
        value: total * inv_rows,
        gradient,
    })
}

/// `alpha1 * MSE + alpha2 * CD`. With `alpha2 == 0` this is exactly
/// `alpha1 * mse_loss`, value and gradient.
pub fn directional_loss(pred: &DenseMatrix, target: &DenseMatrix, alpha1: f32, alpha2: f32) -> Result<LossResult> {
    if !(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha1.is_finite() && alpha2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "loss weights must be finite and non-negative, got {alpha1}, {alpha2}"
        )));
    }
    let mse = mse_loss(pred, target)?;
    let cd = cosine_distance(pred, target)?;
    let (a1, a2) = (alpha1 as f64, alpha2 as f64);
    let mut gradient = mse.gradient;
    for (g, &c) in gradient.as_mut_slice().iter_mut().zip(cd.gradient.as_slice()) {
        *g = *g * alpha1 + (a2 * c as f64) as f32;
    }
    Ok(LossResult {
        value: a1 * mse.value + a2 * cd.value,
        gradient,
    })
}
