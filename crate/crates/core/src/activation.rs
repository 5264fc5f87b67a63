use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::matrix::DenseMatrix;

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;

/// `sqrt(2 / pi)`, the GELU tanh-approximation scale.
const GELU_C: f64 = 0.797_884_560_802_865_4;
const GELU_CUBIC: f64 = 0.044_715;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Selu,
    Silu,
    Gelu,
    Sigmoid,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationMode {
    Forward,
    /// Derivative with respect to the pre-activation input.
    Derivative,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

impl Activation {
    pub const ALL: [Activation; 6] = [
        Activation::Relu,
        Activation::Selu,
        Activation::Silu,
        Activation::Gelu,
        Activation::Sigmoid,
        Activation::Identity,
    ];

    /// Double-precision forward pass; the `f32` paths round this result.
    pub fn forward_f64(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Selu => {
                if x >= 0.0 {
                    SELU_LAMBDA * x
                } else {
                    SELU_LAMBDA * SELU_ALPHA * libm::expm1(x)
                }
            }
            Activation::Silu => x * sigmoid(x),
            Activation::Gelu => {
                let u = GELU_C * (x + GELU_CUBIC * x * x * x);
                0.5 * x * (1.0 + libm::tanh(u))
            }
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    pub fn derivative_f64(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Selu => {
                if x >= 0.0 {
                    SELU_LAMBDA
                } else {
                    SELU_LAMBDA * SELU_ALPHA * libm::exp(x)
                }
            }
            Activation::Silu => {
                let s = sigmoid(x);
                s * (1.0 + x * (1.0 - s))
            }
            Activation::Gelu => {
                let u = GELU_C * (x + GELU_CUBIC * x * x * x);
                let t = libm::tanh(u);
                0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_CUBIC * x * x)
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }

    #[inline]
    pub fn forward(self, x: f32) -> f32 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            _ => self.forward_f64(x as f64) as f32,
        }
    }

    #[inline]
    pub fn derivative(self, x: f32) -> f32 {
        self.derivative_f64(x as f64) as f32
    }

    pub fn eval(self, x: f32, mode: ActivationMode) -> f32 {
        match mode {
            ActivationMode::Forward => self.forward(x),
            ActivationMode::Derivative => self.derivative(x),
        }
    }

    /// Element-wise application over a matrix.
    pub fn apply(self, x: &DenseMatrix, mode: ActivationMode) -> DenseMatrix {
        x.map(|v| self.eval(v, mode))
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Selu => "selu",
            Activation::Silu => "silu",
            Activation::Gelu => "gelu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown activation `{s}`")))
    }
}
