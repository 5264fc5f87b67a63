//! Fixed-topology dense networks with manual backpropagation.
//!
//! A layer computes `act(x * W + b)` with `W` stored as `in_dim x out_dim`.
//! A tied layer owns only its bias: its effective weight is the transpose of
//! the weight of the layer it is tied to, read at use time, so the pair can
//! never drift apart.
//!
//! Parameter enumeration order (used by optimisers and checkpoints): layer
//! index ascending, and within a layer the weight (if owned) before the bias.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    /// Index of the layer whose transposed weight this layer reuses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tied_to: Option<usize>,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
            tied_to: None,
        }
    }

    pub fn tied(in_dim: usize, out_dim: usize, activation: Activation, to: usize) -> Self {
        Self {
            tied_to: Some(to),
            ..Self::new(in_dim, out_dim, activation)
        }
    }
}

/// Borrowed view of one parameter tensor in enumeration order.
#[derive(Debug, Clone, Copy)]
pub struct TensorRef<'a> {
    pub layer: usize,
    pub kind: TensorKind,
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [f32],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Weight,
    Bias,
}

impl TensorRef<'_> {
    pub fn name(&self) -> String {
        match self.kind {
            TensorKind::Weight => format!("layer{}.weight", self.layer),
            TensorKind::Bias => format!("layer{}.bias", self.layer),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match self.kind {
            TensorKind::Weight => vec![self.rows, self.cols],
            TensorKind::Bias => vec![self.cols],
        }
    }
}

pub fn validate_layers(layers: &[LayerSpec]) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::InvalidArgument("network has no layers".into()));
    }
    for (i, l) in layers.iter().enumerate() {
        if l.in_dim == 0 || l.out_dim == 0 {
            return Err(Error::shape(Some(i), "zero-width layer"));
        }
        if i > 0 && layers[i - 1].out_dim != l.in_dim {
            return Err(Error::shape(
                Some(i),
                format!(
                    "input width {} does not match previous output width {}",
                    l.in_dim,
                    layers[i - 1].out_dim
                ),
            ));
        }
        if let Some(t) = l.tied_to {
            let owner = layers
                .get(t)
                .filter(|_| t != i)
                .ok_or_else(|| Error::shape(Some(i), format!("tied to missing layer {t}")))?;
            if owner.tied_to.is_some() {
                return Err(Error::shape(
                    Some(i),
                    format!("tied to layer {t}, which is itself tied"),
                ));
            }
            if (owner.out_dim, owner.in_dim) != (l.in_dim, l.out_dim) {
                return Err(Error::shape(
                    Some(i),
                    format!(
                        "tied layer is {}x{} but layer {t} is {}x{}",
                        l.in_dim, l.out_dim, owner.in_dim, owner.out_dim
                    ),
                ));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    layers: Vec<LayerSpec>,
    weights: Vec<Option<DenseMatrix>>,
    biases: Vec<Vec<f32>>,
    rng_seed: u64,
}

/// Per-layer activations retained for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    pub input: DenseMatrix,
    /// Pre-activation `x * W + b` per layer.
    pub pre: Vec<DenseMatrix>,
    /// Layer outputs after activation (and dropout, when active).
    pub post: Vec<DenseMatrix>,
    /// Inverted-dropout multipliers (`0` or `1 / (1 - p)`) per layer.
    pub masks: Vec<Option<DenseMatrix>>,
}

impl Trace {
    pub fn output(&self) -> &DenseMatrix {
        self.post.last().unwrap_or(&self.input)
    }
}

/// Gradients shaped exactly like the trainable parameters of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Option<DenseMatrix>>,
    pub biases: Vec<Vec<f32>>,
}

impl Gradients {
    pub fn zeros_like(net: &NetworkParams) -> Self {
        Self {
            weights: net
                .weights
                .iter()
                .map(|w| w.as_ref().map(|w| DenseMatrix::zeros(w.rows(), w.cols())))
                .collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        enumerate(&self.weights, &self.biases)
    }

    pub fn is_zero(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|&v| v == 0.0))
    }
}

fn enumerate<'a>(weights: &'a [Option<DenseMatrix>], biases: &'a [Vec<f32>]) -> Vec<TensorRef<'a>> {
    let mut out = Vec::with_capacity(weights.len() * 2);
    for (i, (w, b)) in weights.iter().zip(biases).enumerate() {
        if let Some(w) = w {
            out.push(TensorRef {
                layer: i,
                kind: TensorKind::Weight,
                rows: w.rows(),
                cols: w.cols(),
                data: w.as_slice(),
            });
        }
        out.push(TensorRef {
            layer: i,
            kind: TensorKind::Bias,
            rows: 1,
            cols: b.len(),
            data: b,
        });
    }
    out
}

/// Initial bias of ReLU layers. With non-negative inputs and a zero bias, a unit
/// whose initial weights are all negative never activates and never trains.
pub const RELU_BIAS_INIT: f32 = 0.1;

impl NetworkParams {
    /// Builds a network with freshly initialised weights, ReLU biases at
    /// [`RELU_BIAS_INIT`] and all other biases at zero.
    ///
    /// SELU layers draw from `N(0, 1/in)`; every other activation uses the
    /// uniform Glorot range `+-sqrt(6 / (in + out))`.
    pub fn new(layers: Vec<LayerSpec>, rng_seed: u64) -> Result<Self> {
        validate_layers(&layers)?;
        let mut rng = seed::rng(rng_seed);
        let mut weights = Vec::with_capacity(layers.len());
        for l in &layers {
            if l.tied_to.is_some() {
                weights.push(None);
                continue;
            }
            let n = l.in_dim * l.out_dim;
            let data: Vec<f32> = match l.activation {
                Activation::Selu => {
                    let std = libm::sqrt(1.0 / l.in_dim as f64);
                    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidArgument(format!("{e}")))?;
                    (0..n).map(|_| normal.sample(&mut rng) as f32).collect()
                }
                _ => {
                    let limit = libm::sqrt(6.0 / (l.in_dim + l.out_dim) as f64);
                    (0..n).map(|_| rng.random_range(-limit..limit) as f32).collect()
                }
            };
            weights.push(Some(DenseMatrix::from_vec(l.in_dim, l.out_dim, data)?));
        }
        let biases = layers
            .iter()
            .map(|l| {
                let b = if l.activation == Activation::Relu {
                    RELU_BIAS_INIT
                } else {
                    0.0
                };
                vec![b; l.out_dim]
            })
            .collect();
        Ok(Self {
            layers,
            weights,
            biases,
            rng_seed,
        })
    }

    /// Reassembles a network from stored tensors (checkpoint loading).
    pub fn from_parts(
        layers: Vec<LayerSpec>,
        weights: Vec<Option<DenseMatrix>>,
        biases: Vec<Vec<f32>>,
        rng_seed: u64,
    ) -> Result<Self> {
        validate_layers(&layers)?;
        if weights.len() != layers.len() || biases.len() != layers.len() {
            return Err(Error::shape(None, "tensor count does not match layer count"));
        }
        for (i, l) in layers.iter().enumerate() {
            match (&weights[i], l.tied_to) {
                (None, Some(_)) => {}
                (Some(w), None) if w.shape() == (l.in_dim, l.out_dim) => {}
                _ => return Err(Error::shape(Some(i), "weight tensor absent or misshapen")),
            }
            if biases[i].len() != l.out_dim {
                return Err(Error::shape(Some(i), "bias length"));
            }
        }
        Ok(Self {
            layers,
            weights,
            biases,
            rng_seed,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    /// Stored weight of layer `i`; `None` for tied layers.
    pub fn weight(&self, i: usize) -> Option<&DenseMatrix> {
        self.weights[i].as_ref()
    }

    pub fn weight_mut(&mut self, i: usize) -> Option<&mut DenseMatrix> {
        self.weights[i].as_mut()
    }

    /// The `in_dim x out_dim` weight layer `i` actually applies.
    pub fn effective_weight(&self, i: usize) -> DenseMatrix {
        match self.layers[i].tied_to {
            Some(owner) => self.owned_weight(owner).transpose(),
            None => self.owned_weight(i).clone(),
        }
    }

    pub fn bias(&self, i: usize) -> &[f32] {
        &self.biases[i]
    }

    pub fn bias_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.biases[i]
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.layers)
    }

    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        enumerate(&self.weights, &self.biases)
    }

    /// Mutable parameter slices in enumeration order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f32]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            if let Some(w) = w {
                out.push(w.as_mut_slice());
            }
            out.push(b.as_mut_slice());
        }
        out
    }

    fn owned_weight(&self, i: usize) -> &DenseMatrix {
        self.weights[i]
            .as_ref()
            .expect("validated: tied layers reference owning layers")
    }

    fn affine(&self, i: usize, x: &DenseMatrix) -> Result<DenseMatrix> {
        let l = &self.layers[i];
        if x.cols() != l.in_dim {
            return Err(Error::shape(
                Some(i),
                format!("input has {} columns, layer expects {}", x.cols(), l.in_dim),
            ));
        }
        let mut z = match l.tied_to {
            Some(owner) => x.matmul_transb(self.owned_weight(owner)),
            None => x.matmul(self.owned_weight(i)),
        }
        .map_err(|e| relabel(e, i))?;
        z.add_row_vector(&self.biases[i]).map_err(|e| relabel(e, i))?;
        Ok(z)
    }

    /// Eval-mode forward pass retaining the full trace.
    pub fn forward(&self, batch: &DenseMatrix) -> Result<Trace> {
        self.forward_impl(batch, None)
    }

    /// Train-mode forward pass: inverted dropout with rate `p` after every
    /// hidden activation (never after the output layer).
    pub fn forward_train(&self, batch: &DenseMatrix, p: f32, rng: &mut seed::Rng) -> Result<Trace> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("dropout rate {p} outside [0, 1)")));
        }
        self.forward_impl(batch, if p > 0.0 { Some((p, rng)) } else { None })
    }

    fn forward_impl(&self, batch: &DenseMatrix, mut dropout: Option<(f32, &mut seed::Rng)>) -> Result<Trace> {
        let n = self.layers.len();
        let mut pre = Vec::with_capacity(n);
        let mut post: Vec<DenseMatrix> = Vec::with_capacity(n);
        let mut masks = Vec::with_capacity(n);
        for i in 0..n {
            let x = if i == 0 { batch } else { &post[i - 1] };
            let z = self.affine(i, x)?;
            let mut a = self.layers[i].activation.apply(&z, crate::ActivationMode::Forward);
            let mask = match dropout.as_mut() {
                Some((p, rng)) if i + 1 < n => {
                    let keep = 1.0 / (1.0 - *p);
                    let m = DenseMatrix::from_vec(
                        a.rows(),
                        a.cols(),
                        (0..a.rows() * a.cols())
                            .map(|_| if rng.random::<f32>() < *p { 0.0 } else { keep })
                            .collect(),
                    )?;
                    a.hadamard_in_place(&m)?;
                    Some(m)
                }
                _ => None,
            };
            pre.push(z);
            post.push(a);
            masks.push(mask);
        }
        Ok(Trace {
            input: batch.clone(),
            pre,
            post,
            masks,
        })
    }

    /// Eval-mode forward through `layers[range]` only, returning the last output.
    pub fn forward_range(&self, batch: &DenseMatrix, range: Range<usize>) -> Result<DenseMatrix> {
        if range.end > self.layers.len() || range.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "layer range {range:?} outside network of {} layers",
                self.layers.len()
            )));
        }
        let mut x = batch.clone();
        for i in range {
            let z = self.affine(i, &x)?;
            x = self.layers[i].activation.apply(&z, crate::ActivationMode::Forward);
        }
        Ok(x)
    }

    pub fn predict(&self, batch: &DenseMatrix) -> Result<DenseMatrix> {
        self.forward_range(batch, 0..self.layers.len())
    }

    /// Backpropagates `output_grad` (dLoss/dOutput) through a trace of this
    /// network. Gradients of a tied layer are transposed and added into the
    /// owning layer's weight gradient.
    pub fn backward(&self, trace: &Trace, output_grad: &DenseMatrix) -> Result<Gradients> {
        let n = self.layers.len();
        if trace.pre.len() != n || trace.post.len() != n || trace.masks.len() != n {
            return Err(Error::shape(
                None,
                format!("trace covers {} layers, network has {n}", trace.pre.len()),
            ));
        }
        for (i, l) in self.layers.iter().enumerate() {
            let rows = trace.input.rows();
            if trace.pre[i].shape() != (rows, l.out_dim) || trace.post[i].shape() != (rows, l.out_dim) {
                return Err(Error::shape(Some(i), "trace does not match this network"));
            }
        }
        if trace.input.cols() != self.input_dim() {
            return Err(Error::shape(Some(0), "trace input width"));
        }
        if output_grad.shape() != trace.output().shape() {
            return Err(Error::shape(
                Some(n - 1),
                format!(
                    "output gradient {:?} vs output {:?}",
                    output_grad.shape(),
                    trace.output().shape()
                ),
            ));
        }

        let mut grads = Gradients::zeros_like(self);
        let mut upstream = output_grad.clone();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            if let Some(mask) = &trace.masks[i] {
                upstream.hadamard_in_place(mask)?;
            }
            let mut delta = layer.activation.apply(&trace.pre[i], crate::ActivationMode::Derivative);
            delta.hadamard_in_place(&upstream)?;

            grads.biases[i] = delta.column_sums();
            let x = if i == 0 { &trace.input } else { &trace.post[i - 1] };
            match layer.tied_to {
                None => {
                    let gw = x.matmul_transa(&delta)?;
                    grads.weights[i]
                        .as_mut()
                        .expect("untied layer owns a gradient")
                        .add_in_place(&gw)?;
                }
                Some(owner) => {
                    // effective W = W_owner^T, so dW_owner = (x^T delta)^T = delta^T x
                    let gw = delta.matmul_transa(x)?;
                    grads.weights[owner]
                        .as_mut()
                        .expect("owner layer owns a gradient")
                        .add_in_place(&gw)?;
                }
            }
            if i > 0 {
                upstream = match layer.tied_to {
                    None => delta.matmul_transb(self.owned_weight(i))?,
                    Some(owner) => delta.matmul(self.owned_weight(owner))?,
                };
            }
        }
        Ok(grads)
    }
}

fn relabel(e: Error, layer: usize) -> Error {
    match e {
        Error::Shape { detail, .. } => Error::Shape {
            layer: Some(layer),
            detail,
        },
        other => other,
    }
}

/// Trainable parameter count: owned weights plus every bias.
pub fn param_count(layers: &[LayerSpec]) -> usize {
    layers
        .iter()
        .map(|l| l.out_dim + if l.tied_to.is_some() { 0 } else { l.in_dim * l.out_dim })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::mse_loss;

    fn relu(i: usize, o: usize) -> LayerSpec {
        LayerSpec::new(i, o, Activation::Relu)
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut net = NetworkParams::new(vec![LayerSpec::new(3, 3, Activation::Identity)], 1).unwrap();
        *net.weight_mut(0).unwrap() = DenseMatrix::identity(3);
        let x = DenseMatrix::from_rows(&[[1.0f32, -2.0, 3.5], [0.0, 4.0, -1.0]]).unwrap();
        assert_eq!(net.forward(&x).unwrap().output(), &x);
    }

    #[test]
    fn hand_computed_two_layer_forward() {
        // x = [1, 2]
        // layer0 (relu): W = [[1, -1], [0.5, 2]], b = [0, -1]
        //   z = [1*1 + 2*0.5, 1*-1 + 2*2 - 1] = [2, 2] -> relu [2, 2]
        // layer1 (identity): W = [[0.25, 1], [-0.5, 3]], b = [1, 0]
        //   z = [2*0.25 - 2*0.5 + 1, 2*1 + 2*3] = [0.5, 8]
        let mut net = NetworkParams::new(vec![relu(2, 2), LayerSpec::new(2, 2, Activation::Identity)], 0).unwrap();
        *net.weight_mut(0).unwrap() = DenseMatrix::from_vec(2, 2, vec![1.0, -1.0, 0.5, 2.0]).unwrap();
        net.bias_mut(0).copy_from_slice(&[0.0, -1.0]);
        *net.weight_mut(1).unwrap() = DenseMatrix::from_vec(2, 2, vec![0.25, 1.0, -0.5, 3.0]).unwrap();
        net.bias_mut(1).copy_from_slice(&[1.0, 0.0]);
        let x = DenseMatrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        assert_eq!(net.forward(&x).unwrap().output().as_slice(), &[0.5, 8.0]);
    }

    #[test]
    fn empty_batch_keeps_output_width() {
        let net = NetworkParams::new(vec![relu(4, 3), relu(3, 2)], 3).unwrap();
        let out = net.forward(&DenseMatrix::zeros(0, 4)).unwrap();
        assert_eq!(out.output().shape(), (0, 2));
    }

    #[test]
    fn dimension_mismatch_names_layer() {
        let net = NetworkParams::new(vec![relu(4, 3), relu(3, 2)], 3).unwrap();
        let err = net.forward(&DenseMatrix::zeros(2, 5)).unwrap_err();
        assert!(matches!(err, Error::Shape { layer: Some(0), .. }), "{err}");
        assert!(NetworkParams::new(vec![relu(4, 3), relu(2, 2)], 0).is_err());
    }

    #[test]
    fn tied_layer_validation() {
        assert!(NetworkParams::new(vec![relu(4, 2), LayerSpec::tied(2, 4, Activation::Identity, 0)], 0).is_ok());
        // wrong orientation
        assert!(validate_layers(&[relu(4, 4), LayerSpec::tied(4, 3, Activation::Identity, 0)]).is_err());
        // tied to itself
        assert!(validate_layers(&[LayerSpec::tied(4, 4, Activation::Identity, 0)]).is_err());
    }

    #[test]
    fn param_count_skips_tied_weights() {
        let layers = vec![
            relu(6, 3),
            relu(3, 2),
            LayerSpec::tied(2, 3, Activation::Relu, 1),
            LayerSpec::tied(3, 6, Activation::Identity, 0),
        ];
        let net = NetworkParams::new(layers, 0).unwrap();
        assert_eq!(net.param_count(), 18 + 6 + 3 + 2 + 3 + 6);
        let stored: usize = net.tensors().iter().map(|t| t.data.len()).sum();
        assert_eq!(stored, net.param_count());
        let names: Vec<_> = net.tensors().iter().map(|t| t.name()).collect();
        assert_eq!(
            names,
            [
                "layer0.weight",
                "layer0.bias",
                "layer1.weight",
                "layer1.bias",
                "layer2.bias",
                "layer3.bias"
            ]
        );
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let net = NetworkParams::new(vec![relu(3, 4), LayerSpec::new(4, 2, Activation::Sigmoid)], 9).unwrap();
        let x = DenseMatrix::from_vec(2, 3, vec![0.1, 0.2, 0.3, -0.4, 0.5, 0.6]).unwrap();
        let trace = net.forward(&x).unwrap();
        let g = net.backward(&trace, &DenseMatrix::zeros(2, 2)).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn stale_trace_is_rejected() {
        let a = NetworkParams::new(vec![relu(3, 4), relu(4, 2)], 9).unwrap();
        let b = NetworkParams::new(vec![relu(3, 5), relu(5, 2)], 9).unwrap();
        let x = DenseMatrix::zeros(2, 3);
        let trace = b.forward(&x).unwrap();
        assert!(a.backward(&trace, &DenseMatrix::zeros(2, 2)).is_err());
        let trace = a.forward(&x).unwrap();
        assert!(a.backward(&trace, &DenseMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn tied_pair_gradient_is_sum_of_both_paths() {
        // Input x (1x2), encoder W (2x1) identity activation, decoder uses W^T.
        // y = (x W + b0) W^T + b1; L = mean((y - t)^2) over 2 outputs.
        // dL/dy = (y - t); h = x W + b0.
        // dW = x^T (dL/dy W) [encoder path] + (dL/dy)^T h [decoder path, transposed]
        let mut net = NetworkParams::new(
            vec![
                LayerSpec::new(2, 1, Activation::Identity),
                LayerSpec::tied(1, 2, Activation::Identity, 0),
            ],
            0,
        )
        .unwrap();
        *net.weight_mut(0).unwrap() = DenseMatrix::from_vec(2, 1, vec![0.5, -1.0]).unwrap();
        net.bias_mut(0)[0] = 0.25;
        net.bias_mut(1).copy_from_slice(&[0.0, 0.5]);
        let x = DenseMatrix::from_vec(1, 2, vec![2.0, 1.0]).unwrap();
        let t = DenseMatrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap();
        // h = 2*0.5 + 1*-1 + 0.25 = 0.25
        // y = [0.25*0.5, 0.25*-1 + 0.5] = [0.125, 0.25]
        // g = 2(y - t)/2 = [-0.875, 0.25]
        // encoder path: g W = -0.875*0.5 + 0.25*-1 = -0.6875; x^T * that = [-1.375, -0.6875]
        // decoder path: g * h = [-0.21875, 0.0625]
        // total = [-1.59375, -0.625]
        let trace = net.forward(&x).unwrap();
        let loss = mse_loss(trace.output(), &t).unwrap();
        let g = net.backward(&trace, &loss.gradient).unwrap();
        assert_eq!(g.weights[0].as_ref().unwrap().as_slice(), &[-1.59375, -0.625]);
        assert!(g.weights[1].is_none());
        assert_eq!(g.biases[0], vec![-0.6875]);
        assert_eq!(g.biases[1], vec![-0.875, 0.25]);
    }

    #[test]
    fn dropout_zero_matches_eval_mode() {
        let net = NetworkParams::new(vec![relu(3, 4), LayerSpec::new(4, 1, Activation::Sigmoid)], 2).unwrap();
        let x = DenseMatrix::from_vec(2, 3, vec![0.1, 0.2, 0.3, -0.4, 0.5, 0.6]).unwrap();
        let mut rng = seed::rng(0);
        let train = net.forward_train(&x, 0.0, &mut rng).unwrap();
        assert_eq!(train.output(), net.forward(&x).unwrap().output());
        assert!(net.forward_train(&x, 1.0, &mut rng).is_err());
    }

    #[test]
    fn dropout_masks_are_inverted_bernoulli() {
        let net = NetworkParams::new(vec![relu(8, 400), LayerSpec::new(400, 1, Activation::Sigmoid)], 2).unwrap();
        let x = DenseMatrix::from_vec(25, 8, (0..200).map(|i| (i % 7) as f32 * 0.1).collect()).unwrap();
        let mut rng = seed::rng(5);
        let t = net.forward_train(&x, 0.25, &mut rng).unwrap();
        let mask = t.masks[0].as_ref().unwrap();
        assert!(t.masks[1].is_none());
        let zeros = mask.as_slice().iter().filter(|&&v| v == 0.0).count();
        assert!(mask.as_slice().iter().all(|&v| v == 0.0 || v == 1.0 / 0.75));
        let frac = zeros as f64 / mask.as_slice().len() as f64;
        assert!((frac - 0.25).abs() < 0.02, "{frac}");
    }
}
