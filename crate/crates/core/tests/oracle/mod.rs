//! Independent reference computations shared by the integration tests.
//!
//! Everything here is written against plain `f64` slices (or nalgebra) so it
//! does not reuse the crate's matrix, network or loss code.

#![allow(dead_code)]

use lyricnet_core::loss::Loss;
use lyricnet_core::{seed, Activation, DenseMatrix, LayerSpec, NetworkParams};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Relative error with a `1e-4` floor on the denominator, so gradients that
/// cancel to (near) zero are compared absolutely.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

pub const FD_STEP: f64 = 1e-6;

pub fn central_difference(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

pub fn mse(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64
}

pub fn cosine_distance(pred: &[f64], target: &[f64], cols: usize) -> f64 {
    let rows = pred.len() / cols;
    let mut total = 0.0;
    for r in 0..rows {
        let p = &pred[r * cols..(r + 1) * cols];
        let t = &target[r * cols..(r + 1) * cols];
        let dot: f64 = p.iter().zip(t).map(|(a, b)| a * b).sum();
        let np: f64 = p.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nt: f64 = t.iter().map(|a| a * a).sum::<f64>().sqrt();
        total += 1.0 - dot / (np * nt);
    }
    total / rows as f64
}

pub fn loss64(loss: Loss, pred: &[f64], target: &[f64], cols: usize) -> f64 {
    match loss {
        Loss::Mse => mse(pred, target),
        Loss::Directional { alpha1, alpha2 } => {
            alpha1 as f64 * mse(pred, target) + alpha2 as f64 * cosine_distance(pred, target, cols)
        }
    }
}

pub fn to64(m: &DenseMatrix) -> Vec<f64> {
    m.as_slice().iter().map(|&v| v as f64).collect()
}

/// Double-precision copy of a network's parameters. `weights[i]` is `None` for tied layers.
pub struct Shadow {
    pub layers: Vec<LayerSpec>,
    pub weights: Vec<Option<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

impl Shadow {
    pub fn of(net: &NetworkParams) -> Self {
        let n = net.layers().len();
        Shadow {
            layers: net.layers().to_vec(),
            weights: (0..n).map(|i| net.weight(i).map(to64)).collect(),
            biases: (0..n)
                .map(|i| net.bias(i).iter().map(|&v| v as f64).collect())
                .collect(),
        }
    }

    /// Effective `in x out` weight of layer `i`, row-major.
    fn effective(&self, i: usize) -> Vec<f64> {
        let l = &self.layers[i];
        match l.tied_to {
            None => self.weights[i].clone().unwrap(),
            Some(j) => {
                // owner is out x in
                let w = self.weights[j].as_ref().unwrap();
                let mut e = vec![0.0; l.in_dim * l.out_dim];
                for a in 0..l.in_dim {
                    for c in 0..l.out_dim {
                        e[a * l.out_dim + c] = w[c * l.in_dim + a];
                    }
                }
                e
            }
        }
    }

    pub fn forward(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut cur = x.to_vec();
        for (i, l) in self.layers.iter().enumerate() {
            let w = self.effective(i);
            let mut next = vec![0.0; rows * l.out_dim];
            for r in 0..rows {
                for c in 0..l.out_dim {
                    let mut z = self.biases[i][c];
                    for a in 0..l.in_dim {
                        z += cur[r * l.in_dim + a] * w[a * l.out_dim + c];
                    }
                    next[r * l.out_dim + c] = l.activation.forward_f64(z);
                }
            }
            cur = next;
        }
        cur
    }
}

/// Largest relative error between the analytic gradient of `net` (loss against
/// `target`) and central differences of the `f64` shadow, over every trainable scalar.
pub fn network_gradient_error(net: &NetworkParams, x: &DenseMatrix, target: &DenseMatrix, loss: Loss) -> f64 {
    let trace = net.forward(x).unwrap();
    let lr = loss.evaluate(trace.output(), target).unwrap();
    let grads = net.backward(&trace, &lr.gradient).unwrap();
    let mut shadow = Shadow::of(net);
    let (xs, ts, rows, cols) = (to64(x), to64(target), x.rows(), target.cols());
    let mut worst = 0.0f64;
    for i in 0..shadow.layers.len() {
        if let Some(g) = grads.weights[i].as_ref() {
            for k in 0..g.as_slice().len() {
                let orig = shadow.weights[i].as_ref().unwrap()[k];
                let mut at = |v: f64| {
                    shadow.weights[i].as_mut().unwrap()[k] = v;
                    loss64(loss, &shadow.forward(&xs, rows), &ts, cols)
                };
                let num = (at(orig + FD_STEP) - at(orig - FD_STEP)) / (2.0 * FD_STEP);
                at(orig);
                worst = worst.max(rel_err(g.as_slice()[k] as f64, num));
            }
        }
        for k in 0..shadow.biases[i].len() {
            let orig = shadow.biases[i][k];
            let mut at = |v: f64| {
                shadow.biases[i][k] = v;
                loss64(loss, &shadow.forward(&xs, rows), &ts, cols)
            };
            let num = (at(orig + FD_STEP) - at(orig - FD_STEP)) / (2.0 * FD_STEP);
            at(orig);
            worst = worst.max(rel_err(grads.biases[i][k] as f64, num));
        }
    }
    worst
}

/// Largest relative error of a loss gradient against central differences.
pub fn loss_gradient_error(pred: &DenseMatrix, target: &DenseMatrix, loss: Loss) -> f64 {
    let analytic = loss.evaluate(pred, target).unwrap().gradient;
    let mut p = to64(pred);
    let t = to64(target);
    let cols = pred.cols();
    let mut worst = 0.0f64;
    for k in 0..p.len() {
        let orig = p[k];
        p[k] = orig + FD_STEP;
        let hi = loss64(loss, &p, &t, cols);
        p[k] = orig - FD_STEP;
        let lo = loss64(loss, &p, &t, cols);
        p[k] = orig;
        worst = worst.max(rel_err(analytic.as_slice()[k] as f64, (hi - lo) / (2.0 * FD_STEP)));
    }
    worst
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut seed::Rng) -> DenseMatrix {
    DenseMatrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| StandardNormal.sample(rng))
            .map(|v: f64| v as f32)
            .collect(),
    )
    .unwrap()
}

/// A random tied autoencoder `d -> h -> b -> h -> d` (or one level shallower) with
/// random hidden activations.
pub fn random_tied_network(rng: &mut seed::Rng, output: Activation) -> NetworkParams {
    let d = rng.random_range(3..7);
    let deep = rng.random_bool(0.5);
    let mut widths = vec![d, rng.random_range(2..d)];
    if deep && widths[1] > 2 {
        widths.push(rng.random_range(1..widths[1]));
    }
    let n_enc = widths.len() - 1;
    let mut pick = || Activation::ALL[rng.random_range(0..Activation::ALL.len())];
    let mut layers: Vec<LayerSpec> = (0..n_enc)
        .map(|i| LayerSpec::new(widths[i], widths[i + 1], pick()))
        .collect();
    for j in 0..n_enc {
        let act = if j + 1 == n_enc { output } else { pick() };
        layers.push(LayerSpec::tied(
            widths[n_enc - j],
            widths[n_enc - j - 1],
            act,
            n_enc - 1 - j,
        ));
    }
    let mut net = NetworkParams::new(layers, rng.random()).unwrap();
    // non-zero biases exercise every term of the backward pass
    for i in 0..net.layers().len() {
        for b in net.bias_mut(i) {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    net
}

/// `n x d` rows `(u . V) / 2 + noise` with `u`, `V` uniform on `[0, 1]`, clamped to
/// `[0, 1]`: rank-2 signal plus isotropic noise.
pub fn rank2_unit(n: usize, d: usize, noise: f64, seed: u64) -> DenseMatrix {
    let mut rng = seed::rng(seed);
    let v: Vec<f64> = (0..2 * d).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let u: [f64; 2] = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        for j in 0..d {
            let e: f64 = StandardNormal.sample(&mut rng);
            data.push(((u[0] * v[j] + u[1] * v[d + j]) / 2.0 + noise * e).clamp(0.0, 1.0) as f32);
        }
    }
    DenseMatrix::from_vec(n, d, data).unwrap()
}

/// Mean squared error of the best rank-`r` affine reconstruction (centred PCA).
pub fn pca_error(x: &DenseMatrix, r: usize) -> f64 {
    let (n, d) = x.shape();
    let m = DMatrix::from_fn(n, d, |i, j| x.get(i, j) as f64);
    let mean = m.row_mean();
    let c = DMatrix::from_fn(n, d, |i, j| m[(i, j)] - mean[j]);
    let mut s: Vec<f64> = c.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.iter().skip(r).map(|v| v * v).sum::<f64>() / (n * d) as f64
}

pub fn matrix_mse(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    mse(&to64(a), &to64(b))
}

/// Mean row-wise cosine similarity.
pub fn mean_cosine(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    1.0 - cosine_distance(&to64(a), &to64(b), a.cols())
}

/// Ordinary least squares with intercept; returns held-out MAE.
pub fn least_squares_mae(train_x: &[Vec<f64>], train_y: &[f64], test_x: &[Vec<f64>], test_y: &[f64]) -> f64 {
    let p = train_x[0].len() + 1;
    let design = |rows: &[Vec<f64>]| DMatrix::from_fn(rows.len(), p, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let a = design(train_x);
    let y = DVector::from_column_slice(train_y);
    let beta = a.clone().svd(true, true).solve(&y, 1e-12).unwrap();
    let pred = design(test_x) * beta;
    pred.iter().zip(test_y).map(|(p, t)| (p - t).abs()).sum::<f64>() / test_y.len() as f64
}
