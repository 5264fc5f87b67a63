mod oracle;

use lyricnet_core::adam::AdamState;
use lyricnet_core::autoenc::{build_audio_ae, build_lyrics_ae, train_autoencoder, AeTrainConfig, AutoencoderSpec};
use lyricnet_core::loss::Loss;
use lyricnet_core::{seed, Activation, DenseMatrix, NetworkParams};

fn full_batch(epochs: usize, seed: u64) -> AeTrainConfig {
    AeTrainConfig {
        epochs,
        batch_size: 32,
        val_fraction: 0.0,
        patience: None,
        seed,
        ..AeTrainConfig::default()
    }
}

#[test]
fn audio_ae_compresses_low_rank_data() {
    let x = oracle::rank2_unit(500, 209, 0.01, 11);
    let spec = build_audio_ae(209).unwrap();
    let ae = train_autoencoder(&spec, &x, &full_batch(200, 5)).unwrap();
    let err = oracle::matrix_mse(&ae.reconstruct(&x).unwrap(), &x);
    let pca = oracle::pca_error(&x, 41);
    assert!(err <= 1e-3, "reconstruction MSE {err}");
    assert!(err <= 10.0 * pca, "reconstruction MSE {err} vs PCA rank-41 {pca}");
    assert_eq!(ae.encode(&x).unwrap().cols(), 41);
}

/// Trainable scalars counted from the widths alone.
fn counted(d: usize, divisor: usize) -> usize {
    let w = [d, d / 2, d / 4, d / 8, d / divisor];
    let encoder_weights: usize = w.windows(2).map(|p| p[0] * p[1]).sum();
    let encoder_biases: usize = w[1..].iter().sum();
    let decoder_biases: usize = w[..4].iter().sum();
    encoder_weights + encoder_biases + decoder_biases
}

#[test]
fn tied_weights_survive_training() {
    let spec = build_lyrics_ae(64, 16, Activation::Selu, Loss::DIRECTIONAL_DEFAULT).unwrap();
    let mut rng = seed::rng(3);
    let x = oracle::normal_matrix(40, 64, &mut rng);
    let mut net = NetworkParams::new(spec.layers(), 9).unwrap();
    let mut adam = AdamState::new(&net, 1e-3).unwrap();
    for _ in 0..50 {
        let trace = net.forward(&x).unwrap();
        let loss = spec.loss.evaluate(trace.output(), &x).unwrap();
        let grads = net.backward(&trace, &loss.gradient).unwrap();
        adam.step(&mut net, &grads).unwrap();
    }
    let n_enc = spec.encoder_layers();
    for j in 0..n_enc {
        let dec = n_enc + j;
        let owner = n_enc - 1 - j;
        assert!(net.weight(dec).is_none());
        let eff = net.effective_weight(dec);
        let w = net.weight(owner).unwrap();
        assert_eq!(eff.shape(), (w.cols(), w.rows()));
        for r in 0..w.rows() {
            for c in 0..w.cols() {
                assert_eq!(eff.get(c, r).to_bits(), w.get(r, c).to_bits());
            }
        }
    }
    assert_eq!(net.param_count(), counted(64, 16));
    assert_eq!(spec.param_count(), counted(64, 16));
    assert_eq!(
        build_lyrics_ae(3072, 16, Activation::Selu, Loss::Mse)
            .unwrap()
            .param_count(),
        counted(3072, 16)
    );
    assert_eq!(
        build_lyrics_ae(1024, 12, Activation::Selu, Loss::Mse)
            .unwrap()
            .param_count(),
        counted(1024, 12)
    );
}

#[test]
fn zero_alpha2_reproduces_mse_training() {
    let spec = build_lyrics_ae(48, 12, Activation::Selu, Loss::Mse).unwrap();
    let directional = AutoencoderSpec {
        loss: Loss::Directional {
            alpha1: 1.0,
            alpha2: 0.0,
        },
        ..spec.clone()
    };
    let mut rng = seed::rng(4);
    let x = oracle::normal_matrix(60, 48, &mut rng);
    let cfg = AeTrainConfig {
        epochs: 8,
        batch_size: 16,
        ..AeTrainConfig::default()
    };
    let a = train_autoencoder(&spec, &x, &cfg).unwrap();
    let b = train_autoencoder(&directional, &x, &cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.loss_history, b.loss_history);
}

/// Embedding-like rows: a few latent directions plus noise, standardised.
fn embeddings(n: usize, d: usize, seed: u64) -> DenseMatrix {
    let corpus = lyricnet_core::data::synth_dataset(&lyricnet_core::data::SynthConfig::new(n, seed, d));
    let rows: Vec<&[f32]> = corpus
        .records
        .iter()
        .map(|r| r.lyric_embedding.as_deref().unwrap())
        .collect();
    let raw = DenseMatrix::from_rows(&rows).unwrap();
    let all: Vec<usize> = (0..n).collect();
    lyricnet_core::data::BlockScaler::fit(lyricnet_core::data::ScaleKind::Standard, &raw, &all)
        .unwrap()
        .transform(&raw)
        .unwrap()
}

#[test]
fn directional_loss_preserves_direction() {
    let mut cos_mse = Vec::new();
    let mut cos_dir = Vec::new();
    for s in 0..5 {
        let x = embeddings(400, 96, 100 + s);
        let cfg = AeTrainConfig {
            epochs: 30,
            batch_size: 32,
            seed: s,
            ..AeTrainConfig::default()
        };
        let mse = build_lyrics_ae(96, 16, Activation::Selu, Loss::Mse).unwrap();
        let dir = build_lyrics_ae(96, 16, Activation::Selu, Loss::DIRECTIONAL_DEFAULT).unwrap();
        let a = train_autoencoder(&mse, &x, &cfg).unwrap();
        let b = train_autoencoder(&dir, &x, &cfg).unwrap();
        cos_mse.push(oracle::mean_cosine(&a.reconstruct(&x).unwrap(), &x));
        cos_dir.push(oracle::mean_cosine(&b.reconstruct(&x).unwrap(), &x));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("cosine mse {cos_mse:?}\ncosine directional {cos_dir:?}");
    assert!(
        mean(&cos_dir) >= mean(&cos_mse),
        "{} < {}",
        mean(&cos_dir),
        mean(&cos_mse)
    );
}

#[test]
fn training_loss_does_not_increase() {
    for s in 0..5 {
        let x = oracle::rank2_unit(120, 30, 0.02, 20 + s);
        let ae = train_autoencoder(&build_audio_ae(30).unwrap(), &x, &full_batch(20, s)).unwrap();
        let h = &ae.loss_history;
        assert!(h.last().unwrap().train_loss <= h[0].train_loss, "seed {s}: {h:?}");
    }
}

#[test]
fn early_stopping_keeps_best_validation_params() {
    let x = oracle::rank2_unit(200, 20, 0.05, 7);
    let cfg = AeTrainConfig {
        epochs: 60,
        batch_size: 16,
        patience: Some(3),
        seed: 2,
        ..AeTrainConfig::default()
    };
    let ae = train_autoencoder(&build_audio_ae(20).unwrap(), &x, &cfg).unwrap();
    let best = ae
        .loss_history
        .iter()
        .filter_map(|h| h.val_loss)
        .fold(f64::INFINITY, f64::min);
    assert!(ae.loss_history.len() >= 2);
    // the returned parameters reproduce the best recorded validation loss
    let (_, val) = {
        let n = x.rows();
        let mut idx: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut seed::rng(seed::derive(2, "holdout")));
        let val = idx.split_off(n - 20);
        (idx, val)
    };
    let xv = x.select_rows(&val);
    let got = oracle::matrix_mse(&ae.reconstruct(&xv).unwrap(), &xv);
    assert!((got - best).abs() < 1e-6, "{got} vs {best}");
}
