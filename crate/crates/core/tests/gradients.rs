mod oracle;

use lyricnet_core::loss::Loss;
use lyricnet_core::{seed, Activation, DenseMatrix};
use oracle::{central_difference, rel_err};
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-3;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(128)
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn activation_derivatives(x in -6.0f64..6.0) {
        for act in Activation::ALL {
            // ReLU and SELU derivatives jump at 0
            if x.abs() < 1e-3 && matches!(act, Activation::Relu | Activation::Selu) {
                continue;
            }
            let numeric = central_difference(|v| act.forward_f64(v), x);
            prop_assert!(rel_err(act.derivative_f64(x), numeric) < TOL, "{act} at {x}");
            prop_assert!(rel_err(act.derivative(x as f32) as f64, numeric) < TOL, "{act} f32 at {x}");
        }
    }

    #[test]
    fn mse_gradient(s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let (r, c) = (rng.random_range(1..5), rng.random_range(1..7));
        let p = oracle::normal_matrix(r, c, &mut rng);
        let t = oracle::normal_matrix(r, c, &mut rng);
        prop_assert!(oracle::loss_gradient_error(&p, &t, Loss::Mse) < TOL);
    }

    #[test]
    fn directional_gradient(s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let (r, c) = (rng.random_range(1..5), rng.random_range(2..7));
        let p = oracle::normal_matrix(r, c, &mut rng);
        let t = oracle::normal_matrix(r, c, &mut rng);
        let loss = Loss::Directional { alpha1: rng.random_range(0.0..1.0), alpha2: rng.random_range(0.0..1.0) };
        prop_assert!(oracle::loss_gradient_error(&p, &t, loss) < TOL);
        prop_assert!(oracle::loss_gradient_error(&p, &t, Loss::DIRECTIONAL_DEFAULT) < TOL);
    }

    #[test]
    fn tied_network_backprop(s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let out = [Activation::Identity, Activation::Sigmoid, Activation::Selu, Activation::Gelu][rng.random_range(0..4)];
        let net = oracle::random_tied_network(&mut rng, out);
        let rows = rng.random_range(1..5);
        let x = oracle::normal_matrix(rows, net.input_dim(), &mut rng);
        let err = oracle::network_gradient_error(&net, &x, &x, Loss::Mse);
        prop_assert!(err < TOL, "mse {err}");
        let err = oracle::network_gradient_error(&net, &x, &x, Loss::DIRECTIONAL_DEFAULT);
        prop_assert!(err < TOL, "directional {err}");
    }

    #[test]
    fn untied_network_backprop(s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let widths = [rng.random_range(2..6), rng.random_range(1..6), rng.random_range(1..6), 1];
        let layers: Vec<_> = widths
            .windows(2)
            .map(|w| lyricnet_core::LayerSpec::new(w[0], w[1], Activation::ALL[rng.random_range(0..6)]))
            .collect();
        let mut net = lyricnet_core::NetworkParams::new(layers, rng.random()).unwrap();
        // random biases keep pre-activations off the ReLU / SELU kinks at exactly 0
        for i in 0..3 {
            for b in net.bias_mut(i) {
                *b = rng.random_range(-0.5..0.5);
            }
        }
        let x = oracle::normal_matrix(3, widths[0], &mut rng);
        let y = oracle::normal_matrix(3, 1, &mut rng);
        let err = oracle::network_gradient_error(&net, &x, &y, Loss::Mse);
        prop_assert!(err < TOL, "{err} {:?}", net.layers());
    }
}

#[test]
fn hand_checked_directional_value() {
    // pred (1, 0), target (1, 1): MSE 0.5, cosine distance 1 - 1/sqrt 2
    let p = DenseMatrix::from_rows(&[[1.0f32, 0.0]]).unwrap();
    let t = DenseMatrix::from_rows(&[[1.0f32, 1.0]]).unwrap();
    let v = Loss::DIRECTIONAL_DEFAULT.evaluate(&p, &t).unwrap().value;
    let expected = 0.5 * 0.5 + (0.1f32 as f64) * (1.0 - std::f64::consts::FRAC_1_SQRT_2);
    assert!((v - expected).abs() < 1e-12, "{v}");
}
