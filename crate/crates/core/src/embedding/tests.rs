use rand::Rng;

use super::*;
use crate::nn::{dataset_loss, gradients, LayerParams, Sample, TrainConfig};

fn tiny() -> EmbeddingNetConfig {
    EmbeddingNetConfig {
        d_t: 2,
        d_s: 3,
        d_st: 8,
        d_y: 3,
        weather_steps: 4,
        hidden_width: 5,
        embedding_dim: 2,
        conv_filters: 2,
        conv_kernel: 2,
    }
}

fn random_x(cfg: &EmbeddingNetConfig, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    (0..cfg.d_x()).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Independent count: weights + biases of every layer written out by hand.
fn param_count_oracle(c: &EmbeddingNetConfig) -> usize {
    let dense = |i: usize, o: usize| i * o + o;
    let conv_out = (c.weather_steps - c.conv_kernel + 1) * c.conv_filters;
    let conv = c.conv_filters * c.conv_kernel * (c.d_st / c.weather_steps) + c.conv_filters;
    dense(c.d_t, c.hidden_width)
        + dense(c.hidden_width, c.embedding_dim)
        + dense(c.d_s, c.hidden_width)
        + dense(c.hidden_width, c.embedding_dim)
        + conv
        + dense(conv_out, c.embedding_dim)
        + dense(3 * c.embedding_dim, c.hidden_width)
        + dense(c.hidden_width, c.embedding_dim)
        + dense(c.embedding_dim, c.hidden_width)
        + dense(c.hidden_width, c.d_y)
}

#[test]
fn single_layer_counts() {
    assert_eq!(LayerSpec::dense(4, 1000, Activation::Relu).param_count(), 5000);
    assert_eq!(LayerSpec::dense(300, 1000, Activation::Relu).param_count(), 301_000);
}

#[test]
fn default_network_dimensions() {
    let cfg = EmbeddingNetConfig::default();
    assert_eq!((cfg.d_t, cfg.d_s, cfg.d_st, cfg.d_y), (4, 300, 216, 96));
    assert_eq!(cfg.d_x(), 520);
    let net = EmbeddingNetwork::build(cfg.clone(), 1).unwrap();
    assert_eq!(net.param_count(), param_count_oracle(&cfg));
    // pinned: kernel 3 and embedding-level concatenation
    assert_eq!(net.param_count(), 1_140_144);
    let x = vec![0.1; 520];
    assert_eq!(net.predict(&x).unwrap().len(), 96);
    assert_eq!(net.encode(EncoderId::Joint, &x, None).unwrap().len(), 100);
}

#[test]
fn same_seed_same_weights() {
    let a = EmbeddingNetwork::build(tiny(), 4).unwrap();
    let b = EmbeddingNetwork::build(tiny(), 4).unwrap();
    let c = EmbeddingNetwork::build(tiny(), 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.parameters(), c.parameters());
}

#[test]
fn unit_embedding_dimension() {
    let cfg = EmbeddingNetConfig {
        embedding_dim: 1,
        ..tiny()
    };
    let net = EmbeddingNetwork::build(cfg.clone(), 0).unwrap();
    let x = random_x(&cfg, 1);
    for id in [EncoderId::Time, EncoderId::Space, EncoderId::SpaceTime, EncoderId::Joint] {
        assert_eq!(net.encode(id, &x, None).unwrap().len(), 1);
    }
}

#[test]
fn config_validation() {
    assert!(EmbeddingNetwork::build(EmbeddingNetConfig { hidden_width: 0, ..tiny() }, 0).is_err());
    assert!(EmbeddingNetwork::build(EmbeddingNetConfig { weather_steps: 3, ..tiny() }, 0).is_err());
    assert!(EmbeddingNetwork::build(EmbeddingNetConfig { conv_kernel: 5, ..tiny() }, 0).is_err());
}

#[test]
fn encoder_output_lengths() {
    let cfg = tiny();
    let net = EmbeddingNetwork::build(cfg.clone(), 2).unwrap();
    let x = random_x(&cfg, 3);
    let y = vec![0.5; cfg.d_y];
    for id in [
        EncoderId::Time,
        EncoderId::Space,
        EncoderId::SpaceTime,
        EncoderId::Joint,
        EncoderId::PredictedLabel,
        EncoderId::TrueLabel,
    ] {
        assert_eq!(net.encode(id, &x, Some(&y)).unwrap().len(), id.output_len(&cfg));
    }
    assert_eq!(net.encode(EncoderId::PredictedLabel, &x, None).unwrap(), net.predict(&x).unwrap());
    assert_eq!(net.encode(EncoderId::TrueLabel, &x, Some(&y)).unwrap(), y);
    assert!(net.encode(EncoderId::TrueLabel, &x, None).is_err());
    assert!(net.predict(&x[1..]).is_err());
}

#[test]
fn zero_weights_predict_zero() {
    let cfg = tiny();
    let net = EmbeddingNetwork::build(cfg.clone(), 2).unwrap();
    let zeros = net.parameters().zeros_like();
    let net = EmbeddingNetwork::from_parameters(cfg.clone(), zeros).unwrap();
    assert_eq!(net.predict(&random_x(&cfg, 9)).unwrap(), vec![0.0; cfg.d_y]);
}

#[test]
fn space_time_embedding_depends_only_on_x_st() {
    let cfg = tiny();
    let net = EmbeddingNetwork::build(cfg.clone(), 2).unwrap();
    let a = random_x(&cfg, 1);
    let mut b = random_x(&cfg, 2);
    b[cfg.d_t + cfg.d_s..].copy_from_slice(&a[cfg.d_t + cfg.d_s..]);
    assert_eq!(
        net.encode(EncoderId::SpaceTime, &a, None).unwrap(),
        net.encode(EncoderId::SpaceTime, &b, None).unwrap()
    );
}

#[test]
fn permuting_space_inputs_needs_matching_weights() {
    let cfg = EmbeddingNetConfig {
        d_s: 2,
        hidden_width: 2,
        ..tiny()
    };
    let net = EmbeddingNetwork::build(cfg.clone(), 7).unwrap();
    let x = random_x(&cfg, 8);
    let mut swapped = x.clone();
    swapped.swap(cfg.d_t, cfg.d_t + 1);

    // layer 2 is the first space-encoder layer: dense(2 -> 2), row-major (out, in)
    let mut params = net.parameters().clone();
    let w = &mut params.layers[2].weights;
    w.swap(0, 1);
    w.swap(2, 3);
    let permuted = EmbeddingNetwork::from_parameters(cfg, params).unwrap();

    let base = net.predict(&x).unwrap();
    assert_eq!(permuted.predict(&swapped).unwrap(), base);
    assert_ne!(net.predict(&swapped).unwrap(), base);
}

#[test]
fn gradients_match_finite_differences() {
    let cfg = tiny();
    let mut net = EmbeddingNetwork::build(cfg.clone(), 3).unwrap();
    crate::nn::tests::jitter_biases(net.parameters_mut(), 4);
    let xs: Vec<Vec<f64>> = (0..3).map(|i| random_x(&cfg, 20 + i)).collect();
    let ys: Vec<Vec<f64>> = (0..3).map(|i| random_x(&cfg, 30 + i)[..cfg.d_y].to_vec()).collect();
    let batch: Vec<_> = xs.iter().zip(&ys).map(|(x, y)| Sample::new(x, y)).collect();
    let (_, g) = gradients(&net, &batch).unwrap();
    let fd = crate::nn::tests::finite_difference(&net, &batch, 1e-5);
    for (i, (a, b)) in g.to_flat().iter().zip(&fd).enumerate() {
        assert!(
            crate::nn::tests::relative_error(*a, *b) < 1e-4,
            "param {i}: analytic {a} numeric {b}"
        );
    }
}

#[test]
fn training_moves_encoders() {
    let cfg = tiny();
    let mut net = EmbeddingNetwork::build(cfg.clone(), 3).unwrap();
    let xs: Vec<Vec<f64>> = (0..8).map(|i| random_x(&cfg, 40 + i)).collect();
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0], x[3] * 2.0, x[10]]).collect();
    let data: Vec<_> = xs.iter().zip(&ys).map(|(x, y)| Sample::new(x, y)).collect();
    let before: Vec<Vec<f64>> = [EncoderId::Time, EncoderId::Space, EncoderId::SpaceTime]
        .iter()
        .map(|&id| net.encode(id, &xs[0], None).unwrap())
        .collect();
    let loss_before = dataset_loss(&net, &data).unwrap();
    let cfg_train = TrainConfig {
        max_epochs: 50,
        patience: 0,
        learning_rate: 0.05,
        minibatch_size: 4,
        seed: 1,
    };
    crate::nn::train(&mut net, &data, &data, &cfg_train).unwrap();
    let after: Vec<Vec<f64>> = [EncoderId::Time, EncoderId::Space, EncoderId::SpaceTime]
        .iter()
        .map(|&id| net.encode(id, &xs[0], None).unwrap())
        .collect();
    assert_ne!(before, after);
    assert!(dataset_loss(&net, &data).unwrap() < loss_before);
}

#[test]
fn weight_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.bin");
    let net = EmbeddingNetwork::build(tiny(), 12).unwrap();
    save_weights(&net, &path).unwrap();
    assert_eq!(load_weights(&path).unwrap(), net);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(load_weights(&path), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[8] = 2;
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(load_weights(&path), Err(Error::Version { found: 2, .. })));
}

#[test]
fn layer_params_cover_network() {
    let net = EmbeddingNetwork::build(tiny(), 0).unwrap();
    let specs = net.layer_specs();
    assert_eq!(specs.len(), net.parameters().layers.len());
    let total: usize = specs.iter().map(LayerSpec::param_count).sum();
    assert_eq!(total, net.param_count());
    let _: &LayerParams = &net.parameters().layers[0];
}
