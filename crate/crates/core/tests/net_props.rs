use dsqn::net::{conv2d_apply, ConvGeometry, Shape3};
use dsqn::{LayerSpec, NeuronConfig, SpikingNetwork, SurrogateConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Quadruple-loop cross-correlation over `[c][y][x]` inputs and `[o][c][ky][kx]`
/// kernels, accumulating channel, then kernel row, then kernel column.
fn brute_force_conv(
    input: &[f64],
    (c_in, h, w): (usize, usize, usize),
    kernel: &[f64],
    (c_out, kh, kw): (usize, usize, usize),
    stride: usize,
) -> Vec<f64> {
    let oh = (h - kh) / stride + 1;
    let ow = (w - kw) / stride + 1;
    let mut out = Vec::with_capacity(c_out * oh * ow);
    for o in 0..c_out {
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = 0.0;
                for c in 0..c_in {
                    for i in 0..kh {
                        for j in 0..kw {
                            let pixel = input[c * h * w + (y * stride + i) * w + (x * stride + j)];
                            let weight = kernel[o * c_in * kh * kw + c * kh * kw + i * kw + j];
                            acc += weight * pixel;
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

#[test]
fn conv_matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let c_in = rng.gen_range(1..4);
        let c_out = rng.gen_range(1..4);
        let kh = rng.gen_range(1..5);
        let kw = rng.gen_range(1..5);
        let h = rng.gen_range(kh..kh + 9);
        let w = rng.gen_range(kw..kw + 9);
        let stride = rng.gen_range(1..4);
        let geometry = ConvGeometry {
            input: Shape3::new(c_in, h, w),
            out_channels: c_out,
            kernel: [kh, kw],
            stride,
        };
        let input: Vec<f64> = (0..c_in * h * w).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let kernel: Vec<f64> = (0..c_out * c_in * kh * kw).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = conv2d_apply(&geometry, &kernel, &input).unwrap();
        let want = brute_force_conv(&input, (c_in, h, w), &kernel, (c_out, kh, kw), stride);
        assert_eq!(got, want, "{geometry:?}");
        let out = geometry.output();
        assert_eq!(out.height, (h - kh) / stride + 1);
        assert_eq!(out.width, (w - kw) / stride + 1);
    }
}

#[test]
fn conv_stride_two_on_eight_by_eight() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let geometry = ConvGeometry {
        input: Shape3::new(1, 8, 8),
        out_channels: 1,
        kernel: [3, 3],
        stride: 2,
    };
    let input: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let kernel: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let got = conv2d_apply(&geometry, &kernel, &input).unwrap();
    assert_eq!(got.len(), 9);
    assert_eq!(got, brute_force_conv(&input, (1, 8, 8), &kernel, (1, 3, 3), 2));
}

fn random_net(seed: u64, depth: usize, width: usize, window: usize, gain: f64) -> SpikingNetwork {
    let hidden = vec![width; depth];
    let mut net = SpikingNetwork::dense(3, &hidden, 2, NeuronConfig::default(), SurrogateConfig::default(), window)
        .unwrap()
        .init_weights(seed);
    for w in net.weights.iter_mut().flatten() {
        *w *= gain;
    }
    net
}

proptest! {
    #[test]
    fn forward_is_deterministic_and_counts_add_up(
        seed in any::<u64>(),
        depth in 1usize..4,
        width in 1usize..8,
        window in 1usize..40,
        gain in 0.5f64..6.0,
        obs in prop::collection::vec(-2.0f64..3.0, 3),
    ) {
        let net = random_net(seed, depth, width, window, gain);
        let a = net.forward(&obs).unwrap();
        let b = net.forward(&obs).unwrap();
        prop_assert_eq!(&a.q, &b.q);
        prop_assert_eq!(a.steps.len(), window);
        for (sa, sb) in a.steps.iter().zip(&b.steps) {
            prop_assert_eq!(sa, sb);
        }

        for h in 0..depth {
            for i in 0..width {
                let summed: f64 = a.steps.iter().map(|step| step[h].s[i]).sum();
                prop_assert_eq!(summed, f64::from(a.spike_counts()[h][i]));
            }
        }
        let total: u64 = a.spike_counts().iter().flatten().map(|&c| u64::from(c)).sum();
        prop_assert_eq!(total, a.total_spikes());
        prop_assert_eq!(net.decide(&obs).unwrap().spikes, total);
        prop_assert_eq!(net.decide(&obs).unwrap().q, a.q.clone());
    }

    #[test]
    fn readout_is_weighted_mean_rate(
        seed in any::<u64>(),
        width in 1usize..8,
        window in 1usize..40,
        gain in 0.5f64..6.0,
        obs in prop::collection::vec(-2.0f64..3.0, 3),
    ) {
        let net = random_net(seed, 2, width, window, gain);
        let rec = net.forward(&obs).unwrap();
        let counts = &rec.spike_counts()[1];
        let readout = &net.weights[2];
        for (a, q) in rec.q.iter().enumerate() {
            let row = &readout[a * width..(a + 1) * width];
            let mut expected = 0.0;
            for (w, &c) in row.iter().zip(counts) {
                let rate = f64::from(c) / window as f64;
                prop_assert!((0.0..=1.0).contains(&rate));
                expected += w * rate;
            }
            prop_assert!((q - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            let bound: f64 = row.iter().map(|w| w.abs()).sum();
            prop_assert!(q.abs() <= bound + 1e-12);
        }
    }
}

#[test]
fn conv_network_forward_matches_manual_unroll() {
    // one conv hidden layer, the first step's currents must equal the brute-force conv
    let conv = LayerSpec::conv2d(Shape3::new(1, 6, 6), 2, [3, 3], 1);
    let flat = conv.output_len();
    let layers = vec![conv, LayerSpec::readout(flat, 3)];
    let net = SpikingNetwork::new(layers, NeuronConfig::default(), SurrogateConfig::default(), 4)
        .unwrap()
        .init_weights(8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let obs: Vec<f64> = (0..36).map(|_| rng.gen_range(0.0..4.0)).collect();
    let rec = net.forward(&obs).unwrap();
    let current = brute_force_conv(&obs, (1, 6, 6), &net.weights[0], (2, 3, 3), 1);
    let cfg = NeuronConfig::default();
    for (i, z) in current.iter().enumerate() {
        let u1 = cfg.v_r + (z - cfg.v_r + cfg.v_r) / cfg.tau_m;
        assert_eq!(rec.steps[0][0].u[i], u1);
    }
}
