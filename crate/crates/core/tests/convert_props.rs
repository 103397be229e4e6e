use dsqn::convert::{convert, fidelity_audit, layer_scales, percentile, random_states, ConversionConfig, ReluNetwork};
use dsqn::{Error, NeuronModel, ResetMode};
use proptest::prelude::*;

fn pct100() -> ConversionConfig {
    ConversionConfig {
        percentile: 100.0,
        ..ConversionConfig::default()
    }
}

/// Scalar chain `x -> relu(w x + b) -> q = v * h`.
fn scalar_chain(w: f64, b: Option<f64>, v: f64) -> ReluNetwork {
    let mut ann = ReluNetwork::dense(1, &[1], 1, b.is_some()).unwrap();
    ann.weights = vec![vec![w], vec![v]];
    if let Some(b) = b {
        ann.biases = vec![vec![b], vec![0.0]];
    }
    ann
}

#[test]
fn identity_layer_with_unit_calibration_is_unchanged() {
    let mut ann = ReluNetwork::dense(2, &[2], 2, false).unwrap();
    ann.weights = vec![vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]];
    let calib = vec![vec![0.25, 1.0], vec![0.5, 0.0], vec![1.0, 0.75]];
    assert_eq!(layer_scales(&ann, &calib, 100.0).unwrap(), vec![1.0]);
    let snn = convert(&ann, &calib, &pct100()).unwrap();
    assert_eq!(snn.weights, ann.weights);
    assert_eq!(snn.neuron.model, NeuronModel::If);
    assert_eq!(snn.neuron.reset, ResetMode::Soft);
    assert_eq!(snn.window, 500);
}

#[test]
fn hidden_rate_estimates_activation_within_one_over_window() {
    // calibration peaks at exactly 1, so lambda = 1 and the hidden current is a itself
    let ann = scalar_chain(1.0, None, 1.0);
    let calib: Vec<Vec<f64>> = (0..=20).map(|k| vec![f64::from(k) / 20.0]).collect();
    let snn = convert(&ann, &calib, &pct100()).unwrap();
    for k in 0..=20 {
        let a = f64::from(k) / 20.0;
        let rec = snn.forward(&[a]).unwrap();
        let rate = f64::from(rec.spike_counts()[0][0]) / 500.0;
        // exact real activation is k/20: |20 N - 500 k| <= 20 in integers
        let n = i64::from(rec.spike_counts()[0][0]);
        assert!((20 * n - 500 * i64::from(k)).abs() <= 20, "a = {a}: rate {rate}");
        assert_eq!(rec.q[0], rate);
    }
}

#[test]
fn bias_rides_on_a_constant_input() {
    let ann = scalar_chain(0.5, Some(0.25), 2.0);
    let calib: Vec<Vec<f64>> = (0..=10).map(|k| vec![f64::from(k) * 0.3]).collect();
    let scales = layer_scales(&ann, &calib, 100.0).unwrap();
    assert_eq!(scales, vec![0.5 * 3.0 + 0.25]);
    let snn = convert(&ann, &calib, &pct100()).unwrap();
    assert!(snn.layers[0].constant_input);
    let lambda = scales[0];
    assert_eq!(snn.weights[0], vec![0.5 / lambda, 0.25 / lambda]);
    assert_eq!(snn.weights[1], vec![2.0 * lambda, 0.0]);
    for x in [0.0, 0.4, 1.1, 2.9] {
        let q_ann = 2.0 * (0.5 * x + 0.25);
        let q_snn = snn.q_values(&[x]).unwrap()[0];
        // rate error is at most 1/500, times the readout gain 2 lambda
        assert!((q_ann - q_snn).abs() <= 2.0 * lambda / 500.0 + 1e-12, "x {x}: {q_ann} vs {q_snn}");
    }
}

#[test]
fn inactive_layer_is_a_degenerate_scale() {
    let ann = scalar_chain(-1.0, None, 1.0);
    let calib = vec![vec![1.0], vec![2.0]];
    assert!(matches!(convert(&ann, &calib, &ConversionConfig::default()), Err(Error::DegenerateScale { layer: 0 })));
    let zero = ReluNetwork::dense(3, &[4, 4], 2, false).unwrap();
    assert!(matches!(
        layer_scales(&zero, &random_states(10, 3, 0.0, 1.0, 0), 99.9),
        Err(Error::DegenerateScale { .. })
    ));
    assert!(convert(&ann, &[], &ConversionConfig::default()).is_err());
}

#[test]
fn percentile_interpolates_linearly() {
    let v: Vec<f64> = (0..=10).rev().map(f64::from).collect();
    assert_eq!(percentile(&v, 100.0), Some(10.0));
    assert_eq!(percentile(&v, 0.0), Some(0.0));
    assert_eq!(percentile(&v, 55.0), Some(5.5));
    assert_eq!(percentile(&[], 50.0), None);
}

fn random_ann(seed: u64) -> ReluNetwork {
    let mut ann = ReluNetwork::dense(4, &[16, 16], 3, true).unwrap().init_weights(seed);
    for b in ann.biases.iter_mut().flatten() {
        *b = 0.05;
    }
    ann
}

#[test]
fn longer_windows_do_not_lose_fidelity() {
    for seed in 0..5 {
        let ann = random_ann(seed);
        let calib = random_states(300, 4, -1.0, 1.0, seed + 100);
        let snn = convert(&ann, &calib, &ConversionConfig::default()).unwrap();
        let states = random_states(300, 4, -1.0, 1.0, seed + 200);
        let rows = fidelity_audit(&ann, &snn, &states, &[50, 500]).unwrap();
        assert!(rows[1].mean_abs_dq <= rows[0].mean_abs_dq, "seed {seed}: {rows:?}");
        assert!(rows[1].argmax_agreement >= 0.9, "seed {seed}: {rows:?}");
    }
}

proptest! {
    #[test]
    fn power_of_two_rescaling_is_absorbed_exactly(seed in any::<u64>(), k in -3i32..6) {
        // scaling by a power of two is exact in binary floating point, so the
        // converted networks must agree bit for bit
        let c = 2f64.powi(k);
        let ann = random_ann(seed);
        let mut scaled = ann.clone();
        scaled.weights[0].iter_mut().for_each(|w| *w *= c);
        let calib = random_states(100, 4, -1.0, 1.0, seed ^ 1);
        let calib_scaled: Vec<Vec<f64>> = calib.iter().map(|s| s.iter().map(|x| x / c).collect()).collect();
        let cfg = ConversionConfig { window: 50, ..ConversionConfig::default() };
        let a = convert(&ann, &calib, &cfg).unwrap();
        let b = convert(&scaled, &calib_scaled, &cfg).unwrap();
        for (x, y) in calib.iter().zip(&calib_scaled) {
            prop_assert_eq!(a.q_values(x).unwrap(), b.q_values(y).unwrap());
        }
    }

    #[test]
    fn arbitrary_rescaling_keeps_behavior(seed in 0u64..1000, c in 0.1f64..10.0) {
        let ann = random_ann(seed);
        let mut scaled = ann.clone();
        scaled.weights[0].iter_mut().for_each(|w| *w *= c);
        let calib = random_states(100, 4, -1.0, 1.0, seed ^ 1);
        let calib_scaled: Vec<Vec<f64>> = calib.iter().map(|s| s.iter().map(|x| x / c).collect()).collect();
        let cfg = ConversionConfig { window: 200, ..ConversionConfig::default() };
        let a = convert(&ann, &calib, &cfg).unwrap();
        let b = convert(&scaled, &calib_scaled, &cfg).unwrap();
        let la = layer_scales(&ann, &calib, cfg.percentile).unwrap();
        let lb = layer_scales(&scaled, &calib_scaled, cfg.percentile).unwrap();
        for (x, y) in la.iter().zip(&lb) {
            prop_assert!((x - y).abs() <= 1e-12 * x);
        }
        // the scales differ only by rounding, so spike trains should match and
        // Q values agree to rounding; a boundary spike may still move
        let mut same_spikes = 0;
        for (x, y) in calib.iter().zip(&calib_scaled) {
            let (ra, rb) = (a.forward(x).unwrap(), b.forward(y).unwrap());
            if ra.spike_counts() == rb.spike_counts() {
                same_spikes += 1;
                for (u, v) in ra.q.iter().zip(&rb.q) {
                    prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()), "{u} vs {v}");
                }
            }
        }
        prop_assert!(same_spikes >= 95, "{same_spikes} of 100 states spike identically");
    }

    #[test]
    fn converted_rates_stay_in_unit_interval(seed in any::<u64>()) {
        let ann = random_ann(seed);
        let calib = random_states(100, 4, -1.0, 1.0, seed ^ 3);
        let snn = convert(&ann, &calib, &ConversionConfig { window: 40, ..ConversionConfig::default() }).unwrap();
        for s in random_states(20, 4, -1.0, 1.0, seed ^ 4) {
            let rec = snn.forward(&s).unwrap();
            for layer in rec.spike_counts() {
                prop_assert!(layer.iter().all(|&c| c <= 40));
            }
        }
    }
}
