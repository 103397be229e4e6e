//! ReLU Q-networks and their conversion to integrate-and-fire spiking networks.
//!
//! Each hidden layer `l` gets a scale `lambda_l`, a high percentile of its
//! pre-activation values over a calibration set. With `lambda` for the input taken as 1,
//! hidden weights become `v_th * W * lambda_{l-1} / lambda_l` and biases
//! `v_th * b / lambda_l` on a constant input unit, so a soft-reset IF neuron's
//! rate approximates `a_l / lambda_l`. The readout multiplies rates back by
//! `lambda_{L-1}` and keeps its bias.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::grad::{DepthRule, GradientSet};
use crate::net::{validate_layers, Checkpoint, LayerSpec, SpikingNetwork};
use crate::neuron::{NeuronConfig, ResetMode};
use crate::surrogate::SurrogateConfig;
use crate::trainer::{argmax, QNetwork};

/// Conventional network with ReLU hidden layers and a linear readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluNetwork {
    /// Same layer conventions as [`SpikingNetwork`]; `spiking` marks ReLU layers.
    pub layers: Vec<LayerSpec>,
    pub weights: Vec<Vec<f64>>,
    /// One bias per output channel, or empty for a bias-free layer.
    pub biases: Vec<Vec<f64>>,
    pub seed: u64,
}

/// Per-layer activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ReluTape {
    /// `activations[0]` is the input; `activations[l + 1]` is layer `l`'s output.
    pub activations: Vec<Vec<f64>>,
    pub q: Vec<f64>,
}

impl ReluNetwork {
    /// Zero-initialised network; `bias` gives every layer a bias vector.
    pub fn new(layers: Vec<LayerSpec>, bias: bool) -> Result<Self> {
        let weights = layers.iter().map(|l| vec![0.0; l.weight_len()]).collect();
        let biases = layers
            .iter()
            .map(|l| if bias { vec![0.0; l.out_shape().channels] } else { Vec::new() })
            .collect();
        let net = Self {
            layers,
            weights,
            biases,
            seed: 0,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn dense(inputs: usize, hidden: &[usize], actions: usize, bias: bool) -> Result<Self> {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = inputs;
        for &h in hidden {
            layers.push(LayerSpec::dense(prev, h));
            prev = h;
        }
        layers.push(LayerSpec::readout(prev, actions));
        Self::new(layers, bias)
    }

    pub fn validate(&self) -> Result<()> {
        validate_layers(&self.layers)?;
        if self.layers.iter().any(|l| l.constant_input) {
            return Err(Error::contract("relu layers carry biases instead of constant inputs"));
        }
        if self.weights.len() != self.layers.len() || self.biases.len() != self.layers.len() {
            return Err(Error::contract("one weight and one bias tensor per layer required"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if self.weights[i].len() != l.weight_len() {
                return Err(Error::contract(format!("layer {i} has the wrong number of weights")));
            }
            let b = self.biases[i].len();
            if b != 0 && b != l.out_shape().channels {
                return Err(Error::contract(format!("layer {i} has the wrong number of biases")));
            }
            ensure_finite(&self.weights[i], "weights")?;
            ensure_finite(&self.biases[i], "biases")?;
        }
        Ok(())
    }

    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` weights, zero biases.
    pub fn init_weights(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = self
            .layers
            .iter()
            .map(|l| {
                let bound = 1.0 / (l.fan_in() as f64).sqrt();
                (0..l.weight_len()).map(|_| rng.gen_range(-bound..=bound)).collect()
            })
            .collect();
        Self {
            weights,
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            seed,
            layers: self.layers.clone(),
        }
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].input_len()
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn action_count(&self) -> usize {
        self.layers.last().map_or(0, LayerSpec::output_len)
    }

    fn layer_forward(&self, l: usize, x: &[f64]) -> Vec<f64> {
        let mut z = self.pre_activation(l, x);
        if self.layers[l].spiking {
            for v in &mut z {
                *v = v.max(0.0);
            }
        }
        z
    }

    fn pre_activation(&self, l: usize, x: &[f64]) -> Vec<f64> {
        let layer = &self.layers[l];
        let mut z = vec![0.0; layer.output_len()];
        layer.apply(&self.weights[l], x, &mut z);
        let b = &self.biases[l];
        if !b.is_empty() {
            let per = z.len() / b.len();
            for (chunk, bias) in z.chunks_exact_mut(per).zip(b) {
                for v in chunk {
                    *v += bias;
                }
            }
        }
        z
    }

    pub fn forward(&self, observation: &[f64]) -> Result<ReluTape> {
        if observation.len() != self.input_len() {
            return Err(Error::contract(format!(
                "observation has {} values, network expects {}",
                observation.len(),
                self.input_len()
            )));
        }
        ensure_finite(observation, "observation")?;
        let mut activations = vec![observation.to_vec()];
        for l in 0..self.layers.len() {
            let next = self.layer_forward(l, activations.last().expect("input present"));
            activations.push(next);
        }
        let q = activations.pop().expect("readout present");
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow {
                what: "relu activation",
                layer: self.hidden_layers(),
                step: 0,
            });
        }
        Ok(ReluTape { activations, q })
    }

    /// Gradients of `loss_grad_q . q`: weights of every layer, then biases.
    pub fn backward(&self, tape: &ReluTape, loss_grad_q: &[f64]) -> Result<GradientSet> {
        if loss_grad_q.len() != self.action_count() {
            return Err(Error::contract("loss gradient length does not match action count"));
        }
        let n = self.layers.len();
        let mut layers: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        layers.extend(self.biases.iter().map(|b| vec![0.0; b.len()]));
        let mut d_out = loss_grad_q.to_vec();
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            if layer.spiking {
                // ReLU derivative, 0 at the kink
                for (d, a) in d_out.iter_mut().zip(&tape.activations[l + 1]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let x = &tape.activations[l];
            layer.accumulate_weight_grad(&mut layers[l], &d_out, x, 1.0);
            let gb = &mut layers[n + l];
            if !gb.is_empty() {
                let per = d_out.len() / gb.len();
                for (g, chunk) in gb.iter_mut().zip(d_out.chunks_exact(per)) {
                    *g += chunk.iter().sum::<f64>();
                }
            }
            if l > 0 {
                let mut d_in = vec![0.0; layer.input_len()];
                layer.accumulate_input_grad(&self.weights[l], &d_out, &mut d_in, 1.0);
                d_out = d_in;
            }
        }
        Ok(GradientSet { layers })
    }
}

impl QNetwork for ReluNetwork {
    type Tape<'a> = ReluTape;

    fn action_count(&self) -> usize {
        ReluNetwork::action_count(self)
    }

    fn q_values(&self, observation: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(observation)?.q)
    }

    fn record<'a>(&'a self, observation: &[f64]) -> Result<ReluTape> {
        self.forward(observation)
    }

    fn tape_q<'t>(&self, tape: &'t ReluTape) -> &'t [f64] {
        &tape.q
    }

    fn backward(&self, tape: &ReluTape, loss_grad_q: &[f64], _rule: DepthRule) -> Result<GradientSet> {
        ReluNetwork::backward(self, tape, loss_grad_q)
    }

    fn parameters(&self) -> Vec<&[f64]> {
        self.weights.iter().chain(&self.biases).map(Vec::as_slice).collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights.iter_mut().chain(&mut self.biases).map(Vec::as_mut_slice).collect()
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint::Relu(self.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConversionConfig {
    /// Percentile in (0, 100] of a layer's calibration pre-activations used as its scale.
    pub percentile: f64,
    /// Number of calibration observations to draw when the caller samples them.
    pub calibration_states: usize,
    pub window: usize,
    pub v_th: f64,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        Self {
            percentile: 99.9,
            calibration_states: 1000,
            window: 500,
            v_th: 1.0,
        }
    }
}

impl ConversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.percentile > 0.0 && self.percentile <= 100.0) {
            return Err(Error::contract(format!("percentile must be in (0, 100], got {}", self.percentile)));
        }
        if self.calibration_states == 0 || self.window == 0 {
            return Err(Error::contract("calibration_states and window must be positive"));
        }
        if !(self.v_th.is_finite() && self.v_th > 0.0) {
            return Err(Error::contract("v_th must be positive"));
        }
        Ok(())
    }
}

/// Linear-interpolation percentile (`p` in [0, 100]) of unsorted data.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (rank - lo as f64))
}

/// Per-hidden-layer scales from a calibration set.
pub fn layer_scales(ann: &ReluNetwork, calib: &[Vec<f64>], pct: f64) -> Result<Vec<f64>> {
    if calib.is_empty() {
        return Err(Error::contract("calibration set is empty"));
    }
    let hidden = ann.hidden_layers();
    let mut pre: Vec<Vec<f64>> = vec![Vec::new(); hidden];
    for obs in calib {
        let tape = ann.forward(obs)?;
        for (h, values) in pre.iter_mut().enumerate() {
            values.extend(ann.pre_activation(h, &tape.activations[h]));
        }
    }
    pre.iter()
        .enumerate()
        .map(|(layer, values)| match percentile(values, pct) {
            Some(p) if p > 0.0 => Ok(p),
            _ => Err(Error::DegenerateScale { layer }),
        })
        .collect()
}

/// Converts `ann` into a soft-reset IF network using scales from `calib`.
pub fn convert(ann: &ReluNetwork, calib: &[Vec<f64>], cfg: &ConversionConfig) -> Result<SpikingNetwork> {
    cfg.validate()?;
    ann.validate()?;
    let scales = layer_scales(ann, calib, cfg.percentile)?;
    let hidden = ann.hidden_layers();
    let mut layers = Vec::with_capacity(ann.layers.len());
    let mut weights = Vec::with_capacity(ann.layers.len());
    for (l, spec) in ann.layers.iter().enumerate() {
        let has_bias = !ann.biases[l].is_empty();
        let mut s = spec.clone();
        s.constant_input = has_bias;
        let prev = if l == 0 { 1.0 } else { scales[l - 1] };
        let (w_gain, b_gain) = if l < hidden {
            (cfg.v_th * prev / scales[l], cfg.v_th / scales[l])
        } else {
            (prev, 1.0)
        };
        let mut w: Vec<f64> = ann.weights[l].iter().map(|x| x * w_gain).collect();
        w.extend(ann.biases[l].iter().map(|b| b * b_gain));
        layers.push(s);
        weights.push(w);
    }
    let neuron = NeuronConfig::integrate_and_fire(ResetMode::Soft, cfg.v_th, 0.0);
    let mut snn = SpikingNetwork::new(layers, neuron, SurrogateConfig::default(), cfg.window)?;
    snn.weights = weights;
    snn.seed = ann.seed;
    snn.validate()?;
    Ok(snn)
}

/// Draws `n` calibration or audit states with components uniform in `[lo, hi]`.
pub fn random_states(n: usize, len: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..len).map(|_| rng.gen_range(lo..=hi)).collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditRow {
    pub window: usize,
    pub argmax_agreement: f64,
    pub mean_abs_dq: f64,
}

/// Greedy-action agreement and mean absolute Q gap between two Q tables.
pub fn compare_q(reference: &[Vec<f64>], candidate: &[Vec<f64>]) -> (f64, f64) {
    let n = reference.len() as f64;
    let agree = reference
        .iter()
        .zip(candidate)
        .filter(|(a, b)| argmax(a) == argmax(b))
        .count() as f64;
    let (mut gap, mut count) = (0.0, 0usize);
    for (a, b) in reference.iter().zip(candidate) {
        for (x, y) in a.iter().zip(b) {
            gap += (x - y).abs();
            count += 1;
        }
    }
    (agree / n, if count == 0 { 0.0 } else { gap / count as f64 })
}

/// Runs `snn` at each window on `states` and compares with `ann`.
pub fn fidelity_audit(
    ann: &ReluNetwork,
    snn: &SpikingNetwork,
    states: &[Vec<f64>],
    windows: &[usize],
) -> Result<Vec<AuditRow>> {
    if states.is_empty() {
        return Err(Error::contract("audit needs at least one state"));
    }
    let reference: Vec<Vec<f64>> = states.iter().map(|s| ann.q_values(s)).collect::<Result<_>>()?;
    windows
        .iter()
        .map(|&window| {
            let net = snn.with_window(window);
            net.validate()?;
            let q: Vec<Vec<f64>> = states.iter().map(|s| net.q_values(s)).collect::<Result<_>>()?;
            let (argmax_agreement, mean_abs_dq) = compare_q(&reference, &q);
            Ok(AuditRow {
                window,
                argmax_agreement,
                mean_abs_dq,
            })
        })
        .collect()
}

/// CSV with header `window,argmax_agreement,mean_abs_dq`.
pub fn audit_csv(rows: &[AuditRow]) -> String {
    let mut out = String::from("window,argmax_agreement,mean_abs_dq\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.window, r.argmax_agreement, r.mean_abs_dq);
    }
    out
}
