//! Surrogate-gradient backpropagation through time.
//!
//! For a hidden LIF layer with hard reset, the sensitivity of the pre-reset
//! potential to the previous one is
//!
//! ```text
//! M[t] = (1 - 1/tau_m) * (1 - S[t-1] + sg(U[t-1] - v_th) * (v_r - U[t-1]))
//! ```
//!
//! where `sg` is the surrogate derivative, and `dU[t]/dW = M[t] dU[t-1]/dW + x[t]/tau_m`.
//! [`backward`] runs the adjoint of that recurrence backwards in time, so its
//! memory is one vector per timestep rather than one weight-sized tensor.
//! [`closed_form_grad`] expands the same recurrence into explicit products of
//! `M` and exists only to cross-check [`backward`] on tiny networks.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::net::{ForwardMode, ForwardRecord, LayerKind, SpikingNetwork};
use crate::neuron::{NeuronModel, ResetMode};

/// How the loss sensitivity of a layer's spikes is pulled down from the layer above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthRule {
    /// `dL/dS[l,t] = W[l+1]^T (dL/dS[l+1,t] * sg(U[l+1,t])) / tau_m`: only the
    /// same-timestep path through the layer above is followed.
    #[default]
    SameStep,
    /// Also follows the membrane of the layer above forward in time, giving
    /// the exact derivative of the unrolled network.
    Unrolled,
}

/// Index range of the inner product in the expanded `dU/dW` sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductConvention {
    /// `prod_{tau=1..t'} M + sum_{tau<t'} prod_{i=tau..t'} M x[tau]/tau_m + x[t']/tau_m`,
    /// exactly as usually typeset.
    Printed,
    /// `sum_{tau<=t'} prod_{i=tau+1..t'} M x[tau]/tau_m`, what the recurrence unrolls to.
    Shifted,
}

/// A forward record plus the per-step surrogate derivatives backward needs.
#[derive(Debug, Clone)]
pub struct GradientTape<'n> {
    net: &'n SpikingNetwork,
    record: ForwardRecord,
    /// `surrogate_grads[t][h][i] = sg(U[h,t] - v_th)`.
    surrogate_grads: Vec<Vec<Vec<f64>>>,
}

impl<'n> GradientTape<'n> {
    pub fn record(net: &'n SpikingNetwork, observation: &[f64]) -> Result<Self> {
        Self::record_with(net, observation, ForwardMode::Spiking)
    }

    pub fn record_with(net: &'n SpikingNetwork, observation: &[f64], mode: ForwardMode) -> Result<Self> {
        let record = net.forward_with(observation, mode)?;
        Self::from_record(net, record)
    }

    pub fn from_record(net: &'n SpikingNetwork, record: ForwardRecord) -> Result<Self> {
        if record.window() != net.window {
            return Err(Error::contract("record length does not match the network window"));
        }
        let hidden = net.hidden_layers();
        for step in &record.steps {
            if step.len() != hidden
                || step.iter().zip(&net.layers).any(|(s, l)| s.width() != l.output_len())
            {
                return Err(Error::contract("record does not match the network's layers"));
            }
        }
        let sg = net.surrogate;
        let v_th = net.neuron.v_th;
        let surrogate_grads = record
            .steps
            .iter()
            .map(|layers| {
                layers
                    .iter()
                    .map(|st| st.u.iter().map(|u| sg.grad_unchecked(u - v_th)).collect())
                    .collect()
            })
            .collect();
        Ok(Self {
            net,
            record,
            surrogate_grads,
        })
    }

    pub fn network(&self) -> &'n SpikingNetwork {
        self.net
    }

    pub fn forward_record(&self) -> &ForwardRecord {
        &self.record
    }

    pub fn q(&self) -> &[f64] {
        &self.record.q
    }

    pub fn window(&self) -> usize {
        self.record.window()
    }

    /// Presynaptic values of hidden layer `h` at 0-based step `k`.
    fn layer_input(&self, h: usize, k: usize) -> &[f64] {
        if h == 0 {
            &self.record.input
        } else {
            &self.record.steps[k][h - 1].s
        }
    }

    /// `M` for hidden layer `h` at 0-based step `k`, built from step `k - 1`
    /// (the resting state when `k = 0`).
    fn m_factor(&self, h: usize, k: usize, out: &mut [f64]) {
        let cfg = &self.net.neuron;
        let leak = 1.0 - 1.0 / cfg.tau_m;
        if k == 0 {
            let sg0 = self.net.surrogate.grad_unchecked(cfg.v_r - cfg.v_th);
            let m0 = leak * (1.0 + sg0 * (cfg.v_r - cfg.v_r));
            out.fill(m0);
            return;
        }
        let st = &self.record.steps[k - 1][h];
        let sg = &self.surrogate_grads[k - 1][h];
        for i in 0..out.len() {
            out[i] = leak * (1.0 - st.s[i] + sg[i] * (cfg.v_r - st.u[i]));
        }
    }

    fn check_supported(&self, loss_grad_q: &[f64]) -> Result<()> {
        let cfg = &self.net.neuron;
        if cfg.model != NeuronModel::Lif || cfg.reset != ResetMode::Hard {
            return Err(Error::contract(
                "gradients are defined for hard-reset LIF networks only",
            ));
        }
        if loss_grad_q.len() != self.net.action_count() {
            return Err(Error::contract(format!(
                "loss gradient has {} entries, network has {} actions",
                loss_grad_q.len(),
                self.net.action_count()
            )));
        }
        if loss_grad_q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericInput("loss gradient".into()));
        }
        Ok(())
    }
}

/// Weight gradients, one flat tensor per layer in the network's layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<Vec<f64>>,
}

impl GradientSet {
    pub fn zeros_like(weights: &[Vec<f64>]) -> Self {
        Self {
            layers: weights.iter().map(|w| vec![0.0; w.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        self.layers.iter_mut().flatten().for_each(|x| *x *= k);
    }

    pub fn max_abs(&self) -> f64 {
        self.layers.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().flatten().all(|x| x.is_finite())
    }

    /// Largest per-layer `max|a - b| / max(max|a|, max|b|)`; zero when both are zero.
    pub fn relative_error(&self, other: &GradientSet) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| {
                let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
                if scale == 0.0 {
                    0.0
                } else {
                    diff / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Weight gradients of `loss_grad_q . q` using the same-step depth rule.
pub fn backward(tape: &GradientTape<'_>, loss_grad_q: &[f64]) -> Result<GradientSet> {
    backward_with(tape, loss_grad_q, DepthRule::SameStep)
}

pub fn backward_with(tape: &GradientTape<'_>, loss_grad_q: &[f64], rule: DepthRule) -> Result<GradientSet> {
    tape.check_supported(loss_grad_q)?;
    let net = tape.net;
    let hidden = net.hidden_layers();
    let window = tape.window();
    let tau = net.neuron.tau_m;
    let mut grads = GradientSet::zeros_like(&net.weights);

    let readout = &net.layers[hidden];
    readout.accumulate_weight_grad(&mut grads.layers[hidden], loss_grad_q, &tape.record.readout_input, 1.0);
    if hidden == 0 {
        return Ok(grads);
    }

    // dL/dS of the last hidden layer is the same at every step.
    let mut top = vec![0.0; readout.input_len()];
    readout.accumulate_input_grad(&net.weights[hidden], loss_grad_q, &mut top, 1.0 / window as f64);
    let mut d_spikes = vec![top; window];

    let mut m = Vec::new();
    let mut next_delta: Vec<f64> = Vec::new();
    for h in (0..hidden).rev() {
        let layer = &net.layers[h];
        let width = layer.output_len();
        m.resize(width, 0.0);
        let mut errors = vec![vec![0.0; width]; window];
        let mut deltas = vec![vec![0.0; width]; window];
        for k in (0..window).rev() {
            let sg = &tape.surrogate_grads[k][h];
            for i in 0..width {
                errors[k][i] = d_spikes[k][i] * sg[i];
            }
            deltas[k].copy_from_slice(&errors[k]);
            if k + 1 < window {
                tape.m_factor(h, k + 1, &mut m);
                for i in 0..width {
                    deltas[k][i] += m[i] * next_delta[i];
                }
            }
            if deltas[k].iter().any(|d| !d.is_finite()) {
                return Err(Error::NumericOverflow {
                    what: "membrane gradient",
                    layer: h,
                    step: k + 1,
                });
            }
            next_delta.clone_from(&deltas[k]);
        }

        let inv_tau = 1.0 / tau;
        if h == 0 {
            // the observation is the same at every step
            let mut total = vec![0.0; width];
            for d in &deltas {
                for (t, x) in total.iter_mut().zip(d) {
                    *t += x;
                }
            }
            layer.accumulate_weight_grad(&mut grads.layers[0], &total, tape.layer_input(0, 0), inv_tau);
        } else {
            let binary = tape.record.mode == ForwardMode::Spiking;
            let mut active = Vec::new();
            for (k, d) in deltas.iter().enumerate() {
                let x = tape.layer_input(h, k);
                if binary {
                    active.clear();
                    active.extend((0..x.len()).filter(|&j| x[j] != 0.0));
                    layer.accumulate_weight_grad_active(&mut grads.layers[h], d, x, &active, inv_tau);
                } else {
                    layer.accumulate_weight_grad(&mut grads.layers[h], d, x, inv_tau);
                }
            }
            let below = layer.input_len();
            let source = match rule {
                DepthRule::SameStep => &errors,
                DepthRule::Unrolled => &deltas,
            };
            d_spikes = source
                .iter()
                .map(|d| {
                    let mut v = vec![0.0; below];
                    layer.accumulate_input_grad(&net.weights[h], d, &mut v, inv_tau);
                    v
                })
                .collect();
        }
    }
    Ok(grads)
}

/// Explicit-product evaluation of the same gradients as [`backward_with`].
///
/// Cubic in the window and restricted to dense layers; a verification oracle,
/// not a training path.
pub fn closed_form_grad(
    tape: &GradientTape<'_>,
    loss_grad_q: &[f64],
    rule: DepthRule,
    convention: ProductConvention,
) -> Result<GradientSet> {
    tape.check_supported(loss_grad_q)?;
    let net = tape.net;
    if net.layers.iter().any(|l| !matches!(l.kind, LayerKind::Dense { .. })) {
        return Err(Error::contract("closed-form gradients support dense layers only"));
    }
    let hidden = net.hidden_layers();
    let window = tape.window();
    let tau = net.neuron.tau_m;
    let mut grads = GradientSet::zeros_like(&net.weights);

    // readout: g_i * (1/t) sum_t S_j[t]
    let readout = &net.layers[hidden];
    let n_in = readout.input_len();
    let presyn_mean: Vec<f64> = if hidden == 0 {
        tape.record.input.clone()
    } else {
        (0..n_in)
            .map(|j| (0..window).map(|k| tape.record.steps[k][hidden - 1].s[j]).sum::<f64>() / window as f64)
            .collect()
    };
    let readout_w = &net.weights[hidden];
    for (i, gi) in loss_grad_q.iter().enumerate() {
        for j in 0..n_in {
            grads.layers[hidden][i * n_in + j] = gi * presyn_mean[j];
        }
        if readout.constant_input {
            grads.layers[hidden][n_in * loss_grad_q.len() + i] = *gi;
        }
    }
    if hidden == 0 {
        return Ok(grads);
    }

    let d_top: Vec<f64> = (0..n_in)
        .map(|j| {
            (0..loss_grad_q.len())
                .map(|i| readout_w[i * n_in + j] * loss_grad_q[i])
                .sum::<f64>()
                / window as f64
        })
        .collect();
    let mut d_spikes = vec![d_top; window];

    for h in (0..hidden).rev() {
        let layer = &net.layers[h];
        let width = layer.output_len();
        let inputs = layer.input_len();
        let w = &net.weights[h];

        // ms[k][i]: M at 0-based step k
        let ms: Vec<Vec<f64>> = (0..window)
            .map(|k| {
                let mut m = vec![0.0; width];
                tape.m_factor(h, k, &mut m);
                m
            })
            .collect();
        let errors: Vec<Vec<f64>> = (0..window)
            .map(|k| (0..width).map(|i| d_spikes[k][i] * tape.surrogate_grads[k][h][i]).collect())
            .collect();
        let prod = |i: usize, from: usize, to: usize| -> f64 {
            // product of M over 0-based steps from..=to (empty product = 1)
            (from..=to).fold(1.0, |p, k| p * ms[k][i])
        };
        let input_at = |k: usize, j: usize| -> f64 {
            if j == inputs {
                1.0
            } else {
                tape.layer_input(h, k)[j]
            }
        };
        let cols = inputs + usize::from(layer.constant_input);
        for i in 0..width {
            for j in 0..cols {
                let mut g = 0.0;
                for tp in 0..window {
                    let du_dw = match convention {
                        ProductConvention::Shifted => (0..=tp)
                            .map(|s| if s == tp { 1.0 } else { prod(i, s + 1, tp) } * input_at(s, j) / tau)
                            .sum::<f64>(),
                        ProductConvention::Printed => {
                            if tp == 0 {
                                input_at(0, j) / tau
                            } else {
                                prod(i, 0, tp)
                                    + (0..tp).map(|s| prod(i, s, tp) * input_at(s, j) / tau).sum::<f64>()
                                    + input_at(tp, j) / tau
                            }
                        }
                    };
                    g += errors[tp][i] * du_dw;
                }
                let idx = if j == inputs { width * inputs + i } else { i * inputs + j };
                grads.layers[h][idx] = g;
            }
        }

        if h > 0 {
            let sens: Vec<Vec<f64>> = match rule {
                DepthRule::SameStep => errors.clone(),
                DepthRule::Unrolled => (0..window)
                    .map(|tp| {
                        (0..width)
                            .map(|i| {
                                (tp..window)
                                    .map(|s| if s == tp { 1.0 } else { prod(i, tp + 1, s) } * errors[s][i])
                                    .sum::<f64>()
                            })
                            .collect()
                    })
                    .collect(),
            };
            d_spikes = sens
                .iter()
                .map(|e| {
                    (0..inputs)
                        .map(|j| (0..width).map(|i| w[i * inputs + j] * e[i]).sum::<f64>() / tau)
                        .collect()
                })
                .collect();
        }
    }
    Ok(grads)
}

/// One row of a finite-difference report.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightCheck {
    pub layer: usize,
    pub weight_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub mode: ForwardMode,
    pub rule: DepthRule,
    pub step: f64,
    pub rows: Vec<WeightCheck>,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
}

impl GradCheckReport {
    /// False in spiking mode, where the network is piecewise constant in its
    /// weights and the comparison is informational only.
    pub fn is_differentiable(&self) -> bool {
        self.mode == ForwardMode::Smooth
    }

    /// CSV with header `layer,weight_index,analytic,numeric,rel_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,weight_index,analytic,numeric,rel_error\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.layer, r.weight_index, r.analytic, r.numeric, r.rel_error);
        }
        out
    }
}

/// Denominator floor for per-weight relative errors. Weights whose true
/// gradient is below this are compared in absolute terms instead.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// Compares backward gradients against central differences of `loss_grad_q . q`.
///
/// Uses [`DepthRule::Unrolled`], the exact derivative; with one hidden layer
/// both rules coincide.
pub fn finite_diff_check(
    net: &SpikingNetwork,
    observation: &[f64],
    loss_grad_q: &[f64],
    step: f64,
    smooth_forward: bool,
) -> Result<GradCheckReport> {
    finite_diff_check_with(net, observation, loss_grad_q, step, smooth_forward, DepthRule::Unrolled)
}

pub fn finite_diff_check_with(
    net: &SpikingNetwork,
    observation: &[f64],
    loss_grad_q: &[f64],
    step: f64,
    smooth_forward: bool,
    rule: DepthRule,
) -> Result<GradCheckReport> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::contract(format!("finite-difference step must be positive, got {step}")));
    }
    let mode = if smooth_forward {
        ForwardMode::Smooth
    } else {
        ForwardMode::Spiking
    };
    let tape = GradientTape::record_with(net, observation, mode)?;
    let analytic = backward_with(&tape, loss_grad_q, rule)?;
    let objective = |n: &SpikingNetwork| -> Result<f64> {
        let q = n.forward_with(observation, mode)?.q;
        Ok(q.iter().zip(loss_grad_q).map(|(a, b)| a * b).sum())
    };
    let mut probe = net.clone();
    let mut rows = Vec::new();
    for layer in 0..net.layers.len() {
        for idx in 0..net.weights[layer].len() {
            let w0 = net.weights[layer][idx];
            probe.weights[layer][idx] = w0 + step;
            let up = objective(&probe)?;
            probe.weights[layer][idx] = w0 - step;
            let down = objective(&probe)?;
            probe.weights[layer][idx] = w0;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic.layers[layer][idx];
            let denom = a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
            rows.push(WeightCheck {
                layer,
                weight_index: idx,
                analytic: a,
                numeric,
                rel_error: (a - numeric).abs() / denom,
            });
        }
    }
    let max_rel_error = rows.iter().fold(0.0f64, |m, r| m.max(r.rel_error));
    let mean_rel_error = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.rel_error).sum::<f64>() / rows.len() as f64
    };
    Ok(GradCheckReport {
        mode,
        rule,
        step,
        rows,
        max_rel_error,
        mean_rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::NeuronConfig;
    use crate::surrogate::SurrogateConfig;

    fn net(hidden: &[usize], window: usize) -> SpikingNetwork {
        SpikingNetwork::dense(2, hidden, 2, NeuronConfig::default(), SurrogateConfig::default(), window).unwrap()
    }

    #[test]
    fn silent_network_has_zero_readout_gradient() {
        let n = net(&[3], 4);
        let tape = GradientTape::record(&n, &[0.3, -0.2]).unwrap();
        let g = backward(&tape, &[1.0, -2.0]).unwrap();
        assert!(g.layers[1].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn readout_gradient_with_always_firing_neuron() {
        // hidden neuron driven at 4 fires every step with tau 2, v_th 1
        let mut n = SpikingNetwork::dense(1, &[1], 1, NeuronConfig::default(), SurrogateConfig::default(), 4).unwrap();
        n.weights[0] = vec![4.0];
        n.weights[1] = vec![0.7];
        let tape = GradientTape::record(&n, &[1.0]).unwrap();
        assert_eq!(tape.forward_record().readout_input, vec![1.0]);
        // loss (O - y)^2 with O - y = 1: dL/dO = 2, dL/dW = (2/4) * 1 * 4 = 2
        let g = backward(&tape, &[2.0]).unwrap();
        assert_eq!(g.layers[1], vec![2.0]);
    }

    #[test]
    fn window_one_reduces_to_input_over_tau() {
        let mut n = net(&[2], 1).init_weights(4);
        n.weights[0] = vec![0.9, 0.4, -0.3, 2.5];
        let tape = GradientTape::record(&n, &[1.0, 0.5]).unwrap();
        let g = [1.0, -1.0];
        let cf = closed_form_grad(&tape, &g, DepthRule::SameStep, ProductConvention::Shifted).unwrap();
        let sg = &tape.surrogate_grads[0][0];
        let w = &n.weights[1];
        for i in 0..2 {
            let dlds = (w[i] * g[0] + w[2 + i] * g[1]) / 1.0;
            for (j, x) in [1.0, 0.5].iter().enumerate() {
                let expect = dlds * sg[i] * x / 2.0;
                assert!((cf.layers[0][i * 2 + j] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn window_two_hand_expansion() {
        // scalar chain 1 -> 1 -> 1, obs x = 1.6, w1 = 1: U1 = 0.8 (no spike), U2 = 1.2 (spike)
        let mut n = SpikingNetwork::dense(1, &[1], 1, NeuronConfig::default(), SurrogateConfig::default(), 2).unwrap();
        n.weights[0] = vec![1.0];
        n.weights[1] = vec![3.0];
        let tape = GradientTape::record(&n, &[1.6]).unwrap();
        let rec = tape.forward_record();
        assert_eq!(rec.steps[0][0].s[0], 0.0);
        assert_eq!(rec.steps[1][0].s[0], 1.0);
        let sg = |x: f64| 2.0 / (2.0 * (1.0 + (std::f64::consts::PI * x).powi(2)));
        let (u1, u2) = (0.8, 1.2);
        let dlds = 3.0 * 1.0 / 2.0; // W^L g / t
        let e1 = dlds * sg(u1 - 1.0);
        let e2 = dlds * sg(u2 - 1.0);
        let m2 = 0.5 * (1.0 - 0.0 + sg(u1 - 1.0) * (0.0 - u1));
        let d1 = 1.6 / 2.0;
        let d2 = m2 * d1 + 1.6 / 2.0;
        let expect = e1 * d1 + e2 * d2;
        let cf = closed_form_grad(&tape, &[1.0], DepthRule::SameStep, ProductConvention::Shifted).unwrap();
        let bw = backward(&tape, &[1.0]).unwrap();
        assert!((cf.layers[0][0] - expect).abs() < 1e-14);
        assert!((bw.layers[0][0] - expect).abs() < 1e-14);
    }

    #[test]
    fn refuses_soft_reset_and_if() {
        let soft = NeuronConfig {
            reset: ResetMode::Soft,
            ..NeuronConfig::default()
        };
        let n = SpikingNetwork::dense(2, &[2], 2, soft, SurrogateConfig::default(), 3).unwrap();
        let tape = GradientTape::record(&n, &[1.0, 1.0]).unwrap();
        assert!(matches!(backward(&tape, &[1.0, 1.0]), Err(Error::Contract(_))));
        let iff = NeuronConfig::integrate_and_fire(ResetMode::Hard, 1.0, 0.0);
        let n = SpikingNetwork::dense(2, &[2], 2, iff, SurrogateConfig::default(), 3).unwrap();
        let tape = GradientTape::record(&n, &[1.0, 1.0]).unwrap();
        assert!(backward(&tape, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn loss_gradient_length_checked() {
        let n = net(&[2], 3);
        let tape = GradientTape::record(&n, &[1.0, 1.0]).unwrap();
        assert!(matches!(backward(&tape, &[1.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn zero_network_finite_differences_vanish() {
        let n = net(&[4], 8);
        let r = finite_diff_check(&n, &[0.5, -0.5], &[1.0, 1.0], 1e-3, true).unwrap();
        assert!(r.rows.iter().all(|w| w.rel_error <= 1e-4));
        assert!(r.is_differentiable());
    }

    #[test]
    fn nonpositive_step_rejected() {
        let n = net(&[4], 8);
        assert!(matches!(
            finite_diff_check(&n, &[0.5, -0.5], &[1.0, 1.0], 0.0, true),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn spiking_mode_report_is_flagged() {
        let n = net(&[4], 8).init_weights(2);
        let r = finite_diff_check(&n, &[1.5, -0.5], &[1.0, -1.0], 1e-3, false).unwrap();
        assert!(!r.is_differentiable());
        assert!(r.to_csv().starts_with("layer,weight_index,analytic,numeric,rel_error\n"));
    }
}
