//! Layered spiking Q-networks with a rate readout.
//!
//! Every hidden layer is a population of spiking neurons driven by a dense or
//! convolutional synaptic layer. The observation is injected as a constant
//! analog current into the first layer at every timestep; the final layer is a
//! plain linear map of the last hidden layer's mean spike rate over the window.

mod checkpoint;
mod layer;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use layer::{conv2d_apply, ConvGeometry, LayerKind, LayerSpec, Shape3};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::neuron::{LayerState, NeuronConfig};
use crate::surrogate::SurrogateConfig;

/// How hidden neurons turn potential into output during a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForwardMode {
    /// Exact step function, binary spikes.
    #[default]
    Spiking,
    /// Surrogate function in place of the step; the network becomes
    /// differentiable. Used only to validate gradients.
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikingNetwork {
    pub layers: Vec<LayerSpec>,
    pub weights: Vec<Vec<f64>>,
    pub neuron: NeuronConfig,
    pub surrogate: SurrogateConfig,
    /// Simulation window in timesteps.
    pub window: usize,
    /// Seed of the last weight initialisation.
    pub seed: u64,
}

/// Everything observed during one windowed forward pass.
#[derive(Debug, Clone)]
pub struct ForwardRecord {
    pub mode: ForwardMode,
    pub input: Vec<f64>,
    /// `steps[t][h]` is hidden layer `h` after timestep `t + 1`.
    pub steps: Vec<Vec<LayerState>>,
    /// Mean over the window of the readout's presynaptic values.
    pub readout_input: Vec<f64>,
    pub q: Vec<f64>,
}

impl ForwardRecord {
    pub fn window(&self) -> usize {
        self.steps.len()
    }

    /// Spike counts accumulated by each hidden layer over the window.
    pub fn spike_counts(&self) -> Vec<Vec<u32>> {
        self.steps
            .last()
            .map(|last| last.iter().map(|s| s.spike_count.clone()).collect())
            .unwrap_or_default()
    }

    pub fn total_spikes(&self) -> u64 {
        self.steps
            .last()
            .map(|last| last.iter().map(LayerState::total_spikes).sum())
            .unwrap_or(0)
    }
}

/// Q-values together with the number of hidden spikes it took to produce them.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub q: Vec<f64>,
    pub spikes: u64,
}

impl SpikingNetwork {
    /// A network with all weights zero. Fails if the layers do not compose.
    pub fn new(
        layers: Vec<LayerSpec>,
        neuron: NeuronConfig,
        surrogate: SurrogateConfig,
        window: usize,
    ) -> Result<Self> {
        let weights = layers.iter().map(|l| vec![0.0; l.weight_len()]).collect();
        let net = Self {
            layers,
            weights,
            neuron,
            surrogate,
            window,
            seed: 0,
        };
        net.validate()?;
        Ok(net)
    }

    /// Dense network `inputs -> hidden[0] -> ... -> actions`.
    pub fn dense(
        inputs: usize,
        hidden: &[usize],
        actions: usize,
        neuron: NeuronConfig,
        surrogate: SurrogateConfig,
        window: usize,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = inputs;
        for &h in hidden {
            layers.push(LayerSpec::dense(prev, h));
            prev = h;
        }
        layers.push(LayerSpec::readout(prev, actions));
        Self::new(layers, neuron, surrogate, window)
    }

    pub fn validate(&self) -> Result<()> {
        validate_layers(&self.layers)?;
        self.neuron.validate()?;
        self.surrogate.validate()?;
        if self.window == 0 {
            return Err(Error::contract("window must be at least 1"));
        }
        if self.weights.len() != self.layers.len() {
            return Err(Error::contract("one weight tensor per layer required"));
        }
        for (i, (l, w)) in self.layers.iter().zip(&self.weights).enumerate() {
            if w.len() != l.weight_len() {
                return Err(Error::contract(format!(
                    "layer {i} has {} weights, expected {}",
                    w.len(),
                    l.weight_len()
                )));
            }
            ensure_finite(w, "weights")?;
        }
        Ok(())
    }

    /// Uniform initialisation in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` from a ChaCha8 stream.
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
            seed,
            ..self.clone()
        }
    }

    pub fn with_window(&self, window: usize) -> Self {
        Self {
            window,
            ..self.clone()
        }
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].input_len()
    }

    pub fn action_count(&self) -> usize {
        self.layers.last().map_or(0, LayerSpec::output_len)
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    /// Number of spiking neurons.
    pub fn neuron_count(&self) -> usize {
        self.layers[..self.hidden_layers()].iter().map(LayerSpec::output_len).sum()
    }

    fn check_observation(&self, observation: &[f64]) -> Result<()> {
        if observation.len() != self.input_len() {
            return Err(Error::contract(format!(
                "observation has {} values, network expects {}",
                observation.len(),
                self.input_len()
            )));
        }
        ensure_finite(observation, "observation")
    }

    /// Full forward pass with the exact step function.
    pub fn forward(&self, observation: &[f64]) -> Result<ForwardRecord> {
        self.forward_with(observation, ForwardMode::Spiking)
    }

    pub fn forward_with(&self, observation: &[f64], mode: ForwardMode) -> Result<ForwardRecord> {
        self.check_observation(observation)?;
        let hidden = self.hidden_layers();
        let readout = &self.layers[hidden];
        let mut states: Vec<LayerState> = self.layers[..hidden]
            .iter()
            .map(|l| LayerState::new(l.output_len(), &self.neuron))
            .collect();
        let mut currents: Vec<Vec<f64>> = self.layers[..hidden]
            .iter()
            .map(|l| vec![0.0; l.output_len()])
            .collect();
        if hidden > 0 {
            self.layers[0].apply(&self.weights[0], observation, &mut currents[0]);
        }
        let mut steps = Vec::with_capacity(self.window);
        let mut readout_input = vec![0.0; readout.input_len()];
        let mut active = Vec::new();
        for _ in 0..self.window {
            for h in 0..hidden {
                if h > 0 {
                    let prev = &states[h - 1].s;
                    match mode {
                        ForwardMode::Spiking => {
                            collect_active(prev, &mut active);
                            self.layers[h].apply_active(&self.weights[h], prev, &active, &mut currents[h]);
                        }
                        ForwardMode::Smooth => self.layers[h].apply(&self.weights[h], prev, &mut currents[h]),
                    }
                }
                match mode {
                    ForwardMode::Spiking => states[h].advance(&currents[h], &self.neuron),
                    ForwardMode::Smooth => {
                        let sg = self.surrogate;
                        states[h].advance_smooth(&currents[h], &self.neuron, |x| sg.value_unchecked(x))
                    }
                }
                if states[h].u.iter().any(|u| !u.is_finite()) {
                    return Err(Error::NumericOverflow {
                        what: "membrane potential",
                        layer: h,
                        step: steps.len() + 1,
                    });
                }
            }
            if hidden > 0 {
                for (acc, s) in readout_input.iter_mut().zip(&states[hidden - 1].s) {
                    *acc += s;
                }
            }
            steps.push(states.clone());
        }
        if hidden > 0 {
            let t = self.window as f64;
            for r in &mut readout_input {
                *r /= t;
            }
        } else {
            readout_input.copy_from_slice(observation);
        }
        let mut q = vec![0.0; readout.output_len()];
        readout.apply(&self.weights[hidden], &readout_input, &mut q);
        Ok(ForwardRecord {
            mode,
            input: observation.to_vec(),
            steps,
            readout_input,
            q,
        })
    }

    /// Q-values and spike total without keeping per-step states.
    pub fn decide(&self, observation: &[f64]) -> Result<Decision> {
        self.check_observation(observation)?;
        let hidden = self.hidden_layers();
        let readout = &self.layers[hidden];
        let mut states: Vec<LayerState> = self.layers[..hidden]
            .iter()
            .map(|l| LayerState::new(l.output_len(), &self.neuron))
            .collect();
        let mut currents: Vec<Vec<f64>> = self.layers[..hidden]
            .iter()
            .map(|l| vec![0.0; l.output_len()])
            .collect();
        let mut readout_input = vec![0.0; readout.input_len()];
        if hidden == 0 {
            readout_input.copy_from_slice(observation);
        } else {
            self.layers[0].apply(&self.weights[0], observation, &mut currents[0]);
            let mut active = Vec::new();
            for step in 0..self.window {
                states[0].advance(&currents[0], &self.neuron);
                for h in 1..hidden {
                    collect_active(&states[h - 1].s, &mut active);
                    self.layers[h].apply_active(&self.weights[h], &states[h - 1].s, &active, &mut currents[h]);
                    states[h].advance(&currents[h], &self.neuron);
                }
                for (h, st) in states.iter().enumerate() {
                    if st.u.iter().any(|u| !u.is_finite()) {
                        return Err(Error::NumericOverflow {
                            what: "membrane potential",
                            layer: h,
                            step: step + 1,
                        });
                    }
                }
                for (acc, s) in readout_input.iter_mut().zip(&states[hidden - 1].s) {
                    *acc += s;
                }
            }
            let t = self.window as f64;
            for r in &mut readout_input {
                *r /= t;
            }
        }
        let mut q = vec![0.0; readout.output_len()];
        readout.apply(&self.weights[hidden], &readout_input, &mut q);
        Ok(Decision {
            q,
            spikes: states.iter().map(LayerState::total_spikes).sum(),
        })
    }

    pub fn q_values(&self, observation: &[f64]) -> Result<Vec<f64>> {
        self.decide(observation).map(|d| d.q)
    }
}

#[inline]
fn collect_active(s: &[f64], active: &mut Vec<usize>) {
    active.clear();
    active.extend(s.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, _)| i));
}

/// Checks that layers compose and that exactly the last one is a non-spiking
/// dense readout.
pub fn validate_layers(layers: &[LayerSpec]) -> Result<()> {
    let Some(last) = layers.last() else {
        return Err(Error::contract("network needs at least one layer"));
    };
    if last.spiking || !matches!(last.kind, LayerKind::Dense { .. }) {
        return Err(Error::contract("last layer must be a non-spiking dense readout"));
    }
    for (i, l) in layers.iter().enumerate() {
        l.validate()?;
        if i + 1 < layers.len() && !l.spiking {
            return Err(Error::contract(format!("hidden layer {i} must be spiking")));
        }
    }
    for (i, pair) in layers.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let ok = match b.kind {
            LayerKind::Dense { inputs, .. } => a.output_len() == inputs,
            LayerKind::Conv2d(g) => a.out_shape() == g.input,
        };
        if !ok {
            return Err(Error::contract(format!(
                "layer {i} output {:?} does not feed layer {} input {:?}",
                a.out_shape(),
                i + 1,
                b.in_shape()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::{NeuronConfig, ResetMode};

    fn lif() -> NeuronConfig {
        NeuronConfig::lif(ResetMode::Hard, 2.0, 1.0, 0.0)
    }

    #[test]
    fn readout_only_network_is_linear() {
        let mut net = SpikingNetwork::new(vec![LayerSpec::readout(3, 2)], lif(), SurrogateConfig::default(), 8).unwrap();
        net.weights[0] = vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.25];
        let rec = net.forward(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(rec.q, vec![6.0, -0.25]);
        assert_eq!(rec.window(), 8);
    }

    #[test]
    fn period_two_hidden_rate() {
        // a single observation unit of 1.5 drives two hidden neurons with weight 1
        let mut net = SpikingNetwork::dense(1, &[2], 2, lif(), SurrogateConfig::default(), 4).unwrap();
        net.weights[0] = vec![1.0, 1.0];
        net.weights[1] = vec![2.0, 0.0, -1.0, 4.0];
        let rec = net.forward(&[1.5]).unwrap();
        assert_eq!(rec.readout_input, vec![0.5, 0.5]);
        assert_eq!(rec.q, vec![1.0, 1.5]);
        assert_eq!(net.q_values(&[1.5]).unwrap(), rec.q);
    }

    #[test]
    fn zero_weights_give_zero_q() {
        let net = SpikingNetwork::dense(3, &[4, 4], 2, lif(), SurrogateConfig::default(), 16).unwrap();
        let rec = net.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(rec.q, vec![0.0, 0.0]);
        assert_eq!(rec.total_spikes(), 0);
    }

    #[test]
    fn shape_and_value_errors() {
        let net = SpikingNetwork::dense(3, &[4], 2, lif(), SurrogateConfig::default(), 4).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Contract(_))));
        assert!(matches!(net.forward(&[1.0, f64::NAN, 0.0]), Err(Error::NumericInput(_))));
        let bad = vec![LayerSpec::dense(3, 4), LayerSpec::readout(5, 2)];
        assert!(SpikingNetwork::new(bad, lif(), SurrogateConfig::default(), 4).is_err());
        let spiking_last = vec![LayerSpec::dense(3, 4)];
        assert!(SpikingNetwork::new(spiking_last, lif(), SurrogateConfig::default(), 4).is_err());
        assert!(SpikingNetwork::dense(3, &[4], 2, lif(), SurrogateConfig::default(), 0).is_err());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let net = SpikingNetwork::dense(4, &[8], 3, lif(), SurrogateConfig::default(), 4).unwrap();
        let a = net.init_weights(11);
        let b = net.init_weights(11);
        assert_eq!(a, b);
        assert_ne!(a.weights, net.init_weights(12).weights);
        assert!(a.weights[0].iter().all(|w| w.abs() <= 0.5));
        assert!(a.weights[0].iter().any(|w| *w != 0.0));
    }

    #[test]
    fn init_variance_matches_uniform() {
        // Var U(-b, b) = b^2 / 3 = 1 / (3 fan_in)
        let fan_in = 1000;
        let net = SpikingNetwork::dense(fan_in, &[1000], 1, lif(), SurrogateConfig::default(), 1).unwrap();
        let w = &net.init_weights(3).weights[0];
        assert_eq!(w.len(), 1_000_000);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / w.len() as f64;
        let expected = 1.0 / (3.0 * fan_in as f64);
        assert!((var - expected).abs() / expected < 0.05, "variance {var} vs {expected}");
    }

    #[test]
    fn conv_network_runs() {
        let c = LayerSpec::conv2d(Shape3::new(1, 5, 5), 2, [3, 3], 1);
        let layers = vec![c, LayerSpec::dense(18, 4), LayerSpec::readout(4, 3)];
        let net = SpikingNetwork::new(layers, lif(), SurrogateConfig::default(), 6)
            .unwrap()
            .init_weights(1);
        let obs: Vec<f64> = (0..25).map(|i| (i % 7) as f64).collect();
        let rec = net.forward(&obs).unwrap();
        assert_eq!(rec.q, net.q_values(&obs).unwrap());
        assert_eq!(net.neuron_count(), 22);
    }
}
