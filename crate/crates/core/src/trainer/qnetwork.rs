use crate::error::Result;
use crate::grad::{backward_with, DepthRule, GradientSet, GradientTape};
use crate::net::{Checkpoint, SpikingNetwork};

/// What the Q-learning loop needs from a function approximator.
pub trait QNetwork: Clone {
    /// Forward quantities kept for one backward pass.
    type Tape<'a>
    where
        Self: 'a;

    fn action_count(&self) -> usize;

    fn q_values(&self, observation: &[f64]) -> Result<Vec<f64>>;

    fn record<'a>(&'a self, observation: &[f64]) -> Result<Self::Tape<'a>>;

    fn tape_q<'t>(&self, tape: &'t Self::Tape<'_>) -> &'t [f64];

    /// Parameter gradients of `loss_grad_q . q`, laid out like [`parameters`](Self::parameters).
    fn backward(&self, tape: &Self::Tape<'_>, loss_grad_q: &[f64], rule: DepthRule) -> Result<GradientSet>;

    fn parameters(&self) -> Vec<&[f64]>;

    fn parameters_mut(&mut self) -> Vec<&mut [f64]>;

    fn checkpoint(&self) -> Checkpoint;
}

impl QNetwork for SpikingNetwork {
    type Tape<'a> = GradientTape<'a>;

    fn action_count(&self) -> usize {
        SpikingNetwork::action_count(self)
    }

    fn q_values(&self, observation: &[f64]) -> Result<Vec<f64>> {
        SpikingNetwork::q_values(self, observation)
    }

    fn record<'a>(&'a self, observation: &[f64]) -> Result<GradientTape<'a>> {
        GradientTape::record(self, observation)
    }

    fn tape_q<'t>(&self, tape: &'t GradientTape<'_>) -> &'t [f64] {
        tape.q()
    }

    fn backward(&self, tape: &GradientTape<'_>, loss_grad_q: &[f64], rule: DepthRule) -> Result<GradientSet> {
        backward_with(tape, loss_grad_q, rule)
    }

    fn parameters(&self) -> Vec<&[f64]> {
        self.weights.iter().map(Vec::as_slice).collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights.iter_mut().map(Vec::as_mut_slice).collect()
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint::Spiking(self.clone())
    }
}

/// Index of the first maximal entry.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
