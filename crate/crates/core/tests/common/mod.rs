#![allow(dead_code)]

use dsqn::{NeuronConfig, SpikingNetwork, SurrogateConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random dense LIF network with two hidden layers of at most four neurons,
/// plus a probe observation and loss gradient.
pub struct TinyCase {
    pub net: SpikingNetwork,
    pub observation: Vec<f64>,
    pub loss_grad_q: Vec<f64>,
}

pub fn tiny_case(seed: u64) -> TinyCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = rng.gen_range(1..=4);
    let hidden = [rng.gen_range(1..=4), rng.gen_range(1..=4)];
    let actions = rng.gen_range(1..=4);
    let window = rng.gen_range(1..=6);
    let base = SpikingNetwork::dense(inputs, &hidden, actions, NeuronConfig::default(), SurrogateConfig::default(), window)
        .expect("valid shape");
    // redraw until both hidden layers fire at least once
    loop {
        let gain = rng.gen_range(3.0..10.0);
        let mut net = base.init_weights(rng.gen());
        for w in net.weights.iter_mut().flatten() {
            *w *= gain;
        }
        let observation: Vec<f64> = (0..inputs).map(|_| rng.gen_range(-0.5..3.0)).collect();
        let counts = net.forward(&observation).expect("forward").spike_counts();
        if counts.iter().all(|layer| layer.iter().any(|&c| c > 0)) {
            let loss_grad_q = (0..actions).map(|_| rng.gen_range(-1.0..1.0)).collect();
            return TinyCase {
                net,
                observation,
                loss_grad_q,
            };
        }
    }
}

/// Eight hidden neurons, window 8.
pub fn fd_case(seed: u64, hidden: &[usize]) -> TinyCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = SpikingNetwork::dense(3, hidden, 2, NeuronConfig::default(), SurrogateConfig::default(), 8)
        .expect("valid shape")
        .init_weights(seed);
    let observation = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let loss_grad_q = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
    TinyCase {
        net,
        observation,
        loss_grad_q,
    }
}
