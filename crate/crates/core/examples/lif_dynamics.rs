//! Membrane traces of single neurons under constant input.

use dsqn::neuron::{lif_step, LayerState, MembraneTrace};
use dsqn::{NeuronConfig, ResetMode};

fn main() -> dsqn::Result<()> {
    let lif = NeuronConfig::lif(ResetMode::Hard, 2.0, 1.0, 0.0);

    println!("LIF hard reset, z = 1.5");
    println!("{:>3} {:>8} {:>8} {:>3}", "t", "U", "V", "S");
    let mut state = LayerState::new(1, &lif);
    for t in 1..=8 {
        state = lif_step(&state, &[1.5], &lif)?;
        println!("{t:>3} {:>8.4} {:>8.4} {:>3}", state.u[0], state.v[0], state.s[0]);
    }

    // z = 1 sits exactly at the asymptote: the potential creeps up as 1 - 2^-t
    // and only crosses once f64 rounding closes the gap
    let mut state = LayerState::new(1, &lif);
    let mut first = None;
    for t in 1..=64 {
        state = lif_step(&state, &[1.0], &lif)?;
        if state.s[0] == 1.0 && first.is_none() {
            first = Some(t);
        }
    }
    println!("\nz = 1: first spike at step {first:?}, {} spike(s) in 64 steps", state.spike_count[0]);

    for reset in [ResetMode::Hard, ResetMode::Soft] {
        let cfg = NeuronConfig::lif(reset, 2.0, 1.0, 0.0);
        let trace = MembraneTrace::record(1.3, &cfg, 1000)?;
        println!("{reset:?} reset, z = 1.3: rate {:.3}", trace.rate());
    }
    Ok(())
}
