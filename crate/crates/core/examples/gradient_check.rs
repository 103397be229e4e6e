//! Three views of the same gradient on a small two-hidden-layer network:
//! reverse-time backward, the explicit product expansion, and central
//! differences of the smoothed network.

use dsqn::grad::{backward_with, closed_form_grad, finite_diff_check, DepthRule, GradientTape, ProductConvention};
use dsqn::{NeuronConfig, SpikingNetwork, SurrogateConfig};

fn main() -> dsqn::Result<()> {
    let net = SpikingNetwork::dense(3, &[4, 4], 2, NeuronConfig::default(), SurrogateConfig::default(), 6)?;
    let mut net = net.init_weights(5);
    // larger weights so the window actually contains spikes
    for w in net.weights.iter_mut().flatten() {
        *w *= 5.0;
    }
    let obs = [1.5, 2.0, 0.8];
    let g = [0.7, -0.4];

    let tape = GradientTape::record(&net, &obs)?;
    println!("q = {:?}, hidden spikes = {}", tape.q(), tape.forward_record().total_spikes());
    for rule in [DepthRule::SameStep, DepthRule::Unrolled] {
        let reverse = backward_with(&tape, &g, rule)?;
        for convention in [ProductConvention::Shifted, ProductConvention::Printed] {
            let closed = closed_form_grad(&tape, &g, rule, convention)?;
            println!(
                "{rule:?}: backward vs closed form ({convention:?} product) relative error {:.3e}",
                reverse.relative_error(&closed)
            );
        }
    }

    let report = finite_diff_check(&net, &obs, &g, 1e-3, true)?;
    println!(
        "smooth forward, h = 1e-3: max relative error {:.3e} over {} weights",
        report.max_rel_error,
        report.rows.len()
    );
    let spiking = finite_diff_check(&net, &obs, &g, 1e-3, false)?;
    println!(
        "spiking forward (informational only): max relative error {:.3e}",
        spiking.max_rel_error
    );
    Ok(())
}
