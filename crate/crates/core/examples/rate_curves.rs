//! Firing rate against constant input for LIF and IF neurons with both
//! reset rules, printed as one CSV table.

use dsqn::neuron::sweep_rate_curve;
use dsqn::{NeuronConfig, ResetMode};

fn main() -> dsqn::Result<()> {
    let inputs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
    let configs = [
        ("lif_hard", NeuronConfig::lif(ResetMode::Hard, 2.0, 1.0, 0.0)),
        ("lif_soft", NeuronConfig::lif(ResetMode::Soft, 2.0, 1.0, 0.0)),
        ("if_hard", NeuronConfig::integrate_and_fire(ResetMode::Hard, 1.0, 0.0)),
        ("if_soft", NeuronConfig::integrate_and_fire(ResetMode::Soft, 1.0, 0.0)),
    ];
    let curves = configs
        .iter()
        .map(|(_, cfg)| sweep_rate_curve(&inputs, cfg, 1000))
        .collect::<dsqn::Result<Vec<_>>>()?;

    let names: Vec<&str> = configs.iter().map(|(n, _)| *n).collect();
    println!("input,{}", names.join(","));
    for (i, z) in inputs.iter().enumerate() {
        let row: Vec<String> = curves.iter().map(|c| format!("{:.3}", c.rates[i])).collect();
        println!("{z:.1},{}", row.join(","));
    }
    Ok(())
}
