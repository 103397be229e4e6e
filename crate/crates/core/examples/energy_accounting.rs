//! Operation counts of a directly trained LIF network against a converted
//! IF network, from neuron counts alone and from measured spikes.

use dsqn::convert::{convert, random_states, ConversionConfig, ReluNetwork};
use dsqn::energy::{energy_from_counts, energy_report, mean_spikes_per_decision, SpikeMeasurement};
use dsqn::{NeuronConfig, SpikingNetwork, SurrogateConfig};

fn main() -> dsqn::Result<()> {
    for n in [100, 512, 3136] {
        let r = energy_from_counts(n, n, None, None);
        println!(
            "N = {n:>4}: direct {:>9} ops, converted {:>9} ops, ratio {:.3}",
            r.cost_direct, r.cost_converted, r.cost_ratio
        );
    }

    // untrained networks of the same shape, just to exercise the spike counters
    let direct = SpikingNetwork::dense(8, &[32, 32], 4, NeuronConfig::default(), SurrogateConfig::default(), 64)?
        .init_weights(1);
    let ann = ReluNetwork::dense(8, &[32, 32], 4, true)?.init_weights(1);
    let calib = random_states(200, 8, 0.0, 2.0, 2);
    let converted = convert(&ann, &calib, &ConversionConfig::default())?;

    let states = random_states(100, 8, 0.0, 2.0, 3);
    let spikes = SpikeMeasurement {
        direct: mean_spikes_per_decision(&direct, &states)?,
        converted: mean_spikes_per_decision(&converted, &states)?,
    };
    let report = energy_report(&direct, &converted, Some(spikes));
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}
