//! Trains a dense DSQN on the empty 5x5 grid and compares its greedy return
//! with the value-iteration optimum.
//!
//! cargo run --release --example gridworld_dsqn -- [seed] [steps] [window]

use std::time::Instant;

use dsqn::envs::{Environment, GridWorld};
use dsqn::trainer::{evaluate, train, TrainOptions, TrainerConfig};
use dsqn::{NeuronConfig, SpikingNetwork, SurrogateConfig};

fn main() -> dsqn::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let seed = args.first().copied().unwrap_or(0);
    let steps = args.get(1).copied().unwrap_or(50_000) as usize;
    let window = args.get(2).copied().unwrap_or(16) as usize;

    let mut env = GridWorld::new(5)?;
    let optimum = env.optimal_return().expect("empty grid is solvable");
    let inputs = env.observation_shape().len();

    let net = SpikingNetwork::dense(inputs, &[64], env.action_count(), NeuronConfig::default(), SurrogateConfig::default(), window)?
        .init_weights(seed);
    // a shorter horizon widens the gaps between action values, which a
    // 16-step rate code can then resolve
    let cfg = TrainerConfig {
        lr: 1e-3,
        gamma: 0.9,
        ..TrainerConfig::default()
    };

    let started = Instant::now();
    let mut eval_env = GridWorld::new(5)?;
    let outcome = train(&mut env, &cfg, net, seed, steps, TrainOptions::default())?;
    let greedy = evaluate(&outcome.network, &mut eval_env, 1, 0.0, 0, seed)?;
    println!(
        "seed {seed}: {} episodes, {} updates, greedy return {:.2} (optimum {optimum:.2}) in {:.1?}",
        outcome.log.rows.len(),
        outcome.updates,
        greedy.mean,
        started.elapsed()
    );
    Ok(())
}
