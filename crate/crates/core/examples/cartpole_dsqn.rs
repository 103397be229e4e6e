//! DSQN on CartPole, scored with the 30-round epsilon = 0.05 protocol.
//!
//! cargo run --release --example cartpole_dsqn -- [seed] [steps]

use std::time::Instant;

use dsqn::envs::{CartPole, Environment};
use dsqn::trainer::{evaluate, train, TrainOptions, TrainerConfig};
use dsqn::{NeuronConfig, SpikingNetwork, SurrogateConfig};

fn main() -> dsqn::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let seed = args.first().copied().unwrap_or(0);
    let steps = args.get(1).copied().unwrap_or(150_000) as usize;

    let mut env = CartPole::new();
    let net = SpikingNetwork::dense(4, &[64], env.action_count(), NeuronConfig::default(), SurrogateConfig::default(), 16)?
        .init_weights(seed);
    let cfg = TrainerConfig {
        lr: 1e-3,
        eval_interval: 10_000,
        eval_rounds: 5,
        ..TrainerConfig::default()
    };

    let started = Instant::now();
    let mut eval_env = CartPole::new();
    let opts = TrainOptions {
        eval_env: Some(&mut eval_env),
        ..TrainOptions::default()
    };
    let outcome = train(&mut env, &cfg, net, seed, steps, opts)?;
    for (step, e) in &outcome.evaluations {
        println!("step {step:>7}: mean return {:>6.1}", e.mean);
    }
    let score = evaluate(&outcome.network, &mut env, 30, 0.05, 30, seed.wrapping_add(1))?;
    println!(
        "final network: {:.1} +- {:.1} over 30 rounds ({:.0?})",
        score.mean,
        score.std,
        started.elapsed()
    );
    Ok(())
}
