//! Trains a ReLU Q-network on CartPole, converts it to a soft-reset IF
//! network, and audits how well the spiking copy tracks it as the window grows.
//!
//! cargo run --release --example ann_conversion -- [seed]

use dsqn::convert::{audit_csv, convert, fidelity_audit, layer_scales, ConversionConfig, ReluNetwork};
use dsqn::envs::{sample_states, CartPole, Environment};
use dsqn::trainer::{evaluate, train, TrainOptions, TrainerConfig};

fn main() -> dsqn::Result<()> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0u64);
    let mut env = CartPole::new();
    let ann = ReluNetwork::dense(env.observation_shape().len(), &[64], env.action_count(), true)?.init_weights(seed);
    let cfg = TrainerConfig {
        lr: 1e-3,
        ..TrainerConfig::default()
    };
    let ann = train(&mut env, &cfg, ann, seed, 50_000, TrainOptions::default())?.network;
    let score = evaluate(&ann, &mut env, 10, 0.05, 30, seed)?;
    println!("ReLU network: mean return {:.1} over 10 rounds", score.mean);

    let conversion = ConversionConfig::default();
    let calib = sample_states(&mut env, conversion.calibration_states, seed + 1)?;
    println!("layer scales: {:?}", layer_scales(&ann, &calib, conversion.percentile)?);
    let snn = convert(&ann, &calib, &conversion)?;

    let states = sample_states(&mut env, 1000, seed + 2)?;
    let rows = fidelity_audit(&ann, &snn, &states, &[1, 10, 50, 100, 500])?;
    print!("{}", audit_csv(&rows));

    let spiking_score = evaluate(&snn, &mut env, 10, 0.05, 30, seed)?;
    println!("converted network at window {}: mean return {:.1}", snn.window, spiking_score.mean);
    Ok(())
}
