//! Vanilla and double targets on the same walled grid, same seed.

use dsqn::envs::{value_iteration_oracle, GridWorld};
use dsqn::trainer::{evaluate, train, TrainOptions, TrainerConfig};
use dsqn::{NeuronConfig, SpikingNetwork, SurrogateConfig};

fn main() -> dsqn::Result<()> {
    let seed = 3;
    let layout = 7;
    let grid = GridWorld::with_walls(5, layout)?;
    let oracle = value_iteration_oracle(&grid, 0.9)?;
    println!(
        "optimal return {:.2}, optimal discounted value of the start cell {:.6}",
        grid.optimal_return().expect("layouts are solvable"),
        oracle.values[grid.start()]
    );

    for double_dqn in [false, true] {
        let mut env = GridWorld::with_walls(5, layout)?;
        let net = SpikingNetwork::dense(25, &[64], 4, NeuronConfig::default(), SurrogateConfig::default(), 16)?
            .init_weights(seed);
        let cfg = TrainerConfig {
            lr: 1e-3,
            gamma: 0.9,
            double_dqn,
            ..TrainerConfig::default()
        };
        let outcome = train(&mut env, &cfg, net, seed, 30_000, TrainOptions::default())?;
        let greedy = evaluate(&outcome.network, &mut env, 1, 0.0, 0, seed)?;
        let last = outcome.log.rows.last().map_or(f64::NAN, |r| r.mean_max_q);
        println!(
            "double_dqn={double_dqn}: greedy return {:.2}, mean max Q in last episode {last:.6}",
            greedy.mean
        );
    }
    Ok(())
}
