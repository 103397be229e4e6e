use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::net::Shape3;

const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
/// Half the pole length.
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = POLE_MASS * HALF_LENGTH;
const FORCE: f64 = 10.0;
/// Seconds per step, explicit Euler.
const TAU: f64 = 0.02;
/// 12 degrees.
pub const THETA_LIMIT: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const X_LIMIT: f64 = 2.4;
const MAX_STEPS: usize = 500;

/// `[x, x_dot, theta, theta_dot]`.
pub type CartPoleState = [f64; 4];

/// Pole balancing on a cart with the classic control constants.
///
/// Actions: 0 pushes left, 1 pushes right. Every step pays +1, including the
/// one that ends the episode. Resets draw each state variable from
/// U(-0.05, 0.05).
#[derive(Debug, Clone, Default)]
pub struct CartPole {
    state: CartPoleState,
    steps: usize,
    live: bool,
}

impl CartPole {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }

    /// Starts an episode from an explicit state.
    pub fn reset_to(&mut self, state: CartPoleState) -> Vec<f64> {
        self.state = state;
        self.steps = 0;
        self.live = true;
        state.to_vec()
    }

    fn failed(&self) -> bool {
        let [x, _, theta, _] = self.state;
        x.abs() > X_LIMIT || theta.abs() > THETA_LIMIT
    }
}

impl Environment for CartPole {
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = std::array::from_fn(|_| rng.gen_range(-0.05..0.05));
        self.reset_to(state)
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if !self.live {
            return Err(Error::contract("step on a finished episode; call reset first"));
        }
        if action >= 2 {
            return Err(Error::contract(format!("action {action} out of range 0..2")));
        }
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if action == 1 { FORCE } else { -FORCE };
        let (sin, cos) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
        let theta_acc =
            (GRAVITY * sin - cos * temp) / (HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
        self.state = [
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
        self.steps += 1;
        let terminal = self.failed();
        let truncated = !terminal && self.steps >= MAX_STEPS;
        self.live = !(terminal || truncated);
        Ok(StepOutcome {
            observation: self.state.to_vec(),
            reward: 1.0,
            terminal,
            truncated,
        })
    }

    fn action_count(&self) -> usize {
        2
    }

    fn observation_shape(&self) -> Shape3 {
        Shape3::flat(4)
    }

    fn max_episode_steps(&self) -> usize {
        MAX_STEPS
    }
}
