use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::net::Shape3;

/// Reward on every move, including the one that enters the goal.
pub const GRID_STEP_COST: f64 = -0.01;
/// Net reward of the goal-entering move: `1 + GRID_STEP_COST`.
pub const GRID_GOAL_REWARD: f64 = 1.0 + GRID_STEP_COST;

/// Up, right, down, left as (row, column) offsets.
const MOVES: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

/// Square grid; the agent starts in the top-left corner and the goal is the
/// bottom-right corner. Observations are a one-hot map of the agent cell.
#[derive(Debug, Clone)]
pub struct GridWorld {
    size: usize,
    walls: Vec<bool>,
    start: usize,
    goal: usize,
    pos: usize,
    steps: usize,
    live: bool,
}

impl GridWorld {
    /// Empty grid.
    pub fn new(size: usize) -> Result<Self> {
        if size < 3 {
            return Err(Error::contract(format!("grid size must be at least 3, got {size}")));
        }
        Ok(Self {
            size,
            walls: vec![false; size * size],
            start: 0,
            goal: size * size - 1,
            pos: 0,
            steps: 0,
            live: false,
        })
    }

    /// Grid with about a fifth of its interior cells walled, drawn from
    /// `layout_seed` and redrawn until the goal is reachable.
    pub fn with_walls(size: usize, layout_seed: u64) -> Result<Self> {
        let mut g = Self::new(size)?;
        let mut rng = ChaCha8Rng::seed_from_u64(layout_seed);
        loop {
            for (i, w) in g.walls.iter_mut().enumerate() {
                *w = i != g.start && i != g.goal && rng.gen_bool(0.2);
            }
            if g.shortest_path_len().is_some() {
                return Ok(g);
            }
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_wall(&self, cell: usize) -> bool {
        self.walls[cell]
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    /// Places the agent on `cell` and starts an episode there.
    pub fn reset_at(&mut self, cell: usize) -> Result<Vec<f64>> {
        if cell >= self.walls.len() || self.walls[cell] || cell == self.goal {
            return Err(Error::contract(format!("cell {cell} is not a free start cell")));
        }
        self.pos = cell;
        self.steps = 0;
        self.live = true;
        Ok(self.observe())
    }

    /// Cell reached by `action` from `cell`; bumping into an edge or wall stays put.
    pub fn next_cell(&self, cell: usize, action: usize) -> usize {
        let (dr, dc) = MOVES[action];
        let r = (cell / self.size) as isize + dr;
        let c = (cell % self.size) as isize + dc;
        let n = self.size as isize;
        if r < 0 || c < 0 || r >= n || c >= n {
            return cell;
        }
        let next = (r * n + c) as usize;
        if self.walls[next] {
            cell
        } else {
            next
        }
    }

    /// Moves on a shortest start-to-goal path, if any.
    pub fn shortest_path_len(&self) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.walls.len()];
        let mut queue = VecDeque::from([self.start]);
        dist[self.start] = 0;
        while let Some(c) = queue.pop_front() {
            if c == self.goal {
                return Some(dist[c]);
            }
            for a in 0..4 {
                let n = self.next_cell(c, a);
                if dist[n] == usize::MAX {
                    dist[n] = dist[c] + 1;
                    queue.push_back(n);
                }
            }
        }
        None
    }

    /// Undiscounted return of a shortest path from the start cell.
    pub fn optimal_return(&self) -> Option<f64> {
        self.shortest_path_len()
            .map(|len| GRID_GOAL_REWARD + GRID_STEP_COST * (len as f64 - 1.0))
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = vec![0.0; self.walls.len()];
        obs[self.pos] = 1.0;
        obs
    }
}

impl Environment for GridWorld {
    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.pos = self.start;
        self.steps = 0;
        self.live = true;
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if !self.live {
            return Err(Error::contract("step on a finished episode; call reset first"));
        }
        if action >= 4 {
            return Err(Error::contract(format!("action {action} out of range 0..4")));
        }
        self.pos = self.next_cell(self.pos, action);
        self.steps += 1;
        let terminal = self.pos == self.goal;
        let truncated = !terminal && self.steps >= self.max_episode_steps();
        self.live = !(terminal || truncated);
        Ok(StepOutcome {
            observation: self.observe(),
            reward: if terminal { GRID_GOAL_REWARD } else { GRID_STEP_COST },
            terminal,
            truncated,
        })
    }

    fn action_count(&self) -> usize {
        4
    }

    fn observation_shape(&self) -> Shape3 {
        Shape3::new(1, self.size, self.size)
    }

    fn max_episode_steps(&self) -> usize {
        4 * self.size * self.size
    }
}

/// Optimal state values of a grid under discount `gamma`. Walls hold `NaN`.
#[derive(Debug, Clone)]
pub struct ValueTable {
    pub gamma: f64,
    pub values: Vec<f64>,
    pub sweeps: usize,
}

impl ValueTable {
    /// Largest Bellman optimality residual over non-wall, non-goal cells.
    pub fn bellman_residual(&self, grid: &GridWorld) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.values.len() {
            if grid.is_wall(c) || c == grid.goal() {
                continue;
            }
            let best = backup(grid, &self.values, c, self.gamma);
            worst = worst.max((best - self.values[c]).abs());
        }
        worst
    }
}

fn backup(grid: &GridWorld, values: &[f64], cell: usize, gamma: f64) -> f64 {
    (0..4)
        .map(|a| {
            let n = grid.next_cell(cell, a);
            if n == grid.goal() {
                GRID_GOAL_REWARD
            } else {
                GRID_STEP_COST + gamma * values[n]
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Value iteration until the sup-norm change of a sweep drops below 1e-10.
/// The goal is terminal with value 0; the episode cap is ignored.
pub fn value_iteration_oracle(grid: &GridWorld, gamma: f64) -> Result<ValueTable> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::contract(format!("gamma must be in [0, 1), got {gamma}")));
    }
    let cells = grid.size() * grid.size();
    let mut values: Vec<f64> = (0..cells).map(|c| if grid.is_wall(c) { f64::NAN } else { 0.0 }).collect();
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut next = values.clone();
        let mut change = 0.0f64;
        for c in 0..cells {
            if grid.is_wall(c) || c == grid.goal() {
                continue;
            }
            next[c] = backup(grid, &values, c, gamma);
            change = change.max((next[c] - values[c]).abs());
        }
        values = next;
        if change < 1e-10 {
            return Ok(ValueTable { gamma, values, sweeps });
        }
    }
}
