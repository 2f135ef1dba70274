use num_traits::Float;
use rand::Rng;

use crate::action::{decode, Action, ActionMap};

/// Linear annealing from `start` to `end` over the first `anneal_iters`
/// SGD iterations, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub anneal_iters: u64,
}

impl EpsilonSchedule {
    /// Anneals over `fraction` of `total_iters`.
    pub fn for_training(total_iters: u64, fraction: f64) -> Self {
        Self {
            start: 1.0,
            end: 0.01,
            anneal_iters: Float::round(total_iters as f64 * fraction) as u64,
        }
    }

    pub fn value(&self, iteration: u64) -> f64 {
        if self.anneal_iters == 0 || iteration >= self.anneal_iters {
            return self.end;
        }
        let t = iteration as f64 / self.anneal_iters as f64;
        self.start + (self.end - self.start) * t
    }
}

/// Epsilon-greedy choice. Always draws one uniform number, plus one index
/// draw when exploring; the greedy action is computed only when needed.
pub fn select_action_with(
    epsilon: f64,
    channels: usize,
    size: usize,
    rng: &mut impl Rng,
    greedy: impl FnOnce() -> Action,
) -> Action {
    let u: f64 = rng.random();
    if u < epsilon {
        Action::from_flat(rng.random_range(0..channels * size * size), size)
    } else {
        greedy()
    }
}

pub fn select_action(q: &ActionMap, epsilon: f64, rng: &mut impl Rng) -> Action {
    select_action_with(epsilon, q.channels, q.size, rng, || decode(q))
}
