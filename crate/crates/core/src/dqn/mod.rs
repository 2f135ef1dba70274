//! Deep Q-learning pieces: replay, double-DQN targets, epsilon-greedy
//! exploration, target synchronization and a single-policy training loop.

mod explore;
mod learner;
mod replay;
mod single;
mod target;

pub use explore::{select_action, select_action_with, EpsilonSchedule};
pub use learner::{blank_state, stack_states, Learner, LearnerConfig};
pub use replay::{ReplayBuffer, Transition};
pub use single::{episode_seed, prefill_steps, LossRecord, SingleFrequencyAgent, SingleFrequencyConfig, TrainTrace};
pub use target::{sync_target, td_target};
