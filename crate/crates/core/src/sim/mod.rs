//! Deterministic top-down world: a disc robot with an air blower, small disc
//! objects, and particle-based airflow.

pub mod env;
pub mod physics;
pub mod primitive;
pub mod reward;
pub mod world;

pub use env::{build_env, EnvKind, EnvSpec, Rect};
pub use physics::{emit_blow, step_physics, StepEvents};
pub use primitive::{execute_primitive, Primitive};
pub use reward::{compute_reward, RewardConfig};
pub use world::{reset, reset_with_layout, BlowerMount, Layout, Pose, RigidObject, SimParams, WorldState};

#[cfg(test)]
mod tests;
