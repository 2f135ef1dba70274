use alloc::string::String;

/// Recoverable failures surfaced by the core. Internal invariant violations
/// (NaN in the physics state or in a Q-map) panic instead.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("could not place {what} after {attempts} attempts; environment too crowded")]
    Placement { what: &'static str, attempts: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("episode already finished")]
    EpisodeDone,
    #[error("scheduling fault: level {level} already has a pending transition")]
    PendingOccupied { level: usize },
    #[error("replay buffer holds {len} transitions, {wanted} requested")]
    NotReady { len: usize, wanted: usize },
}
