//! The agent's view of the world: ray-cast sensing, fused global maps,
//! distance fields and the egocentric state tensor.

pub mod distance;
pub mod maps;
pub mod sense;
pub mod state;

pub use distance::{distance_field, plan_path, DistanceField, Occupancy, Path, UnknownAs};
pub use maps::{fuse, GlobalMaps, OverheadCell};
pub use sense::{sense, Observation, SensorParams};
pub use state::{egocentric_state, StateTensor};
