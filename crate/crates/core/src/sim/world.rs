use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::env::EnvSpec;
use crate::grid::{Cell, GridSpec};
use crate::mapping::distance::{distance_field, DistanceField, UnknownAs};
use crate::math::{wrap_angle, Vec2};
use crate::{seed, Error, Result};

/// Placement attempts per body before `reset` gives up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading in [-pi, pi).
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }
}

/// Which way the blower nozzle points relative to the robot heading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowerMount {
    Forward,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowerParams {
    pub cone_half_angle: f64,
    pub particles_per_substep: usize,
    /// Particle speed at force 1.0, m/s.
    pub v_ref: f64,
    pub particle_mass: f64,
    pub lifetime: f64,
    /// Maximum path length of a particle, meters.
    pub range: f64,
    pub wall_restitution: f64,
    /// Fraction of particle momentum handed to an object on contact.
    pub impulse_gain: f64,
    pub mount: BlowerMount,
}

impl Default for BlowerParams {
    fn default() -> Self {
        Self {
            cone_half_angle: 15.0 * PI / 180.0,
            particles_per_substep: 5,
            v_ref: 2.0,
            particle_mass: 2.0e-4,
            lifetime: 0.5,
            range: 0.6,
            wall_restitution: 0.6,
            impulse_gain: 0.1,
            mount: BlowerMount::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub dt: f64,
    pub robot_radius: f64,
    pub linear_speed: f64,
    pub angular_speed: f64,
    pub object_radius: f64,
    pub object_mass: f64,
    /// Linear drag rate, 1/s: `dv/dt = -drag * v`.
    pub drag: f64,
    pub velocity_floor: f64,
    pub max_object_speed: f64,
    pub object_restitution: f64,
    /// Upper bound on the post-primitive settling phase, seconds.
    pub settle_cap: f64,
    pub blow_force: f64,
    pub blower: BlowerParams,
    /// Cell size of the floor raster used for rewards and mapping.
    pub resolution: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 1.0 / 120.0,
            robot_radius: 0.04,
            linear_speed: 0.2,
            angular_speed: PI,
            object_radius: 0.005,
            object_mass: 1.0e-3,
            drag: 1.5,
            velocity_floor: 0.01,
            max_object_speed: 1.0,
            object_restitution: 0.5,
            settle_cap: 3.0,
            blow_force: 0.35,
            blower: BlowerParams::default(),
            resolution: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidObject {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
    pub mass: f64,
    pub removed: bool,
}

impl RigidObject {
    pub fn is_active(&self) -> bool {
        !self.removed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: Vec2,
    pub velocity: Vec2,
    pub remaining_life: f64,
    /// Remaining path length before the range cap removes it.
    pub remaining_range: f64,
}

/// Static per-environment data shared by every world built from one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub env: EnvSpec,
    pub grid: GridSpec,
    pub receptacle_cells: Vec<Cell>,
    /// Free-space shortest-path distance to the receptacle on true walls.
    pub reward_field: DistanceField,
}

impl Layout {
    pub fn new(env: EnvSpec, resolution: f64) -> Self {
        let grid = env.grid_spec(resolution);
        let occ = env.occupancy(&grid);
        let receptacle_cells = env.receptacle_cells(&grid);
        let reward_field = distance_field(&occ, &receptacle_cells, UnknownAs::Free, resolution);
        Self {
            env,
            grid,
            receptacle_cells,
            reward_field,
        }
    }

    /// Shortest-path distance from `p` to the receptacle: zero inside it,
    /// bilinear between cell centers where all four neighbors are reachable,
    /// nearest cell otherwise.
    pub fn distance_to_receptacle(&self, p: Vec2) -> f64 {
        if self.env.receptacle.contains(p) {
            return 0.0;
        }
        let res = self.grid.resolution;
        let fx = p.x / res - 0.5;
        let fy = p.y / res - 0.5;
        let c0 = Float::floor(fx);
        let r0 = Float::floor(fy);
        let tx = fx - c0;
        let ty = fy - r0;
        let (c0, r0) = (c0 as isize, r0 as isize);
        let f = &self.reward_field;
        let d00 = f.at(Cell::new(r0, c0));
        let d01 = f.at(Cell::new(r0, c0 + 1));
        let d10 = f.at(Cell::new(r0 + 1, c0));
        let d11 = f.at(Cell::new(r0 + 1, c0 + 1));
        if d00.is_finite() && d01.is_finite() && d10.is_finite() && d11.is_finite() {
            let a = d00 + (d01 - d00) * tx;
            let b = d10 + (d11 - d10) * tx;
            return a + (b - a) * ty;
        }
        let v = f.at(self.grid.cell_at(p));
        if v.is_finite() {
            return v;
        }
        [d00, d01, d10, d11]
            .into_iter()
            .filter(|d| d.is_finite())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Full ground-truth state of one simulated episode.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub robot: Pose,
    /// Linear velocity of the robot body during the current substep.
    pub robot_velocity: Vec2,
    pub objects: Vec<RigidObject>,
    pub particles: Vec<Particle>,
    pub layout: Arc<Layout>,
    pub params: SimParams,
    pub rng: ChaCha8Rng,
    pub sim_time: f64,
    pub substeps: u64,
}

impl WorldState {
    pub fn env(&self) -> &EnvSpec {
        &self.layout.env
    }

    pub fn active_count(&self) -> usize {
        self.objects.iter().filter(|o| o.is_active()).count()
    }

    pub fn removed_count(&self) -> usize {
        self.objects.iter().filter(|o| o.removed).count()
    }

    pub fn object_distance(&self, i: usize) -> f64 {
        let o = &self.objects[i];
        if o.removed {
            0.0
        } else {
            self.layout.distance_to_receptacle(o.position)
        }
    }

    /// Sum of receptacle distances over the active objects.
    pub fn total_distance(&self) -> f64 {
        (0..self.objects.len())
            .filter(|&i| self.objects[i].is_active())
            .map(|i| self.object_distance(i))
            .sum()
    }

    pub fn is_at_rest(&self) -> bool {
        self.particles.is_empty() && self.objects.iter().all(|o| o.removed || o.velocity == Vec2::ZERO)
    }
}

/// Fresh episode: robot at a uniform collision-free pose, objects uniform
/// over free floor outside the receptacle without overlaps. Identical seeds
/// give identical states.
pub fn reset(env: &EnvSpec, params: &SimParams, seed: u64) -> Result<WorldState> {
    reset_with_layout(Arc::new(Layout::new(env.clone(), params.resolution)), params, seed)
}

/// [`reset`] reusing a precomputed layout.
pub fn reset_with_layout(layout: Arc<Layout>, params: &SimParams, seed: u64) -> Result<WorldState> {
    let mut rng = seed::rng(seed, seed::streams::WORLD);
    let env = &layout.env;
    let rr = params.robot_radius;
    // a little slack so the planner's start cell is clear of walls
    let robot_margin = rr + 0.5 * params.resolution;
    let mut robot = None;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let p = Vec2::new(
            rng.random_range(robot_margin..env.width - robot_margin),
            rng.random_range(robot_margin..env.height - robot_margin),
        );
        let theta = rng.random_range(-PI..PI);
        if env.clearance(p) >= robot_margin {
            robot = Some(Pose::new(p.x, p.y, theta));
            break;
        }
    }
    let robot = robot.ok_or(Error::Placement {
        what: "robot",
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })?;
    let or = params.object_radius;
    let mut objects: Vec<RigidObject> = Vec::with_capacity(env.initial_object_count);
    for _ in 0..env.initial_object_count {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let p = Vec2::new(
                rng.random_range(or..env.width - or),
                rng.random_range(or..env.height - or),
            );
            if env.clearance(p) < or
                || env.receptacle.signed_distance(p) < or
                || (p - robot.position()).norm() < rr + or
                || objects.iter().any(|o| (o.position - p).norm() < 2.0 * or)
            {
                continue;
            }
            objects.push(RigidObject {
                position: p,
                velocity: Vec2::ZERO,
                radius: or,
                mass: params.object_mass,
                removed: false,
            });
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Placement {
                what: "object",
                attempts: MAX_PLACEMENT_ATTEMPTS,
            });
        }
    }
    Ok(WorldState {
        robot,
        robot_velocity: Vec2::ZERO,
        objects,
        particles: Vec::new(),
        layout,
        params: *params,
        rng,
        sim_time: 0.0,
        substeps: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::env::{build_env, EnvKind};

    #[test]
    fn reset_is_deterministic() {
        let env = build_env(EnvKind::SmallEmpty);
        let p = SimParams::default();
        let a = reset(&env, &p, 7).unwrap();
        let b = reset(&env, &p, 7).unwrap();
        assert_eq!(a, b);
        let c = reset(&env, &p, 8).unwrap();
        assert_ne!(a.robot, c.robot);
    }

    #[test]
    fn reset_counts() {
        let env = build_env(EnvKind::SmallEmpty);
        let w = reset(&env, &SimParams::default(), 7).unwrap();
        assert_eq!(w.active_count(), 50);
        assert_eq!(w.removed_count(), 0);
    }

    #[test]
    fn no_object_spawns_in_receptacle() {
        for kind in EnvKind::ALL {
            let env = build_env(kind);
            let w = reset(&env, &SimParams::default(), 3).unwrap();
            for o in &w.objects {
                assert!(!env.receptacle.contains(o.position));
                assert!(env.clearance(o.position) >= o.radius);
            }
            assert!(env.clearance(w.robot.position()) >= SimParams::default().robot_radius);
        }
    }

    #[test]
    fn crowded_environment_is_a_config_error() {
        let env = build_env(EnvKind::SmallEmpty).with_object_count(5);
        let params = SimParams {
            object_radius: 0.2,
            ..SimParams::default()
        };
        let err = reset(&env, &params, 1).unwrap_err();
        assert!(matches!(err, Error::Placement { what: "object", .. }));
    }

    #[test]
    fn distance_lookup_is_zero_in_receptacle_and_grows_away() {
        let env = build_env(EnvKind::LargeEmpty);
        let layout = Layout::new(env.clone(), 0.02);
        assert_eq!(layout.distance_to_receptacle(env.receptacle.centroid()), 0.0);
        let near = layout.distance_to_receptacle(Vec2::new(0.7, 0.7));
        let far = layout.distance_to_receptacle(Vec2::new(0.1, 0.1));
        assert!(near < far);
        assert!(far > 0.9 && far < 1.2);
    }
}
