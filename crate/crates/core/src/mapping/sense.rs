//! Planar visibility sensor: a fan of grid rays inside a field-of-view cone.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::maps::OverheadCell;
use crate::grid::{Cell, Grid, GridSpec};
use crate::math::Vec2;
use crate::sim::WorldState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams {
    pub fov: f64,
    pub range: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            fov: core::f64::consts::FRAC_PI_2,
            range: 1.0,
        }
    }
}

/// Visible cells and their contents at sensing time, in flat-index order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observation {
    pub cells: Vec<(Cell, OverheadCell)>,
}

/// True contents of every cell: walls, then objects, then receptacle.
pub fn truth_raster(world: &WorldState) -> Grid<OverheadCell> {
    let layout = &world.layout;
    let spec = layout.grid;
    let mut g = spec.grid(OverheadCell::Free);
    for &c in &layout.receptacle_cells {
        g.set(c, OverheadCell::Receptacle);
    }
    for o in world.objects.iter().filter(|o| !o.removed) {
        g.set(spec.cell_at(o.position), OverheadCell::Object);
    }
    for i in 0..g.len() {
        let c = g.cell_of(i);
        if layout.env.is_wall_cell(&spec, c) {
            g.as_mut_slice()[i] = OverheadCell::Wall;
        }
    }
    g
}

/// Whether the center of `cell` is inside the sensing cone and range.
pub fn in_view(spec: &GridSpec, origin: Vec2, heading: f64, sensor: &SensorParams, cell: Cell) -> bool {
    let v = spec.center(cell) - origin;
    let d2 = v.norm_sq();
    if d2 > sensor.range * sensor.range {
        return false;
    }
    if d2 == 0.0 {
        return true;
    }
    let h = Vec2::from_angle(heading);
    v.dot(h) >= Float::sqrt(d2) * Float::cos(0.5 * sensor.fov)
}

/// Cells visible from the robot: each ray walks the grid (every cell the
/// segment touches) until it leaves the grid, passes the range, or stops
/// after the first wall cell. The robot footprint is always observed.
pub fn sense(world: &WorldState, sensor: &SensorParams) -> Observation {
    let truth = truth_raster(world);
    let spec = world.layout.grid;
    let pose = world.robot;
    let origin = pose.position();
    let res = spec.resolution;
    let mut seen = vec![false; truth.len()];

    let rc = spec.cell_at(origin);
    let fp = Float::ceil(world.params.robot_radius / res) as isize;
    for dr in -fp..=fp {
        for dc in -fp..=fp {
            let c = rc.offset(dr, dc);
            if let Some(i) = truth.index(c) {
                if (spec.center(c) - origin).norm() <= world.params.robot_radius {
                    seen[i] = true;
                }
            }
        }
    }
    if let Some(i) = truth.index(rc) {
        seen[i] = true;
    }

    let reach = Float::ceil(sensor.range / res) as isize + 1;
    let o = Vec2::new(origin.x / res, origin.y / res);
    let h = Vec2::from_angle(pose.theta);
    let cos_margin = Float::cos((0.5 * sensor.fov + 10f64.to_radians()).min(core::f64::consts::PI));
    let limit = sensor.range / res + 1.5;
    let mut cast = |target: Cell| {
        let t = Vec2::new(target.col as f64 + 0.5, target.row as f64 + 0.5);
        let d = t - o;
        let len = d.norm();
        if len == 0.0 || d.dot(h) < len * cos_margin {
            return;
        }
        walk_ray(o, d, limit / len, |c| {
            let Some(i) = truth.index(c) else {
                return false;
            };
            if in_view(&spec, origin, pose.theta, sensor, c) {
                seen[i] = true;
            }
            truth.as_slice()[i] != OverheadCell::Wall
        });
    };
    for k in -reach..=reach {
        cast(rc.offset(-reach, k));
        cast(rc.offset(reach, k));
        if k != -reach && k != reach {
            cast(rc.offset(k, -reach));
            cast(rc.offset(k, reach));
        }
    }

    let cells = seen
        .iter()
        .enumerate()
        .filter(|(_, s)| **s)
        .map(|(i, _)| {
            let c = truth.cell_of(i);
            (c, truth.as_slice()[i])
        })
        .collect();
    Observation { cells }
}

/// Visits, in order, every cell touched by `origin + t * dir` for `t` in
/// `[0, t_max]` (grid units). Stops early when `visit` returns false.
fn walk_ray(origin: Vec2, dir: Vec2, t_max: f64, mut visit: impl FnMut(Cell) -> bool) {
    let mut col = Float::floor(origin.x) as isize;
    let mut row = Float::floor(origin.y) as isize;
    let step_c: isize = if dir.x > 0.0 { 1 } else { -1 };
    let step_r: isize = if dir.y > 0.0 { 1 } else { -1 };
    let next_boundary = |p: f64, cell: isize, step: isize| {
        if step > 0 {
            (cell + 1) as f64 - p
        } else {
            p - cell as f64
        }
    };
    let mut t_c = if dir.x != 0.0 {
        next_boundary(origin.x, col, step_c) / dir.x.abs()
    } else {
        f64::INFINITY
    };
    let mut t_r = if dir.y != 0.0 {
        next_boundary(origin.y, row, step_r) / dir.y.abs()
    } else {
        f64::INFINITY
    };
    let dt_c = if dir.x != 0.0 { 1.0 / dir.x.abs() } else { f64::INFINITY };
    let dt_r = if dir.y != 0.0 { 1.0 / dir.y.abs() } else { f64::INFINITY };
    if !visit(Cell::new(row, col)) {
        return;
    }
    loop {
        let t = t_c.min(t_r);
        if t > t_max {
            return;
        }
        if t_c < t_r {
            col += step_c;
            t_c += dt_c;
        } else if t_r < t_c {
            row += step_r;
            t_r += dt_r;
        } else {
            // exact corner crossing: touch both side cells, then the diagonal
            let side_a = visit(Cell::new(row, col + step_c));
            let side_b = visit(Cell::new(row + step_r, col));
            if !side_a && !side_b {
                return;
            }
            col += step_c;
            row += step_r;
            t_c += dt_c;
            t_r += dt_r;
        }
        if !visit(Cell::new(row, col)) {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{build_env, reset, EnvKind, Pose, SimParams};
    use alloc::collections::BTreeSet;
    use rand::{Rng, SeedableRng};

    /// Brute force: cone and range by cell center, line of sight by dense
    /// sampling of the center-to-center segment.
    fn oracle(world: &WorldState, sensor: &SensorParams) -> BTreeSet<Cell> {
        let truth = truth_raster(world);
        let spec = world.layout.grid;
        let origin = world.robot.position();
        let mut out = BTreeSet::new();
        for (c, _) in truth.iter_cells() {
            if !in_view(&spec, origin, world.robot.theta, sensor, c) {
                continue;
            }
            let end = spec.center(c);
            let n = 400;
            let mut blocked = false;
            for k in 1..n {
                let p = origin + (end - origin) * (k as f64 / n as f64);
                let pc = spec.cell_at(p);
                if pc != c && truth.get(pc) == Some(&OverheadCell::Wall) {
                    blocked = true;
                    break;
                }
            }
            if !blocked {
                out.insert(c);
            }
        }
        out
    }

    fn in_cone_cells(obs: &Observation, world: &WorldState, sensor: &SensorParams) -> BTreeSet<Cell> {
        let spec = world.layout.grid;
        obs.cells
            .iter()
            .map(|(c, _)| *c)
            .filter(|c| in_view(&spec, world.robot.position(), world.robot.theta, sensor, *c))
            .collect()
    }

    #[test]
    fn empty_environment_matches_brute_force() {
        let sensor = SensorParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for kind in [EnvKind::SmallEmpty, EnvKind::LargeEmpty] {
            let env = build_env(kind).with_object_count(0);
            let mut w = reset(&env, &SimParams::default(), 1).unwrap();
            for _ in 0..40 {
                w.robot = Pose::new(
                    rng.random_range(0.05..env.width - 0.05),
                    rng.random_range(0.05..env.height - 0.05),
                    rng.random_range(-core::f64::consts::PI..core::f64::consts::PI),
                );
                let obs = sense(&w, &sensor);
                assert_eq!(in_cone_cells(&obs, &w, &sensor), oracle(&w, &sensor));
            }
        }
    }

    #[test]
    fn wall_occludes_cells_behind_it() {
        let env = build_env(EnvKind::LargeDoor).with_object_count(0);
        let mut w = reset(&env, &SimParams::default(), 1).unwrap();
        // facing the divider from 5 cm below, away from the door
        w.robot = Pose::new(0.15, 0.43, core::f64::consts::FRAC_PI_2);
        let obs = sense(&w, &SensorParams::default());
        let spec = w.layout.grid;
        let seen: BTreeSet<Cell> = obs.cells.iter().map(|(c, _)| *c).collect();
        assert!(seen.contains(&spec.cell_at(Vec2::new(0.15, 0.49))));
        assert!(!seen.contains(&spec.cell_at(Vec2::new(0.15, 0.6))));
        assert!(!seen.contains(&spec.cell_at(Vec2::new(0.15, 0.9))));
    }

    #[test]
    fn objects_outside_fov_are_not_observed() {
        let env = build_env(EnvKind::LargeEmpty).with_object_count(0);
        let mut w = reset(&env, &SimParams::default(), 1).unwrap();
        w.robot = Pose::new(0.5, 0.5, 0.0);
        for p in [Vec2::new(0.3, 0.5), Vec2::new(0.75, 0.5)] {
            w.objects.push(crate::sim::RigidObject {
                position: p,
                velocity: Vec2::ZERO,
                radius: 0.005,
                mass: 0.001,
                removed: false,
            });
        }
        let obs = sense(&w, &SensorParams::default());
        let spec = w.layout.grid;
        let behind = spec.cell_at(Vec2::new(0.3, 0.5));
        let ahead = spec.cell_at(Vec2::new(0.75, 0.5));
        assert!(obs.cells.iter().all(|(c, _)| *c != behind));
        assert!(obs.cells.contains(&(ahead, OverheadCell::Object)));
    }
}
