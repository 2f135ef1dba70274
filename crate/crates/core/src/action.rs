//! Spatial action maps: per-pixel Q-values decoded into motion primitives.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use num_traits::Float;

use crate::grid::{Cell, Grid, GridSpec};
use crate::mapping::distance::{dilate_blocked, plan_path_masked, Occupancy};
use crate::math::Vec2;
use crate::sim::{BlowerMount, Pose, Primitive};

/// Robot body and what its second action channel does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RobotVariant {
    /// Forward blower; channel 1 turns in place while blowing.
    BlowingTurn,
    /// Forward blower; channel 1 moves while blowing.
    BlowingMove,
    /// Blower pointing right; channel 1 turns in place while blowing.
    SideBlower,
    /// No blower; the body pushes objects. Single move channel.
    Pushing,
}

impl RobotVariant {
    pub const ALL: [RobotVariant; 4] = [
        RobotVariant::BlowingTurn,
        RobotVariant::BlowingMove,
        RobotVariant::SideBlower,
        RobotVariant::Pushing,
    ];

    pub fn num_channels(self) -> usize {
        match self {
            RobotVariant::Pushing => 1,
            _ => 2,
        }
    }

    pub fn blower_mount(self) -> Option<BlowerMount> {
        match self {
            RobotVariant::Pushing => None,
            RobotVariant::SideBlower => Some(BlowerMount::Right),
            _ => Some(BlowerMount::Forward),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RobotVariant::BlowingTurn => "blowing_turn",
            RobotVariant::BlowingMove => "blowing_move",
            RobotVariant::SideBlower => "side_blower",
            RobotVariant::Pushing => "pushing",
        }
    }
}

impl fmt::Display for RobotVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RobotVariant {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let norm: alloc::string::String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match norm.as_str() {
            "blowing" | "blowingturn" => Ok(RobotVariant::BlowingTurn),
            "blowingmove" | "movingblower" => Ok(RobotVariant::BlowingMove),
            "sideblower" => Ok(RobotVariant::SideBlower),
            "pushing" => Ok(RobotVariant::Pushing),
            _ => Err(()),
        }
    }
}

/// Dense `channels x size x size` Q-values, channel-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMap {
    pub channels: usize,
    pub size: usize,
    pub values: Vec<f32>,
}

impl ActionMap {
    pub fn new(channels: usize, size: usize, values: Vec<f32>) -> Self {
        assert_eq!(values.len(), channels * size * size);
        Self { channels, size, values }
    }

    pub fn at(&self, a: Action) -> f32 {
        self.values[a.flat_index(self.size)]
    }
}

/// A chosen channel and crop cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub channel: usize,
    pub row: usize,
    pub col: usize,
}

impl Action {
    pub fn new(channel: usize, row: usize, col: usize) -> Self {
        Self { channel, row, col }
    }

    pub fn flat_index(self, size: usize) -> usize {
        (self.channel * size + self.row) * size + self.col
    }

    pub fn from_flat(index: usize, size: usize) -> Self {
        let plane = size * size;
        Self {
            channel: index / plane,
            row: (index % plane) / size,
            col: index % size,
        }
    }

    /// World point of this cell relative to `pose`.
    pub fn world_target(self, pose: &Pose, resolution: f64, size: usize) -> Vec2 {
        crop_cell_to_world(pose, resolution, size, self.row, self.col)
    }
}

/// Index of the largest entry, lowest index on ties. Panics on NaN.
pub fn argmax_first<T: Float>(values: &[T]) -> usize {
    assert!(!values.is_empty(), "argmax of an empty map");
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        assert!(!v.is_nan(), "NaN in Q-value map at {i}");
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Greedy action: global argmax over all channels and cells.
pub fn decode(q: &ActionMap) -> Action {
    Action::from_flat(argmax_first(&q.values), q.size)
}

/// Crop cell to world point: forward `size/2 - row` cells along the heading
/// and `col - size/2` cells to its right, measured from the robot position.
pub fn crop_cell_to_world(pose: &Pose, resolution: f64, size: usize, row: usize, col: usize) -> Vec2 {
    let half = (size / 2) as f64;
    let f = half - row as f64;
    let s = col as f64 - half;
    let h = pose.heading();
    pose.position() + (h * f + h.right_perp() * s) * resolution
}

/// Inverse of [`crop_cell_to_world`], rounding to the nearest cell. `None`
/// when the point falls outside the crop.
pub fn world_to_crop_cell(pose: &Pose, resolution: f64, size: usize, p: Vec2) -> Option<(usize, usize)> {
    let v = (p - pose.position()) * (1.0 / resolution);
    let h = pose.heading();
    let f = Float::round(v.dot(h));
    let s = Float::round(v.dot(h.right_perp()));
    let half = (size / 2) as f64;
    let row = half - f;
    let col = half + s;
    if row < 0.0 || col < 0.0 || row >= size as f64 || col >= size as f64 {
        return None;
    }
    Some((row as usize, col as usize))
}

/// Configuration space for the robot center: free cells whose center keeps
/// at least `clearance_cells` from every wall cell and the map border.
/// Unknown cells stay blocked.
pub fn planning_mask(occupancy: &Grid<Occupancy>, clearance_cells: f64) -> Vec<bool> {
    let not_wall: Vec<bool> = occupancy.as_slice().iter().map(|&o| o != Occupancy::Occupied).collect();
    let clear = dilate_blocked(&not_wall, occupancy.width(), occupancy.height(), clearance_cells);
    clear
        .iter()
        .zip(occupancy.as_slice())
        .map(|(&c, &o)| c && o == Occupancy::Free)
        .collect()
}

/// Lets a robot that starts inside the clearance band leave it: free band
/// cells near `start` and connected to it become passable.
fn open_escape_band(occupancy: &Grid<Occupancy>, mask: &mut [bool], start: Cell) {
    let Some(s) = occupancy.index(start) else {
        return;
    };
    if mask[s] {
        return;
    }
    let clear = mask.to_vec();
    let mut stack = alloc::vec![start];
    mask[s] = true;
    while let Some(c) = stack.pop() {
        for (dr, dc) in crate::grid::NEIGHBORS_8 {
            let n = c.offset(dr, dc);
            if let Some(i) = occupancy.index(n) {
                let near = (n.row - start.row).abs().max((n.col - start.col).abs()) <= 3;
                if near && !mask[i] && !clear[i] && occupancy.as_slice()[i] == Occupancy::Free {
                    mask[i] = true;
                    stack.push(n);
                }
            }
        }
    }
}

/// Everything needed to turn an action into a primitive.
#[derive(Debug, Clone, Copy)]
pub struct PrimitiveContext<'a> {
    pub pose: &'a Pose,
    pub occupancy: &'a Grid<Occupancy>,
    pub resolution: f64,
    pub crop: usize,
    pub robot_radius: f64,
    pub variant: RobotVariant,
}

/// Maps an action to a primitive. Targets off the map are clamped inside
/// it; unreachable targets are replaced by the closest reachable cell.
pub fn to_primitive(a: Action, ctx: &PrimitiveContext<'_>) -> Primitive {
    assert!(
        a.channel < ctx.variant.num_channels(),
        "channel {} out of range",
        a.channel
    );
    let spec = GridSpec {
        width: ctx.occupancy.width(),
        height: ctx.occupancy.height(),
        resolution: ctx.resolution,
    };
    let target = a.world_target(ctx.pose, ctx.resolution, ctx.crop);
    if a.channel == 1 && ctx.variant != RobotVariant::BlowingMove {
        return Primitive::TurnInPlace {
            target,
            blower_on: true,
        };
    }
    let blower_on = a.channel == 1;
    let w = spec.width as f64 * spec.resolution;
    let h = spec.height as f64 * spec.resolution;
    let eps = 1e-9;
    let clamped = Vec2::new(target.x.clamp(0.0, w - eps), target.y.clamp(0.0, h - eps));
    let from = spec.cell_at(ctx.pose.position());
    let to = spec.cell_at(clamped);
    let mut mask = planning_mask(ctx.occupancy, ctx.robot_radius / ctx.resolution + 0.5);
    open_escape_band(ctx.occupancy, &mut mask, from);
    let path = plan_path_masked(spec.width, spec.height, &mut mask, from, to, spec.resolution);
    let waypoints = path.iter().skip(1).map(|&c| spec.center(c)).collect();
    Primitive::MoveTo { waypoints, blower_on }
}
