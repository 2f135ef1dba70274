//! Fixed environment layouts.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use num_traits::Float;

use crate::grid::{Cell, Grid, GridSpec};
use crate::mapping::distance::Occupancy;
use crate::math::Vec2;

/// Axis-aligned rectangle `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: Vec2::new(x0, y0),
            max: Vec2::new(x1, y1),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Strict interior test (boundary excluded).
    pub fn contains_strict(&self, p: Vec2) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    pub fn centroid(&self) -> Vec2 {
        Vec2::new(0.5 * (self.min.x + self.max.x), 0.5 * (self.min.y + self.max.y))
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    /// Signed distance from `p` to the rectangle boundary (negative inside).
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        let dx = (self.min.x - p.x).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(p.y - self.max.y);
        if dx <= 0.0 && dy <= 0.0 {
            dx.max(dy)
        } else {
            Float::sqrt(dx.max(0.0) * dx.max(0.0) + dy.max(0.0) * dy.max(0.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    SmallEmpty,
    LargeEmpty,
    LargeDoor,
    LargeCenter,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [
        EnvKind::SmallEmpty,
        EnvKind::LargeEmpty,
        EnvKind::LargeDoor,
        EnvKind::LargeCenter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::SmallEmpty => "small_empty",
            EnvKind::LargeEmpty => "large_empty",
            EnvKind::LargeDoor => "large_door",
            EnvKind::LargeCenter => "large_center",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let norm: alloc::string::String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match norm.as_str() {
            "smallempty" => Ok(EnvKind::SmallEmpty),
            "largeempty" => Ok(EnvKind::LargeEmpty),
            "largedoor" => Ok(EnvKind::LargeDoor),
            "largecenter" => Ok(EnvKind::LargeCenter),
            _ => Err(()),
        }
    }
}

pub const RECEPTACLE_SIZE: f64 = 0.15;
pub const DOOR_GAP: f64 = 0.25;
pub const DIVIDER_THICKNESS: f64 = 0.04;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    /// Extent along x, meters.
    pub width: f64,
    /// Extent along y, meters.
    pub height: f64,
    /// Interior obstacles. The outer boundary is implicit.
    pub walls: Vec<Rect>,
    pub receptacle: Rect,
    pub initial_object_count: usize,
}

/// Geometry of one of the four layouts. Receptacles sit in the top-right
/// corner except for `LargeCenter`.
pub fn build_env(kind: EnvKind) -> EnvSpec {
    let (width, height) = match kind {
        EnvKind::SmallEmpty => (1.0, 0.5),
        _ => (1.0, 1.0),
    };
    let corner = Rect::new(width - RECEPTACLE_SIZE, height - RECEPTACLE_SIZE, width, height);
    let (walls, receptacle) = match kind {
        EnvKind::SmallEmpty | EnvKind::LargeEmpty => (Vec::new(), corner),
        EnvKind::LargeDoor => {
            let y0 = 0.5 * height - 0.5 * DIVIDER_THICKNESS;
            let y1 = 0.5 * height + 0.5 * DIVIDER_THICKNESS;
            let gap0 = 0.5 * width - 0.5 * DOOR_GAP;
            let gap1 = 0.5 * width + 0.5 * DOOR_GAP;
            (
                vec![Rect::new(0.0, y0, gap0, y1), Rect::new(gap1, y0, width, y1)],
                corner,
            )
        }
        EnvKind::LargeCenter => {
            let h = 0.5 * RECEPTACLE_SIZE;
            (
                Vec::new(),
                Rect::new(0.5 * width - h, 0.5 * height - h, 0.5 * width + h, 0.5 * height + h),
            )
        }
    };
    EnvSpec {
        kind,
        width,
        height,
        walls,
        receptacle,
        initial_object_count: if kind == EnvKind::SmallEmpty { 50 } else { 100 },
    }
}

impl EnvSpec {
    pub fn with_object_count(mut self, n: usize) -> Self {
        self.initial_object_count = n;
        self
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }

    pub fn diagonal(&self) -> f64 {
        Float::sqrt(self.width * self.width + self.height * self.height)
    }

    pub fn centroid(&self) -> Vec2 {
        self.bounds().centroid()
    }

    pub fn grid_spec(&self, resolution: f64) -> GridSpec {
        GridSpec::covering(self.width, self.height, resolution)
    }

    /// Clearance from `p` to the nearest wall or boundary (negative when
    /// `p` lies inside a wall or outside the bounds).
    pub fn clearance(&self, p: Vec2) -> f64 {
        let mut c = (p.x).min(self.width - p.x).min(p.y).min(self.height - p.y);
        for w in &self.walls {
            c = c.min(w.signed_distance(p));
        }
        c
    }

    pub fn is_wall_cell(&self, spec: &GridSpec, cell: Cell) -> bool {
        let c = spec.center(cell);
        self.walls.iter().any(|w| w.contains(c))
    }

    /// Cells whose center lies in the receptacle; centers on its edge count.
    pub fn is_receptacle_cell(&self, spec: &GridSpec, cell: Cell) -> bool {
        let c = spec.center(cell);
        let r = &self.receptacle;
        let eps = 1e-9;
        c.x >= r.min.x - eps && c.x <= r.max.x + eps && c.y >= r.min.y - eps && c.y <= r.max.y + eps
    }

    /// Ground-truth occupancy: wall cells occupied, everything else free.
    pub fn occupancy(&self, spec: &GridSpec) -> Grid<Occupancy> {
        let mut g = spec.grid(Occupancy::Free);
        for i in 0..g.len() {
            let cell = g.cell_of(i);
            if self.is_wall_cell(spec, cell) {
                g.as_mut_slice()[i] = Occupancy::Occupied;
            }
        }
        g
    }

    pub fn receptacle_cells(&self, spec: &GridSpec) -> Vec<Cell> {
        let mut out = Vec::new();
        for row in 0..spec.height as isize {
            for col in 0..spec.width as isize {
                let c = Cell::new(row, col);
                if self.is_receptacle_cell(spec, c) {
                    out.push(c);
                }
            }
        }
        out
    }
}
