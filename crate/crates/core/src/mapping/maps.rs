use crate::grid::{Grid, GridSpec};

use super::distance::Occupancy;
use super::sense::Observation;

/// What the overhead map shows at one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OverheadCell {
    Unobserved,
    Free,
    Receptacle,
    Wall,
    Object,
}

impl OverheadCell {
    /// 8-bit code used in the state tensor's overhead channel.
    pub fn code(self) -> u8 {
        match self {
            OverheadCell::Unobserved => 0,
            OverheadCell::Free => 64,
            OverheadCell::Receptacle => 128,
            OverheadCell::Wall => 191,
            OverheadCell::Object => 255,
        }
    }

    /// Objects do not block motion; only walls are occupied.
    pub fn occupancy(self) -> Occupancy {
        match self {
            OverheadCell::Unobserved => Occupancy::Unknown,
            OverheadCell::Wall => Occupancy::Occupied,
            _ => Occupancy::Free,
        }
    }
}

/// Fused maps the agent builds from its own observations. Cells keep the
/// last value seen, so they can be stale.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMaps {
    pub overhead: Grid<OverheadCell>,
    pub occupancy: Grid<Occupancy>,
    pub resolution: f64,
}

impl GlobalMaps {
    /// Blank maps: everything unobserved.
    pub fn new(spec: &GridSpec) -> Self {
        Self {
            overhead: spec.grid(OverheadCell::Unobserved),
            occupancy: spec.grid(Occupancy::Unknown),
            resolution: spec.resolution,
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            width: self.overhead.width(),
            height: self.overhead.height(),
            resolution: self.resolution,
        }
    }

    pub fn observed_count(&self) -> usize {
        self.overhead
            .as_slice()
            .iter()
            .filter(|c| **c != OverheadCell::Unobserved)
            .count()
    }
}

/// Overwrites the observed cells; every other cell is left untouched.
pub fn fuse(maps: &mut GlobalMaps, obs: &Observation) {
    for &(cell, content) in &obs.cells {
        maps.overhead.set(cell, content);
        maps.occupancy.set(cell, content.occupancy());
    }
}
