//! Row-major 2D grids over the environment floor.
//!
//! Row 0 is the strip `y in [0, res)`; column 0 is `x in [0, res)`. Flat
//! indices are `row * width + col`, which is also the tie-break order used
//! wherever several cells compare equal.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::math::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: isize,
    pub col: isize,
}

impl Cell {
    pub const fn new(row: isize, col: isize) -> Self {
        Self { row, col }
    }

    pub fn offset(self, dr: isize, dc: isize) -> Cell {
        Cell::new(self.row + dr, self.col + dc)
    }
}

/// The 8-neighborhood, listed so that neighbor flat indices increase.
pub const NEIGHBORS_8: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    cells: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            cells: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, cells: Vec<T>) -> Self {
        assert_eq!(cells.len(), width * height, "grid data length");
        Self { width, height, cells }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.row >= 0 && c.col >= 0 && (c.row as usize) < self.height && (c.col as usize) < self.width
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        self.contains(c).then(|| c.row as usize * self.width + c.col as usize)
    }

    pub fn cell_of(&self, index: usize) -> Cell {
        Cell::new((index / self.width) as isize, (index % self.width) as isize)
    }

    pub fn get(&self, c: Cell) -> Option<&T> {
        self.index(c).map(|i| &self.cells[i])
    }

    pub fn get_mut(&mut self, c: Cell) -> Option<&mut T> {
        self.index(c).map(move |i| &mut self.cells[i])
    }

    pub fn set(&mut self, c: Cell, value: T) {
        if let Some(i) = self.index(c) {
            self.cells[i] = value;
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.cells
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.cells
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = (Cell, &T)> + '_ {
        self.cells.iter().enumerate().map(move |(i, v)| (self.cell_of(i), v))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            cells: self.cells.iter().map(f).collect(),
        }
    }
}

/// Geometry of the floor raster: cell size and extent in cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
}

impl GridSpec {
    /// Raster covering `extent_x` by `extent_y` meters.
    pub fn covering(extent_x: f64, extent_y: f64, resolution: f64) -> Self {
        let w = Float::round(extent_x / resolution) as usize;
        let h = Float::round(extent_y / resolution) as usize;
        Self {
            width: w.max(1),
            height: h.max(1),
            resolution,
        }
    }

    pub fn cell_at(&self, p: Vec2) -> Cell {
        Cell::new(
            Float::floor(p.y / self.resolution) as isize,
            Float::floor(p.x / self.resolution) as isize,
        )
    }

    pub fn center(&self, c: Cell) -> Vec2 {
        Vec2::new(
            (c.col as f64 + 0.5) * self.resolution,
            (c.row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.row >= 0 && c.col >= 0 && (c.row as usize) < self.height && (c.col as usize) < self.width
    }

    pub fn grid<T: Clone>(&self, value: T) -> Grid<T> {
        Grid::filled(self.width, self.height, value)
    }
}
