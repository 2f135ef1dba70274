//! 8-connected shortest-path distance fields and greedy path extraction.
//!
//! Path lengths are tracked as integer counts of axial and diagonal moves and
//! converted to meters with one formula, so two searches that find the same
//! optimum report bit-identical distances regardless of relaxation order.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::SQRT_2;

use crate::grid::{Cell, Grid, NEIGHBORS_8};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Occupancy {
    Free,
    Occupied,
    Unknown,
}

/// How unknown cells are treated by a search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownAs {
    Free,
    Occupied,
}

impl UnknownAs {
    pub fn passable(self, o: Occupancy) -> bool {
        match o {
            Occupancy::Free => true,
            Occupancy::Occupied => false,
            Occupancy::Unknown => self == UnknownAs::Free,
        }
    }
}

/// Length in cell units of a path with `axial` straight and `diagonal` moves.
pub fn octile_cells(axial: u32, diagonal: u32) -> f64 {
    axial as f64 + diagonal as f64 * SQRT_2
}

/// Shortest-path distances in meters; `f64::INFINITY` marks unreachable or
/// blocked cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub resolution: f64,
    pub grid: Grid<f64>,
}

impl DistanceField {
    pub fn at(&self, c: Cell) -> f64 {
        self.grid.get(c).copied().unwrap_or(f64::INFINITY)
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    key: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on key, then on index
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra over the 8-neighborhood. Axial moves cost one
/// resolution, diagonal moves `sqrt(2)` resolutions. Blocked sources are
/// ignored, so an all-blocked source set yields an all-infinite field.
pub fn distance_field(
    occupancy: &Grid<Occupancy>,
    sources: &[Cell],
    unknown: UnknownAs,
    resolution: f64,
) -> DistanceField {
    let passable: Vec<bool> = occupancy.as_slice().iter().map(|&o| unknown.passable(o)).collect();
    distance_field_masked(occupancy.width(), occupancy.height(), &passable, sources, resolution)
}

/// Same as [`distance_field`] over a precomputed passability mask.
pub fn distance_field_masked(
    width: usize,
    height: usize,
    passable: &[bool],
    sources: &[Cell],
    resolution: f64,
) -> DistanceField {
    let n = width * height;
    assert_eq!(passable.len(), n);
    let mut moves: Vec<(u32, u32)> = vec![(u32::MAX, u32::MAX); n];
    let mut key = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let grid_index = |c: Cell| -> Option<usize> {
        (c.row >= 0 && c.col >= 0 && (c.row as usize) < height && (c.col as usize) < width)
            .then(|| c.row as usize * width + c.col as usize)
    };
    for &s in sources {
        if let Some(i) = grid_index(s) {
            if passable[i] && key[i] != 0.0 {
                key[i] = 0.0;
                moves[i] = (0, 0);
                heap.push(Entry { key: 0.0, index: i });
            }
        }
    }
    while let Some(Entry { key: k, index }) = heap.pop() {
        if done[index] || k > key[index] {
            continue;
        }
        done[index] = true;
        let here = Cell::new((index / width) as isize, (index % width) as isize);
        let (a, d) = moves[index];
        for (dr, dc) in NEIGHBORS_8 {
            let Some(j) = grid_index(here.offset(dr, dc)) else {
                continue;
            };
            if !passable[j] || done[j] {
                continue;
            }
            let cand = if dr != 0 && dc != 0 { (a, d + 1) } else { (a + 1, d) };
            let ck = octile_cells(cand.0, cand.1);
            if ck < key[j] {
                key[j] = ck;
                moves[j] = cand;
                heap.push(Entry { key: ck, index: j });
            }
        }
    }
    let meters = moves
        .iter()
        .map(|&(a, d)| {
            if a == u32::MAX {
                f64::INFINITY
            } else {
                octile_cells(a, d) * resolution
            }
        })
        .collect();
    DistanceField {
        resolution,
        grid: Grid::from_vec(width, height, meters),
    }
}

/// Sequence of cells from start to goal, both included.
pub type Path = Vec<Cell>;

/// Shortest path on `occupancy` with unknown cells blocking.
///
/// The start cell is treated as free. When `to` cannot be reached the path
/// ends at the reachable cell closest to `to` in straight-line distance
/// (ties: lowest flat index). The path is the descent of the goal-sourced
/// field from `from`: each step moves to the neighbor minimizing
/// `field + step cost`, ties to the lowest flat index.
pub fn plan_path(occupancy: &Grid<Occupancy>, from: Cell, to: Cell, resolution: f64) -> Path {
    let mut passable: Vec<bool> = occupancy.as_slice().iter().map(|&o| o == Occupancy::Free).collect();
    plan_path_masked(
        occupancy.width(),
        occupancy.height(),
        &mut passable,
        from,
        to,
        resolution,
    )
}

/// [`plan_path`] over a precomputed passability mask (forced free at `from`).
pub fn plan_path_masked(
    width: usize,
    height: usize,
    passable: &mut [bool],
    from: Cell,
    to: Cell,
    resolution: f64,
) -> Path {
    let in_grid = |c: Cell| c.row >= 0 && c.col >= 0 && (c.row as usize) < height && (c.col as usize) < width;
    if !in_grid(from) {
        return Vec::new();
    }
    let from_i = from.row as usize * width + from.col as usize;
    passable[from_i] = true;
    if from == to {
        return vec![from];
    }
    let reach = distance_field_masked(width, height, passable, &[from], resolution);
    let goal = if in_grid(to) && reach.at(to).is_finite() {
        to
    } else {
        nearest_reachable(&reach, to)
    };
    if goal == from {
        return vec![from];
    }
    let field = distance_field_masked(width, height, passable, &[goal], resolution);
    descend(&field, from)
}

fn nearest_reachable(reach: &DistanceField, to: Cell) -> Cell {
    let mut best: Option<(i64, Cell)> = None;
    for (c, &d) in reach.grid.iter_cells() {
        if !d.is_finite() {
            continue;
        }
        let dr = (c.row - to.row) as i64;
        let dc = (c.col - to.col) as i64;
        let d2 = dr * dr + dc * dc;
        if best.is_none_or(|(b, _)| d2 < b) {
            best = Some((d2, c));
        }
    }
    best.map(|(_, c)| c).expect("start cell is always reachable")
}

/// Steepest consistent descent of `field` from `from` down to a zero cell.
pub fn descend(field: &DistanceField, from: Cell) -> Path {
    let mut path = vec![from];
    let mut here = from;
    let mut value = field.at(from);
    if !value.is_finite() {
        return path;
    }
    while value > 0.0 {
        let mut best: Option<(f64, Cell)> = None;
        for (dr, dc) in NEIGHBORS_8 {
            let n = here.offset(dr, dc);
            let v = field.at(n);
            if !v.is_finite() || v >= value {
                continue;
            }
            let step = if dr != 0 && dc != 0 {
                SQRT_2 * field.resolution
            } else {
                field.resolution
            };
            let score = v + step;
            if best.is_none_or(|(b, _)| score < b) {
                best = Some((score, n));
            }
        }
        let Some((_, next)) = best else {
            break;
        };
        here = next;
        value = field.at(here);
        path.push(here);
    }
    path
}

/// Marks cells whose center lies closer than `radius_cells` (center to
/// center, in cell units) to a blocked cell or to the grid boundary.
pub fn dilate_blocked(passable: &[bool], width: usize, height: usize, radius_cells: f64) -> Vec<bool> {
    let r = radius_cells as isize + 1;
    let r2 = radius_cells * radius_cells;
    let mut out = passable.to_vec();
    for row in 0..height as isize {
        for col in 0..width as isize {
            let i = row as usize * width + col as usize;
            if !passable[i] {
                continue;
            }
            'scan: for dr in -r..=r {
                for dc in -r..=r {
                    if ((dr * dr + dc * dc) as f64) >= r2 {
                        continue;
                    }
                    let (rr, cc) = (row + dr, col + dc);
                    let blocked = rr < 0
                        || cc < 0
                        || rr >= height as isize
                        || cc >= width as isize
                        || !passable[rr as usize * width + cc as usize];
                    if blocked {
                        out[i] = false;
                        break 'scan;
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(w: usize, h: usize) -> Grid<Occupancy> {
        Grid::filled(w, h, Occupancy::Free)
    }

    #[test]
    fn source_is_zero() {
        let g = open(5, 4);
        let f = distance_field(&g, &[Cell::new(2, 3)], UnknownAs::Free, 0.02);
        assert_eq!(f.at(Cell::new(2, 3)), 0.0);
    }

    #[test]
    fn corner_to_corner_3x3() {
        let g = open(3, 3);
        let f = distance_field(&g, &[Cell::new(0, 0)], UnknownAs::Free, 0.02);
        assert_eq!(f.at(Cell::new(2, 2)), 2.0 * SQRT_2 * 0.02);
        assert_eq!(f.at(Cell::new(0, 2)), 2.0 * 0.02);
        assert_eq!(f.at(Cell::new(1, 2)), (1.0 + SQRT_2) * 0.02);
    }

    #[test]
    fn separated_region_is_unreachable() {
        let mut g = open(7, 5);
        for row in 0..5 {
            g.set(Cell::new(row, 3), Occupancy::Occupied);
        }
        let f = distance_field(&g, &[Cell::new(2, 0)], UnknownAs::Free, 0.02);
        for row in 0..5 {
            for col in 3..7 {
                assert!(f.at(Cell::new(row, col)).is_infinite());
            }
            assert!(f.at(Cell::new(row, 2)).is_finite());
        }
    }

    #[test]
    fn all_sources_blocked_gives_infinite_field() {
        let mut g = open(4, 4);
        g.set(Cell::new(1, 1), Occupancy::Occupied);
        let f = distance_field(&g, &[Cell::new(1, 1)], UnknownAs::Free, 0.02);
        assert!(f.grid.as_slice().iter().all(|d| d.is_infinite()));
    }

    #[test]
    fn unknown_policy() {
        let mut g = open(5, 1);
        g.set(Cell::new(0, 2), Occupancy::Unknown);
        let free = distance_field(&g, &[Cell::new(0, 0)], UnknownAs::Free, 1.0);
        let occ = distance_field(&g, &[Cell::new(0, 0)], UnknownAs::Occupied, 1.0);
        assert_eq!(free.at(Cell::new(0, 4)), 4.0);
        assert!(occ.at(Cell::new(0, 4)).is_infinite());
        assert!(occ.at(Cell::new(0, 2)).is_infinite());
    }

    #[test]
    fn path_to_self_is_single_cell() {
        let g = open(4, 4);
        assert_eq!(
            plan_path(&g, Cell::new(1, 1), Cell::new(1, 1), 0.02),
            vec![Cell::new(1, 1)]
        );
    }

    #[test]
    fn corridor_path_matches_field() {
        let mut g = open(12, 3);
        for col in 0..12 {
            g.set(Cell::new(0, col), Occupancy::Occupied);
            g.set(Cell::new(2, col), Occupancy::Occupied);
        }
        let from = Cell::new(1, 0);
        let to = Cell::new(1, 11);
        let p = plan_path(&g, from, to, 0.02);
        assert_eq!(p.first(), Some(&from));
        assert_eq!(p.last(), Some(&to));
        let len: f64 = p
            .windows(2)
            .map(|w| {
                let diag = w[0].row != w[1].row && w[0].col != w[1].col;
                if diag {
                    SQRT_2 * 0.02
                } else {
                    0.02
                }
            })
            .sum();
        let f = distance_field(&g, &[to], UnknownAs::Occupied, 0.02);
        assert!((len - f.at(from)).abs() <= 0.02 + 1e-12);
    }

    #[test]
    fn enclosed_target_ends_at_nearest_reachable_cell() {
        // room of occupied walls around (5, 5)
        let mut g = open(11, 11);
        for d in -2..=2 {
            for (r, c) in [(5 - 2, 5 + d), (5 + 2, 5 + d), (5 + d, 5 - 2), (5 + d, 5 + 2)] {
                g.set(Cell::new(r, c), Occupancy::Occupied);
            }
        }
        let to = Cell::new(5, 5);
        let p = plan_path(&g, Cell::new(0, 0), to, 0.02);
        let end = *p.last().unwrap();
        let reach = distance_field(&g, &[Cell::new(0, 0)], UnknownAs::Occupied, 0.02);
        // brute force nearest reachable cell
        let mut best = (i64::MAX, Cell::new(0, 0));
        for r in 0..11 {
            for c in 0..11 {
                let cell = Cell::new(r, c);
                if reach.at(cell).is_finite() {
                    let d2 = ((r - 5) * (r - 5) + (c - 5) * (c - 5)) as i64;
                    if d2 < best.0 {
                        best = (d2, cell);
                    }
                }
            }
        }
        assert_eq!(end, best.1);
    }

    #[test]
    fn dilation_blocks_near_walls_and_bounds() {
        let w = 10;
        let h = 10;
        let mut pass = vec![true; w * h];
        pass[5 * w + 5] = false;
        let d = dilate_blocked(&pass, w, h, 2.5);
        assert!(!d[5 * w + 3]);
        assert!(d[5 * w + 2]);
        assert!(!d[4 * w + 4]);
        assert!(!d[3 * w + 4]); // (2,1) offset: 5 < 6.25
        assert!(d[3 * w + 3]); // (2,2) offset: 8
        assert!(!d[0] && !d[w + 1]);
        assert!(d[2 * w + 2]);
    }
}
