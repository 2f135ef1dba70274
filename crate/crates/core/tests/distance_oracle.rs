use blowsim_core::grid::{Cell, Grid, NEIGHBORS_8};
use blowsim_core::mapping::distance::octile_cells;
use blowsim_core::mapping::{distance_field, plan_path, Occupancy, UnknownAs};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RES: f64 = 0.02;

/// Bellman-Ford over (axial, diagonal) move counts. Distinct count pairs
/// never tie because sqrt(2) is irrational, so the optimum is unique and the
/// final conversion is comparable bit for bit.
fn oracle(occ: &Grid<Occupancy>, sources: &[Cell], unknown: UnknownAs) -> Vec<f64> {
    let (w, h) = (occ.width(), occ.height());
    let pass = |c: Cell| occ.get(c).is_some_and(|&o| unknown.passable(o));
    let mut best: Vec<Option<(u32, u32)>> = vec![None; w * h];
    for &s in sources {
        if pass(s) {
            best[occ.index(s).unwrap()] = Some((0, 0));
        }
    }
    loop {
        let mut changed = false;
        for i in 0..w * h {
            let Some((a, d)) = best[i] else { continue };
            let c = occ.cell_of(i);
            for (dr, dc) in NEIGHBORS_8 {
                let n = c.offset(dr, dc);
                if !pass(n) {
                    continue;
                }
                let cand = if dr != 0 && dc != 0 { (a, d + 1) } else { (a + 1, d) };
                let j = occ.index(n).unwrap();
                let better = match best[j] {
                    None => true,
                    Some((ba, bd)) => octile_cells(cand.0, cand.1) < octile_cells(ba, bd),
                };
                if better {
                    best[j] = Some(cand);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    best.iter()
        .map(|b| b.map_or(f64::INFINITY, |(a, d)| octile_cells(a, d) * RES))
        .collect()
}

fn random_grid(rng: &mut impl Rng, w: usize, h: usize) -> Grid<Occupancy> {
    let p_wall = rng.random_range(0.0..0.4);
    let p_unknown = rng.random_range(0.0..0.2);
    let cells = (0..w * h)
        .map(|_| {
            let u: f64 = rng.random();
            if u < p_wall {
                Occupancy::Occupied
            } else if u < p_wall + p_unknown {
                Occupancy::Unknown
            } else {
                Occupancy::Free
            }
        })
        .collect();
    Grid::from_vec(w, h, cells)
}

fn random_sources(rng: &mut impl Rng, w: usize, h: usize) -> Vec<Cell> {
    let n = rng.random_range(1..4);
    (0..n)
        .map(|_| Cell::new(rng.random_range(0..h) as isize, rng.random_range(0..w) as isize))
        .collect()
}

fn has_no_local_minima(field: &[f64], w: usize, h: usize) -> bool {
    let g = Grid::from_vec(w, h, field.to_vec());
    let ok = g.iter_cells().all(|(c, &v)| {
        !v.is_finite()
            || v == 0.0
            || NEIGHBORS_8
                .iter()
                .any(|&(dr, dc)| g.get(c.offset(dr, dc)).is_some_and(|&n| n < v))
    });
    ok
}

#[test]
fn hundred_random_20x20_grids_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let occ = random_grid(&mut rng, 20, 20);
        let sources = random_sources(&mut rng, 20, 20);
        for unknown in [UnknownAs::Free, UnknownAs::Occupied] {
            let f = distance_field(&occ, &sources, unknown, RES);
            let want = oracle(&occ, &sources, unknown);
            assert_eq!(f.grid.as_slice(), &want[..], "case {case}, unknown {unknown:?}");
            assert!(has_no_local_minima(f.grid.as_slice(), 20, 20), "case {case}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_matches_oracle(seed in any::<u64>(), w in 1usize..16, h in 1usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let occ = random_grid(&mut rng, w, h);
        let sources = random_sources(&mut rng, w, h);
        let f = distance_field(&occ, &sources, UnknownAs::Free, RES);
        prop_assert_eq!(f.grid.as_slice(), &oracle(&occ, &sources, UnknownAs::Free)[..]);
    }

    /// Planned paths are 8-connected, avoid blocked cells and, when the goal
    /// is reachable, are exactly as long as the field says.
    #[test]
    fn planned_paths_are_shortest(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let occ = random_grid(&mut rng, 12, 12);
        let from = Cell::new(rng.random_range(0..12i64) as isize, rng.random_range(0..12i64) as isize);
        let to = Cell::new(rng.random_range(0..12i64) as isize, rng.random_range(0..12i64) as isize);
        let path = plan_path(&occ, from, to, RES);
        prop_assert_eq!(path[0], from);
        let mut len = 0.0;
        for pair in path.windows(2) {
            let (dr, dc) = (pair[1].row - pair[0].row, pair[1].col - pair[0].col);
            prop_assert!(dr.abs() <= 1 && dc.abs() <= 1 && (dr, dc) != (0, 0));
            prop_assert_eq!(occ.get(pair[1]), Some(&Occupancy::Free));
            len += if dr != 0 && dc != 0 { core::f64::consts::SQRT_2 } else { 1.0 } * RES;
        }
        let mut free = occ.clone();
        free.set(from, Occupancy::Free);
        let reach = distance_field(&free, &[from], UnknownAs::Occupied, RES);
        if reach.at(to).is_finite() {
            prop_assert_eq!(*path.last().unwrap(), to);
            prop_assert!((len - reach.at(to)).abs() < 1e-9);
        }
    }
}
