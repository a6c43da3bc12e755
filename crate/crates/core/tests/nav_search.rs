//! Path planning and frontier detection against brute-force oracles.

use std::collections::{BTreeSet, VecDeque};

use gridthor_core::nav::{detect_frontiers, path_len, plan_path, Bounds, Occ, OccupancyGrid};
use gridthor_core::seed::rng_from;
use gridthor_core::Cell;
use proptest::prelude::*;
use rand::Rng;

const N: i32 = 15;

fn random_walls(seed: u64, density: f64) -> Vec<bool> {
    let mut rng = rng_from(seed);
    (0..N * N).map(|_| rng.gen_bool(density)).collect()
}

fn wall(walls: &[bool], c: Cell) -> bool {
    walls[(c.y * N + c.x) as usize]
}

/// Plain breadth-first distance with its own neighbour handling.
fn bfs_oracle(walls: &[bool], s: Cell, g: Cell) -> Option<usize> {
    if wall(walls, g) {
        return None;
    }
    let mut dist = vec![usize::MAX; (N * N) as usize];
    let idx = |c: Cell| (c.y * N + c.x) as usize;
    dist[idx(s)] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(c) = q.pop_front() {
        if c == g {
            return Some(dist[idx(c)]);
        }
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = Cell::new(c.x + dx, c.y + dy);
            if n.x < 0 || n.y < 0 || n.x >= N || n.y >= N || wall(walls, n) || dist[idx(n)] != usize::MAX {
                continue;
            }
            dist[idx(n)] = dist[idx(c)] + 1;
            q.push_back(n);
        }
    }
    None
}

#[test]
fn plan_path_matches_bfs_on_random_grids() {
    let bounds = Bounds::new(N as usize, N as usize);
    for seed in 0..200u64 {
        let mut walls = random_walls(seed, 0.2);
        let mut rng = rng_from(seed ^ 0xfeed);
        let s = Cell::new(rng.gen_range(0..N), rng.gen_range(0..N));
        let g = Cell::new(rng.gen_range(0..N), rng.gen_range(0..N));
        walls[(s.y * N + s.x) as usize] = false;
        let got = plan_path(bounds, s, g, |c| !wall(&walls, c));
        let want = bfs_oracle(&walls, s, g);
        assert_eq!(got.as_deref().map(path_len), want, "seed {seed}: {s} -> {g}");
        if let Some(p) = got {
            assert_eq!(p.first(), Some(&s));
            assert_eq!(p.last(), Some(&g));
            for w in p.windows(2) {
                assert_eq!(w[0].manhattan(w[1]), 1);
                assert!(!wall(&walls, w[1]));
            }
        }
    }
}

#[test]
fn plan_path_is_deterministic() {
    let walls = random_walls(3, 0.2);
    let bounds = Bounds::new(N as usize, N as usize);
    let a = plan_path(bounds, Cell::new(0, 0), Cell::new(14, 14), |c| c == Cell::new(0, 0) || !wall(&walls, c));
    let b = plan_path(bounds, Cell::new(0, 0), Cell::new(14, 14), |c| c == Cell::new(0, 0) || !wall(&walls, c));
    assert_eq!(a, b);
}

fn random_map(seed: u64) -> OccupancyGrid {
    let mut rng = rng_from(seed);
    let mut g = OccupancyGrid::new(N as usize, N as usize);
    for y in 0..N {
        for x in 0..N {
            match rng.gen_range(0..10) {
                0..=3 => {}
                4..=7 => {
                    g.mark(Cell::new(x, y), Occ::Free, 0);
                }
                _ => {
                    g.mark(Cell::new(x, y), Occ::Occupied, 0);
                }
            }
        }
    }
    g
}

/// Brute force: enumerate frontier cells by definition, then flood fill with
/// an explicit 8-neighbourhood.
fn brute_clusters(g: &OccupancyGrid) -> Vec<Vec<Cell>> {
    let mut cells = BTreeSet::new();
    for y in 0..N {
        for x in 0..N {
            let c = Cell::new(x, y);
            let unknown_nb = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| {
                let n = Cell::new(x + dx, y + dy);
                n.x >= 0 && n.y >= 0 && n.x < N && n.y < N && g.get(n) == Occ::Unknown
            });
            if g.get(c) == Occ::Free && unknown_nb {
                cells.insert(c);
            }
        }
    }
    let mut out = Vec::new();
    while let Some(&seed) = cells.iter().next() {
        cells.remove(&seed);
        let mut comp = vec![seed];
        let mut i = 0;
        while i < comp.len() {
            let c = comp[i];
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let n = Cell::new(c.x + dx, c.y + dy);
                    if cells.remove(&n) {
                        comp.push(n);
                    }
                }
            }
            i += 1;
        }
        comp.sort();
        out.push(comp);
    }
    out.sort();
    out
}

proptest! {
    #[test]
    fn frontier_clusters_match_brute_force(seed in any::<u64>()) {
        let g = random_map(seed);
        let mut got: Vec<Vec<Cell>> = detect_frontiers(&g).into_iter().map(|k| {
            assert!(k.cells.contains(&k.representative));
            k.cells
        }).collect();
        got.sort();
        prop_assert_eq!(got, brute_clusters(&g));
    }

    #[test]
    fn plan_path_optimal_property(seed in any::<u64>()) {
        let walls = random_walls(seed, 0.2);
        let bounds = Bounds::new(N as usize, N as usize);
        let s = Cell::new(0, 0);
        let g = Cell::new(N - 1, N - 1);
        let got = plan_path(bounds, s, g, |c| c == s || !wall(&walls, c));
        let mut w2 = walls.clone();
        w2[0] = false;
        prop_assert_eq!(got.as_deref().map(path_len), bfs_oracle(&w2, s, g));
    }
}
