//! Breadth-first grid search.
//!
//! All searches are 4-connected and expand neighbours in lexicographic
//! `(x, y)` order, so equal-length paths are always broken the same way.

use std::collections::VecDeque;

use crate::geom::Cell;

/// Search bounds: cells with `0 <= x < width` and `0 <= y < height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub width: usize,
    pub height: usize,
}

impl Bounds {
    pub fn new(width: usize, height: usize) -> Self {
        Bounds { width, height }
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    fn index(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    fn cell(&self, i: usize) -> Cell {
        Cell::new((i % self.width) as i32, (i / self.width) as i32)
    }
}

/// Single-source BFS distances (in moves) with parent links.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    bounds: Bounds,
    dist: Vec<u32>,
    parent: Vec<u32>,
}

const UNSEEN: u32 = u32::MAX;

impl DistanceMap {
    /// BFS from every cell in `sources` (distance 0) over `passable` cells.
    /// Sources need not be passable themselves.
    pub fn multi_source(
        bounds: Bounds,
        sources: impl IntoIterator<Item = Cell>,
        passable: impl Fn(Cell) -> bool,
    ) -> Self {
        let n = bounds.width * bounds.height;
        let mut dist = vec![UNSEEN; n];
        let mut parent = vec![UNSEEN; n];
        let mut queue = VecDeque::new();
        for s in sources {
            if bounds.contains(s) && dist[bounds.index(s)] == UNSEEN {
                dist[bounds.index(s)] = 0;
                queue.push_back(s);
            }
        }
        while let Some(c) = queue.pop_front() {
            let d = dist[bounds.index(c)];
            for nb in c.neighbors4() {
                if !bounds.contains(nb) {
                    continue;
                }
                let i = bounds.index(nb);
                if dist[i] == UNSEEN && passable(nb) {
                    dist[i] = d + 1;
                    parent[i] = bounds.index(c) as u32;
                    queue.push_back(nb);
                }
            }
        }
        DistanceMap { bounds, dist, parent }
    }

    pub fn from(bounds: Bounds, start: Cell, passable: impl Fn(Cell) -> bool) -> Self {
        Self::multi_source(bounds, [start], passable)
    }

    pub fn distance(&self, c: Cell) -> Option<u32> {
        if !self.bounds.contains(c) {
            return None;
        }
        let d = self.dist[self.bounds.index(c)];
        (d != UNSEEN).then_some(d)
    }

    /// Path from the (nearest) source to `goal`, both endpoints included.
    pub fn path_to(&self, goal: Cell) -> Option<Vec<Cell>> {
        self.distance(goal)?;
        let mut path = vec![goal];
        let mut i = self.bounds.index(goal);
        while self.parent[i] != UNSEEN {
            i = self.parent[i] as usize;
            path.push(self.bounds.cell(i));
        }
        path.reverse();
        Some(path)
    }
}

/// Shortest 4-connected path from `start` to `goal` over `passable` cells,
/// endpoints included, or `None` if unreachable. `goal` must be passable.
pub fn plan_path(bounds: Bounds, start: Cell, goal: Cell, passable: impl Fn(Cell) -> bool) -> Option<Vec<Cell>> {
    if !bounds.contains(start) || !bounds.contains(goal) {
        return None;
    }
    if start == goal {
        return Some(vec![start]);
    }
    if !passable(goal) {
        return None;
    }
    DistanceMap::from(bounds, start, passable).path_to(goal)
}

/// Number of moves in a path returned by [`plan_path`].
pub fn path_len(path: &[Cell]) -> usize {
    path.len().saturating_sub(1)
}

/// Every non-zero whole-cell move of at most `reach` cells (Euclidean), in
/// lexicographic `(dx, dy)` order.
pub fn move_offsets(reach: i32) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            if (dx, dy) != (0, 0) && dx * dx + dy * dy <= reach * reach {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Cells a move from `from` to `to` sweeps: its bounding box minus `from`.
pub fn swept_cells(from: Cell, to: Cell) -> Vec<Cell> {
    let (x0, x1) = (from.x.min(to.x), from.x.max(to.x));
    let (y0, y1) = (from.y.min(to.y), from.y.max(to.y));
    (x0..=x1)
        .flat_map(|x| (y0..=y1).map(move |y| Cell::new(x, y)))
        .filter(|c| *c != from)
        .collect()
}

/// Fewest-moves route from `start` to the first cell satisfying `goal`,
/// where one move is any offset from [`move_offsets`]`(reach)` whose swept
/// cells are all `passable`. Returns the waypoints, `start` included.
pub fn plan_moves(
    bounds: Bounds,
    start: Cell,
    reach: i32,
    goal: impl Fn(Cell) -> bool,
    passable: impl Fn(Cell) -> bool,
) -> Option<Vec<Cell>> {
    if !bounds.contains(start) {
        return None;
    }
    let offsets = move_offsets(reach);
    let mut parent = vec![UNSEEN; bounds.width * bounds.height];
    let mut seen = vec![false; bounds.width * bounds.height];
    seen[bounds.index(start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        if goal(c) {
            let mut route = vec![c];
            let mut i = bounds.index(c);
            while parent[i] != UNSEEN {
                i = parent[i] as usize;
                route.push(bounds.cell(i));
            }
            route.reverse();
            return Some(route);
        }
        for &(dx, dy) in &offsets {
            let n = c.offset(dx, dy);
            if !bounds.contains(n) || seen[bounds.index(n)] {
                continue;
            }
            if swept_cells(c, n).into_iter().all(|s| bounds.contains(s) && passable(s)) {
                seen[bounds.index(n)] = true;
                parent[bounds.index(n)] = bounds.index(c) as u32;
                queue.push_back(n);
            }
        }
    }
    None
}
