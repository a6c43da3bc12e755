//! Frontier detection over an occupancy grid.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geom::Cell;
use crate::nav::occupancy::{Occ, OccupancyGrid};

/// An 8-connected group of frontier cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierCluster {
    /// Members in lexicographic `(x, y)` order.
    pub cells: Vec<Cell>,
    /// The member closest to the cluster centroid (ties: smallest cell).
    pub representative: Cell,
}

/// A known-free cell with at least one unknown 4-neighbour.
pub fn is_frontier(grid: &OccupancyGrid, c: Cell) -> bool {
    grid.get(c) == Occ::Free && c.neighbors4().iter().any(|n| grid.is_unknown(*n))
}

fn representative(cells: &[Cell]) -> Cell {
    let n = cells.len() as i64;
    let sx: i64 = cells.iter().map(|c| c.x as i64).sum();
    let sy: i64 = cells.iter().map(|c| c.y as i64).sum();
    // compare n²·|c − centroid|² to stay in integers
    *cells
        .iter()
        .min_by_key(|c| {
            let dx = n * c.x as i64 - sx;
            let dy = n * c.y as i64 - sy;
            (dx * dx + dy * dy, **c)
        })
        .expect("clusters are non-empty")
}

/// All frontier clusters, ordered by their smallest member cell.
pub fn detect_frontiers(grid: &OccupancyGrid) -> Vec<FrontierCluster> {
    let mut frontier: BTreeSet<Cell> = grid
        .cells()
        .filter(|(c, _)| is_frontier(grid, *c))
        .map(|(c, _)| c)
        .collect();
    let mut clusters = Vec::new();
    while let Some(seed) = frontier.pop_first() {
        let mut members = vec![seed];
        let mut stack = vec![seed];
        while let Some(c) = stack.pop() {
            for nb in c.neighbors8() {
                if frontier.remove(&nb) {
                    members.push(nb);
                    stack.push(nb);
                }
            }
        }
        members.sort();
        clusters.push(FrontierCluster {
            representative: representative(&members),
            cells: members,
        });
    }
    clusters
}
