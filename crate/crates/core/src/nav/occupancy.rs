use serde::{Deserialize, Serialize};

use crate::geom::Cell;
use crate::nav::path::Bounds;
use crate::world::{Observation, PatchCell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Occ {
    Unknown,
    Free,
    Occupied,
}

/// Per-agent belief map. Cells only ever go from unknown to known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<Occ>,
    updated_tick: Vec<u64>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize) -> Self {
        OccupancyGrid {
            width,
            height,
            cells: vec![Occ::Unknown; width * height],
            updated_tick: vec![0; width * height],
        }
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.width, self.height)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn idx(&self, c: Cell) -> Option<usize> {
        self.bounds()
            .contains(c)
            .then(|| c.y as usize * self.width + c.x as usize)
    }

    /// Out-of-bounds cells read as occupied.
    pub fn get(&self, c: Cell) -> Occ {
        self.idx(c).map_or(Occ::Occupied, |i| self.cells[i])
    }

    pub fn updated_tick(&self, c: Cell) -> Option<u64> {
        self.idx(c)
            .filter(|i| self.cells[*i] != Occ::Unknown)
            .map(|i| self.updated_tick[i])
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.get(c) == Occ::Free
    }

    pub fn is_unknown(&self, c: Cell) -> bool {
        self.idx(c).is_some_and(|i| self.cells[i] == Occ::Unknown)
    }

    /// Records one cell; returns true if it was newly learned.
    pub fn mark(&mut self, c: Cell, value: Occ, tick: u64) -> bool {
        match self.idx(c) {
            Some(i) if self.cells[i] == Occ::Unknown && value != Occ::Unknown => {
                self.cells[i] = value;
                self.updated_tick[i] = tick;
                true
            }
            _ => false,
        }
    }

    /// Copies every known local-patch cell; returns the number of new cells.
    pub fn update(&mut self, obs: &Observation) -> usize {
        self.update_within(obs, None)
    }

    /// Like [`update`](Self::update), but only copies cells within
    /// `radius` cells (euclidean) of the observer when a radius is given.
    pub fn update_within(&mut self, obs: &Observation, radius: Option<i32>) -> usize {
        let me = obs.pose.position;
        let mut learned = 0;
        for (c, v) in obs.local_patch.known_cells() {
            if radius.is_some_and(|r| me.dist2(c) > (r as i64) * (r as i64)) {
                continue;
            }
            let value = match v {
                PatchCell::Free => Occ::Free,
                PatchCell::Wall => Occ::Occupied,
                PatchCell::Unknown => continue,
            };
            if self.mark(c, value, obs.tick) {
                learned += 1;
            }
        }
        learned
    }

    pub fn known_count(&self) -> usize {
        self.cells.iter().filter(|c| **c != Occ::Unknown).count()
    }

    pub fn cells(&self) -> impl Iterator<Item = (Cell, Occ)> + '_ {
        self.cells.iter().enumerate().map(move |(i, v)| {
            (Cell::new((i % self.width) as i32, (i / self.width) as i32), *v)
        })
    }
}
