//! Shortest-path estimate of the minimum episode time `T*`.
//!
//! Moves cover up to two cells, so a path of `d` cells costs `ceil(d / 2)`
//! ticks. Manipulation adds one tick each for pick and place, plus one to
//! open the goal receptacle when it starts closed. Navigation ends as soon as
//! the target is within detection range, so the last `range` cells are free.
//! The estimate assumes the human already knows where everything is and
//! interacts from a cell next to the object. Reach is longer than that, so a
//! player can occasionally beat the estimate; twsr then simply equals `s`.

use gridthor_core::nav::{Bounds, DistanceMap};
use gridthor_core::world::{Containment, World};
use gridthor_core::{Cell, Error, ErrorCode, ObjectKind, Result, TaskKind};

/// Ticks for pick + place.
pub const INTERACTION_TICKS: u64 = 2;

fn move_ticks(cells: u32) -> u64 {
    u64::from(cells).div_ceil(2)
}

/// Floor cells at Chebyshev distance exactly 1 from any cell of `cells`.
fn adjacent_cells(world: &World, cells: &[Cell]) -> Vec<Cell> {
    let grid = &world.scene.grid;
    let mut out: Vec<Cell> = cells
        .iter()
        .flat_map(|c| c.neighbors8())
        .filter(|n| grid.is_floor(*n) && !cells.contains(n))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Where an object is, as a set of cells: the region of a receptacle, the
/// holder's cell for a carried object, else its own cell.
fn footprint(world: &World, object_id: &str) -> Result<Vec<Cell>> {
    let o = world.object(object_id)?;
    if let Some(region) = &o.region {
        return Ok(region.cells().collect());
    }
    Ok(match &o.containment {
        Containment::HeldBy(agent) => vec![world.agent(agent)?.position],
        _ => vec![o.position],
    })
}

/// `T*` for the world's goal from the human's starting pose. Errors with
/// `E_UNREACHABLE` when no target (and, for manipulation, no goal
/// receptacle) can be reached.
pub fn estimate_optimal_ticks(world: &World) -> Result<u64> {
    let Some(goal) = &world.goal else {
        return Err(Error::new(ErrorCode::BadTask, "world has no goal"));
    };
    let Some(human) = world.human() else {
        return Err(Error::new(ErrorCode::NoAgent, "world has no human"));
    };
    if world.check_goal() {
        return Ok(0);
    }
    let grid = &world.scene.grid;
    let bounds = Bounds::new(grid.width(), grid.height());
    let floor = |c: Cell| grid.is_floor(c);
    let from_human = DistanceMap::from(bounds, human.position, floor);
    let targets: Vec<&str> = world
        .objects
        .values()
        .filter(|o| o.kind == ObjectKind::Target && o.category == goal.target_category)
        .map(|o| o.object_id.as_str())
        .collect();

    let mut best: Option<u64> = None;
    match goal.task_kind {
        TaskKind::Navigation => {
            let range = (human.sensors().detector_range / world.cell_size() + 1e-9).floor() as u32;
            for t in targets {
                for c in footprint(world, t)? {
                    if let Some(d) = from_human.distance(c) {
                        let ticks = move_ticks(d.saturating_sub(range));
                        best = Some(best.map_or(ticks, |b| b.min(ticks)));
                    }
                }
            }
        }
        TaskKind::Manipulation => {
            let Some(rc) = &goal.receptacle_category else {
                return Err(Error::new(ErrorCode::BadTask, "manipulation goal without a receptacle category"));
            };
            let receptacles: Vec<(&str, bool)> = world
                .objects
                .values()
                .filter(|o| o.kind == ObjectKind::Receptacle && &o.category == rc)
                .map(|o| (o.object_id.as_str(), o.openable && !o.is_open))
                .collect();
            for (r, closed) in receptacles {
                let to_receptacle = DistanceMap::multi_source(bounds, adjacent_cells(world, &footprint(world, r)?), floor);
                let overhead = INTERACTION_TICKS + u64::from(closed);
                for t in &targets {
                    for a in adjacent_cells(world, &footprint(world, t)?) {
                        if let (Some(d1), Some(d2)) = (from_human.distance(a), to_receptacle.distance(a)) {
                            let ticks = move_ticks(d1) + move_ticks(d2) + overhead;
                            best = Some(best.map_or(ticks, |b| b.min(ticks)));
                        }
                    }
                }
            }
        }
    }
    match best {
        Some(t) => Ok(t),
        None => Err(Error::new(
            ErrorCode::Unreachable,
            format!("goal of task {:?} is unreachable", world.task_id.as_deref().unwrap_or("?")),
        )),
    }
}
