//! Path following shared by every policy: occupancy bookkeeping, committed
//! paths, two-cell move packing and short-lived avoidance after collisions.

use std::collections::{BTreeMap, VecDeque};

use crate::error::ErrorCode;
use crate::geom::Cell;
use crate::nav::frontier::detect_frontiers;
use crate::nav::occupancy::{Occ, OccupancyGrid};
use crate::nav::path::DistanceMap;
use crate::world::{Action, Event, Observation};

/// Ticks a cell stays impassable after a move into it collided.
const AVOID_TICKS: u64 = 4;

#[derive(Debug, Clone)]
pub struct Navigator {
    pub occupancy: OccupancyGrid,
    pub cell_size: f64,
    /// When set, only cells this close are mapped from each observation.
    pub sense_radius: Option<i32>,
    /// Cells covered per move: 2 packs path steps, 1 walks cell by cell.
    pub stride: u8,
    path: VecDeque<Cell>,
    route: VecDeque<Cell>,
    avoid: BTreeMap<Cell, u64>,
    last_move: Vec<Cell>,
}

impl Navigator {
    pub fn new(width: usize, height: usize, cell_size: f64) -> Self {
        Navigator {
            occupancy: OccupancyGrid::new(width, height),
            cell_size,
            sense_radius: None,
            stride: 2,
            path: VecDeque::new(),
            route: VecDeque::new(),
            avoid: BTreeMap::new(),
            last_move: Vec::new(),
        }
    }

    /// Folds in a new observation and the agent's own events from the last
    /// tick. A rejected move clears the committed path and marks the cells it
    /// tried to enter as temporarily impassable.
    pub fn observe(&mut self, obs: &Observation, events: &[Event]) {
        self.occupancy.update_within(obs, self.sense_radius);
        let me = obs.agent_id.as_str();
        let collided = events.iter().any(|e| {
            matches!(e, Event::Rejected { agent_id, action, code, .. }
                if agent_id == me && action == "move" && *code == ErrorCode::Collision)
        });
        if collided {
            for c in self.last_move.drain(..) {
                self.avoid.insert(c, obs.tick + AVOID_TICKS);
            }
            self.path.clear();
            self.route.clear();
        }
        self.last_move.clear();
        let tick = obs.tick;
        self.avoid.retain(|_, until| *until > tick);
    }

    pub fn avoided(&self, c: Cell) -> bool {
        self.avoid.contains_key(&c)
    }

    /// Known-free and not avoided.
    pub fn known_passable(&self, c: Cell) -> bool {
        self.occupancy.is_free(c) && !self.avoided(c)
    }

    /// Not known to be a wall and not avoided; unknown cells count as open.
    pub fn optimistic_passable(&self, c: Cell) -> bool {
        self.occupancy.get(c) != Occ::Occupied && !self.avoided(c)
    }

    pub fn has_path(&self) -> bool {
        !self.path.is_empty()
    }

    pub fn path(&self) -> impl Iterator<Item = &Cell> {
        self.path.iter()
    }

    pub fn path_goal(&self) -> Option<Cell> {
        self.path.back().copied()
    }

    pub fn clear_path(&mut self) {
        self.path.clear();
    }

    /// Replaces the committed path (the first cell must be the current one).
    pub fn set_path(&mut self, path: Vec<Cell>) {
        self.path = path.into_iter().skip(1).collect();
    }

    /// Drops the part of the path already walked; false if the remaining
    /// path does not continue from `me`.
    fn sync(&mut self, me: Cell) -> bool {
        if let Some(i) = self.path.iter().position(|c| *c == me) {
            self.path.drain(..=i);
        }
        self.path.front().is_some_and(|c| c.manhattan(me) == 1)
    }

    /// Next move along the committed path, packing two cells into one action
    /// when the swept cells are known free. `None` when the path is finished
    /// or no longer continues from `me`.
    pub fn follow(&mut self, me: Cell) -> Option<Action> {
        if !self.sync(me) {
            self.path.clear();
            return None;
        }
        let first = self.path[0];
        let mut delta = (first.x - me.x, first.y - me.y);
        let mut swept = vec![first];
        if let Some(&second) = self.path.get(1).filter(|_| self.stride >= 2) {
            let d = (second.x - me.x, second.y - me.y);
            let both_free = self.known_passable(first) && self.known_passable(second);
            if both_free && (d.0.abs() == 2 || d.1.abs() == 2) {
                delta = d;
                swept.push(second);
            } else if both_free && d.0.abs() == 1 && d.1.abs() == 1 {
                let corner = if first == me.offset(d.0, 0) {
                    me.offset(0, d.1)
                } else {
                    me.offset(d.0, 0)
                };
                if self.known_passable(corner) {
                    delta = d;
                    swept.extend([second, corner]);
                }
            }
        }
        self.last_move = swept;
        Some(Action::step_cells(delta.0, delta.1, self.cell_size))
    }

    /// Commits to a route of waypoints one move apart (as produced by
    /// [`crate::nav::plan_moves`]); the first waypoint is the current cell.
    pub fn set_route(&mut self, route: Vec<Cell>) {
        self.route = route.into_iter().skip(1).collect();
    }

    pub fn has_route(&self) -> bool {
        !self.route.is_empty()
    }

    /// Move to the next waypoint; `None` when the route is finished or the
    /// agent is no longer on it.
    pub fn follow_route(&mut self, me: Cell) -> Option<Action> {
        if let Some(i) = self.route.iter().position(|c| *c == me) {
            self.route.drain(..=i);
        }
        let next = *self.route.front()?;
        let (dx, dy) = (next.x - me.x, next.y - me.y);
        if dx * dx + dy * dy > 4 {
            self.route.clear();
            return None;
        }
        self.last_move = crate::nav::path::swept_cells(me, next);
        Some(Action::step_cells(dx, dy, self.cell_size))
    }

    /// Plans a fresh path from `me` to the nearest of `goals` (by path
    /// length; ties by the order of `goals`) and returns its first move.
    pub fn go_to_nearest(&mut self, me: Cell, goals: &[Cell], optimistic: bool) -> Option<Action> {
        let dm = if optimistic {
            DistanceMap::from(self.occupancy.bounds(), me, |c| self.optimistic_passable(c))
        } else {
            DistanceMap::from(self.occupancy.bounds(), me, |c| self.known_passable(c))
        };
        let goal = goals
            .iter()
            .filter_map(|g| dm.distance(*g).map(|d| (d, *g)))
            .min_by_key(|(d, _)| *d)?
            .1;
        if goal == me {
            return None;
        }
        self.set_path(dm.path_to(goal)?);
        self.follow(me)
    }

    /// Frontier exploration: keeps following the committed path while its
    /// goal is still a frontier cell, otherwise commits to the nearest
    /// frontier cluster representative by known-free path distance (ties by
    /// cluster order). Falls back to optimistic planning if no cluster is
    /// reachable over known cells. `None` once no frontier remains.
    pub fn explore(&mut self, me: Cell) -> Option<Action> {
        let clusters = detect_frontiers(&self.occupancy);
        if clusters.is_empty() {
            self.path.clear();
            return None;
        }
        if let Some(goal) = self.path_goal() {
            let still_frontier = clusters.iter().any(|k| k.cells.contains(&goal));
            if still_frontier {
                if let Some(a) = self.follow(me) {
                    return Some(a);
                }
            }
        }
        self.path.clear();
        let reps: Vec<Cell> = clusters.iter().map(|k| k.representative).filter(|c| *c != me).collect();
        self.go_to_nearest(me, &reps, false)
            .or_else(|| self.go_to_nearest(me, &reps, true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Heading;
    use crate::scene::{CellKind, Grid, SceneSpec};
    use crate::world::{Capability, Role, World};

    fn world(grid: Grid, at: Cell) -> World {
        let scene = SceneSpec {
            scene_id: "n".into(),
            name: "n".into(),
            cell_size: 0.25,
            grid,
            receptacle_anchors: vec![],
            spawn_regions: vec![],
        };
        let mut w = World::new(scene).unwrap();
        w.add_agent_at(
            "robot_1",
            Role::Robot,
            [Capability::Navigate].into_iter().collect(),
            at,
            Heading::new(0).unwrap(),
        )
        .unwrap();
        w.deadline_ticks = 100_000;
        w.begin_episode();
        w
    }

    #[test]
    fn straight_steps_are_packed() {
        let w = world(Grid::new(12, 12, CellKind::Floor), Cell::new(1, 1));
        let mut n = Navigator::new(12, 12, 0.25);
        n.observe(&w.observe("robot_1").unwrap(), &[]);
        let a = n.go_to_nearest(Cell::new(1, 1), &[Cell::new(1, 7)], false).unwrap();
        assert_eq!(a, Action::step_cells(0, 2, 0.25));
    }

    #[test]
    fn collision_marks_cells_avoided() {
        let w = world(Grid::new(12, 12, CellKind::Floor), Cell::new(1, 1));
        let mut n = Navigator::new(12, 12, 0.25);
        let obs = w.observe("robot_1").unwrap();
        n.observe(&obs, &[]);
        n.go_to_nearest(Cell::new(1, 1), &[Cell::new(1, 7)], false).unwrap();
        let rejected = Event::Rejected {
            agent_id: "robot_1".into(),
            action: "move".into(),
            code: ErrorCode::Collision,
            message: String::new(),
        };
        n.observe(&obs, &[rejected]);
        assert!(!n.has_path());
        assert!(n.avoided(Cell::new(1, 2)));
        assert!(n.avoided(Cell::new(1, 3)));
    }

    #[test]
    fn exploration_of_open_room_terminates() {
        let mut grid = Grid::new(40, 20, CellKind::Floor);
        for y in 0..20 {
            if !(8..=10).contains(&y) {
                grid.set(Cell::new(20, y), CellKind::Wall);
            }
        }
        let mut w = world(grid, Cell::new(2, 2));
        let mut n = Navigator::new(40, 20, 0.25);
        let mut events = Vec::new();
        for _ in 0..400 {
            let obs = w.observe("robot_1").unwrap();
            n.observe(&obs, &events);
            let Some(a) = n.explore(obs.pose.position) else { break };
            events = w.step(&[("robot_1".to_string(), a)]);
        }
        assert_eq!(n.occupancy.known_count(), 800);
    }
}
