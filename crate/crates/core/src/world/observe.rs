use super::*;
use crate::geom::line_of_sight;

/// Sensor ranges of one agent converted to cells.
struct Ranges {
    view: i32,
    detect: i32,
    fov: f64,
}

impl World {
    fn ranges(&self, agent: &AgentState) -> Ranges {
        Ranges {
            view: self.scene.meters_to_cells(agent.view_range),
            detect: self.scene.meters_to_cells(agent.detector_range),
            fov: agent.fov,
        }
    }

    pub(crate) fn los(&self, a: Cell, b: Cell) -> bool {
        line_of_sight(a, b, |c| self.scene.grid.is_wall(c))
    }

    /// The cell of an object that sensors measure against: the nearest region
    /// cell for receptacles, the holder's cell for held objects.
    fn sensed_cell(&self, o: &ObjectInstance, from: Cell) -> Cell {
        if let Some(region) = o.region {
            return region.nearest_cell(from);
        }
        if let Containment::HeldBy(h) = &o.containment {
            if let Some(a) = self.agents.get(h) {
                return a.position;
            }
        }
        o.position
    }

    fn seen(&self, o: &ObjectInstance) -> SeenObject {
        let position = match &o.containment {
            Containment::HeldBy(h) => self.agents.get(h).map_or(o.position, |a| a.position),
            _ => o.position,
        };
        SeenObject {
            object_id: o.object_id.clone(),
            category: o.category.clone(),
            kind: o.kind,
            position,
            containment: o.containment.clone(),
            is_open: o.is_open,
            openable: o.openable,
            region: o.region,
        }
    }

    /// Omnidirectional detections within detector range and line of sight.
    /// The agent's own held object is not listed.
    pub fn detections_of(&self, agent: &AgentState) -> Vec<SeenObject> {
        let r = self.ranges(agent);
        let r2 = (r.detect as i64) * (r.detect as i64);
        self.objects
            .values()
            .filter(|o| o.containment != Containment::HeldBy(agent.agent_id.clone()))
            .filter(|o| {
                let c = self.sensed_cell(o, agent.position);
                agent.position.dist2(c) <= r2 && self.los(agent.position, c)
            })
            .map(|o| self.seen(o))
            .collect()
    }

    /// Structured egocentric observation for `agent_id`.
    pub fn observe(&self, agent_id: &str) -> Result<Observation> {
        let agent = self.agent(agent_id)?;
        let r = self.ranges(agent);
        let me = agent.position;

        let origin = me.offset(-r.view, -r.view);
        let size = (2 * r.view + 1) as usize;
        let rows = (0..size as i32)
            .map(|dy| {
                (0..size as i32)
                    .map(|dx| {
                        let c = origin.offset(dx, dy);
                        match self.scene.grid.get(c) {
                            None => '?',
                            Some(kind) if self.los(me, c) => match kind {
                                crate::scene::CellKind::Floor => '.',
                                crate::scene::CellKind::Wall => '#',
                            },
                            Some(_) => '?',
                        }
                    })
                    .collect::<String>()
            })
            .collect();

        let view2 = (r.view as i64) * (r.view as i64);
        let in_view = |c: Cell| {
            me.dist2(c) <= view2 && agent.heading.sees(c.x - me.x, c.y - me.y, r.fov) && self.los(me, c)
        };
        let visible_objects = self
            .objects
            .values()
            .filter(|o| o.containment != Containment::HeldBy(agent_id.to_string()))
            .filter(|o| in_view(self.sensed_cell(o, me)))
            .map(|o| self.seen(o))
            .collect();
        let visible_agents = self
            .agents
            .values()
            .filter(|a| a.agent_id != agent_id && in_view(a.position))
            .map(|a| SeenAgent {
                agent_id: a.agent_id.clone(),
                role: a.role,
                position: a.position,
            })
            .collect();

        Ok(Observation {
            tick: self.tick,
            agent_id: agent_id.to_string(),
            pose: agent.pose(),
            held: agent.held.clone(),
            local_patch: LocalPatch { origin, size, rows },
            visible_objects,
            visible_agents,
            detections: self.detections_of(agent),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::testkit::*;
    use super::*;
    use crate::scene::CellKind;

    /// Independent line-of-sight oracle: sample the segment densely between
    /// cell centres and require every sampled cell to be floor. Used only to
    /// cross-check obvious cases (axis-aligned and clear diagonals).
    fn sampled_clear(w: &World, a: Cell, b: Cell) -> bool {
        let n = 400;
        (1..n).all(|i| {
            let t = i as f64 / n as f64;
            let x = a.x as f64 + (b.x - a.x) as f64 * t;
            let y = a.y as f64 + (b.y - a.y) as f64 * t;
            let c = Cell::new(x.round() as i32, y.round() as i32);
            c == a || c == b || w.scene.grid.is_floor(c)
        })
    }

    fn corridor() -> World {
        let mut s = open_scene(20, 20);
        // wall segment at x = 8 from y = 0..=12
        for y in 0..=12 {
            s.grid.set(Cell::new(8, y), CellKind::Wall);
        }
        let mut w = World::new(s).unwrap();
        w.add_agent_at("human", Role::Human, all_caps(), Cell::new(4, 4), h(0)).unwrap();
        w
    }

    #[test]
    fn object_one_meter_ahead_is_seen_and_detected() {
        let mut w = corridor();
        w.insert_object(target("apple_1", "apple", Cell::new(4 + 4, 14), Containment::OnFloor)).unwrap();
        w.insert_object(target("mug_1", "mug", Cell::new(7, 4), Containment::OnFloor)).unwrap();
        w.teleport("human", Cell::new(3, 4), h(0)).unwrap();
        let obs = w.observe("human").unwrap();
        // mug is 4 cells (1.0 m) straight ahead, LOS clear per the oracle too
        assert!(sampled_clear(&w, Cell::new(3, 4), Cell::new(7, 4)));
        assert!(obs.visible_objects.iter().any(|o| o.object_id == "mug_1"));
        assert!(obs.detects("mug_1"));
    }

    #[test]
    fn object_behind_wall_is_hidden() {
        let mut w = corridor();
        w.insert_object(target("apple_1", "apple", Cell::new(10, 4), Containment::OnFloor)).unwrap();
        w.teleport("human", Cell::new(6, 4), h(0)).unwrap();
        let obs = w.observe("human").unwrap();
        assert!(!sampled_clear(&w, Cell::new(6, 4), Cell::new(10, 4)));
        assert!(obs.visible_objects.is_empty());
        assert!(obs.detections.is_empty());
    }

    #[test]
    fn two_meters_visible_not_detected() {
        let mut w = corridor();
        w.insert_object(target("apple_1", "apple", Cell::new(4, 16), Containment::OnFloor)).unwrap();
        w.teleport("human", Cell::new(4, 8), h(90)).unwrap();
        let obs = w.observe("human").unwrap();
        assert!(obs.visible_objects.iter().any(|o| o.object_id == "apple_1"));
        assert!(!obs.detects("apple_1"));
    }

    #[test]
    fn detection_is_omnidirectional_but_view_is_not() {
        let mut w = corridor();
        w.insert_object(target("apple_1", "apple", Cell::new(2, 4), Containment::OnFloor)).unwrap();
        // facing east, apple is 2 cells west
        let obs = w.observe("human").unwrap();
        assert!(obs.detects("apple_1"));
        assert!(obs.visible_objects.is_empty());
    }

    #[test]
    fn patch_marks_only_line_of_sight_cells() {
        let w = corridor();
        let obs = w.observe("human").unwrap();
        let p = &obs.local_patch;
        assert_eq!(p.size, 25);
        assert_eq!(p.get(Cell::new(4, 4)), PatchCell::Free);
        assert_eq!(p.get(Cell::new(8, 4)), PatchCell::Wall);
        assert_eq!(p.get(Cell::new(10, 4)), PatchCell::Unknown);
        // out of grid
        assert_eq!(p.get(Cell::new(-1, 4)), PatchCell::Unknown);
        for (c, v) in p.known_cells() {
            assert!(w.los(Cell::new(4, 4), c));
            let truth = if w.scene.grid.is_floor(c) { PatchCell::Free } else { PatchCell::Wall };
            assert_eq!(v, truth);
        }
    }
}
