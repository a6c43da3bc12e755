use super::*;

const EPS: f64 = 1e-6;

impl World {
    fn agent_mut(&mut self, agent_id: &str) -> &mut AgentState {
        self.agents.get_mut(agent_id).expect("agent checked by caller")
    }

    fn require(&self, agent_id: &str, cap: Capability) -> Result<&AgentState> {
        let agent = self.agent(agent_id)?;
        if !agent.can(cap) {
            bail!(NoCapability, "{agent_id} lacks the {cap:?} capability");
        }
        Ok(agent)
    }

    fn receptacle(&self, receptacle_id: &str) -> Result<&ObjectInstance> {
        let r = self.object(receptacle_id)?;
        if !r.is_receptacle() {
            bail!(BadArg, "{receptacle_id} is not a receptacle");
        }
        Ok(r)
    }

    fn check_receptacle_reach(&self, agent: &AgentState, r: &ObjectInstance) -> Result<()> {
        let region = r.region.expect("receptacles have regions");
        let d = region.chebyshev_to(agent.position);
        if d > self.interaction_cells() {
            bail!(
                OutOfRange,
                "{} is {} cells from {}, reach is {}",
                agent.agent_id,
                d,
                r.object_id,
                self.interaction_cells()
            );
        }
        Ok(())
    }

    /// Translates an agent by `delta` meters. The delta must be a whole number
    /// of cells and at most [`MAX_STEP_M`] long; every cell in the bounding box
    /// of the move (except the start) must be free floor.
    pub fn resolve_move(&mut self, agent_id: &str, delta: [f64; 2]) -> Result<Vec<Event>> {
        let agent = self.require(agent_id, Capability::Navigate)?;
        if !delta.iter().all(|d| d.is_finite()) {
            bail!(BadArg, "move delta must be finite");
        }
        let len = (delta[0] * delta[0] + delta[1] * delta[1]).sqrt();
        if len > MAX_STEP_M + EPS {
            bail!(OutOfRange, "move of {len:.3} m exceeds {MAX_STEP_M} m");
        }
        let cs = self.cell_size();
        let (fx, fy) = (delta[0] / cs, delta[1] / cs);
        let (dx, dy) = (fx.round(), fy.round());
        if (fx - dx).abs() > EPS || (fy - dy).abs() > EPS {
            bail!(BadArg, "move delta {delta:?} is not a whole number of {cs} m cells");
        }
        let (dx, dy) = (dx as i32, dy as i32);
        let from = agent.position;
        let to = from.offset(dx, dy);
        if dx == 0 && dy == 0 {
            return Ok(Vec::new());
        }
        let bbox = crate::geom::Rect::new(from.x, from.y, to.x, to.y);
        if let Some(blocked) = bbox
            .cells()
            .filter(|c| *c != from)
            .find(|c| !self.is_free(*c, Some(agent_id)))
        {
            let what = if self.scene.grid.is_floor(blocked) { "agent" } else { "wall" };
            bail!(Collision, "{what} at {blocked} blocks move {from} -> {to}");
        }
        let held = agent.held.clone();
        let a = self.agent_mut(agent_id);
        a.position = to;
        let pose = a.pose();
        if let Some(obj) = held.and_then(|h| self.objects.get_mut(&h)) {
            obj.position = to;
        }
        self.trajectories.entry(agent_id.to_string()).or_default().push(pose);
        Ok(vec![Event::Moved {
            agent_id: agent_id.to_string(),
            from,
            to,
        }])
    }

    pub fn resolve_rotate(&mut self, agent_id: &str, dtheta: i32) -> Result<Vec<Event>> {
        let agent = self.agent(agent_id)?;
        let Some(heading) = agent.heading.rotated(dtheta) else {
            bail!(BadArg, "rotation {dtheta} is not a multiple of 45 degrees");
        };
        self.agent_mut(agent_id).heading = heading;
        Ok(vec![Event::Rotated {
            agent_id: agent_id.to_string(),
            heading,
        }])
    }

    pub fn resolve_pick(&mut self, agent_id: &str, object_id: &str) -> Result<Vec<Event>> {
        let agent = self.require(agent_id, Capability::Manipulate)?;
        let obj = self.object(object_id)?;
        if obj.kind != ObjectKind::Target {
            bail!(NotPickable, "{object_id} is a receptacle");
        }
        if let Some(h) = &agent.held {
            bail!(AlreadyHeld, "{agent_id} already holds {h}");
        }
        if let Containment::HeldBy(other) = &obj.containment {
            bail!(AlreadyHeld, "{object_id} is held by {other}");
        }
        let d = agent.position.chebyshev(obj.position);
        if d > self.interaction_cells() {
            bail!(OutOfRange, "{object_id} is {d} cells away, reach is {}", self.interaction_cells());
        }
        if let Containment::Inside(r) = &obj.containment {
            let rec = self.object(r)?;
            if rec.openable && !rec.is_open {
                bail!(Closed, "{object_id} is inside closed {r}");
            }
        }
        let position = agent.position;
        let o = self.objects.get_mut(object_id).unwrap();
        o.containment = Containment::HeldBy(agent_id.to_string());
        o.position = position;
        self.agent_mut(agent_id).held = Some(object_id.to_string());
        Ok(vec![Event::Picked {
            agent_id: agent_id.to_string(),
            object_id: object_id.to_string(),
        }])
    }

    pub fn resolve_place(&mut self, agent_id: &str, receptacle_id: &str) -> Result<Vec<Event>> {
        let agent = self.require(agent_id, Capability::Manipulate)?;
        let Some(held) = agent.held.clone() else {
            bail!(NotHeld, "{agent_id} holds nothing");
        };
        let r = self.receptacle(receptacle_id)?;
        self.check_receptacle_reach(agent, r)?;
        if r.openable && !r.is_open {
            bail!(Closed, "{receptacle_id} is closed");
        }
        let cell = r.region.unwrap().nearest_cell(agent.position);
        let o = self.objects.get_mut(&held).unwrap();
        o.containment = Containment::Inside(receptacle_id.to_string());
        o.position = cell;
        self.agent_mut(agent_id).held = None;
        Ok(vec![Event::Placed {
            agent_id: agent_id.to_string(),
            object_id: held,
            receptacle_id: receptacle_id.to_string(),
        }])
    }

    /// Opens (`open = true`) or closes a receptacle.
    pub fn resolve_open(&mut self, agent_id: &str, receptacle_id: &str, open: bool) -> Result<Vec<Event>> {
        let agent = self.require(agent_id, Capability::Manipulate)?;
        let r = self.receptacle(receptacle_id)?;
        if !r.openable {
            bail!(NotOpenable, "{receptacle_id} cannot be opened");
        }
        self.check_receptacle_reach(agent, r)?;
        self.objects.get_mut(receptacle_id).unwrap().is_open = open;
        let (agent_id, receptacle_id) = (agent_id.to_string(), receptacle_id.to_string());
        Ok(vec![if open {
            Event::Opened {
                agent_id,
                receptacle_id,
            }
        } else {
            Event::Closed {
                agent_id,
                receptacle_id,
            }
        }])
    }

    /// Sets a pose exactly. Only allowed before the episode is scored.
    pub fn teleport(&mut self, agent_id: &str, position: Cell, heading: Heading) -> Result<Vec<Event>> {
        self.agent(agent_id)?;
        if self.episode_started {
            bail!(Forbidden, "teleport is disabled during a scored episode");
        }
        if !self.is_free(position, Some(agent_id)) {
            bail!(Collision, "cell {position} is not free floor");
        }
        let a = self.agent_mut(agent_id);
        a.position = position;
        a.heading = heading;
        let pose = a.pose();
        if let Some(h) = a.held.clone() {
            if let Some(o) = self.objects.get_mut(&h) {
                o.position = position;
            }
        }
        self.trajectories.insert(agent_id.to_string(), vec![pose]);
        Ok(vec![Event::Teleported {
            agent_id: agent_id.to_string(),
            position,
            heading,
        }])
    }
}

#[cfg(test)]
mod tests {
    use super::super::testkit::*;
    use super::*;
    use crate::geom::Rect;
    use crate::scene::CellKind;

    fn world_with(agent_caps: BTreeSet<Capability>) -> World {
        let mut s = open_scene(20, 20);
        s.receptacle_anchors.push(anchor("fridge", Rect::new(10, 4, 11, 5), true));
        s.receptacle_anchors.push(anchor("bed", Rect::new(14, 14, 16, 16), false));
        s.grid.set(Cell::new(5, 4), CellKind::Wall);
        let mut w = World::new(s).unwrap();
        w.add_agent_at("a", Role::Human, agent_caps, Cell::new(4, 4), h(0)).unwrap();
        w
    }

    #[test]
    fn move_two_cells() {
        let mut w = world_with(all_caps());
        w.teleport("a", Cell::new(4, 6), h(0)).unwrap();
        w.resolve_move("a", [0.5, 0.0]).unwrap();
        assert_eq!(w.agents["a"].position, Cell::new(6, 6));
        assert_eq!(w.agents["a"].heading, h(0));
    }

    #[test]
    fn move_errors_leave_state() {
        let mut w = world_with(all_caps());
        let before = w.clone();
        assert_eq!(w.resolve_move("a", [0.75, 0.0]).unwrap_err().code, ErrorCode::OutOfRange);
        assert_eq!(w.resolve_move("a", [0.25, 0.0]).unwrap_err().code, ErrorCode::Collision);
        assert_eq!(w.resolve_move("a", [0.3, 0.0]).unwrap_err().code, ErrorCode::BadArg);
        assert_eq!(w, before);
    }

    #[test]
    fn diagonal_needs_both_corners() {
        let mut w = world_with(all_caps());
        // (5,4) is a wall; moving (+1,+1) from (4,4) sweeps it.
        assert_eq!(w.resolve_move("a", [0.25, 0.25]).unwrap_err().code, ErrorCode::Collision);
        assert!(w.resolve_move("a", [-0.25, 0.25]).is_ok());
    }

    #[test]
    fn agents_block_moves() {
        let mut w = world_with(all_caps());
        w.add_agent_at("b", Role::Robot, all_caps(), Cell::new(4, 6), h(0)).unwrap();
        assert_eq!(w.resolve_move("a", [0.0, 0.5]).unwrap_err().code, ErrorCode::Collision);
    }

    #[test]
    fn rotate_rules() {
        let mut w = world_with(all_caps());
        w.resolve_rotate("a", 90).unwrap();
        assert_eq!(w.agents["a"].heading, h(90));
        w.teleport("a", Cell::new(4, 4), h(315)).unwrap();
        w.resolve_rotate("a", 90).unwrap();
        assert_eq!(w.agents["a"].heading, h(45));
        assert_eq!(w.resolve_rotate("a", 30).unwrap_err().code, ErrorCode::BadArg);
    }

    #[test]
    fn pick_from_floor_two_cells_away() {
        let mut w = world_with(all_caps());
        w.insert_object(target("apple_1", "apple", Cell::new(4, 6), Containment::OnFloor)).unwrap();
        w.resolve_pick("a", "apple_1").unwrap();
        assert_eq!(w.objects["apple_1"].containment, Containment::HeldBy("a".into()));
        assert_eq!(w.agents["a"].held.as_deref(), Some("apple_1"));
        assert_eq!(w.resolve_pick("a", "apple_1").unwrap_err().code, ErrorCode::AlreadyHeld);
    }

    #[test]
    fn navigate_only_robot_cannot_pick() {
        let mut w = world_with(caps(&[Capability::Navigate, Capability::Communicate]));
        w.insert_object(target("apple_1", "apple", Cell::new(4, 6), Containment::OnFloor)).unwrap();
        assert_eq!(w.resolve_pick("a", "apple_1").unwrap_err().code, ErrorCode::NoCapability);
    }

    #[test]
    fn closed_fridge_then_open() {
        let mut w = world_with(all_caps());
        w.teleport("a", Cell::new(8, 6), h(0)).unwrap();
        w.insert_object(target("apple_1", "apple", Cell::new(10, 4), Containment::Inside("fridge_1".into())))
            .unwrap();
        assert_eq!(w.resolve_pick("a", "apple_1").unwrap_err().code, ErrorCode::Closed);
        w.resolve_open("a", "fridge_1", true).unwrap();
        assert!(w.objects["fridge_1"].is_open);
        w.resolve_pick("a", "apple_1").unwrap();
    }

    #[test]
    fn receptacles_not_pickable_and_pick_range() {
        let mut w = world_with(all_caps());
        w.teleport("a", Cell::new(9, 6), h(0)).unwrap();
        assert_eq!(w.resolve_pick("a", "fridge_1").unwrap_err().code, ErrorCode::NotPickable);
        w.insert_object(target("apple_1", "apple", Cell::new(19, 19), Containment::OnFloor)).unwrap();
        assert_eq!(w.resolve_pick("a", "apple_1").unwrap_err().code, ErrorCode::OutOfRange);
    }

    #[test]
    fn place_rules() {
        let mut w = world_with(all_caps());
        w.teleport("a", Cell::new(13, 13), h(0)).unwrap();
        assert_eq!(w.resolve_place("a", "bed_1").unwrap_err().code, ErrorCode::NotHeld);
        w.insert_object(target("remote_1", "remote", Cell::new(13, 12), Containment::OnFloor)).unwrap();
        w.resolve_pick("a", "remote_1").unwrap();
        w.resolve_place("a", "bed_1").unwrap();
        assert_eq!(w.objects["remote_1"].containment, Containment::Inside("bed_1".into()));
        assert_eq!(w.objects["remote_1"].position, Cell::new(14, 14));
        w.resolve_pick("a", "remote_1").unwrap();
        w.teleport("a", Cell::new(9, 6), h(0)).unwrap();
        assert_eq!(w.resolve_place("a", "fridge_1").unwrap_err().code, ErrorCode::Closed);
    }

    #[test]
    fn open_rules() {
        let mut w = world_with(all_caps());
        w.teleport("a", Cell::new(9, 6), h(0)).unwrap();
        w.resolve_open("a", "fridge_1", true).unwrap();
        assert!(w.objects["fridge_1"].is_open);
        w.resolve_open("a", "fridge_1", false).unwrap();
        assert!(!w.objects["fridge_1"].is_open);
        // 3 m = 12 cells away
        w.teleport("a", Cell::new(10, 17), h(0)).unwrap();
        assert_eq!(w.resolve_open("a", "fridge_1", true).unwrap_err().code, ErrorCode::OutOfRange);
        w.teleport("a", Cell::new(13, 13), h(0)).unwrap();
        assert_eq!(w.resolve_open("a", "bed_1", true).unwrap_err().code, ErrorCode::NotOpenable);
    }

    #[test]
    fn teleport_rules() {
        let mut w = world_with(all_caps());
        w.add_agent_at("robot_1", Role::Robot, all_caps(), Cell::new(0, 0), h(0)).unwrap();
        w.teleport("robot_1", Cell::new(2, 2), h(90)).unwrap();
        assert_eq!(w.agents["robot_1"].position, Cell::new(2, 2));
        assert_eq!(w.teleport("robot_1", Cell::new(5, 4), h(0)).unwrap_err().code, ErrorCode::Collision);
        w.begin_episode();
        assert_eq!(w.teleport("robot_1", Cell::new(3, 3), h(0)).unwrap_err().code, ErrorCode::Forbidden);
    }
}
