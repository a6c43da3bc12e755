use super::*;

impl World {
    /// Posts a robot message carrying the sender's current observation. Any
    /// message the sender still has pending is superseded.
    pub fn send_message(
        &mut self,
        sender_id: &str,
        text: &str,
        estimated_position: Cell,
    ) -> Result<(u64, Vec<Event>)> {
        let sender = self.agent(sender_id)?;
        if !sender.can(Capability::Communicate) {
            bail!(NoCapability, "{sender_id} cannot communicate");
        }
        if sender.role != Role::Robot {
            bail!(Forbidden, "only robots send messages; humans respond");
        }
        if !self.scene.grid.in_bounds(estimated_position) {
            bail!(BadArg, "estimated position {estimated_position} is outside the grid");
        }
        let snapshot = self.observe(sender_id)?;
        let mut events = Vec::new();
        let tick = self.tick;
        for m in self
            .messages
            .iter_mut()
            .filter(|m| m.sender == sender_id && m.status == MessageStatus::Pending)
        {
            m.status = MessageStatus::Superseded;
            m.resolved_tick = Some(tick);
            events.push(Event::MessageResolved {
                message_id: m.message_id,
                sender: m.sender.clone(),
                status: MessageStatus::Superseded,
                map: None,
            });
        }
        let message_id = self.messages.last().map_or(1, |m| m.message_id + 1);
        self.messages.push(CommMessage {
            message_id,
            sender: sender_id.to_string(),
            text: text.to_string(),
            snapshot,
            estimated_position,
            sent_tick: tick,
            status: MessageStatus::Pending,
            resolved_tick: None,
        });
        events.push(Event::MessageSent {
            message_id,
            sender: sender_id.to_string(),
            estimated_position,
        });
        Ok((message_id, events))
    }

    /// Human verdict on a pending message. Confirmation yields the
    /// relative-position map payload.
    pub fn respond_message(&mut self, human_id: &str, message_id: u64, verdict: Verdict) -> Result<Vec<Event>> {
        let human = self.agent(human_id)?;
        if human.role != Role::Human {
            bail!(Forbidden, "only the human responds to messages");
        }
        let human_pose = human.pose();
        let Some(idx) = self.messages.iter().position(|m| m.message_id == message_id) else {
            bail!(NoPendingMessage, "no message {message_id}");
        };
        if self.messages[idx].status != MessageStatus::Pending {
            bail!(
                AlreadyResolved,
                "message {message_id} is already {:?}",
                self.messages[idx].status
            );
        }
        let sender_pose = self.agents.get(&self.messages[idx].sender).map(|a| a.pose());
        let tick = self.tick;
        let m = &mut self.messages[idx];
        m.status = match verdict {
            Verdict::Confirm => MessageStatus::Confirmed,
            Verdict::Decline => MessageStatus::Declined,
        };
        m.resolved_tick = Some(tick);
        let map = match (verdict, sender_pose) {
            (Verdict::Confirm, Some(robot)) => Some(MapPayload {
                message_id,
                human: human_pose,
                robot,
                estimated_position: m.estimated_position,
            }),
            _ => None,
        };
        Ok(vec![Event::MessageResolved {
            message_id,
            sender: m.sender.clone(),
            status: m.status,
            map,
        }])
    }

    /// Read-only status lookup, restricted to the message's sender.
    pub fn query_response(&self, sender_id: &str, message_id: u64) -> Result<MessageStatus> {
        let Some(m) = self.messages.iter().find(|m| m.message_id == message_id) else {
            bail!(NoSuchMessage, "no message {message_id}");
        };
        if m.sender != sender_id {
            bail!(Forbidden, "message {message_id} belongs to {}", m.sender);
        }
        Ok(m.status)
    }

    pub fn message(&self, message_id: u64) -> Option<&CommMessage> {
        self.messages.iter().find(|m| m.message_id == message_id)
    }

    pub fn pending_message_for_human(&self) -> Option<&CommMessage> {
        self.messages.iter().rev().find(|m| m.status == MessageStatus::Pending)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testkit::*;
    use super::*;

    fn world() -> World {
        let mut w = World::new(open_scene(20, 20)).unwrap();
        w.add_agent_at("human", Role::Human, all_caps(), Cell::new(1, 1), h(0)).unwrap();
        w.add_agent_at("robot_1", Role::Robot, caps(&[Capability::Navigate, Capability::Communicate]), Cell::new(14, 9), h(0))
            .unwrap();
        w.add_agent_at("robot_2", Role::Robot, all_caps(), Cell::new(18, 18), h(0)).unwrap();
        w.insert_object(target("remote_1", "remote", Cell::new(14, 10), Containment::OnFloor)).unwrap();
        w
    }

    #[test]
    fn send_creates_pending_with_snapshot() {
        let mut w = world();
        let (id, ev) = w.send_message("robot_1", "remote here", Cell::new(14, 9)).unwrap();
        let m = w.message(id).unwrap();
        assert_eq!(m.status, MessageStatus::Pending);
        assert!(m.snapshot.detects("remote_1"));
        assert_eq!(m.snapshot.agent_id, "robot_1");
        assert!(matches!(ev.last(), Some(Event::MessageSent { .. })));
        assert_eq!(w.query_response("robot_1", id).unwrap(), MessageStatus::Pending);
    }

    #[test]
    fn supersede_then_confirm() {
        let mut w = world();
        let (first, _) = w.send_message("robot_1", "a", Cell::new(3, 3)).unwrap();
        let (second, ev) = w.send_message("robot_1", "b", Cell::new(4, 4)).unwrap();
        assert!(matches!(ev[0], Event::MessageResolved { status: MessageStatus::Superseded, .. }));
        assert_eq!(w.query_response("robot_1", first).unwrap(), MessageStatus::Superseded);
        let ev = w.respond_message("human", second, Verdict::Confirm).unwrap();
        let Event::MessageResolved { map: Some(map), .. } = &ev[0] else {
            panic!("expected map payload, got {ev:?}")
        };
        assert_eq!(map.robot.position, Cell::new(14, 9));
        assert_eq!(map.human.position, Cell::new(1, 1));
        assert_eq!(map.estimated_position, Cell::new(4, 4));
        assert_eq!(w.query_response("robot_1", second).unwrap(), MessageStatus::Confirmed);
        assert_eq!(
            w.respond_message("human", first, Verdict::Confirm).unwrap_err().code,
            ErrorCode::AlreadyResolved
        );
        assert_eq!(w.message(second).unwrap().resolved_tick, Some(0));
    }

    #[test]
    fn decline_and_errors() {
        let mut w = world();
        let (id, _) = w.send_message("robot_1", "a", Cell::new(3, 3)).unwrap();
        w.respond_message("human", id, Verdict::Decline).unwrap();
        assert_eq!(w.query_response("robot_1", id).unwrap(), MessageStatus::Declined);
        assert_eq!(w.query_response("robot_2", id).unwrap_err().code, ErrorCode::Forbidden);
        assert_eq!(w.query_response("robot_1", 99).unwrap_err().code, ErrorCode::NoSuchMessage);
        assert_eq!(
            w.respond_message("human", 99, Verdict::Decline).unwrap_err().code,
            ErrorCode::NoPendingMessage
        );
        assert_eq!(
            w.send_message("robot_1", "x", Cell::new(999, 999)).unwrap_err().code,
            ErrorCode::BadArg
        );
        assert_eq!(
            w.send_message("human", "x", Cell::new(1, 1)).unwrap_err().code,
            ErrorCode::Forbidden
        );
    }

    #[test]
    fn pending_per_sender_is_independent() {
        let mut w = world();
        w.send_message("robot_1", "a", Cell::new(3, 3)).unwrap();
        w.send_message("robot_2", "b", Cell::new(3, 3)).unwrap();
        let pending = w.messages.iter().filter(|m| m.status == MessageStatus::Pending).count();
        assert_eq!(pending, 2);
    }
}
