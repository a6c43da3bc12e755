//! In-process episode loop: drives a world with policies directly, with the
//! same per-tick information flow a networked session gets (own observation,
//! own events, message pushes for the human). Used for tests and tuning; the
//! harness drives the same policies over the wire.

use std::collections::BTreeMap;

use crate::nav::{tick_commands, MessageNotice, Policy, PolicyInput};
use crate::replay::ReplayLog;
use crate::world::{Action, Event, Role, World};

/// Events a given agent's session is told about: its own events, message
/// resolutions for messages it sent, and episode-level events.
pub fn events_for(agent_id: &str, events: &[Event]) -> Vec<Event> {
    events
        .iter()
        .filter(|e| match e.agent() {
            Some(a) => a == agent_id,
            None => true,
        })
        .cloned()
        .collect()
}

/// Message pushes a human session receives for one tick's events.
pub fn notices_for_human(world: &World, events: &[Event]) -> Vec<MessageNotice> {
    events
        .iter()
        .filter_map(|e| match e {
            Event::MessageSent { message_id, .. } => world.message(*message_id).map(MessageNotice::from),
            _ => None,
        })
        .collect()
}

pub struct LocalRun {
    pub world: World,
    pub log: ReplayLog,
    /// Tick at which each message was sent, in send order.
    pub message_ticks: Vec<u64>,
}

/// Runs until the episode ends or `max_ticks` more ticks have elapsed.
/// Agents act in id order each tick.
pub fn run_local(mut world: World, policies: &mut BTreeMap<String, Box<dyn Policy>>, max_ticks: Option<u64>) -> LocalRun {
    world.begin_episode();
    let mut log = ReplayLog::start(&world);
    let mut last_events: Vec<Event> = Vec::new();
    let mut message_ticks = Vec::new();
    let limit = max_ticks.map(|m| world.tick + m);
    while !world.status.is_over() && limit.is_none_or(|l| world.tick < l) {
        let notices = notices_for_human(&world, &last_events);
        let mut actions: Vec<(String, Action)> = Vec::new();
        for (id, policy) in policies.iter_mut() {
            let Ok(obs) = world.observe(id) else { continue };
            let own = events_for(id, &last_events);
            let is_human = world.agents.get(id).is_some_and(|a| a.role == Role::Human);
            let input = PolicyInput {
                observation: &obs,
                events: &own,
                messages: if is_human { &notices } else { &[] },
            };
            for a in tick_commands(policy.decide(&input)) {
                actions.push((id.clone(), a));
            }
        }
        let tick = world.tick;
        let events = world.step(&actions);
        message_ticks.extend(
            events
                .iter()
                .filter(|e| matches!(e, Event::MessageSent { .. }))
                .map(|_| tick),
        );
        log.record_tick(&world, &actions, &events);
        last_events = events;
    }
    log.finish(&world);
    LocalRun {
        world,
        log,
        message_ticks,
    }
}
