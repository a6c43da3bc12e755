#![allow(dead_code)]

use std::net::SocketAddr;
use std::time::Duration;

use gridthor_core::catalog::ObjectKind;
use gridthor_core::scene::{CellKind, Grid};
use gridthor_core::world::{Action, Capability, Containment, Event, ObjectInstance, Observation, Role};
use gridthor_core::{shipped, Cell, GoalSpec, Heading, SceneSpec, World};
use gridthor_net::frame::{Ack, Body, PushMessage, PushTick};
use gridthor_net::{serve, Client, ServerConfig, ServerHandle, SessionRole};

pub const NAV: [Capability; 2] = [Capability::Navigate, Capability::Communicate];

/// Open 20x12 room, an apple in the far corner, the human at (2,2).
pub fn room(width: usize, height: usize) -> World {
    let scene = SceneSpec {
        scene_id: "room".into(),
        name: "room".into(),
        cell_size: 0.25,
        grid: Grid::new(width, height, CellKind::Floor),
        receptacle_anchors: vec![],
        spawn_regions: vec![],
    };
    let mut w = World::new(scene).unwrap();
    w.insert_object(ObjectInstance {
        object_id: "apple_1".into(),
        category: "apple".into(),
        kind: ObjectKind::Target,
        position: Cell::new(width as i32 - 1, height as i32 - 1),
        containment: Containment::OnFloor,
        openable: false,
        is_open: false,
        region: None,
    })
    .unwrap();
    w.set_goal(GoalSpec::navigation("apple"), &shipped::registry()).unwrap();
    w.add_agent_at("human", Role::Human, Capability::ALL.into_iter().collect(), Cell::new(2, 2), Heading::new(0).unwrap())
        .unwrap();
    w
}

pub fn world() -> World {
    room(20, 12)
}

pub fn start(world: World) -> ServerHandle {
    serve(world, ServerConfig::ephemeral()).unwrap()
}

pub fn join(addr: SocketAddr, role: SessionRole, caps: &[Capability]) -> (Client, Ack) {
    let mut c = Client::connect(addr).unwrap();
    let ack = c.hello(role, caps).unwrap();
    (c, ack)
}

/// Everything pushed up to and including the next observation.
pub struct TickView {
    pub tick: PushTick,
    pub messages: Vec<PushMessage>,
    pub observation: Observation,
}

pub fn await_observation(c: &mut Client) -> TickView {
    let mut tick = None;
    let mut messages = Vec::new();
    loop {
        let f = c.next_push().unwrap();
        match f.body {
            Body::PushTick(t) => tick = Some(t),
            Body::PushMessage(m) => messages.push(*m),
            Body::PushObservation(o) => {
                return TickView {
                    tick: tick.expect("push_tick precedes the observation"),
                    messages,
                    observation: o.observation,
                }
            }
            other => panic!("unexpected push {other:?}"),
        }
    }
}

pub fn act(c: &mut Client, action: Action) {
    c.submit(action).unwrap();
}

pub fn own_events_only(agent: &str, events: &[Event]) -> bool {
    events.iter().all(|e| e.agent().is_none_or(|a| a == agent))
}

pub fn wait_outcome(h: &ServerHandle) -> gridthor_net::EpisodeOutcome {
    h.recv_outcome(Duration::from_secs(20)).expect("episode should end")
}
