//! The tick server: one acceptor per listener, a reader/writer pair per
//! connection and a single tick owner that holds the world. Every mutation
//! reaches the owner through one command queue; pushes leave through each
//! session's bounded outbound queue, so a slow client can never stall a tick.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use gridthor_core::catalog::CategoryRegistry;
use gridthor_core::replay::ReplayLog;
use gridthor_core::sim::events_for;
use gridthor_core::world::{Action, Capability, Event, Role, World};
use gridthor_core::{shipped, Error, ErrorCode, Result, SceneSpec};

use crate::frame::{
    Ack, Body, ConfigOp, EpisodeInfo, Frame, Hello, PushEvent, PushMessage, PushObservation, PushTick, SceneSummary,
    SessionRole, TaskSummary,
};
use crate::transport::{self, Assets, Closer, Outbound};

pub const DEFAULT_LISTEN: &str = "127.0.0.1:7777";
pub const DEFAULT_WEB_LISTEN: &str = "127.0.0.1:7778";

/// How the clock advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickMode {
    /// A tick commits as soon as every connected agent session has queued
    /// its action for it. Used by the headless harness.
    Lockstep,
    /// A tick commits every `tick_ms` milliseconds whatever the clients do.
    Realtime { tick_ms: u64 },
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub web_listen: Option<SocketAddr>,
    pub mode: TickMode,
    /// Capacity of each session's outbound queue, in frames.
    pub queue_capacity: usize,
    pub assets: Assets,
    /// Start the episode as soon as a human session joins.
    pub start_on_human: bool,
    /// Scenes available to `select_scene`.
    pub scenes: Vec<SceneSpec>,
    pub registry: CategoryRegistry,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: DEFAULT_LISTEN.parse().unwrap(),
            web_listen: None,
            mode: TickMode::Lockstep,
            queue_capacity: 1024,
            assets: Assets::Embedded,
            start_on_human: false,
            scenes: shipped::scenes(),
            registry: shipped::registry(),
        }
    }
}

impl ServerConfig {
    /// Lockstep on an ephemeral loopback port, no web listener.
    pub fn ephemeral() -> Self {
        ServerConfig {
            listen: "127.0.0.1:0".parse().unwrap(),
            ..ServerConfig::default()
        }
    }
}

/// What the owner hands back when an episode ends.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub world: World,
    pub log: ReplayLog,
    /// Tick at which each message was sent, in send order.
    pub message_ticks: Vec<u64>,
    /// Agents whose session disconnected while the episode ran.
    pub dropped: Vec<String>,
    /// The episode was cut short by a server shutdown.
    pub aborted: bool,
}

pub(crate) enum Command {
    Connect { sid: u64, out: Outbound, closer: Closer },
    Frame { sid: u64, frame: Frame },
    Disconnect { sid: u64 },
    Start,
    Snapshot(Sender<World>),
    Shutdown,
}

pub struct ServerHandle {
    addr: SocketAddr,
    web_addr: Option<SocketAddr>,
    commands: Sender<Command>,
    outcomes: Receiver<EpisodeOutcome>,
    trust: Receiver<u8>,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn web_addr(&self) -> Option<SocketAddr> {
        self.web_addr
    }

    /// Begins the episode (same as a `config start` frame).
    pub fn start_episode(&self) {
        let _ = self.commands.send(Command::Start);
    }

    /// A copy of the current world, taken between ticks.
    pub fn world(&self) -> Option<World> {
        let (tx, rx) = mpsc::channel();
        self.commands.send(Command::Snapshot(tx)).ok()?;
        rx.recv().ok()
    }

    pub fn recv_outcome(&self, timeout: Duration) -> Option<EpisodeOutcome> {
        self.outcomes.recv_timeout(timeout).ok()
    }

    /// The trust rating sent by the human session after the episode.
    pub fn recv_trust(&self, timeout: Duration) -> Option<u8> {
        self.trust.recv_timeout(timeout).ok()
    }

    /// Stops accepting, closes every session and returns outcomes not yet
    /// received (including an aborted one for a running episode).
    pub fn shutdown(mut self) -> Vec<EpisodeOutcome> {
        self.stop.store(true, Ordering::SeqCst);
        let _ = self.commands.send(Command::Shutdown);
        // Wake the acceptors blocked in accept().
        let _ = TcpStream::connect(self.addr);
        if let Some(w) = self.web_addr {
            let _ = TcpStream::connect(w);
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        self.outcomes.try_iter().collect()
    }
}

/// Binds the listeners and starts serving `world`. Agents join with `hello`;
/// the episode begins on `config start`, [`ServerHandle::start_episode`] or,
/// with `start_on_human`, when the human joins.
pub fn serve(world: World, cfg: ServerConfig) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(cfg.listen)?;
    let addr = listener.local_addr()?;
    let web = cfg.web_listen.map(TcpListener::bind).transpose()?;
    let web_addr = web.as_ref().map(|l| l.local_addr()).transpose()?;
    let (commands, inbox) = mpsc::channel();
    let (outcome_tx, outcomes) = mpsc::channel();
    let (trust_tx, trust) = mpsc::channel();
    let stop = Arc::new(AtomicBool::new(false));
    let next_sid = Arc::new(AtomicU64::new(1));
    let mut threads = Vec::new();

    let owner = Owner::new(world, &cfg, outcome_tx, trust_tx);
    threads.push(
        thread::Builder::new()
            .name("tick-owner".into())
            .spawn(move || owner.run(inbox))?,
    );
    {
        let (stop, next_sid, commands, cap) = (stop.clone(), next_sid.clone(), commands.clone(), cfg.queue_capacity);
        threads.push(thread::Builder::new().name("acceptor".into()).spawn(move || {
            for conn in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let sid = next_sid.fetch_add(1, Ordering::SeqCst);
                if let Err(e) = transport::spawn_tcp_session(stream, sid, commands.clone(), cap) {
                    log::warn!("session {sid} failed to start: {e}");
                }
            }
        })?);
    }
    if let Some(web) = web {
        let (stop, commands, cap, assets) = (stop.clone(), commands.clone(), cfg.queue_capacity, cfg.assets.clone());
        threads.push(thread::Builder::new().name("web-acceptor".into()).spawn(move || {
            for conn in web.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let sid = next_sid.fetch_add(1, Ordering::SeqCst);
                let (commands, assets) = (commands.clone(), assets.clone());
                let spawned = thread::Builder::new().name(format!("web-{sid}")).spawn(move || {
                    if let Err(e) = transport::handle_web_connection(stream, sid, commands, cap, &assets) {
                        log::debug!("web connection {sid}: {e}");
                    }
                });
                if let Err(e) = spawned {
                    log::warn!("web connection {sid} failed to start: {e}");
                }
            }
        })?);
    }
    log::info!("listening on {addr}");
    if let Some(w) = web_addr {
        log::info!("web client on http://{w}/");
    }
    Ok(ServerHandle {
        addr,
        web_addr,
        commands,
        outcomes,
        trust,
        stop,
        threads,
    })
}

struct Session {
    role: Option<SessionRole>,
    agent_id: Option<String>,
    capabilities: BTreeSet<Capability>,
    connected_tick: u64,
    out: Outbound,
    closer: Closer,
}

struct Owner {
    /// World before any session joined; config ops rebuild from here.
    base: World,
    world: World,
    mode: TickMode,
    start_on_human: bool,
    scenes: Vec<SceneSpec>,
    registry: CategoryRegistry,
    sessions: BTreeMap<u64, Session>,
    /// Agent sessions in join order, for respawning after a rebuild.
    join_order: Vec<u64>,
    running: bool,
    pending: Vec<(String, Action)>,
    submitted: BTreeSet<String>,
    log: Option<ReplayLog>,
    message_ticks: Vec<u64>,
    dropped: Vec<String>,
    next_tick_at: Instant,
    outcomes: Sender<EpisodeOutcome>,
    trust: Sender<u8>,
    trust_given: bool,
}

fn wrong_role(what: &str) -> Error {
    Error::new(ErrorCode::WrongRole, what)
}

impl Owner {
    fn new(world: World, cfg: &ServerConfig, outcomes: Sender<EpisodeOutcome>, trust: Sender<u8>) -> Self {
        Owner {
            base: world.clone(),
            world,
            mode: cfg.mode,
            start_on_human: cfg.start_on_human,
            scenes: cfg.scenes.clone(),
            registry: cfg.registry.clone(),
            sessions: BTreeMap::new(),
            join_order: Vec::new(),
            running: false,
            pending: Vec::new(),
            submitted: BTreeSet::new(),
            log: None,
            message_ticks: Vec::new(),
            dropped: Vec::new(),
            next_tick_at: Instant::now(),
            outcomes,
            trust,
            trust_given: false,
        }
    }

    fn run(mut self, inbox: Receiver<Command>) {
        loop {
            let cmd = match self.mode {
                TickMode::Realtime { .. } if self.running => {
                    let wait = self.next_tick_at.saturating_duration_since(Instant::now());
                    inbox.recv_timeout(wait)
                }
                _ => inbox.recv_timeout(Duration::from_millis(200)),
            };
            match cmd {
                Ok(Command::Shutdown) | Err(RecvTimeoutError::Disconnected) => break,
                Ok(cmd) => self.handle(cmd),
                Err(RecvTimeoutError::Timeout) => {}
            }
            self.maybe_commit();
        }
        if self.running {
            self.finish(true);
        }
        for s in self.sessions.values() {
            (s.closer)();
        }
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Connect { sid, out, closer } => {
                self.sessions.insert(
                    sid,
                    Session {
                        role: None,
                        agent_id: None,
                        capabilities: BTreeSet::new(),
                        connected_tick: self.world.tick,
                        out,
                        closer,
                    },
                );
            }
            Command::Disconnect { sid } => self.drop_session(sid),
            Command::Frame { sid, frame } => {
                let id = frame.id;
                let reply = match self.dispatch(sid, frame.body) {
                    Ok(ack) => Frame::ack(id, ack),
                    Err(e) => Frame::error(id, &e),
                };
                self.send_to(sid, &reply);
                // Auto-start after the welcome so it precedes the first push.
                let human_joined = self.sessions.values().any(|s| s.role == Some(SessionRole::Human));
                if self.start_on_human && human_joined && !self.world.episode_started {
                    if let Err(e) = self.start() {
                        log::warn!("auto-start refused: {e}");
                    }
                }
            }
            Command::Start => {
                if let Err(e) = self.start() {
                    log::warn!("start refused: {e}");
                }
            }
            Command::Snapshot(reply) => {
                let _ = reply.send(self.world.clone());
            }
            Command::Shutdown => {}
        }
    }

    fn send_to(&mut self, sid: u64, frame: &Frame) {
        let ok = self.sessions.get(&sid).is_some_and(|s| s.out.send(frame));
        if !ok && self.sessions.contains_key(&sid) {
            log::warn!("session {sid} lagged; dropping it");
            self.drop_session(sid);
        }
    }

    fn drop_session(&mut self, sid: u64) {
        let Some(s) = self.sessions.remove(&sid) else { return };
        self.join_order.retain(|x| *x != sid);
        if let Some(agent) = s.agent_id {
            self.submitted.remove(&agent);
            if self.running {
                log::warn!("agent {agent} disconnected mid-episode");
                self.dropped.push(agent);
            }
        }
    }

    fn session(&self, sid: u64) -> Result<&Session> {
        self.sessions
            .get(&sid)
            .ok_or_else(|| Error::new(ErrorCode::Io, "unknown session"))
    }

    fn dispatch(&mut self, sid: u64, body: Body) -> Result<Ack> {
        if let Body::Hello(h) = body {
            return self.hello(sid, h);
        }
        if !body.is_request() {
            return Err(wrong_role(&format!("{} frames are sent by the server only", body.type_name())));
        }
        let (role, agent) = {
            let s = self.session(sid)?;
            let role = s.role.ok_or_else(|| wrong_role("say hello first"))?;
            (role, s.agent_id.clone())
        };
        let permitted = match &body {
            Body::Act(_) | Body::Observe => role.has_agent(),
            Body::SendMessage(_) | Body::QueryResponse(_) => role == SessionRole::Robot,
            Body::Respond(_) => role == SessionRole::Human,
            Body::Monitor => matches!(role, SessionRole::Monitor | SessionRole::Config),
            Body::Config(ConfigOp::Trust { .. }) => role == SessionRole::Human,
            Body::Config(_) => role == SessionRole::Config || !self.world.episode_started,
            _ => false,
        };
        if !permitted {
            return Err(wrong_role(&format!("{} not permitted for a {role:?} session", body.type_name())));
        }
        let agent = agent.unwrap_or_default();
        match body {
            Body::Act(a) => self.enqueue(&agent, role, a.action),
            Body::SendMessage(m) => self.enqueue(
                &agent,
                role,
                Action::SendMessage {
                    text: m.text,
                    estimated_position: m.estimated_position,
                },
            ),
            Body::Respond(r) => self.enqueue(
                &agent,
                role,
                Action::Respond {
                    message_id: r.message_id,
                    verdict: r.verdict,
                },
            ),
            Body::Observe => Ok(Ack {
                tick: Some(self.world.tick),
                observation: Some(self.world.observe(&agent)?),
                ..Ack::default()
            }),
            Body::QueryResponse(q) => Ok(Ack {
                message_status: Some(self.world.query_response(&agent, q.message_id)?),
                ..Ack::default()
            }),
            Body::Monitor => Ok(Ack {
                snapshot: Some(self.world.monitor_snapshot()),
                ..Ack::default()
            }),
            Body::Config(op) => self.config(op),
            _ => unreachable!("permission table covers every request"),
        }
    }

    fn enqueue(&mut self, agent: &str, role: SessionRole, action: Action) -> Result<Ack> {
        if self.world.status.is_over() {
            return Err(Error::new(ErrorCode::TaskOver, "the episode is over"));
        }
        if matches!(action, Action::Respond { .. }) && role != SessionRole::Human {
            return Err(wrong_role("only the human responds to messages"));
        }
        if action.is_rate_limited() {
            self.submitted.insert(agent.to_string());
        }
        self.pending.push((agent.to_string(), action));
        Ok(Ack {
            tick: Some(self.world.tick),
            ..Ack::default()
        })
    }

    fn welcome(&self, sid: u64, agent_id: Option<String>) -> Ack {
        let w = &self.world;
        Ack {
            session_id: Some(sid),
            agent_id,
            scene: Some(SceneSummary {
                scene_id: w.scene.scene_id.clone(),
                name: w.scene.name.clone(),
                width: w.scene.grid.width(),
                height: w.scene.grid.height(),
                cell_size: w.scene.cell_size,
            }),
            tick_duration_ms: Some(w.tick_duration_ms),
            deadline_ticks: Some(w.deadline_ticks),
            task: Some(TaskSummary {
                task_id: w.task_id.clone(),
                nl_description: w.nl_description.clone(),
                goal: w.goal.clone(),
            }),
            tick: Some(w.tick),
            ..Ack::default()
        }
    }

    fn hello(&mut self, sid: u64, h: Hello) -> Result<Ack> {
        if self.session(sid)?.role.is_some() {
            return Err(Error::new(ErrorCode::BadArg, "session already joined"));
        }
        let mut caps = BTreeSet::new();
        for name in &h.capabilities {
            let cap = Capability::parse(name)
                .ok_or_else(|| Error::new(ErrorCode::BadArg, format!("unknown capability {name:?}")))?;
            caps.insert(cap);
        }
        let agent_id = match h.role {
            SessionRole::Robot => {
                if self.world.episode_started {
                    return Err(Error::new(ErrorCode::BadArg, "robots must join before the episode starts"));
                }
                Some(self.world.spawn_agent(Role::Robot, caps.clone())?)
            }
            SessionRole::Human => {
                let taken = self
                    .sessions
                    .values()
                    .any(|s| s.role == Some(SessionRole::Human));
                if taken {
                    return Err(Error::new(ErrorCode::HumanTaken, "a human session is already bound"));
                }
                Some(self.bind_human()?)
            }
            SessionRole::Monitor | SessionRole::Config => None,
        };
        let s = self.sessions.get_mut(&sid).expect("checked above");
        s.role = Some(h.role);
        s.agent_id = agent_id.clone();
        s.capabilities = caps;
        s.connected_tick = self.world.tick;
        if h.role.has_agent() {
            self.join_order.push(sid);
        }
        log::info!("session {sid} joined as {:?} {}", h.role, agent_id.as_deref().unwrap_or(""));
        Ok(self.welcome(sid, agent_id))
    }

    fn bind_human(&mut self) -> Result<String> {
        match self.world.human() {
            Some(h) => Ok(h.agent_id.clone()),
            None if self.world.episode_started => Err(Error::new(ErrorCode::BadArg, "episode has no human agent")),
            None => self.world.spawn_agent(Role::Human, Capability::ALL.into_iter().collect()),
        }
    }

    fn config(&mut self, op: ConfigOp) -> Result<Ack> {
        let mutates = matches!(
            op,
            ConfigOp::SelectScene { .. } | ConfigOp::ApplyTask { .. } | ConfigOp::Reset
        );
        if mutates && self.running {
            return Err(Error::new(ErrorCode::BadArg, "episode is running"));
        }
        match op {
            ConfigOp::SelectScene { scene_id, seed } => {
                let scene = self
                    .scenes
                    .iter()
                    .find(|s| s.scene_id == scene_id)
                    .cloned()
                    .ok_or_else(|| Error::new(ErrorCode::BadScene, format!("unknown scene {scene_id:?}")))?;
                let seed = seed.unwrap_or(self.base.rng_seed);
                self.rebuild(World::new(scene)?.with_seed(seed))?;
            }
            ConfigOp::ApplyTask { task } => {
                let scene = self
                    .scenes
                    .iter()
                    .find(|s| s.scene_id == task.scene_id)
                    .cloned()
                    .ok_or_else(|| Error::new(ErrorCode::BadScene, format!("unknown scene {:?}", task.scene_id)))?;
                let mut w = World::new(scene)?.with_seed(self.base.rng_seed);
                w.apply_task(&task, &self.registry)?;
                self.rebuild(w)?;
            }
            ConfigOp::Reset => {
                let base = self.base.clone();
                self.rebuild(base)?;
            }
            ConfigOp::Start => self.start()?,
            ConfigOp::Status => {}
            ConfigOp::Trust { score } => {
                if !(self.world.episode_started && self.world.status.is_over()) {
                    return Err(Error::new(ErrorCode::BadArg, "trust is rated after the episode"));
                }
                if !(1..=7).contains(&score) {
                    return Err(Error::new(ErrorCode::BadArg, format!("trust {score} is outside 1..=7")));
                }
                if self.trust_given {
                    return Err(Error::new(ErrorCode::BadArg, "trust was already rated"));
                }
                self.trust_given = true;
                let _ = self.trust.send(score);
            }
        }
        Ok(Ack {
            episode: Some(EpisodeInfo {
                started: self.world.episode_started,
                tick: self.world.tick,
                status: self.world.status,
                agents: self.world.agents.keys().cloned().collect(),
            }),
            ..Ack::default()
        })
    }

    /// Replaces the world and respawns the joined agent sessions in join order.
    fn rebuild(&mut self, base: World) -> Result<()> {
        let mut world = base.clone();
        let mut bound = Vec::new();
        for sid in &self.join_order {
            let s = &self.sessions[sid];
            let id = match s.role {
                Some(SessionRole::Robot) => world.spawn_agent(Role::Robot, s.capabilities.clone())?,
                _ => match world.human() {
                    Some(h) => h.agent_id.clone(),
                    None => world.spawn_agent(Role::Human, Capability::ALL.into_iter().collect())?,
                },
            };
            bound.push((*sid, id));
        }
        for (sid, id) in bound {
            self.sessions.get_mut(&sid).expect("joined session").agent_id = Some(id);
        }
        self.base = base;
        self.world = world;
        self.pending.clear();
        self.submitted.clear();
        self.log = None;
        self.trust_given = false;
        self.message_ticks.clear();
        self.dropped.clear();
        Ok(())
    }

    fn start(&mut self) -> Result<()> {
        if self.running || self.world.episode_started {
            return Err(Error::new(ErrorCode::BadArg, "episode already started"));
        }
        let events = self.world.begin_episode();
        self.log = Some(ReplayLog::start(&self.world));
        self.running = true;
        self.next_tick_at = Instant::now() + self.tick_period();
        log::info!(
            "episode started: {} agents, task {}",
            self.world.agents.len(),
            self.world.task_id.as_deref().unwrap_or("-")
        );
        self.broadcast(&events);
        if self.world.status.is_over() {
            self.finish(false);
        }
        Ok(())
    }

    fn tick_period(&self) -> Duration {
        match self.mode {
            TickMode::Realtime { tick_ms } => Duration::from_millis(tick_ms),
            TickMode::Lockstep => Duration::ZERO,
        }
    }

    fn maybe_commit(&mut self) {
        if !self.running {
            return;
        }
        let due = match self.mode {
            TickMode::Realtime { .. } => Instant::now() >= self.next_tick_at,
            TickMode::Lockstep => {
                let mut agents = self.sessions.values().filter_map(|s| s.agent_id.as_ref()).peekable();
                agents.peek().is_some() && agents.all(|a| self.submitted.contains(a))
            }
        };
        if due {
            self.commit();
            if let TickMode::Realtime { .. } = self.mode {
                self.next_tick_at += self.tick_period();
            }
        }
    }

    fn commit(&mut self) {
        // Agents act in id order; each agent's own commands keep their order.
        let mut batch = std::mem::take(&mut self.pending);
        batch.sort_by(|a, b| a.0.cmp(&b.0));
        self.submitted.clear();
        let tick = self.world.tick;
        let events = self.world.step(&batch);
        self.message_ticks.extend(
            events
                .iter()
                .filter(|e| matches!(e, Event::MessageSent { .. }))
                .map(|_| tick),
        );
        if let Some(log) = self.log.as_mut() {
            log.record_tick(&self.world, &batch, &events);
        }
        self.broadcast(&events);
        if self.world.status.is_over() {
            self.finish(false);
        }
    }

    /// Sends every session its view of the tick just committed.
    fn broadcast(&mut self, events: &[Event]) {
        let mut frames: Vec<(u64, Frame)> = Vec::new();
        let mut snapshot = None;
        for (sid, s) in &self.sessions {
            match (s.role, s.agent_id.as_deref()) {
                (Some(role), Some(agent)) => {
                    frames.push((
                        *sid,
                        Frame::push(Body::PushTick(PushTick {
                            tick: self.world.tick,
                            status: self.world.status,
                            events: events_for(agent, events),
                        })),
                    ));
                    if role == SessionRole::Human {
                        for e in events {
                            let push = match e {
                                Event::MessageSent { message_id, .. } => self.world.message(*message_id).map(|m| PushMessage {
                                    message: Some(m.clone()),
                                    map: None,
                                }),
                                Event::MessageResolved { map: Some(map), .. } => Some(PushMessage {
                                    message: None,
                                    map: Some(map.clone()),
                                }),
                                _ => None,
                            };
                            if let Some(p) = push {
                                frames.push((*sid, Frame::push(Body::PushMessage(Box::new(p)))));
                            }
                        }
                    }
                    if let Ok(observation) = self.world.observe(agent) {
                        frames.push((
                            *sid,
                            Frame::push(Body::PushObservation(Box::new(PushObservation { observation }))),
                        ));
                    }
                }
                (Some(SessionRole::Monitor | SessionRole::Config), None) => {
                    let snapshot = snapshot.get_or_insert_with(|| self.world.monitor_snapshot()).clone();
                    frames.push((
                        *sid,
                        Frame::push(Body::PushEvent(Box::new(PushEvent {
                            tick: self.world.tick,
                            events: events.to_vec(),
                            snapshot,
                        }))),
                    ));
                }
                _ => {}
            }
        }
        for (sid, f) in frames {
            self.send_to(sid, &f);
        }
    }

    fn finish(&mut self, aborted: bool) {
        self.running = false;
        let mut log = self.log.take().unwrap_or_else(|| ReplayLog::start(&self.world));
        log.finish(&self.world);
        log::info!(
            "episode over at tick {}: {:?}{}",
            self.world.tick,
            self.world.status,
            if aborted { " (aborted)" } else { "" }
        );
        let _ = self.outcomes.send(EpisodeOutcome {
            world: self.world.clone(),
            log,
            message_ticks: std::mem::take(&mut self.message_ticks),
            dropped: std::mem::take(&mut self.dropped),
            aborted,
        });
    }
}
