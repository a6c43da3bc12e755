//! Authoritative grid-world state machine.
//!
//! A [`World`] is mutated only through [`World::step`] (plus setup-time calls
//! such as [`World::apply_task`], [`World::spawn_agent`] and
//! [`World::teleport`]). Given the same scene, task, seed and ordered action
//! log, the serialized state is byte-identical across runs.

mod actions;
mod messages;
mod observe;
mod types;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use self::types::*;
use crate::catalog::{CategoryRegistry, ObjectKind};
use crate::error::{bail, Error, ErrorCode, Result};
use crate::geom::{Cell, Heading};
use crate::scene::SceneSpec;
use crate::seed::{derive_seed, rng_from};
use crate::task::{GoalSpec, Relation, TaskKind, TaskSpec};

pub const DEFAULT_TICK_MS: u64 = 250;
pub const DEFAULT_DEADLINE_TICKS: u64 = 360;
/// Longest single move in meters.
pub const MAX_STEP_M: f64 = 0.5;
/// Reach for pick/place/open in meters (Chebyshev distance).
pub const INTERACTION_RANGE_M: f64 = 1.0;

pub const HUMAN_ID: &str = "human";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub scene: SceneSpec,
    pub objects: BTreeMap<String, ObjectInstance>,
    pub agents: BTreeMap<String, AgentState>,
    pub tick: u64,
    pub tick_duration_ms: u64,
    pub goal: Option<GoalSpec>,
    pub deadline_ticks: u64,
    pub messages: Vec<CommMessage>,
    pub status: EpisodeStatus,
    pub rng_seed: u64,
    pub task_id: Option<String>,
    pub task_seed: u64,
    pub nl_description: Option<String>,
    pub episode_started: bool,
    pub trajectories: BTreeMap<String, Vec<Pose>>,
}

/// Top-down view of everything, for monitors and replay rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSnapshot {
    pub tick: u64,
    pub status: EpisodeStatus,
    pub scene_id: String,
    pub grid: Vec<String>,
    pub objects: Vec<ObjectInstance>,
    pub agents: Vec<AgentState>,
    pub trajectories: BTreeMap<String, Vec<Pose>>,
    pub messages: Vec<CommMessage>,
}

pub fn load_scene(spec: SceneSpec) -> Result<World> {
    World::new(spec)
}

impl World {
    /// Validates `spec` and creates an empty world at tick 0 with one
    /// receptacle object per anchor (`{category}_{n}`, numbered per category).
    pub fn new(spec: SceneSpec) -> Result<World> {
        spec.validate()?;
        let mut objects = BTreeMap::new();
        for (object_id, anchor) in spec.receptacle_instances() {
            objects.insert(
                object_id.clone(),
                ObjectInstance {
                    object_id,
                    category: anchor.category.clone(),
                    kind: ObjectKind::Receptacle,
                    position: anchor.region.center(),
                    containment: Containment::OnFloor,
                    openable: anchor.openable,
                    is_open: false,
                    region: Some(anchor.region),
                },
            );
        }
        Ok(World {
            scene: spec,
            objects,
            agents: BTreeMap::new(),
            tick: 0,
            tick_duration_ms: DEFAULT_TICK_MS,
            goal: None,
            deadline_ticks: DEFAULT_DEADLINE_TICKS,
            messages: Vec::new(),
            status: EpisodeStatus::Running,
            rng_seed: 0,
            task_id: None,
            task_seed: 0,
            nl_description: None,
            episode_started: false,
            trajectories: BTreeMap::new(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn cell_size(&self) -> f64 {
        self.scene.cell_size
    }

    pub fn interaction_cells(&self) -> i32 {
        self.scene.meters_to_cells(INTERACTION_RANGE_M)
    }

    pub fn agent(&self, agent_id: &str) -> Result<&AgentState> {
        self.agents
            .get(agent_id)
            .ok_or_else(|| Error::new(ErrorCode::NoAgent, format!("no agent {agent_id:?}")))
    }

    pub fn object(&self, object_id: &str) -> Result<&ObjectInstance> {
        self.objects
            .get(object_id)
            .ok_or_else(|| Error::new(ErrorCode::NoObject, format!("no object {object_id:?}")))
    }

    pub fn human(&self) -> Option<&AgentState> {
        self.agents.values().find(|a| a.role == Role::Human)
    }

    pub fn agent_at(&self, c: Cell) -> Option<&AgentState> {
        self.agents.values().find(|a| a.position == c)
    }

    pub fn is_free(&self, c: Cell, ignoring: Option<&str>) -> bool {
        self.scene.grid.is_floor(c)
            && self
                .agents
                .values()
                .all(|a| a.position != c || Some(a.agent_id.as_str()) == ignoring)
    }

    /// Places target and distractor objects, spawns the human and sets the goal.
    /// Any previous task objects, agents and messages are discarded.
    pub fn apply_task(&mut self, task: &TaskSpec, registry: &CategoryRegistry) -> Result<()> {
        if task.scene_id != self.scene.scene_id {
            bail!(
                BadTask,
                "task {} is for scene {:?}, world has {:?}",
                task.task_id,
                task.scene_id,
                self.scene.scene_id
            );
        }
        self.check_goal_spec(&task.goal, registry)?;

        let mut placed = BTreeMap::new();
        for p in task.placements() {
            match registry.kind(&p.category) {
                Some(ObjectKind::Target) => {}
                Some(ObjectKind::Receptacle) => {
                    bail!(BadTask, "{} is a receptacle category and cannot be placed", p.category)
                }
                None => bail!(BadTask, "unknown category {:?}", p.category),
            }
            let Some(reference) = self.objects.get(&p.reference_id).filter(|o| o.is_receptacle()) else {
                bail!(BadTask, "placement {} references unknown receptacle {:?}", p.object_id, p.reference_id);
            };
            if reference.category != p.reference_category {
                bail!(
                    BadTask,
                    "placement {}: {} is a {}, not a {}",
                    p.object_id,
                    p.reference_id,
                    reference.category,
                    p.reference_category
                );
            }
            let region = reference.region.expect("receptacles have regions");
            let ok_cell = self.scene.grid.is_floor(p.cell)
                && match p.relation {
                    Relation::Inside | Relation::OnTop => region.contains(p.cell),
                    Relation::Adjacent => region.ring().any(|c| c == p.cell),
                };
            if !ok_cell {
                bail!(
                    BadTask,
                    "placement {} at {} does not satisfy {} {}",
                    p.object_id,
                    p.cell,
                    p.relation,
                    p.reference_id
                );
            }
            let containment = match p.relation {
                Relation::Inside | Relation::OnTop => Containment::Inside(p.reference_id.clone()),
                Relation::Adjacent => Containment::OnFloor,
            };
            let instance = ObjectInstance {
                object_id: p.object_id.clone(),
                category: p.category.clone(),
                kind: ObjectKind::Target,
                position: p.cell,
                containment,
                openable: false,
                is_open: false,
                region: None,
            };
            if placed.insert(p.object_id.clone(), instance).is_some() || self.objects.get(&p.object_id).is_some_and(|o| o.is_receptacle()) {
                bail!(BadTask, "duplicate object id {:?}", p.object_id);
            }
        }

        self.objects.retain(|_, o| o.is_receptacle());
        for o in self.objects.values_mut() {
            o.is_open = false;
        }
        self.objects.extend(placed);
        self.agents.clear();
        self.trajectories.clear();
        self.messages.clear();
        self.tick = 0;
        self.status = EpisodeStatus::Running;
        self.episode_started = false;
        self.goal = Some(task.goal.clone());
        self.task_id = Some(task.task_id.clone());
        self.task_seed = task.seed;
        self.nl_description = Some(task.nl_description.clone());
        self.spawn_agent(Role::Human, Capability::ALL.into_iter().collect())?;
        Ok(())
    }

    fn check_goal_spec(&self, goal: &GoalSpec, registry: &CategoryRegistry) -> Result<()> {
        if registry.kind(&goal.target_category) != Some(ObjectKind::Target) {
            bail!(BadTask, "goal target {:?} is not a known target category", goal.target_category);
        }
        match (&goal.task_kind, &goal.receptacle_category) {
            (TaskKind::Manipulation, Some(r)) => {
                if !self.scene.has_receptacle(r) {
                    bail!(BadTask, "goal receptacle {r:?} is not present in scene {}", self.scene.scene_id);
                }
            }
            (TaskKind::Manipulation, None) => bail!(BadTask, "manipulation goal needs a receptacle"),
            (TaskKind::Navigation, Some(_)) => bail!(BadTask, "navigation goal must not name a receptacle"),
            (TaskKind::Navigation, None) => {}
        }
        Ok(())
    }

    /// Sets the goal directly, for hand-built worlds.
    pub fn set_goal(&mut self, goal: GoalSpec, registry: &CategoryRegistry) -> Result<()> {
        self.check_goal_spec(&goal, registry)?;
        self.goal = Some(goal);
        Ok(())
    }

    /// Adds a target object directly, for hand-built worlds.
    pub fn insert_object(&mut self, object: ObjectInstance) -> Result<()> {
        if self.objects.contains_key(&object.object_id) {
            bail!(BadArg, "object {} already exists", object.object_id);
        }
        if !self.scene.grid.in_bounds(object.position) {
            bail!(BadArg, "object {} is outside the grid", object.object_id);
        }
        self.objects.insert(object.object_id.clone(), object);
        Ok(())
    }

    /// Spawns an agent in its role's spawn region (seeded), returning its id:
    /// `human` for the human, `robot_{n}` for robots.
    pub fn spawn_agent(&mut self, role: Role, capabilities: BTreeSet<Capability>) -> Result<String> {
        let agent_id = match role {
            Role::Human => {
                if self.agents.contains_key(HUMAN_ID) {
                    bail!(BadArg, "human agent already spawned");
                }
                HUMAN_ID.to_string()
            }
            Role::Robot => {
                let n = self.agents.values().filter(|a| a.role == Role::Robot).count() + 1;
                format!("robot_{n}")
            }
        };
        let mut rng = rng_from(derive_seed(
            self.rng_seed,
            &["spawn", &self.task_seed.to_string(), &agent_id],
        ));
        let region_name = role.to_string();
        let candidates: Vec<Cell> = match self.scene.spawn(&region_name) {
            Some(s) => s.region.cells().filter(|c| self.is_free(*c, None)).collect(),
            None => Vec::new(),
        };
        let position = if candidates.is_empty() {
            self.scene
                .grid
                .floor_cells()
                .find(|c| self.is_free(*c, None))
                .ok_or_else(|| Error::new(ErrorCode::NoSpace, "no free floor cell to spawn on"))?
        } else {
            candidates[rng.gen_range(0..candidates.len())]
        };
        let heading = Heading::new(45 * rng.gen_range(0..8)).unwrap();
        self.place_agent(agent_id.clone(), role, capabilities, position, heading);
        Ok(agent_id)
    }

    /// Adds an agent at an explicit pose, for tests and hand-built worlds.
    pub fn add_agent_at(
        &mut self,
        agent_id: &str,
        role: Role,
        capabilities: BTreeSet<Capability>,
        position: Cell,
        heading: Heading,
    ) -> Result<()> {
        if self.agents.contains_key(agent_id) {
            bail!(BadArg, "agent {agent_id} already exists");
        }
        if !self.is_free(position, None) {
            bail!(Collision, "cell {position} is not free");
        }
        self.place_agent(agent_id.to_string(), role, capabilities, position, heading);
        Ok(())
    }

    fn place_agent(&mut self, agent_id: String, role: Role, capabilities: BTreeSet<Capability>, position: Cell, heading: Heading) {
        let sensors = Sensors::default();
        let agent = AgentState {
            agent_id: agent_id.clone(),
            role,
            position,
            heading,
            held: None,
            capabilities,
            detector_range: sensors.detector_range,
            view_range: sensors.view_range,
            fov: sensors.fov,
        };
        self.trajectories.insert(agent_id.clone(), vec![agent.pose()]);
        self.agents.insert(agent_id, agent);
    }

    /// Marks the episode as scored; teleport is refused from here on. The goal
    /// is evaluated immediately so a pre-solved task succeeds at tick 0.
    pub fn begin_episode(&mut self) -> Vec<Event> {
        let mut events = Vec::new();
        if self.episode_started {
            return events;
        }
        self.episode_started = true;
        for a in self.agents.values() {
            self.trajectories.insert(a.agent_id.clone(), vec![a.pose()]);
        }
        self.evaluate_status(&mut events);
        events
    }

    /// Resolves one tick: actions in the given order, then the clock, goal and
    /// deadline. Failing actions leave the world untouched and are reported as
    /// `rejected` events.
    pub fn step(&mut self, actions: &[(String, Action)]) -> Vec<Event> {
        let mut events = self.begin_episode();
        if self.status.is_over() {
            for (agent_id, action) in actions {
                events.push(Event::Rejected {
                    agent_id: agent_id.clone(),
                    action: action.name().to_string(),
                    code: ErrorCode::TaskOver,
                    message: "episode is over".into(),
                });
            }
            return events;
        }
        let mut acted: BTreeSet<&str> = BTreeSet::new();
        for (agent_id, action) in actions {
            if action.is_rate_limited() && !acted.insert(agent_id.as_str()) {
                events.push(Event::Rejected {
                    agent_id: agent_id.clone(),
                    action: action.name().to_string(),
                    code: ErrorCode::RateLimit,
                    message: "one action per agent per tick".into(),
                });
                continue;
            }
            match self.apply_action(agent_id, action) {
                Ok(mut evs) => events.append(&mut evs),
                Err(e) => events.push(Event::Rejected {
                    agent_id: agent_id.clone(),
                    action: action.name().to_string(),
                    code: e.code,
                    message: e.message,
                }),
            }
        }
        self.tick += 1;
        self.evaluate_status(&mut events);
        events
    }

    fn evaluate_status(&mut self, events: &mut Vec<Event>) {
        if self.status != EpisodeStatus::Running {
            return;
        }
        if self.check_goal() {
            self.status = EpisodeStatus::Success;
            events.push(Event::GoalReached { tick: self.tick });
        } else if self.tick >= self.deadline_ticks {
            self.status = EpisodeStatus::Timeout;
            events.push(Event::Timeout { tick: self.tick });
        }
    }

    /// Applies a single action immediately (no clock advance).
    pub fn apply_action(&mut self, agent_id: &str, action: &Action) -> Result<Vec<Event>> {
        match action {
            Action::Noop => {
                self.agent(agent_id)?;
                Ok(Vec::new())
            }
            Action::Move { delta } => self.resolve_move(agent_id, *delta),
            Action::Rotate { dtheta } => self.resolve_rotate(agent_id, *dtheta),
            Action::Pick { object_id } => self.resolve_pick(agent_id, object_id),
            Action::Place { receptacle_id } => self.resolve_place(agent_id, receptacle_id),
            Action::Open { receptacle_id } => self.resolve_open(agent_id, receptacle_id, true),
            Action::Close { receptacle_id } => self.resolve_open(agent_id, receptacle_id, false),
            Action::Teleport { position, heading } => self.teleport(agent_id, *position, *heading),
            Action::SendMessage {
                text,
                estimated_position,
            } => self.send_message(agent_id, text, *estimated_position).map(|(_, e)| e),
            Action::Respond { message_id, verdict } => self.respond_message(agent_id, *message_id, *verdict),
        }
    }

    /// Goal predicate. Navigation: a target-category object is among the
    /// human's detections. Manipulation: a target-category object is inside a
    /// receptacle of the goal category, whoever put it there.
    pub fn check_goal(&self) -> bool {
        let Some(goal) = &self.goal else {
            return false;
        };
        match goal.task_kind {
            TaskKind::Navigation => {
                let Some(human) = self.human() else {
                    return false;
                };
                self.detections_of(human)
                    .iter()
                    .any(|o| o.category == goal.target_category)
            }
            TaskKind::Manipulation => {
                let Some(rc) = &goal.receptacle_category else {
                    return false;
                };
                self.objects.values().any(|o| {
                    o.category == goal.target_category
                        && matches!(&o.containment, Containment::Inside(r)
                            if self.objects.get(r).is_some_and(|rec| &rec.category == rc))
                })
            }
        }
    }

    pub fn monitor_snapshot(&self) -> MonitorSnapshot {
        MonitorSnapshot {
            tick: self.tick,
            status: self.status,
            scene_id: self.scene.scene_id.clone(),
            grid: self.scene.grid.rows(),
            objects: self.objects.values().cloned().collect(),
            agents: self.agents.values().cloned().collect(),
            trajectories: self.trajectories.clone(),
            messages: self.messages.clone(),
        }
    }

    /// Canonical serialization: struct fields in declaration order, maps sorted.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("world serializes")
    }

    pub fn from_json(text: &str) -> Result<World> {
        serde_json::from_str(text).map_err(|e| Error::new(ErrorCode::Parse, e.to_string()))
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn state_hash(&self) -> String {
        let digest = Sha256::digest(self.to_canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.tick * self.tick_duration_ms
    }
}
