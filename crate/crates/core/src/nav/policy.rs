//! Scripted agents: the frontier and oracle robots and the human proxy.
//!
//! Policies see exactly what a protocol client sees: their own observation,
//! the events concerning them from the last tick, and (for the human) newly
//! pushed messages. The oracle is additionally handed the ground-truth map.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::Cell;
use crate::nav::navigator::Navigator;
use crate::geom::line_of_sight;
use crate::nav::path::plan_moves;
use crate::seed::rng_from;
use crate::task::{GoalSpec, TaskKind};
use crate::world::{Action, CommMessage, Containment, Event, Observation, SeenObject, Sensors, Verdict, World, INTERACTION_RANGE_M, MAX_STEP_M};
use crate::ObjectKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Frontier,
    Oracle,
    HumanProxy,
}

/// A message pushed to the human session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageNotice {
    pub message_id: u64,
    pub sender: String,
    pub text: String,
    pub estimated_position: Cell,
    pub sent_tick: u64,
}

impl From<&CommMessage> for MessageNotice {
    fn from(m: &CommMessage) -> Self {
        MessageNotice {
            message_id: m.message_id,
            sender: m.sender.clone(),
            text: m.text.clone(),
            estimated_position: m.estimated_position,
            sent_tick: m.sent_tick,
        }
    }
}

/// What a policy receives each tick.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInput<'a> {
    pub observation: &'a Observation,
    pub events: &'a [Event],
    pub messages: &'a [MessageNotice],
}

impl<'a> PolicyInput<'a> {
    pub fn new(observation: &'a Observation) -> Self {
        PolicyInput {
            observation,
            events: &[],
            messages: &[],
        }
    }
}

/// A policy returns the commands for one tick: at most one rate-limited
/// action, optionally preceded by message responses.
pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;
    fn decide(&mut self, input: &PolicyInput<'_>) -> Vec<Action>;
}

/// The commands one tick's decision is submitted as: message responses and
/// other free commands first, the rate-limited action last, and a `Noop` when
/// the policy chose no rate-limited action. A networked session closes its
/// tick on the rate-limited action, so the local loop uses the same order.
pub fn tick_commands(actions: Vec<Action>) -> Vec<Action> {
    let (mut out, limited): (Vec<Action>, Vec<Action>) = actions.into_iter().partition(|a| !a.is_rate_limited());
    if limited.is_empty() {
        out.push(Action::Noop);
    }
    out.extend(limited);
    out
}

/// Text of a robot report.
pub fn report_text(category: &str, at: Cell) -> String {
    format!("Found {category} at ({},{})", at.x, at.y)
}

/// Unheld detections of `category` not yet in `reported`, in id order.
fn fresh_target<'a>(obs: &'a Observation, category: &str, reported: &BTreeSet<String>) -> Option<&'a SeenObject> {
    obs.detections.iter().find(|d| {
        d.category == category
            && !matches!(d.containment, Containment::HeldBy(_))
            && !reported.contains(&d.object_id)
    })
}

/// Robot that maps the scene by frontier exploration and reports the target
/// category once on detection, then holds position.
#[derive(Debug, Clone)]
pub struct FrontierRobot {
    pub nav: Navigator,
    pub target_category: String,
    pub reported: BTreeSet<String>,
}

impl FrontierRobot {
    pub fn new(width: usize, height: usize, cell_size: f64, target_category: impl Into<String>) -> Self {
        FrontierRobot {
            nav: Navigator::new(width, height, cell_size),
            target_category: target_category.into(),
            reported: BTreeSet::new(),
        }
    }
}

impl Policy for FrontierRobot {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Frontier
    }

    fn decide(&mut self, input: &PolicyInput<'_>) -> Vec<Action> {
        let obs = input.observation;
        self.nav.observe(obs, input.events);
        if let Some(t) = fresh_target(obs, &self.target_category, &self.reported) {
            self.reported.insert(t.object_id.clone());
            self.nav.clear_path();
            return vec![Action::SendMessage {
                text: report_text(&t.category, t.position),
                estimated_position: t.position,
            }];
        }
        if !self.reported.is_empty() {
            return vec![Action::Noop];
        }
        let me = obs.pose.position;
        let action = self.nav.explore(me).unwrap_or(Action::Rotate { dtheta: 90 });
        vec![action]
    }
}

/// Robot with ground-truth object positions: takes a fewest-moves route to
/// the nearest cell from which a target-category object is detectable,
/// reports it once it is detected and then holds position.
#[derive(Debug, Clone)]
pub struct OracleRobot {
    pub nav: Navigator,
    pub target_category: String,
    pub reported: BTreeSet<String>,
    floor: Vec<bool>,
    /// Cells within detector range and line of sight of some target.
    detectable: Vec<bool>,
    reach: i32,
}

impl OracleRobot {
    pub fn new(truth: &World, target_category: impl Into<String>) -> Self {
        let target_category = target_category.into();
        let grid = &truth.scene.grid;
        let cells: Vec<Cell> = (0..grid.height() as i32)
            .flat_map(|y| (0..grid.width() as i32).map(move |x| Cell::new(x, y)))
            .collect();
        let floor: Vec<bool> = cells.iter().map(|c| grid.is_floor(*c)).collect();
        let targets: Vec<Cell> = truth
            .objects
            .values()
            .filter(|o| o.category == target_category)
            .map(|o| o.position)
            .collect();
        let det = truth.scene.meters_to_cells(Sensors::default().detector_range) as i64;
        let detectable = cells
            .iter()
            .map(|c| {
                grid.is_floor(*c)
                    && targets
                        .iter()
                        .any(|t| c.dist2(*t) <= det * det && line_of_sight(*c, *t, |w| grid.is_wall(w)))
            })
            .collect();
        OracleRobot {
            nav: Navigator::new(grid.width(), grid.height(), truth.cell_size()),
            target_category,
            reported: BTreeSet::new(),
            floor,
            detectable,
            reach: truth.scene.meters_to_cells(MAX_STEP_M),
        }
    }

    fn lookup(&self, table: &[bool], c: Cell) -> bool {
        let b = self.nav.occupancy.bounds();
        b.contains(c) && table[c.y as usize * b.width + c.x as usize]
    }
}

impl Policy for OracleRobot {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Oracle
    }

    fn decide(&mut self, input: &PolicyInput<'_>) -> Vec<Action> {
        let obs = input.observation;
        self.nav.observe(obs, input.events);
        if let Some(t) = fresh_target(obs, &self.target_category, &self.reported) {
            self.reported.insert(t.object_id.clone());
            self.nav.clear_path();
            return vec![Action::SendMessage {
                text: report_text(&t.category, t.position),
                estimated_position: t.position,
            }];
        }
        if !self.reported.is_empty() {
            return vec![Action::Noop];
        }
        let me = obs.pose.position;
        if let Some(a) = self.nav.follow_route(me) {
            return vec![a];
        }
        let others: Vec<Cell> = obs.visible_agents.iter().map(|a| a.position).collect();
        let route = plan_moves(
            self.nav.occupancy.bounds(),
            me,
            self.reach,
            |c| self.lookup(&self.detectable, c),
            |c| self.lookup(&self.floor, c) && !self.nav.avoided(c) && !others.contains(&c),
        );
        if let Some(route) = route {
            self.nav.set_route(route);
            if let Some(a) = self.nav.follow_route(me) {
                return vec![a];
            }
        }
        vec![Action::Noop]
    }
}

/// Parameters of the scripted human.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyParams {
    pub confirm_probability: f64,
    pub reaction_delay_ticks: u64,
    /// Cells per move (1 = walking pace, 2 = the platform's maximum).
    pub stride: u8,
}

impl Default for ProxyParams {
    fn default() -> Self {
        ProxyParams {
            confirm_probability: 1.0,
            reaction_delay_ticks: 4,
            stride: 1,
        }
    }
}

/// Scripted stand-in for a human participant. It explores by frontiers,
/// answers robot messages after a reaction delay, follows confirmed
/// guidance, and carries out the goal once it has seen what it needs.
#[derive(Debug, Clone)]
pub struct HumanProxy {
    pub nav: Navigator,
    pub goal: GoalSpec,
    pub params: ProxyParams,
    rng: ChaCha8Rng,
    /// Latest sighting of every object, by id.
    memory: BTreeMap<String, SeenObject>,
    /// Pending messages awaiting a verdict: (notice, tick first seen).
    inbox: Vec<(MessageNotice, u64)>,
    guidance: Option<Cell>,
    pub confirmed: Vec<u64>,
    pub declined: Vec<u64>,
}

impl HumanProxy {
    pub fn new(width: usize, height: usize, cell_size: f64, goal: GoalSpec, params: ProxyParams, seed: u64) -> Self {
        // the proxy searches: it counts an area as covered only once it has
        // been within detection range, not merely in view
        let mut nav = Navigator::new(width, height, cell_size);
        nav.stride = params.stride;
        nav.sense_radius = Some((Sensors::default().detector_range / cell_size + 1e-9).floor() as i32);
        HumanProxy {
            nav,
            goal,
            params,
            rng: rng_from(seed),
            memory: BTreeMap::new(),
            inbox: Vec::new(),
            guidance: None,
            confirmed: Vec::new(),
            declined: Vec::new(),
        }
    }

    pub fn guidance(&self) -> Option<Cell> {
        self.guidance
    }

    fn reach(&self) -> i32 {
        (INTERACTION_RANGE_M / self.nav.cell_size + 1e-9).floor() as i32
    }

    fn remember(&mut self, obs: &Observation) {
        for o in obs.visible_objects.iter().chain(&obs.detections) {
            self.memory.insert(o.object_id.clone(), o.clone());
        }
    }

    fn responses(&mut self, input: &PolicyInput<'_>) -> Vec<Action> {
        let now = input.observation.tick;
        for n in input.messages {
            // a newer message from the same sender supersedes the queued one
            self.inbox.retain(|(m, _)| m.sender != n.sender);
            self.inbox.push((n.clone(), now));
        }
        let delay = self.params.reaction_delay_ticks;
        let (due, waiting): (Vec<_>, Vec<_>) = std::mem::take(&mut self.inbox)
            .into_iter()
            .partition(|(_, seen)| now >= seen + delay);
        self.inbox = waiting;
        let p = self.params.confirm_probability.clamp(0.0, 1.0);
        due.into_iter()
            .map(|(n, _)| {
                let verdict = if self.rng.gen_bool(p) {
                    self.guidance = Some(n.estimated_position);
                    self.confirmed.push(n.message_id);
                    Verdict::Confirm
                } else {
                    self.declined.push(n.message_id);
                    Verdict::Decline
                };
                Action::Respond {
                    message_id: n.message_id,
                    verdict,
                }
            })
            .collect()
    }

    fn known_target(&self, me: &str) -> Option<&SeenObject> {
        self.memory.values().find(|o| {
            o.category == self.goal.target_category
                && match &o.containment {
                    Containment::HeldBy(h) => h == me,
                    _ => true,
                }
        })
    }

    fn goal_receptacles(&self) -> Vec<&SeenObject> {
        let Some(cat) = &self.goal.receptacle_category else {
            return Vec::new();
        };
        self.memory
            .values()
            .filter(|o| o.kind == ObjectKind::Receptacle && &o.category == cat)
            .collect()
    }

    fn act(&mut self, obs: &Observation) -> Action {
        let me = obs.pose.position;
        let reach = self.reach();

        if let Some(held) = &obs.held {
            let holding_target = self.memory.get(held).is_some_and(|o| o.category == self.goal.target_category);
            if holding_target && self.goal.task_kind == TaskKind::Manipulation {
                let recs: Vec<SeenObject> = self.goal_receptacles().into_iter().cloned().collect();
                if let Some(r) = recs.iter().find(|r| reach_of(r, me) <= reach) {
                    return if r.openable && !r.is_open {
                        Action::Open {
                            receptacle_id: r.object_id.clone(),
                        }
                    } else {
                        Action::Place {
                            receptacle_id: r.object_id.clone(),
                        }
                    };
                }
                let cells: Vec<Cell> = recs.iter().flat_map(region_cells).collect();
                if let Some(a) = self.nav.go_to_nearest(me, &cells, true) {
                    return a;
                }
            }
            return self.explore(me);
        }

        if let Some(t) = self.known_target(&obs.agent_id).cloned() {
            if self.goal.task_kind == TaskKind::Manipulation && t.position.chebyshev(me) <= reach {
                if let Containment::Inside(rid) = &t.containment {
                    if let Some(r) = self.memory.get(rid) {
                        if r.openable && !r.is_open {
                            return Action::Open {
                                receptacle_id: rid.clone(),
                            };
                        }
                    }
                }
                return Action::Pick { object_id: t.object_id };
            }
            if let Some(a) = self.nav.go_to_nearest(me, &[t.position], true) {
                return a;
            }
        }

        if let Some(g) = self.guidance {
            if g.chebyshev(me) <= 1 {
                self.guidance = None;
            } else if let Some(a) = self.nav.go_to_nearest(me, &[g], true) {
                return a;
            } else {
                self.guidance = None;
            }
        }
        self.explore(me)
    }

    fn explore(&mut self, me: Cell) -> Action {
        self.nav.explore(me).unwrap_or(Action::Rotate { dtheta: 90 })
    }
}

fn region_cells(o: &SeenObject) -> Vec<Cell> {
    match o.region {
        Some(r) => r.cells().collect(),
        None => vec![o.position],
    }
}

fn reach_of(o: &SeenObject, me: Cell) -> i32 {
    match o.region {
        Some(r) => r.chebyshev_to(me),
        None => o.position.chebyshev(me),
    }
}

impl Policy for HumanProxy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::HumanProxy
    }

    fn decide(&mut self, input: &PolicyInput<'_>) -> Vec<Action> {
        let obs = input.observation;
        self.nav.observe(obs, input.events);
        self.remember(obs);
        let mut out = self.responses(input);
        out.push(self.act(obs));
        out
    }
}
