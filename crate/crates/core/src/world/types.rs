use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::ObjectKind;
use crate::error::ErrorCode;
use crate::geom::{Cell, Heading, Rect};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    OnFloor,
    Inside(String),
    HeldBy(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub object_id: String,
    pub category: String,
    pub kind: ObjectKind,
    /// For receptacles this is the centre of `region`; for held objects the last
    /// resting cell (the holder's cell is authoritative while held).
    pub position: Cell,
    pub containment: Containment,
    pub openable: bool,
    pub is_open: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Rect>,
}

impl ObjectInstance {
    pub fn is_receptacle(&self) -> bool {
        self.kind == ObjectKind::Receptacle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Human,
    Robot,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Human => "human",
            Role::Robot => "robot",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Navigate,
    Manipulate,
    Communicate,
}

impl Capability {
    pub const ALL: [Capability; 3] = [Capability::Navigate, Capability::Manipulate, Capability::Communicate];

    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Navigate => "navigate",
            Capability::Manipulate => "manipulate",
            Capability::Communicate => "communicate",
        }
    }

    pub fn parse(s: &str) -> Option<Capability> {
        match s {
            "navigate" => Some(Capability::Navigate),
            "manipulate" => Some(Capability::Manipulate),
            "communicate" => Some(Capability::Communicate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub position: Cell,
    pub heading: Heading,
}

/// Sensor parameters in meters/degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensors {
    pub detector_range: f64,
    pub view_range: f64,
    pub fov: f64,
}

impl Default for Sensors {
    fn default() -> Self {
        Sensors {
            detector_range: 1.5,
            view_range: 3.0,
            fov: 90.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub agent_id: String,
    pub role: Role,
    pub position: Cell,
    pub heading: Heading,
    pub held: Option<String>,
    pub capabilities: BTreeSet<Capability>,
    pub detector_range: f64,
    pub view_range: f64,
    pub fov: f64,
}

impl AgentState {
    pub fn pose(&self) -> Pose {
        Pose {
            position: self.position,
            heading: self.heading,
        }
    }

    pub fn can(&self, cap: Capability) -> bool {
        self.capabilities.contains(&cap)
    }

    pub fn sensors(&self) -> Sensors {
        Sensors {
            detector_range: self.detector_range,
            view_range: self.view_range,
            fov: self.fov,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Confirm,
    Decline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageStatus {
    Pending,
    Confirmed,
    Declined,
    Superseded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommMessage {
    pub message_id: u64,
    pub sender: String,
    pub text: String,
    pub snapshot: Observation,
    pub estimated_position: Cell,
    pub sent_tick: u64,
    pub status: MessageStatus,
    pub resolved_tick: Option<u64>,
}

/// Relative-position map shown to the human after confirming a message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPayload {
    pub message_id: u64,
    pub human: Pose,
    pub robot: Pose,
    pub estimated_position: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Running,
    Success,
    Timeout,
}

impl EpisodeStatus {
    pub fn is_over(self) -> bool {
        self != EpisodeStatus::Running
    }
}

/// One agent command. `Respond` is a reply to a message and does not consume
/// the agent's per-tick action slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Noop,
    Move { delta: [f64; 2] },
    Rotate { dtheta: i32 },
    Pick { object_id: String },
    Place { receptacle_id: String },
    Open { receptacle_id: String },
    Close { receptacle_id: String },
    Teleport { position: Cell, heading: Heading },
    SendMessage { text: String, estimated_position: Cell },
    Respond { message_id: u64, verdict: Verdict },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Noop => "noop",
            Action::Move { .. } => "move",
            Action::Rotate { .. } => "rotate",
            Action::Pick { .. } => "pick",
            Action::Place { .. } => "place",
            Action::Open { .. } => "open",
            Action::Close { .. } => "close",
            Action::Teleport { .. } => "teleport",
            Action::SendMessage { .. } => "send_message",
            Action::Respond { .. } => "respond",
        }
    }

    /// Whether this command occupies the agent's single action slot for the tick.
    pub fn is_rate_limited(&self) -> bool {
        !matches!(self, Action::Respond { .. })
    }

    /// Move by whole cells, expressed in meters for the given cell size.
    pub fn step_cells(dx: i32, dy: i32, cell_size: f64) -> Action {
        Action::Move {
            delta: [dx as f64 * cell_size, dy as f64 * cell_size],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Moved {
        agent_id: String,
        from: Cell,
        to: Cell,
    },
    Rotated {
        agent_id: String,
        heading: Heading,
    },
    Teleported {
        agent_id: String,
        position: Cell,
        heading: Heading,
    },
    Picked {
        agent_id: String,
        object_id: String,
    },
    Placed {
        agent_id: String,
        object_id: String,
        receptacle_id: String,
    },
    Opened {
        agent_id: String,
        receptacle_id: String,
    },
    Closed {
        agent_id: String,
        receptacle_id: String,
    },
    MessageSent {
        message_id: u64,
        sender: String,
        estimated_position: Cell,
    },
    MessageResolved {
        message_id: u64,
        sender: String,
        status: MessageStatus,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        map: Option<MapPayload>,
    },
    GoalReached {
        tick: u64,
    },
    Timeout {
        tick: u64,
    },
    Rejected {
        agent_id: String,
        action: String,
        code: ErrorCode,
        message: String,
    },
}

impl Event {
    /// The agent this event concerns, if any.
    pub fn agent(&self) -> Option<&str> {
        match self {
            Event::Moved { agent_id, .. }
            | Event::Rotated { agent_id, .. }
            | Event::Teleported { agent_id, .. }
            | Event::Picked { agent_id, .. }
            | Event::Placed { agent_id, .. }
            | Event::Opened { agent_id, .. }
            | Event::Closed { agent_id, .. }
            | Event::Rejected { agent_id, .. } => Some(agent_id),
            Event::MessageSent { sender, .. } | Event::MessageResolved { sender, .. } => Some(sender),
            Event::GoalReached { .. } | Event::Timeout { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchCell {
    Unknown,
    Free,
    Wall,
}

/// Square window of the map around an agent. Rows are strings of
/// `?` (unknown), `.` (free) and `#` (wall); `origin` is the top-left cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalPatch {
    pub origin: Cell,
    pub size: usize,
    pub rows: Vec<String>,
}

impl LocalPatch {
    pub fn get(&self, c: Cell) -> PatchCell {
        let dx = c.x - self.origin.x;
        let dy = c.y - self.origin.y;
        if dx < 0 || dy < 0 || dx as usize >= self.size || dy as usize >= self.size {
            return PatchCell::Unknown;
        }
        match self.rows[dy as usize].as_bytes()[dx as usize] {
            b'.' => PatchCell::Free,
            b'#' => PatchCell::Wall,
            _ => PatchCell::Unknown,
        }
    }

    /// Every known cell with its value, row-major.
    pub fn known_cells(&self) -> impl Iterator<Item = (Cell, PatchCell)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(dy, row)| {
            row.bytes().enumerate().filter_map(move |(dx, b)| {
                let c = self.origin.offset(dx as i32, dy as i32);
                match b {
                    b'.' => Some((c, PatchCell::Free)),
                    b'#' => Some((c, PatchCell::Wall)),
                    _ => None,
                }
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeenObject {
    pub object_id: String,
    pub category: String,
    pub kind: ObjectKind,
    pub position: Cell,
    pub containment: Containment,
    pub is_open: bool,
    pub openable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Rect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeenAgent {
    pub agent_id: String,
    pub role: Role,
    pub position: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub tick: u64,
    pub agent_id: String,
    #[serde(rename = "self")]
    pub pose: Pose,
    pub held: Option<String>,
    pub local_patch: LocalPatch,
    pub visible_objects: Vec<SeenObject>,
    pub visible_agents: Vec<SeenAgent>,
    pub detections: Vec<SeenObject>,
}

impl Observation {
    pub fn detects(&self, object_id: &str) -> bool {
        self.detections.iter().any(|d| d.object_id == object_id)
    }
}
