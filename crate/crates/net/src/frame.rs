//! Frame vocabulary and the line codec.
//!
//! Every frame is one JSON object on one line with the fields `id`, `type`
//! and `payload`. Requests carry a client-chosen id that the matching ack or
//! error echoes; server pushes carry id 0.

use gridthor_core::task::GoalSpec;
use gridthor_core::world::{
    Action, CommMessage, EpisodeStatus, Event, MapPayload, MessageStatus, MonitorSnapshot, Observation, Verdict,
};
use gridthor_core::{Cell, Error, ErrorCode, TaskSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Upper bound on one encoded frame, newline excluded.
pub const MAX_FRAME_BYTES: usize = 1 << 20;

/// Id used on server-initiated pushes.
pub const PUSH_ID: i64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionRole {
    Robot,
    Human,
    Monitor,
    Config,
}

impl SessionRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionRole::Robot => "robot",
            SessionRole::Human => "human",
            SessionRole::Monitor => "monitor",
            SessionRole::Config => "config",
        }
    }

    pub fn has_agent(self) -> bool {
        matches!(self, SessionRole::Robot | SessionRole::Human)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub role: SessionRole,
    /// Capability names; checked by the server so unknown names are a
    /// `E_BAD_ARG`, not a parse failure.
    #[serde(default)]
    pub capabilities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Act {
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SendMessage {
    pub text: String,
    pub estimated_position: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respond {
    pub message_id: u64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub message_id: u64,
}

/// Environment configuration requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ConfigOp {
    SelectScene {
        scene_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    ApplyTask {
        task: TaskSpec,
    },
    Reset,
    Start,
    Status,
    /// The human's post-task trust rating (1-7), accepted once the episode
    /// is over.
    Trust {
        score: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub scene_id: String,
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task_id: Option<String>,
    pub nl_description: Option<String>,
    pub goal: Option<GoalSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeInfo {
    pub started: bool,
    pub tick: u64,
    pub status: EpisodeStatus,
    pub agents: Vec<String>,
}

/// Acknowledgement; which fields are present depends on the request.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick_duration_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_ticks: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskSummary>,
    /// For queued commands: the tick whose boundary applies them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Observation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<MonitorSnapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message_status: Option<MessageStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode: Option<EpisodeInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushTick {
    pub tick: u64,
    pub status: EpisodeStatus,
    /// The session's own events plus episode-level ones.
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushObservation {
    pub observation: Observation,
}

/// A new message for the human, or the map shown after a confirmation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushMessage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<CommMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushEvent {
    pub tick: u64,
    pub events: Vec<Event>,
    pub snapshot: MonitorSnapshot,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Hello(Hello),
    Act(Act),
    Observe,
    SendMessage(SendMessage),
    Respond(Respond),
    QueryResponse(QueryResponse),
    Monitor,
    Config(ConfigOp),
    Ack(Box<Ack>),
    Error(ErrorPayload),
    PushTick(PushTick),
    PushObservation(Box<PushObservation>),
    PushMessage(Box<PushMessage>),
    PushEvent(Box<PushEvent>),
}

impl Body {
    pub fn type_name(&self) -> &'static str {
        match self {
            Body::Hello(_) => "hello",
            Body::Act(_) => "act",
            Body::Observe => "observe",
            Body::SendMessage(_) => "send_message",
            Body::Respond(_) => "respond",
            Body::QueryResponse(_) => "query_response",
            Body::Monitor => "monitor",
            Body::Config(_) => "config",
            Body::Ack(_) => "ack",
            Body::Error(_) => "error",
            Body::PushTick(_) => "push_tick",
            Body::PushObservation(_) => "push_observation",
            Body::PushMessage(_) => "push_message",
            Body::PushEvent(_) => "push_event",
        }
    }

    /// Whether clients may send this frame type.
    pub fn is_request(&self) -> bool {
        !matches!(
            self,
            Body::Ack(_)
                | Body::Error(_)
                | Body::PushTick(_)
                | Body::PushObservation(_)
                | Body::PushMessage(_)
                | Body::PushEvent(_)
        )
    }

    /// The payload as JSON text, with struct fields in declaration order.
    fn payload_json(&self) -> String {
        let v = match self {
            Body::Hello(p) => serde_json::to_string(p),
            Body::Act(p) => serde_json::to_string(p),
            Body::Observe | Body::Monitor => Ok("{}".to_string()),
            Body::SendMessage(p) => serde_json::to_string(p),
            Body::Respond(p) => serde_json::to_string(p),
            Body::QueryResponse(p) => serde_json::to_string(p),
            Body::Config(p) => serde_json::to_string(p),
            Body::Ack(p) => serde_json::to_string(p),
            Body::Error(p) => serde_json::to_string(p),
            Body::PushTick(p) => serde_json::to_string(p),
            Body::PushObservation(p) => serde_json::to_string(p),
            Body::PushMessage(p) => serde_json::to_string(p),
            Body::PushEvent(p) => serde_json::to_string(p),
        };
        v.expect("frame payloads always serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub id: i64,
    pub body: Body,
}

/// A line that could not be decoded; `id` is set when the line was a JSON
/// object with an integer id, so the error can still be correlated.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameError {
    pub id: Option<i64>,
    pub error: Error,
}

#[derive(Deserialize)]
struct RawIn {
    id: i64,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    payload: Value,
}

impl Frame {
    pub fn new(id: i64, body: Body) -> Self {
        Frame { id, body }
    }

    pub fn ack(id: i64, ack: Ack) -> Self {
        Frame::new(id, Body::Ack(Box::new(ack)))
    }

    pub fn error(id: i64, err: &Error) -> Self {
        Frame::new(
            id,
            Body::Error(ErrorPayload {
                code: err.code,
                message: err.message.clone(),
            }),
        )
    }

    pub fn push(body: Body) -> Self {
        Frame::new(PUSH_ID, body)
    }

    /// One line of JSON, without the trailing newline.
    pub fn encode(&self) -> String {
        format!(
            r#"{{"id":{},"type":"{}","payload":{}}}"#,
            self.id,
            self.body.type_name(),
            self.body.payload_json()
        )
    }

    pub fn decode(line: &str) -> Result<Frame, FrameError> {
        let line = line.trim_end_matches(['\n', '\r']);
        if line.len() > MAX_FRAME_BYTES {
            return Err(FrameError {
                id: None,
                error: parse_error("frame exceeds 1 MiB"),
            });
        }
        let value: Value = serde_json::from_str(line).map_err(|e| FrameError {
            id: None,
            error: parse_error(format!("malformed frame: {e}")),
        })?;
        let id = value.get("id").and_then(Value::as_i64);
        let raw: RawIn = serde_json::from_value(value).map_err(|e| FrameError {
            id,
            error: parse_error(format!("malformed frame: {e}")),
        })?;
        let fail = |e: serde_json::Error| FrameError {
            id: Some(raw.id),
            error: parse_error(format!("bad {} payload: {e}", raw.kind)),
        };
        let payload = if raw.payload.is_null() {
            Value::Object(Default::default())
        } else {
            raw.payload
        };
        let body = match raw.kind.as_str() {
            "hello" => Body::Hello(typed(payload).map_err(fail)?),
            "act" => Body::Act(typed(payload).map_err(fail)?),
            "observe" => Body::Observe,
            "send_message" => Body::SendMessage(typed(payload).map_err(fail)?),
            "respond" => Body::Respond(typed(payload).map_err(fail)?),
            "query_response" => Body::QueryResponse(typed(payload).map_err(fail)?),
            "monitor" => Body::Monitor,
            "config" => Body::Config(typed(payload).map_err(fail)?),
            "ack" => Body::Ack(typed(payload).map_err(fail)?),
            "error" => Body::Error(typed(payload).map_err(fail)?),
            "push_tick" => Body::PushTick(typed(payload).map_err(fail)?),
            "push_observation" => Body::PushObservation(typed(payload).map_err(fail)?),
            "push_message" => Body::PushMessage(typed(payload).map_err(fail)?),
            "push_event" => Body::PushEvent(typed(payload).map_err(fail)?),
            other => {
                return Err(FrameError {
                    id: Some(raw.id),
                    error: parse_error(format!("unknown frame type {other:?}")),
                })
            }
        };
        Ok(Frame { id: raw.id, body })
    }

    /// The error carried by an error frame, as a core error.
    pub fn as_error(&self) -> Option<Error> {
        match &self.body {
            Body::Error(p) => Some(Error::new(p.code, p.message.clone())),
            _ => None,
        }
    }
}

fn typed<T: DeserializeOwned>(v: Value) -> Result<T, serde_json::Error> {
    serde_json::from_value(v)
}

fn parse_error(msg: impl Into<String>) -> Error {
    Error::new(ErrorCode::Parse, msg)
}
