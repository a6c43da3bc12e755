use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable error codes shared by the world, the task generator, the wire
/// protocol and the harness. The serialized form is the `E_*` string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCode {
    #[serde(rename = "E_BAD_SCENE")]
    BadScene,
    #[serde(rename = "E_BAD_TASK")]
    BadTask,
    #[serde(rename = "E_BAD_ARG")]
    BadArg,
    #[serde(rename = "E_RATE_LIMIT")]
    RateLimit,
    #[serde(rename = "E_OUT_OF_RANGE")]
    OutOfRange,
    #[serde(rename = "E_COLLISION")]
    Collision,
    #[serde(rename = "E_ALREADY_HELD")]
    AlreadyHeld,
    #[serde(rename = "E_NOT_PICKABLE")]
    NotPickable,
    #[serde(rename = "E_CLOSED")]
    Closed,
    #[serde(rename = "E_NO_CAPABILITY")]
    NoCapability,
    #[serde(rename = "E_NOT_HELD")]
    NotHeld,
    #[serde(rename = "E_NOT_OPENABLE")]
    NotOpenable,
    #[serde(rename = "E_FORBIDDEN")]
    Forbidden,
    #[serde(rename = "E_NO_AGENT")]
    NoAgent,
    #[serde(rename = "E_NO_OBJECT")]
    NoObject,
    #[serde(rename = "E_NO_PENDING_MESSAGE")]
    NoPendingMessage,
    #[serde(rename = "E_ALREADY_RESOLVED")]
    AlreadyResolved,
    #[serde(rename = "E_NO_SUCH_MESSAGE")]
    NoSuchMessage,
    #[serde(rename = "E_TASK_OVER")]
    TaskOver,
    #[serde(rename = "E_PARSE")]
    Parse,
    #[serde(rename = "E_IO")]
    Io,
    #[serde(rename = "E_DUP_TRIPLET")]
    DupTriplet,
    #[serde(rename = "E_UNKNOWN_CATEGORY")]
    UnknownCategory,
    #[serde(rename = "E_NO_SPACE")]
    NoSpace,
    #[serde(rename = "E_UNREACHABLE")]
    Unreachable,
    #[serde(rename = "E_HASH_MISMATCH")]
    HashMismatch,
    #[serde(rename = "E_WRONG_ROLE")]
    WrongRole,
    #[serde(rename = "E_HUMAN_TAKEN")]
    HumanTaken,
    #[serde(rename = "E_LAGGED")]
    Lagged,
    #[serde(rename = "E_CLIENT_CRASH")]
    ClientCrash,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        use ErrorCode::*;
        match self {
            BadScene => "E_BAD_SCENE",
            BadTask => "E_BAD_TASK",
            BadArg => "E_BAD_ARG",
            RateLimit => "E_RATE_LIMIT",
            OutOfRange => "E_OUT_OF_RANGE",
            Collision => "E_COLLISION",
            AlreadyHeld => "E_ALREADY_HELD",
            NotPickable => "E_NOT_PICKABLE",
            Closed => "E_CLOSED",
            NoCapability => "E_NO_CAPABILITY",
            NotHeld => "E_NOT_HELD",
            NotOpenable => "E_NOT_OPENABLE",
            Forbidden => "E_FORBIDDEN",
            NoAgent => "E_NO_AGENT",
            NoObject => "E_NO_OBJECT",
            NoPendingMessage => "E_NO_PENDING_MESSAGE",
            AlreadyResolved => "E_ALREADY_RESOLVED",
            NoSuchMessage => "E_NO_SUCH_MESSAGE",
            TaskOver => "E_TASK_OVER",
            Parse => "E_PARSE",
            Io => "E_IO",
            DupTriplet => "E_DUP_TRIPLET",
            UnknownCategory => "E_UNKNOWN_CATEGORY",
            NoSpace => "E_NO_SPACE",
            Unreachable => "E_UNREACHABLE",
            HashMismatch => "E_HASH_MISMATCH",
            WrongRole => "E_WRONG_ROLE",
            HumanTaken => "E_HUMAN_TAKEN",
            Lagged => "E_LAGGED",
            ClientCrash => "E_CLIENT_CRASH",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An error code plus a human-readable detail naming the offending element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct Error {
    pub code: ErrorCode,
    pub message: String,
}

impl Error {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Error {
            code,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::new(ErrorCode::Io, e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! bail {
    ($code:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::new($crate::error::ErrorCode::$code, format!($($arg)*)))
    };
}
pub(crate) use bail;
