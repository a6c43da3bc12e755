//! Per-trial results.

use std::fmt;
use std::str::FromStr;

use gridthor_core::metrics::compute_twsr;
use gridthor_core::{Error, ErrorCode, Real, Result};
use serde::{Deserialize, Serialize};

/// Which robot, if any, shares the scene with the human.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    NoRobot,
    Frontier,
    Oracle,
    Custom,
}

impl Setting {
    /// The three settings of the standard comparison, in table order.
    pub const STANDARD: [Setting; 3] = [Setting::NoRobot, Setting::Frontier, Setting::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::NoRobot => "no_robot",
            Setting::Frontier => "frontier",
            Setting::Oracle => "oracle",
            Setting::Custom => "custom",
        }
    }

    /// Row label in the results table.
    pub fn label(self) -> &'static str {
        match self {
            Setting::NoRobot => "No Robot",
            Setting::Frontier => "Frontier",
            Setting::Oracle => "Oracle",
            Setting::Custom => "Custom",
        }
    }

    pub fn has_robot(self) -> bool {
        self != Setting::NoRobot
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no_robot" => Ok(Setting::NoRobot),
            "frontier" => Ok(Setting::Frontier),
            "oracle" => Ok(Setting::Oracle),
            "custom" => Ok(Setting::Custom),
            other => Err(Error::new(
                ErrorCode::BadArg,
                format!("unknown setting {other:?} (expected no_robot, frontier, oracle or custom)"),
            )),
        }
    }
}

/// Whether the human confirmed at least one robot message; not applicable
/// without a robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adoption {
    Adopted,
    NotAdopted,
    NotApplicable,
}

impl Adoption {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Adoption::Adopted => Some(true),
            Adoption::NotAdopted => Some(false),
            Adoption::NotApplicable => None,
        }
    }
}

impl Serialize for Adoption {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            Adoption::Adopted => "true",
            Adoption::NotAdopted => "false",
            Adoption::NotApplicable => "n/a",
        })
    }
}

impl<'de> Deserialize<'de> for Adoption {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match String::deserialize(d)?.as_str() {
            "true" => Ok(Adoption::Adopted),
            "false" => Ok(Adoption::NotAdopted),
            "n/a" => Ok(Adoption::NotApplicable),
            other => Err(serde::de::Error::custom(format!("bad adoption value {other:?}"))),
        }
    }
}

/// One trial. Field order is the column order of the rows file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub task_id: String,
    pub scene_id: String,
    pub setting: Setting,
    /// Proxy (or live participant) index within the setting.
    pub participant: usize,
    /// Position of this task in the participant's sequence, from 0.
    pub trial_index: usize,
    pub success: bool,
    pub elapsed_ticks: u64,
    pub tick_duration_ms: u64,
    pub optimal_ticks: u64,
    pub twsr: Real,
    pub adopted: Adoption,
    pub messages_sent: u64,
    pub trust: Option<u8>,
    pub seed: u64,
    pub replay_path: Option<String>,
    /// A client crashed or disconnected; excluded from aggregates.
    pub broken: bool,
}

impl EpisodeResult {
    pub fn elapsed_seconds(&self) -> Real {
        self.elapsed_ticks as Real * self.tick_duration_ms as Real / 1000.0
    }

    /// Success as the 0/1 scalar the metrics use.
    pub fn s(&self) -> Real {
        if self.success {
            1.0
        } else {
            0.0
        }
    }
}

/// Time-weighted success for one trial from its integer tick counts.
pub fn twsr_for(success: bool, elapsed_ticks: u64, optimal_ticks: u64) -> Result<Real> {
    let s = if success { 1.0 } else { 0.0 };
    compute_twsr(s, elapsed_ticks as Real, optimal_ticks as Real)
}

/// Stand-in trust rating for scripted participants: `round(7 * s_t)`
/// clamped to 1..=7. It only exercises the series pipeline and carries no
/// meaning about real trust.
pub fn synthetic_trust(twsr: Real) -> u8 {
    (7.0 * twsr).round().clamp(1.0, 7.0) as u8
}
