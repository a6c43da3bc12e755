//! Replay logs: one JSON record per line.
//!
//! The first record is a `header` holding the complete initial world; each
//! following `tick` record holds the ordered actions applied in that tick,
//! the resulting events and the post-tick state hash. An `end` record closes
//! the log. Field order is fixed, so equal runs produce byte-identical logs.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, ErrorCode, Result};
use crate::world::{Action, EpisodeStatus, Event, Pose, World};

pub const REPLAY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedAction {
    pub agent_id: String,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ReplayRecord {
    Header {
        schema_version: u32,
        initial_hash: String,
        world: Box<World>,
    },
    Tick {
        tick: u64,
        actions: Vec<LoggedAction>,
        events: Vec<Event>,
        hash: String,
    },
    End {
        tick: u64,
        status: EpisodeStatus,
        final_hash: String,
    },
}

/// Accumulates a log alongside a live world.
#[derive(Debug, Clone, Default)]
pub struct ReplayLog {
    lines: Vec<String>,
}

impl ReplayLog {
    pub fn start(world: &World) -> Self {
        let mut log = ReplayLog::default();
        log.push(&ReplayRecord::Header {
            schema_version: REPLAY_SCHEMA_VERSION,
            initial_hash: world.state_hash(),
            world: Box::new(world.clone()),
        });
        log
    }

    fn push(&mut self, rec: &ReplayRecord) {
        self.lines.push(serde_json::to_string(rec).expect("record serializes"));
    }

    /// Records a resolved tick; `world` must be the state right after `step`.
    pub fn record_tick(&mut self, world: &World, actions: &[(String, Action)], events: &[Event]) {
        self.push(&ReplayRecord::Tick {
            tick: world.tick,
            actions: actions
                .iter()
                .map(|(a, act)| LoggedAction {
                    agent_id: a.clone(),
                    action: act.clone(),
                })
                .collect(),
            events: events.to_vec(),
            hash: world.state_hash(),
        });
    }

    pub fn finish(&mut self, world: &World) {
        self.push(&ReplayRecord::End {
            tick: world.tick,
            status: world.status,
            final_hash: world.state_hash(),
        });
    }

    pub fn to_text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)
            .map_err(|e| Error::new(ErrorCode::Io, format!("{}: {e}", path.display())))?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }
}

/// A verified replay: every reconstructed state plus trajectory overlay data.
#[derive(Debug, Clone)]
pub struct Replay {
    pub states: Vec<World>,
    pub final_status: EpisodeStatus,
    pub final_hash: String,
}

impl Replay {
    pub fn final_world(&self) -> &World {
        self.states.last().expect("replay holds at least the initial state")
    }

    /// One polyline per agent, from the final state's trajectory record.
    pub fn trajectories(&self) -> std::collections::BTreeMap<String, Vec<Pose>> {
        self.final_world().trajectories.clone()
    }
}

fn parse_err(index: usize, msg: impl std::fmt::Display) -> Error {
    Error::new(ErrorCode::Parse, format!("record {index}: {msg}"))
}

/// Re-simulates a log, checking every recorded hash. Parse failures name the
/// record index (0 is the header, `k` is the k-th tick).
pub fn replay_from_reader(reader: impl BufRead) -> Result<Replay> {
    let mut lines = reader.lines().enumerate();
    let Some((_, first)) = lines.next() else {
        bail!(Parse, "record 0: empty replay log");
    };
    let first = first?;
    let header: ReplayRecord = serde_json::from_str(&first).map_err(|e| parse_err(0, e))?;
    let ReplayRecord::Header {
        schema_version,
        initial_hash,
        world,
    } = header
    else {
        bail!(Parse, "record 0: expected header");
    };
    if schema_version != REPLAY_SCHEMA_VERSION {
        bail!(Parse, "record 0: unsupported schema_version {schema_version}");
    }
    let mut world = *world;
    if world.state_hash() != initial_hash {
        bail!(HashMismatch, "initial state hash mismatch");
    }
    let mut states = vec![world.clone()];
    for (index, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ReplayRecord = serde_json::from_str(&line).map_err(|e| parse_err(index, e))?;
        match rec {
            ReplayRecord::Header { .. } => return Err(parse_err(index, "unexpected second header")),
            ReplayRecord::Tick {
                tick,
                actions,
                events,
                hash,
            } => {
                let actions: Vec<(String, Action)> =
                    actions.into_iter().map(|a| (a.agent_id, a.action)).collect();
                let got = world.step(&actions);
                if world.tick != tick || world.state_hash() != hash || got != events {
                    bail!(HashMismatch, "state diverges at tick {tick} (record {index})");
                }
                states.push(world.clone());
            }
            ReplayRecord::End {
                tick,
                status,
                final_hash,
            } => {
                if world.tick != tick || world.status != status || world.state_hash() != final_hash {
                    bail!(HashMismatch, "final state does not match end record");
                }
                return Ok(Replay {
                    states,
                    final_status: status,
                    final_hash,
                });
            }
        }
    }
    bail!(Parse, "record {}: log ends without an end record", states.len())
}

pub fn replay_file(path: &Path) -> Result<Replay> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::new(ErrorCode::Io, format!("{}: {e}", path.display())))?;
    replay_from_reader(std::io::BufReader::new(f))
}
