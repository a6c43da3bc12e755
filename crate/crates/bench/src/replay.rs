//! Replaying recorded trials and exporting trajectory overlays.

use std::collections::BTreeMap;
use std::path::Path;

use gridthor_core::replay::Replay;
pub use gridthor_core::replay::{replay_file, replay_from_reader};
use gridthor_core::{Error, ErrorCode, Result};
use serde::Serialize;

/// Top-down overlay: one polyline of cells per agent, plus enough of the
/// scene to draw it on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryOverlay {
    pub scene_id: String,
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub final_tick: u64,
    pub final_hash: String,
    pub polylines: BTreeMap<String, Vec<[i32; 2]>>,
}

impl TrajectoryOverlay {
    pub fn from_replay(replay: &Replay) -> Self {
        let w = replay.final_world();
        TrajectoryOverlay {
            scene_id: w.scene.scene_id.clone(),
            width: w.scene.width(),
            height: w.scene.height(),
            cell_size: w.scene.cell_size,
            final_tick: w.tick,
            final_hash: replay.final_hash.clone(),
            polylines: replay
                .trajectories()
                .into_iter()
                .map(|(agent, poses)| (agent, poses.iter().map(|p| [p.position.x, p.position.y]).collect()))
                .collect(),
        }
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::new(ErrorCode::Io, e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::new(ErrorCode::Io, format!("{}: {e}", path.display())))
    }
}
