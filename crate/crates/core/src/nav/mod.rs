//! Navigation machinery and scripted agents.

pub mod frontier;
pub mod navigator;
pub mod occupancy;
pub mod path;
pub mod policy;

pub use frontier::{detect_frontiers, is_frontier, FrontierCluster};
pub use navigator::Navigator;
pub use occupancy::{Occ, OccupancyGrid};
pub use path::{move_offsets, path_len, plan_moves, plan_path, swept_cells, Bounds, DistanceMap};
pub use policy::{
    report_text, FrontierRobot, HumanProxy, MessageNotice, OracleRobot, Policy, PolicyInput, PolicyKind, ProxyParams,
    tick_commands,
};
