//! Deterministic grid-world platform for human-robot collaboration studies.
//!
//! The crate holds the authoritative world simulation, the scene-prior task
//! generator, the baseline navigation policies and the episode metrics.

pub mod catalog;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod nav;
pub mod replay;
pub mod scene;
pub mod seed;
pub mod shipped;
pub mod sim;
pub mod task;
pub mod taskforge;
pub mod world;

pub use catalog::{CategoryRegistry, ObjectKind};
pub use error::{Error, ErrorCode, Result};
pub use geom::{Cell, Heading, Rect};
pub use scene::SceneSpec;
pub use task::{GoalSpec, Placement, Relation, TaskKind, TaskSpec};
pub use world::World;

/// Scalar used for metrics throughout the harness; the metric functions
/// themselves are generic.
pub type Real = f64;
