//! Episode definitions shared by the world and the task generator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Navigation,
    Manipulation,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Navigation => "navigation",
            TaskKind::Manipulation => "manipulation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoalSpec {
    pub task_kind: TaskKind,
    pub target_category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receptacle_category: Option<String>,
}

impl GoalSpec {
    pub fn navigation(target: impl Into<String>) -> Self {
        GoalSpec {
            task_kind: TaskKind::Navigation,
            target_category: target.into(),
            receptacle_category: None,
        }
    }

    pub fn manipulation(target: impl Into<String>, receptacle: impl Into<String>) -> Self {
        GoalSpec {
            task_kind: TaskKind::Manipulation,
            target_category: target.into(),
            receptacle_category: Some(receptacle.into()),
        }
    }
}

/// Spatial relation between a target object and a reference receptacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Inside,
    OnTop,
    Adjacent,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Inside, Relation::OnTop, Relation::Adjacent];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Inside => "inside",
            Relation::OnTop => "on_top",
            Relation::Adjacent => "adjacent",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        Relation::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One realized object placement: `object_id` of `category` placed at `cell`
/// in `relation` to the receptacle instance `reference_id`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub object_id: String,
    pub category: String,
    pub relation: Relation,
    pub reference_category: String,
    pub reference_id: String,
    pub cell: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub scene_id: String,
    pub template_id: String,
    pub goal: GoalSpec,
    pub initial_relations: Vec<Placement>,
    pub distractors: Vec<Placement>,
    pub nl_description: String,
    pub seed: u64,
}

impl TaskSpec {
    pub fn placements(&self) -> impl Iterator<Item = &Placement> {
        self.initial_relations.iter().chain(self.distractors.iter())
    }

    /// Placement of the goal's target object.
    pub fn target(&self) -> Option<&Placement> {
        self.initial_relations
            .iter()
            .find(|p| p.category == self.goal.target_category)
    }
}
