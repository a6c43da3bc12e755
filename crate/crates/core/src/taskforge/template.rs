//! Task templates and their natural-language patterns.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{CategoryRegistry, ObjectKind};
use crate::error::{bail, Error, ErrorCode, Result};
use crate::task::{GoalSpec, TaskKind};

/// Placeholder tokens in `nl_pattern`. `a/an` immediately before a
/// placeholder becomes the matching indefinite article.
const TARGET: &str = "{target}";
const RECEPTACLE: &str = "{receptacle}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTemplate {
    pub template_id: String,
    pub task_kind: TaskKind,
    pub target_category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receptacle_category: Option<String>,
    pub nl_pattern: String,
}

fn article(word: &str) -> &'static str {
    match word.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

/// Category names read with spaces: `dining_table` -> `dining table`.
pub fn display_name(category: &str) -> String {
    category.replace('_', " ")
}

impl TaskTemplate {
    pub fn manipulation(id: &str, target: &str, receptacle: &str, preposition: &str) -> Self {
        TaskTemplate {
            template_id: id.to_string(),
            task_kind: TaskKind::Manipulation,
            target_category: target.to_string(),
            receptacle_category: Some(receptacle.to_string()),
            nl_pattern: format!("Picking a/an {TARGET} and place it {preposition} a/an {RECEPTACLE}"),
        }
    }

    pub fn navigation(id: &str, target: &str) -> Self {
        TaskTemplate {
            template_id: id.to_string(),
            task_kind: TaskKind::Navigation,
            target_category: target.to_string(),
            receptacle_category: None,
            nl_pattern: format!("Find the {TARGET}"),
        }
    }

    pub fn goal(&self) -> GoalSpec {
        match &self.receptacle_category {
            Some(r) if self.task_kind == TaskKind::Manipulation => GoalSpec::manipulation(&self.target_category, r),
            _ => GoalSpec::navigation(&self.target_category),
        }
    }

    /// The pattern with categories and articles filled in.
    pub fn realize(&self) -> String {
        let mut out = self.nl_pattern.clone();
        let mut fill = |token: &str, category: &str| {
            let name = display_name(category);
            out = out
                .replace(&format!("a/an {token}"), &format!("{} {name}", article(&name)))
                .replace(token, &name);
        };
        fill(TARGET, &self.target_category);
        if let Some(r) = &self.receptacle_category {
            fill(RECEPTACLE, r);
        }
        out
    }

    /// The navigation template derived by dropping the place sub-goal.
    pub fn navigation_variant(&self) -> TaskTemplate {
        TaskTemplate::navigation(&format!("find_{}", self.target_category), &self.target_category)
    }

    fn validate(&self, registry: &CategoryRegistry) -> Result<()> {
        if registry.kind(&self.target_category) != Some(ObjectKind::Target) {
            bail!(UnknownCategory, "template {}: unknown target {:?}", self.template_id, self.target_category);
        }
        match (self.task_kind, &self.receptacle_category) {
            (TaskKind::Manipulation, Some(r)) if registry.kind(r) == Some(ObjectKind::Receptacle) => {}
            (TaskKind::Manipulation, Some(r)) => {
                bail!(UnknownCategory, "template {}: unknown receptacle {r:?}", self.template_id)
            }
            (TaskKind::Manipulation, None) => bail!(Parse, "template {}: needs a receptacle", self.template_id),
            (TaskKind::Navigation, None) => {}
            (TaskKind::Navigation, Some(_)) => {
                bail!(Parse, "template {}: navigation templates take no receptacle", self.template_id)
            }
        }
        if !self.nl_pattern.contains(TARGET) {
            bail!(Parse, "template {}: pattern lacks {TARGET}", self.template_id);
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    template_id: String,
    task_kind: String,
    target: String,
    receptacle: String,
    nl_pattern: String,
}

const HEADER: [&str; 5] = ["template_id", "task_kind", "target", "receptacle", "nl_pattern"];

/// Parses a template table (header `template_id,task_kind,target,receptacle,nl_pattern`;
/// `receptacle` empty for navigation templates).
pub fn parse_templates(text: &str, registry: &CategoryRegistry) -> Result<Vec<TaskTemplate>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::new(ErrorCode::Parse, format!("template header: {e}")))?;
    if header.iter().ne(HEADER) {
        bail!(Parse, "template header must be `{}`", HEADER.join(","));
    }
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::new(ErrorCode::Parse, format!("template line {line}: {e}")))?;
        let task_kind = match row.task_kind.as_str() {
            "manipulation" => TaskKind::Manipulation,
            "navigation" => TaskKind::Navigation,
            other => bail!(Parse, "template line {line}: unknown task kind {other:?}"),
        };
        let t = TaskTemplate {
            template_id: row.template_id,
            task_kind,
            target_category: row.target,
            receptacle_category: (!row.receptacle.is_empty()).then_some(row.receptacle),
            nl_pattern: row.nl_pattern,
        };
        t.validate(registry)?;
        if !ids.insert(t.template_id.clone()) {
            bail!(Parse, "template line {line}: duplicate id {:?}", t.template_id);
        }
        out.push(t);
    }
    Ok(out)
}

pub fn load_templates(path: &Path, registry: &CategoryRegistry) -> Result<Vec<TaskTemplate>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::new(ErrorCode::Io, format!("{}: {e}", path.display())))?;
    parse_templates(&text, registry)
}

/// Navigation templates: one per distinct target of the manipulation
/// templates, then any explicit navigation templates for other targets.
pub fn navigation_templates(templates: &[TaskTemplate]) -> Vec<TaskTemplate> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for t in templates.iter().filter(|t| t.task_kind == TaskKind::Manipulation) {
        if seen.insert(t.target_category.clone()) {
            out.push(t.navigation_variant());
        }
    }
    for t in templates.iter().filter(|t| t.task_kind == TaskKind::Navigation) {
        if seen.insert(t.target_category.clone()) {
            out.push(t.clone());
        }
    }
    out
}
