//! The default benchmark data, compiled into the binary: 10 scenes, the
//! category registry, the 65-triplet knowledge graph and 19 manipulation
//! templates.

use crate::catalog::CategoryRegistry;
use crate::scene::SceneSpec;
use crate::taskforge::{parse_templates, KnowledgeGraph, TaskTemplate, DEFAULT_ALPHA};

pub const CATEGORIES_CSV: &str = include_str!("../data/categories.csv");
pub const KG_CSV: &str = include_str!("../data/kg.csv");
pub const TEMPLATES_CSV: &str = include_str!("../data/templates.csv");

/// Default base seed of the shipped benchmark.
pub const DEFAULT_BASE_SEED: u64 = 1;

pub const SCENE_FILES: [(&str, &str); 10] = [
    ("house_01", include_str!("../data/scenes/house_01.scene")),
    ("house_02", include_str!("../data/scenes/house_02.scene")),
    ("house_03", include_str!("../data/scenes/house_03.scene")),
    ("house_04", include_str!("../data/scenes/house_04.scene")),
    ("house_05", include_str!("../data/scenes/house_05.scene")),
    ("house_06", include_str!("../data/scenes/house_06.scene")),
    ("house_07", include_str!("../data/scenes/house_07.scene")),
    ("house_08", include_str!("../data/scenes/house_08.scene")),
    ("house_09", include_str!("../data/scenes/house_09.scene")),
    ("house_10", include_str!("../data/scenes/house_10.scene")),
];

pub fn registry() -> CategoryRegistry {
    CategoryRegistry::parse(CATEGORIES_CSV).expect("shipped category table parses")
}

pub fn knowledge_graph() -> KnowledgeGraph {
    KnowledgeGraph::parse(KG_CSV, registry(), DEFAULT_ALPHA).expect("shipped KG parses")
}

pub fn templates() -> Vec<TaskTemplate> {
    parse_templates(TEMPLATES_CSV, &registry()).expect("shipped templates parse")
}

/// All shipped scenes, sorted by id.
pub fn scenes() -> Vec<SceneSpec> {
    SCENE_FILES
        .iter()
        .map(|(_, text)| SceneSpec::parse(text).expect("shipped scene parses"))
        .collect()
}

pub fn scene(scene_id: &str) -> Option<SceneSpec> {
    SCENE_FILES
        .iter()
        .find(|(id, _)| *id == scene_id)
        .map(|(_, text)| SceneSpec::parse(text).expect("shipped scene parses"))
}
