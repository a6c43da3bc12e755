//! Task generation from scene priors.

pub mod dataset;
pub mod generate;
pub mod kg;
pub mod template;

pub use dataset::{Dataset, DatasetHeader, DATASET_SCHEMA_VERSION};
pub use generate::{
    applicable_templates, generate_dataset, generate_manipulation, generate_navigation, instantiate_task,
    is_presolved, relation_area, scene_triplets, select_suite, task_seed,
};
pub use kg::{blend_weight, KnowledgeGraph, Triplet, DEFAULT_ALPHA};
pub use template::{display_name, load_templates, navigation_templates, parse_templates, TaskTemplate};
