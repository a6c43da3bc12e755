//! The three-step instantiation pipeline: pick an applicable template,
//! sample the scene graph from the priors, realize placements as cells.

use std::collections::BTreeSet;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::catalog::ObjectKind;
use crate::error::{bail, Result};
use crate::geom::Cell;
use crate::scene::SceneSpec;
use crate::seed::{derive_seed, rng_from};
use crate::task::{Placement, Relation, TaskKind, TaskSpec};
use crate::taskforge::kg::{KnowledgeGraph, Triplet};
use crate::taskforge::template::{navigation_templates, TaskTemplate};

/// Triplets of `target` whose reference category is anchored in `scene`,
/// as `(kg index, triplet)` in KG order.
pub fn scene_triplets<'a>(kg: &'a KnowledgeGraph, scene: &SceneSpec, target: &'a str) -> Vec<(usize, &'a Triplet)> {
    kg.triplets_for(target)
        .filter(|(_, t)| scene.has_receptacle(&t.reference))
        .collect()
}

/// Templates usable in `scene`: the goal receptacle (if any) is anchored in
/// the scene and the target has at least one triplet whose reference is.
pub fn applicable_templates<'a>(
    scene: &SceneSpec,
    templates: &'a [TaskTemplate],
    kg: &KnowledgeGraph,
) -> Vec<&'a TaskTemplate> {
    templates
        .iter()
        .filter(|t| t.receptacle_category.as_deref().is_none_or(|r| scene.has_receptacle(r)))
        .filter(|t| !scene_triplets(kg, scene, &t.target_category).is_empty())
        .collect()
}

/// Cells realizing `relation` to the receptacle `anchor_index`, minus `taken`:
/// the region for inside/on_top, the floor ring outside every receptacle
/// region for adjacent.
pub fn relation_area(scene: &SceneSpec, anchor_index: usize, relation: Relation, taken: &BTreeSet<Cell>) -> Vec<Cell> {
    let region = scene.receptacle_anchors[anchor_index].region;
    let cells: Vec<Cell> = match relation {
        Relation::Inside | Relation::OnTop => region.cells().collect(),
        Relation::Adjacent => region
            .ring()
            .filter(|c| !scene.receptacle_anchors.iter().any(|a| a.region.contains(*c)))
            .collect(),
    };
    cells
        .into_iter()
        .filter(|c| scene.grid.is_floor(*c) && !taken.contains(c))
        .collect()
}

fn place(
    scene: &SceneSpec,
    rng: &mut ChaCha8Rng,
    object_id: String,
    triplet: &Triplet,
    taken: &mut BTreeSet<Cell>,
) -> Result<Placement> {
    let instances: Vec<(usize, String)> = scene
        .receptacle_instances()
        .into_iter()
        .enumerate()
        .filter(|(_, (_, a))| a.category == triplet.reference)
        .map(|(i, (id, _))| (i, id))
        .collect();
    if instances.is_empty() {
        bail!(BadTask, "scene {} has no {}", scene.scene_id, triplet.reference);
    }
    let (anchor, reference_id) = instances[rng.gen_range(0..instances.len())].clone();
    let area = relation_area(scene, anchor, triplet.relation, taken);
    if area.is_empty() {
        bail!(
            NoSpace,
            "no free cell {} {reference_id} in scene {}",
            triplet.relation,
            scene.scene_id
        );
    }
    let cell = area[rng.gen_range(0..area.len())];
    taken.insert(cell);
    Ok(Placement {
        object_id,
        category: triplet.target.clone(),
        relation: triplet.relation,
        reference_category: triplet.reference.clone(),
        reference_id,
        cell,
    })
}

/// Realizes one task: the target at a seeded cell of the triplet's area and
/// one distractor per other target category, its relation drawn in
/// proportion to the triplet weights. Distractors that find no free cell
/// are left out.
pub fn instantiate_task(
    template: &TaskTemplate,
    scene: &SceneSpec,
    kg: &KnowledgeGraph,
    triplet_index: usize,
    seed: u64,
) -> Result<TaskSpec> {
    let triplet = &kg.triplets[triplet_index];
    if triplet.target != template.target_category {
        bail!(
            BadArg,
            "triplet {triplet_index} is for {}, template {} targets {}",
            triplet.target,
            template.template_id,
            template.target_category
        );
    }
    let mut rng = rng_from(seed);
    let mut taken = BTreeSet::new();
    let target = place(scene, &mut rng, format!("{}_1", triplet.target), triplet, &mut taken)?;

    let mut distractors = Vec::new();
    let others: Vec<&str> = kg
        .registry
        .iter()
        .filter(|(c, k)| *k == ObjectKind::Target && *c != template.target_category)
        .map(|(c, _)| c)
        .collect();
    for category in others {
        let options = scene_triplets(kg, scene, category);
        if options.is_empty() {
            continue;
        }
        let weights: Vec<f64> = options.iter().map(|(_, t)| t.weight(kg.alpha)).collect();
        let pick = match WeightedIndex::new(&weights) {
            Ok(dist) => dist.sample(&mut rng),
            Err(_) => rng.gen_range(0..options.len()),
        };
        if let Ok(p) = place(scene, &mut rng, format!("{category}_1"), options[pick].1, &mut taken) {
            distractors.push(p);
        }
    }

    Ok(TaskSpec {
        task_id: format!("{}-{}-t{:02}", scene.scene_id, template.template_id, triplet_index),
        scene_id: scene.scene_id.clone(),
        template_id: template.template_id.clone(),
        goal: template.goal(),
        initial_relations: vec![target],
        distractors,
        nl_description: template.realize(),
        seed,
    })
}

/// Per-task seed from the base seed and the task's coordinates.
pub fn task_seed(base_seed: u64, scene_id: &str, template_id: &str, triplet_index: usize) -> u64 {
    derive_seed(base_seed, &[scene_id, template_id, &triplet_index.to_string()])
}

fn generate_for(
    scenes: &[SceneSpec],
    templates: &[TaskTemplate],
    kg: &KnowledgeGraph,
    base_seed: u64,
) -> Result<Vec<TaskSpec>> {
    let mut out = Vec::new();
    for scene in scenes {
        for template in applicable_templates(scene, templates, kg) {
            for (index, _) in scene_triplets(kg, scene, &template.target_category) {
                let seed = task_seed(base_seed, &scene.scene_id, &template.template_id, index);
                out.push(instantiate_task(template, scene, kg, index, seed)?);
            }
        }
    }
    Ok(out)
}

/// One manipulation task per scene x applicable template x in-scene triplet
/// of the template's target.
pub fn generate_manipulation(
    scenes: &[SceneSpec],
    templates: &[TaskTemplate],
    kg: &KnowledgeGraph,
    base_seed: u64,
) -> Result<Vec<TaskSpec>> {
    let manip: Vec<TaskTemplate> = templates
        .iter()
        .filter(|t| t.task_kind == TaskKind::Manipulation)
        .cloned()
        .collect();
    generate_for(scenes, &manip, kg, base_seed)
}

/// Navigation tasks from the derived navigation templates, same counting rule.
pub fn generate_navigation(
    scenes: &[SceneSpec],
    templates: &[TaskTemplate],
    kg: &KnowledgeGraph,
    base_seed: u64,
) -> Result<Vec<TaskSpec>> {
    generate_for(scenes, &navigation_templates(templates), kg, base_seed)
}

/// Manipulation tasks followed by navigation tasks.
pub fn generate_dataset(
    scenes: &[SceneSpec],
    templates: &[TaskTemplate],
    kg: &KnowledgeGraph,
    base_seed: u64,
) -> Result<Vec<TaskSpec>> {
    let mut tasks = generate_manipulation(scenes, templates, kg, base_seed)?;
    tasks.extend(generate_navigation(scenes, templates, kg, base_seed)?);
    Ok(tasks)
}

/// A manipulation task whose target already starts in a goal receptacle.
pub fn is_presolved(task: &TaskSpec) -> bool {
    let Some(goal) = &task.goal.receptacle_category else {
        return false;
    };
    task.target().is_some_and(|p| {
        matches!(p.relation, Relation::Inside | Relation::OnTop) && &p.reference_category == goal
    })
}

/// Evaluation suite: per scene (in the given order), `per_scene` manipulation
/// tasks that are not pre-solved, drawn by a seeded shuffle of that scene's
/// tasks.
pub fn select_suite(tasks: &[TaskSpec], scenes: &[SceneSpec], base_seed: u64, per_scene: usize) -> Vec<TaskSpec> {
    let mut suite = Vec::new();
    for scene in scenes {
        let mut pool: Vec<&TaskSpec> = tasks
            .iter()
            .filter(|t| t.scene_id == scene.scene_id && t.goal.task_kind == TaskKind::Manipulation && !is_presolved(t))
            .collect();
        pool.shuffle(&mut rng_from(derive_seed(base_seed, &["suite", &scene.scene_id])));
        suite.extend(pool.into_iter().take(per_scene).cloned());
    }
    suite
}
