//! Study design: every participant plays one task in each scene, in a
//! seeded-random order, once per robot setting.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use gridthor_core::nav::ProxyParams;
use gridthor_core::seed::{derive_seed, rng_from};
use gridthor_core::taskforge::{generate_manipulation, select_suite};
use gridthor_core::{shipped, CategoryRegistry, Error, ErrorCode, Result, SceneSpec, TaskSpec};
use rand::seq::SliceRandom;

use crate::episode::{run_episode, CustomRobot, EpisodeLimits, EpisodeRequest, HumanSeat, LiveSeat};
use crate::report::RunReport;
use crate::result::{Adoption, EpisodeResult, Setting};

/// Who plays the human side.
#[derive(Clone)]
pub enum Participants {
    /// `count` scripted proxies sharing `params`; proxy `p` draws its
    /// randomness from `derive_seed(base_seed, ["proxy", p])`.
    Proxies { count: usize, params: ProxyParams },
    /// One live participant through the web client.
    Live(LiveSeat),
}

impl Participants {
    pub fn count(&self) -> usize {
        match self {
            Participants::Proxies { count, .. } => *count,
            Participants::Live(_) => 1,
        }
    }
}

#[derive(Clone)]
pub struct SuiteConfig<'a> {
    /// The evaluation tasks; grouped by scene in `scenes` order.
    pub tasks: &'a [TaskSpec],
    pub scenes: &'a [SceneSpec],
    pub registry: &'a CategoryRegistry,
    pub settings: Vec<Setting>,
    pub participants: Participants,
    pub base_seed: u64,
    pub limits: EpisodeLimits,
    pub replay_dir: Option<PathBuf>,
    pub custom_robot: Option<CustomRobot>,
    /// Episodes run at once, each with its own server and clients.
    pub parallel: usize,
}

/// One scheduled trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial<'a> {
    pub setting: Setting,
    pub participant: usize,
    pub trial_index: usize,
    pub task: &'a TaskSpec,
}

/// Per participant, the tasks in play order: one task per scene that has
/// tasks, participant `p` taking the `(p + s) mod k`-th of the `k` tasks of
/// the `s`-th scene (so tasks are spread evenly), shuffled by
/// `derive_seed(base_seed, ["order", p])`.
pub fn participant_sequences<'a>(
    tasks: &'a [TaskSpec],
    scenes: &[SceneSpec],
    participants: usize,
    base_seed: u64,
) -> Vec<Vec<&'a TaskSpec>> {
    let per_scene: Vec<Vec<&TaskSpec>> = scenes
        .iter()
        .map(|s| tasks.iter().filter(|t| t.scene_id == s.scene_id).collect::<Vec<_>>())
        .filter(|v| !v.is_empty())
        .collect();
    (0..participants)
        .map(|p| {
            let mut seq: Vec<&TaskSpec> = per_scene
                .iter()
                .enumerate()
                .map(|(s, pool)| pool[(p + s) % pool.len()])
                .collect();
            seq.shuffle(&mut rng_from(derive_seed(base_seed, &["order", &p.to_string()])));
            seq
        })
        .collect()
}

/// All trials in execution order: setting-major, then participant, then
/// play order.
pub fn plan_trials<'a>(cfg: &SuiteConfig<'a>) -> Vec<Trial<'a>> {
    let seqs = participant_sequences(cfg.tasks, cfg.scenes, cfg.participants.count(), cfg.base_seed);
    let mut trials = Vec::new();
    for &setting in &cfg.settings {
        for (participant, seq) in seqs.iter().enumerate() {
            for (trial_index, task) in seq.iter().enumerate() {
                trials.push(Trial {
                    setting,
                    participant,
                    trial_index,
                    task,
                });
            }
        }
    }
    trials
}

fn human_seat(cfg: &SuiteConfig<'_>, participant: usize) -> HumanSeat {
    match &cfg.participants {
        Participants::Proxies { params, .. } => HumanSeat::Proxy {
            params: *params,
            seed: derive_seed(cfg.base_seed, &["proxy", &participant.to_string()]),
        },
        Participants::Live(seat) => HumanSeat::Live(seat.clone()),
    }
}

/// Row for a trial that could not even be set up because a client failed.
fn broken_row(trial: &Trial<'_>, seed: u64, tick_duration_ms: u64) -> EpisodeResult {
    EpisodeResult {
        task_id: trial.task.task_id.clone(),
        scene_id: trial.task.scene_id.clone(),
        setting: trial.setting,
        participant: trial.participant,
        trial_index: trial.trial_index,
        success: false,
        elapsed_ticks: 0,
        tick_duration_ms,
        optimal_ticks: 0,
        twsr: 0.0,
        adopted: if trial.setting.has_robot() {
            Adoption::NotAdopted
        } else {
            Adoption::NotApplicable
        },
        messages_sent: 0,
        trust: None,
        seed,
        replay_path: None,
        broken: true,
    }
}

/// Runs one planned trial on its own. A trial whose clients crash comes back
/// as a broken row, not an error.
pub fn run_planned(cfg: &SuiteConfig<'_>, trial: &Trial<'_>) -> Result<EpisodeResult> {
    let scenes: BTreeMap<&str, &SceneSpec> = cfg.scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();
    run_trial(cfg, &scenes, trial)
}

fn run_trial(cfg: &SuiteConfig<'_>, scenes: &BTreeMap<&str, &SceneSpec>, trial: &Trial<'_>) -> Result<EpisodeResult> {
    let scene = scenes.get(trial.task.scene_id.as_str()).ok_or_else(|| {
        Error::new(
            ErrorCode::BadScene,
            format!("task {} needs unknown scene {:?}", trial.task.task_id, trial.task.scene_id),
        )
    })?;
    let req = EpisodeRequest {
        task: trial.task,
        scene,
        registry: cfg.registry,
        setting: trial.setting,
        seed: cfg.base_seed,
        participant: trial.participant,
        trial_index: trial.trial_index,
        human: human_seat(cfg, trial.participant),
        custom_robot: cfg.custom_robot,
        limits: cfg.limits,
        replay_dir: cfg.replay_dir.as_deref(),
    };
    match run_episode(req) {
        Ok(run) => Ok(run.result),
        Err(e) if e.code == ErrorCode::ClientCrash => {
            log::warn!("{e}");
            Ok(broken_row(trial, cfg.base_seed, cfg.limits.tick_duration_ms))
        }
        Err(e) => Err(e),
    }
}

/// Runs every planned trial and aggregates the rows. Rows come back in plan
/// order whatever `parallel` is.
pub fn run_suite(cfg: &SuiteConfig<'_>) -> Result<RunReport> {
    if cfg.settings.is_empty() {
        return Err(Error::new(ErrorCode::BadArg, "no settings to run"));
    }
    if let Some(dir) = &cfg.replay_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::new(ErrorCode::Io, format!("{}: {e}", dir.display())))?;
    }
    let scenes: BTreeMap<&str, &SceneSpec> = cfg.scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();
    let trials = plan_trials(cfg);
    let workers = match cfg.participants {
        Participants::Live(_) => 1,
        Participants::Proxies { .. } => cfg.parallel.clamp(1, trials.len().max(1)),
    };
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<EpisodeResult>>>> = Mutex::new(vec![None; trials.len()]);
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(trial) = trials.get(i) else { break };
                let failed = {
                    let r = run_trial(cfg, &scenes, trial);
                    let failed = r.is_err();
                    slots.lock().expect("result slots")[i] = Some(r);
                    failed
                };
                if failed {
                    // stop handing out work; the first error is reported
                    next.store(trials.len(), Ordering::SeqCst);
                }
                log::debug!("trial {i} of {} done", trials.len());
            });
        }
    });
    let mut rows = Vec::with_capacity(trials.len());
    for slot in slots.into_inner().expect("result slots") {
        match slot {
            Some(r) => rows.push(r?),
            None => break,
        }
    }
    Ok(RunReport::from_rows(&cfg.settings, rows))
}

/// Manipulation tasks per scene in the standard evaluation suite.
pub const TASKS_PER_SCENE: usize = 3;

/// The standard evaluation suite drawn from the shipped scenes, templates
/// and knowledge graph.
pub fn shipped_suite(base_seed: u64) -> Result<Vec<TaskSpec>> {
    let scenes = shipped::scenes();
    let tasks = generate_manipulation(&scenes, &shipped::templates(), &shipped::knowledge_graph(), base_seed)?;
    Ok(select_suite(&tasks, &scenes, base_seed, TASKS_PER_SCENE))
}
