//! One trial: boot a server, connect the policy clients, play to the end and
//! score the outcome.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use gridthor_core::nav::{FrontierRobot, HumanProxy, OracleRobot, Policy, ProxyParams};
use gridthor_core::replay::ReplayLog;
use gridthor_core::world::{Capability, EpisodeStatus, MessageStatus, World, DEFAULT_DEADLINE_TICKS, DEFAULT_TICK_MS};
use gridthor_core::{CategoryRegistry, Error, ErrorCode, Result, SceneSpec, TaskSpec};
use gridthor_net::{run_policy, serve, Assets, Client, EpisodeOutcome, ServerConfig, ServerHandle, SessionRole, TickMode};

use crate::optimal::estimate_optimal_ticks;
use crate::result::{synthetic_trust, twsr_for, Adoption, EpisodeResult, Setting};

/// Capabilities the baseline robots declare: they explore and report but
/// do not manipulate.
pub const ROBOT_CAPABILITIES: [Capability; 2] = [Capability::Navigate, Capability::Communicate];

/// Builds the robot policy for the `custom` setting from the initial world.
pub type CustomRobot = fn(&World, &TaskSpec) -> Box<dyn Policy>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLimits {
    pub deadline_ticks: u64,
    pub tick_duration_ms: u64,
    /// Wall-clock bound on a scripted episode; exceeding it marks the trial
    /// broken.
    pub wall_timeout: Duration,
}

impl Default for EpisodeLimits {
    fn default() -> Self {
        EpisodeLimits {
            deadline_ticks: DEFAULT_DEADLINE_TICKS,
            tick_duration_ms: DEFAULT_TICK_MS,
            wall_timeout: Duration::from_secs(120),
        }
    }
}

/// A live participant playing through the web client.
#[derive(Clone)]
pub struct LiveSeat {
    pub listen: SocketAddr,
    pub web_listen: SocketAddr,
    pub assets: Assets,
    /// How long to wait for the trust rating from the web client before
    /// falling back to `prompt_trust`.
    pub trust_wait: Duration,
    /// Asks for a trust rating some other way (e.g. on the terminal).
    pub prompt_trust: Option<fn() -> Option<u8>>,
    /// Set to abandon the episode; the trial is then marked broken.
    pub abort: Arc<AtomicBool>,
    /// Told the addresses once the server is listening.
    pub announce: fn(SocketAddr, SocketAddr),
}

#[derive(Clone)]
pub enum HumanSeat {
    Proxy { params: ProxyParams, seed: u64 },
    Live(LiveSeat),
}

#[derive(Clone)]
pub struct EpisodeRequest<'a> {
    pub task: &'a TaskSpec,
    pub scene: &'a SceneSpec,
    pub registry: &'a CategoryRegistry,
    pub setting: Setting,
    pub seed: u64,
    pub participant: usize,
    pub trial_index: usize,
    pub human: HumanSeat,
    pub custom_robot: Option<CustomRobot>,
    pub limits: EpisodeLimits,
    /// Directory for the replay log; none keeps the log in memory only.
    pub replay_dir: Option<&'a Path>,
}

pub struct EpisodeRun {
    pub result: EpisodeResult,
    pub log: ReplayLog,
    pub world: World,
}

/// The initial world of a trial, before any robot joins.
pub fn initial_world(
    scene: &SceneSpec,
    task: &TaskSpec,
    registry: &CategoryRegistry,
    seed: u64,
    limits: &EpisodeLimits,
) -> Result<World> {
    let mut world = World::new(scene.clone())?.with_seed(seed);
    world.apply_task(task, registry)?;
    world.deadline_ticks = limits.deadline_ticks;
    world.tick_duration_ms = limits.tick_duration_ms;
    Ok(world)
}

fn robot_policy(req: &EpisodeRequest<'_>, world: &World) -> Result<Option<Box<dyn Policy>>> {
    let target = &req.task.goal.target_category;
    Ok(match req.setting {
        Setting::NoRobot => None,
        Setting::Frontier => Some(Box::new(FrontierRobot::new(
            world.scene.width(),
            world.scene.height(),
            world.cell_size(),
            target.clone(),
        ))),
        Setting::Oracle => Some(Box::new(OracleRobot::new(world, target.clone()))),
        Setting::Custom => {
            let make = req
                .custom_robot
                .ok_or_else(|| Error::new(ErrorCode::BadArg, "the custom setting needs a robot policy"))?;
            Some(make(world, req.task))
        }
    })
}

/// Joins `client` under `role` and plays `policy` on its own thread.
fn spawn_player(
    addr: SocketAddr,
    role: SessionRole,
    caps: &[Capability],
    mut policy: Box<dyn Policy>,
) -> Result<JoinHandle<Result<EpisodeStatus>>> {
    let mut client = Client::connect(addr)?;
    client.hello(role, caps)?;
    let name = format!("{}-client", role.as_str());
    Ok(thread::Builder::new()
        .name(name)
        .spawn(move || run_policy(&mut client, policy.as_mut()))?)
}

fn bind_error(e: std::io::Error) -> Error {
    Error::new(ErrorCode::Io, format!("cannot start the server: {e}"))
}

/// Plays one trial to success, timeout or breakage and scores it. A trial
/// whose clients crash or disconnect is returned with `broken` set (and an
/// `E_CLIENT_CRASH` warning logged) rather than as an error.
pub fn run_episode(req: EpisodeRequest<'_>) -> Result<EpisodeRun> {
    let world = initial_world(req.scene, req.task, req.registry, req.seed, &req.limits)?;
    let optimal_ticks = estimate_optimal_ticks(&world)?;
    let robot = robot_policy(&req, &world)?;

    let cfg = match &req.human {
        HumanSeat::Proxy { .. } => ServerConfig {
            scenes: vec![req.scene.clone()],
            registry: req.registry.clone(),
            ..ServerConfig::ephemeral()
        },
        HumanSeat::Live(seat) => ServerConfig {
            listen: seat.listen,
            web_listen: Some(seat.web_listen),
            mode: TickMode::Realtime {
                tick_ms: req.limits.tick_duration_ms,
            },
            assets: seat.assets.clone(),
            start_on_human: true,
            scenes: vec![req.scene.clone()],
            registry: req.registry.clone(),
            ..ServerConfig::ephemeral()
        },
    };
    let handle = serve(world, cfg).map_err(bind_error)?;
    let addr = handle.local_addr();

    let mut players = Vec::new();
    let joined = (|| -> Result<()> {
        if let Some(policy) = robot {
            players.push(spawn_player(addr, SessionRole::Robot, &ROBOT_CAPABILITIES, policy)?);
        }
        if let HumanSeat::Proxy { params, seed } = &req.human {
            let proxy = HumanProxy::new(
                req.scene.width(),
                req.scene.height(),
                req.scene.cell_size,
                req.task.goal.clone(),
                *params,
                *seed,
            );
            players.push(spawn_player(addr, SessionRole::Human, &[], Box::new(proxy))?);
        }
        Ok(())
    })();
    if let Err(e) = joined {
        handle.shutdown();
        return Err(Error::new(ErrorCode::ClientCrash, format!("a client could not join: {e}")));
    }

    let outcome = match &req.human {
        HumanSeat::Proxy { .. } => {
            handle.start_episode();
            handle.recv_outcome(req.limits.wall_timeout)
        }
        HumanSeat::Live(seat) => {
            (seat.announce)(addr, handle.web_addr().unwrap_or(seat.web_listen));
            wait_live(&handle, &seat.abort)
        }
    };
    let trust = match (&req.human, req.setting.has_robot(), &outcome) {
        (HumanSeat::Live(seat), true, Some(o)) if !o.aborted => {
            handle.recv_trust(seat.trust_wait).or_else(|| seat.prompt_trust.and_then(|p| p()))
        }
        _ => None,
    };
    let leftovers = handle.shutdown();
    let outcome = outcome.or_else(|| leftovers.into_iter().next());
    let client_errors: Vec<Error> = players
        .into_iter()
        .filter_map(|p| match p.join() {
            Ok(Ok(_)) => None,
            Ok(Err(e)) => Some(e),
            Err(_) => Some(Error::new(ErrorCode::ClientCrash, "client thread panicked")),
        })
        .collect();
    let Some(outcome) = outcome else {
        if let HumanSeat::Live(seat) = &req.human {
            if seat.abort.load(Ordering::SeqCst) {
                return Err(Error::new(
                    ErrorCode::ClientCrash,
                    format!("trial {} of {} interrupted before it started", req.task.task_id, req.setting),
                ));
            }
        }
        return Err(Error::new(ErrorCode::Io, "server ended without an episode outcome"));
    };
    let broken = outcome.aborted || !outcome.dropped.is_empty() || !client_errors.is_empty();
    if broken {
        log::warn!(
            "{}: trial {} of {} broken (aborted: {}, dropped: {:?}, client errors: {:?})",
            ErrorCode::ClientCrash,
            req.task.task_id,
            req.setting,
            outcome.aborted,
            outcome.dropped,
            client_errors.iter().map(|e| e.to_string()).collect::<Vec<_>>()
        );
    }
    score(&req, outcome, optimal_ticks, trust, broken)
}

fn wait_live(handle: &ServerHandle, abort: &AtomicBool) -> Option<EpisodeOutcome> {
    loop {
        if abort.load(Ordering::SeqCst) {
            return None;
        }
        if let Some(o) = handle.recv_outcome(Duration::from_millis(200)) {
            return Some(o);
        }
    }
}

fn score(
    req: &EpisodeRequest<'_>,
    outcome: EpisodeOutcome,
    optimal_ticks: u64,
    live_trust: Option<u8>,
    broken: bool,
) -> Result<EpisodeRun> {
    let world = outcome.world;
    let success = world.status == EpisodeStatus::Success;
    let elapsed_ticks = world.tick;
    let twsr = twsr_for(success, elapsed_ticks, optimal_ticks)?;
    let adopted = if !req.setting.has_robot() {
        Adoption::NotApplicable
    } else if world.messages.iter().any(|m| m.status == MessageStatus::Confirmed) {
        Adoption::Adopted
    } else {
        Adoption::NotAdopted
    };
    let trust = match (&req.human, req.setting.has_robot()) {
        (_, false) => None,
        (HumanSeat::Proxy { .. }, true) => Some(synthetic_trust(twsr)),
        (HumanSeat::Live(_), true) => live_trust,
    };
    let replay_path = match req.replay_dir {
        Some(dir) => {
            let path = replay_file_path(dir, req);
            outcome.log.write_to(&path)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    Ok(EpisodeRun {
        result: EpisodeResult {
            task_id: req.task.task_id.clone(),
            scene_id: req.scene.scene_id.clone(),
            setting: req.setting,
            participant: req.participant,
            trial_index: req.trial_index,
            success,
            elapsed_ticks,
            tick_duration_ms: world.tick_duration_ms,
            optimal_ticks,
            twsr,
            adopted,
            messages_sent: world.messages.len() as u64,
            trust,
            seed: req.seed,
            replay_path,
            broken,
        },
        log: outcome.log,
        world,
    })
}

/// `<dir>/<setting>-p<participant>-t<trial>-<task_id>.jsonl`
pub fn replay_file_path(dir: &Path, req: &EpisodeRequest<'_>) -> PathBuf {
    dir.join(format!(
        "{}-p{}-t{}-{}.jsonl",
        req.setting, req.participant, req.trial_index, req.task.task_id
    ))
}
