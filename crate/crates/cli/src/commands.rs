//! The subcommands. Each returns `Err(Failure)` carrying its exit code.

use std::fmt;
use std::io::{IsTerminal, Write};
use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use gridthor_bench::replay::{replay_file, TrajectoryOverlay};
use gridthor_bench::report::{rows_to_csv, ROWS_FILE};
use gridthor_bench::suite::{plan_trials, run_planned, Participants, SuiteConfig};
use gridthor_bench::{emit_report, run_suite, EpisodeLimits, LiveSeat, ReportFormat, RunReport, Setting};
use gridthor_core::taskforge::{generate_dataset, load_templates, select_suite, Dataset, KnowledgeGraph, TaskTemplate};
use gridthor_core::{shipped, CategoryRegistry, Error, ErrorCode, SceneSpec, TaskKind, TaskSpec};
use gridthor_net::Assets;

use crate::args::{DataArgs, HumanArg, ListenArgs, ReplayArgs, RunArgs, ServeArgs, SuiteArgs, TaskgenArgs};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_ENV: u8 = 4;

/// Largest share of broken trials a run may have and still succeed.
pub const MAX_BROKEN_SHARE: f64 = 0.2;

#[derive(Debug)]
pub struct Failure {
    pub exit: u8,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn config(e: impl fmt::Display) -> Failure {
    Failure { exit: EXIT_CONFIG, message: e.to_string() }
}

fn data(e: impl fmt::Display) -> Failure {
    Failure { exit: EXIT_DATA, message: e.to_string() }
}

fn environment(e: impl fmt::Display) -> Failure {
    Failure { exit: EXIT_ENV, message: e.to_string() }
}

type Outcome = Result<(), Failure>;

/// Scenes, registry, templates and knowledge graph, from files or the
/// shipped defaults. Any problem reading them is a configuration error.
struct Inputs {
    scenes: Vec<SceneSpec>,
    registry: CategoryRegistry,
    templates: Vec<TaskTemplate>,
    kg: KnowledgeGraph,
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))
}

fn load_scene_dir(dir: &Path) -> Result<Vec<SceneSpec>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| config(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scene"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(config(format!("{}: no .scene files", dir.display())));
    }
    paths.iter().map(|p| SceneSpec::load(p).map_err(config)).collect()
}

fn load_inputs(args: &DataArgs) -> Result<Inputs, Failure> {
    let registry = match &args.categories {
        Some(p) => CategoryRegistry::parse(&read_text(p)?).map_err(|e| config(format!("{}: {e}", p.display())))?,
        None => shipped::registry(),
    };
    let scenes = match &args.scenes {
        Some(dir) => load_scene_dir(dir)?,
        None => shipped::scenes(),
    };
    let templates = match &args.templates {
        Some(p) => load_templates(p, &registry).map_err(config)?,
        None => shipped::templates(),
    };
    let kg = match &args.kg {
        Some(p) => KnowledgeGraph::load(p, registry.clone(), args.alpha).map_err(config)?,
        None => KnowledgeGraph::parse(shipped::KG_CSV, registry.clone(), args.alpha).map_err(config)?,
    };
    Ok(Inputs { scenes, registry, templates, kg })
}

pub fn taskgen(args: TaskgenArgs) -> Outcome {
    let inputs = load_inputs(&args.data)?;
    let seed = args.seed.seed;
    let tasks = generate_dataset(&inputs.scenes, &inputs.templates, &inputs.kg, seed).map_err(data)?;
    let dataset = Dataset::new(seed, tasks);
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| data(format!("{}: {e}", dir.display())))?;
    }
    dataset.emit(&args.out).map_err(data)?;
    println!("manipulation: {}", dataset.count(TaskKind::Manipulation));
    println!("navigation: {}", dataset.count(TaskKind::Navigation));
    println!("wrote {}", args.out.display());
    Ok(())
}

/// The evaluation suite: the dataset (or the in-memory generation) reduced
/// to `per_scene` tasks per scene, then capped at `tasks`.
fn load_suite(args: &SuiteArgs, inputs: &Inputs) -> Result<Vec<TaskSpec>, Failure> {
    let seed = args.seed.seed;
    let all = match &args.dataset {
        Some(p) => {
            let ds = Dataset::load(p).map_err(|e| match e.code {
                ErrorCode::Io => config(e),
                _ => data(e),
            })?;
            ds.tasks
        }
        None => generate_dataset(&inputs.scenes, &inputs.templates, &inputs.kg, seed).map_err(data)?,
    };
    let mut suite = select_suite(&all, &inputs.scenes, seed, args.per_scene);
    if let Some(n) = args.tasks {
        suite.truncate(n);
    }
    if suite.is_empty() {
        return Err(config("the suite is empty: no usable manipulation tasks for these scenes"));
    }
    Ok(suite)
}

fn limits(args: &SuiteArgs) -> Result<EpisodeLimits, Failure> {
    if args.tick_ms == 0 || args.deadline_ticks == 0 {
        return Err(config("--tick-ms and --deadline-ticks must be positive"));
    }
    Ok(EpisodeLimits {
        deadline_ticks: args.deadline_ticks,
        tick_duration_ms: args.tick_ms,
        ..EpisodeLimits::default()
    })
}

/// Set by the interrupt handler; live trials poll it.
fn interrupt_flag() -> Arc<AtomicBool> {
    static FLAG: OnceLock<Arc<AtomicBool>> = OnceLock::new();
    FLAG.get_or_init(|| {
        let flag = Arc::new(AtomicBool::new(false));
        let f = flag.clone();
        if let Err(e) = ctrlc::set_handler(move || {
            log::warn!("interrupted: ending the current trial");
            f.store(true, Ordering::SeqCst);
        }) {
            log::warn!("cannot install the interrupt handler: {e}");
        }
        flag
    })
    .clone()
}

fn announce(agents: SocketAddr, web: SocketAddr) {
    eprintln!("gridthor: agents connect to {agents}; play at http://{web}/");
}

/// Terminal fallback for the trust rating when the browser sent none.
fn prompt_trust() -> Option<u8> {
    let stdin = std::io::stdin();
    if !stdin.is_terminal() {
        return None;
    }
    for _ in 0..3 {
        eprint!("How much did you trust the robot on this task? (1-7): ");
        let _ = std::io::stderr().flush();
        let mut line = String::new();
        if stdin.read_line(&mut line).ok()? == 0 {
            return None;
        }
        match line.trim().parse::<u8>() {
            Ok(n) if (1..=7).contains(&n) => return Some(n),
            _ => eprintln!("please answer with a number from 1 to 7"),
        }
    }
    None
}

/// Fails with the environment exit code unless both ports can be bound.
fn check_ports(listen: &ListenArgs) -> Outcome {
    for addr in [listen.listen, listen.web_listen] {
        TcpListener::bind(addr).map_err(|e| environment(format!("cannot bind {addr}: {e}")))?;
    }
    Ok(())
}

fn live_seat(listen: &ListenArgs) -> LiveSeat {
    LiveSeat {
        listen: listen.listen,
        web_listen: listen.web_listen,
        assets: listen.assets.clone().map_or(Assets::Embedded, Assets::Dir),
        trust_wait: Duration::from_secs(listen.trust_wait_secs),
        prompt_trust: Some(prompt_trust),
        abort: interrupt_flag(),
        announce,
    }
}

fn check_settings(settings: &[Setting]) -> Outcome {
    if settings.is_empty() {
        return Err(config("no settings given"));
    }
    if settings.contains(&Setting::Custom) {
        return Err(config("the custom setting needs a robot policy supplied through the library"));
    }
    Ok(())
}

fn broken_share(report: &RunReport) -> f64 {
    let broken = report.rows.iter().filter(|r| r.broken).count();
    broken as f64 / report.rows.len().max(1) as f64
}

pub fn run(args: RunArgs) -> Outcome {
    check_settings(&args.settings)?;
    let inputs = load_inputs(&args.suite.data)?;
    let tasks = load_suite(&args.suite, &inputs)?;
    let limits = limits(&args.suite)?;
    let participants = match args.human {
        HumanArg::Proxy(params) => {
            if args.proxies == 0 {
                return Err(config("--proxies must be at least 1"));
            }
            Participants::Proxies { count: args.proxies, params }
        }
        HumanArg::Live => {
            check_ports(&args.listen)?;
            Participants::Live(live_seat(&args.listen))
        }
    };
    let cfg = SuiteConfig {
        tasks: &tasks,
        scenes: &inputs.scenes,
        registry: &inputs.registry,
        settings: args.settings.clone(),
        participants,
        base_seed: args.suite.seed.seed,
        limits,
        replay_dir: args.replays.then(|| args.suite.out.join("replays")),
        custom_robot: None,
        parallel: args.parallel,
    };
    let report = run_suite(&cfg).map_err(|e| match e.code {
        ErrorCode::Io => environment(e),
        _ => data(e),
    })?;
    emit_report(&report, &ReportFormat::ALL, &args.suite.out).map_err(data)?;
    if let [only] = report.rows.as_slice() {
        println!("{}", serde_json::to_string_pretty(only).map_err(data)?);
    } else {
        print!("{}", report.render_table());
    }
    check_broken(&report)
}

/// Fails the run when more than [`MAX_BROKEN_SHARE`] of its trials broke.
fn check_broken(report: &RunReport) -> Outcome {
    let share = broken_share(report);
    if share > MAX_BROKEN_SHARE {
        return Err(data(format!(
            "{:.1}% of trials broken (limit {:.0}%); results not trustworthy",
            100.0 * share,
            100.0 * MAX_BROKEN_SHARE
        )));
    }
    Ok(())
}

pub fn serve(args: ServeArgs) -> Outcome {
    let inputs = load_inputs(&args.suite.data)?;
    let tasks = load_suite(&args.suite, &inputs)?;
    let limits = limits(&args.suite)?;
    check_ports(&args.listen)?;
    let seat = live_seat(&args.listen);
    let abort = seat.abort.clone();
    let out = &args.suite.out;
    let replays = out.join("replays");
    let cfg = SuiteConfig {
        tasks: &tasks,
        scenes: &inputs.scenes,
        registry: &inputs.registry,
        settings: vec![args.robot.setting()],
        participants: Participants::Live(seat),
        base_seed: args.suite.seed.seed,
        limits,
        replay_dir: Some(replays.clone()),
        custom_robot: None,
        parallel: 1,
    };
    std::fs::create_dir_all(&replays).map_err(|e| environment(format!("{}: {e}", replays.display())))?;
    let plan = plan_trials(&cfg);
    let mut rows = Vec::new();
    for (i, trial) in plan.iter().enumerate() {
        eprintln!("gridthor: task {} of {}: {}", i + 1, plan.len(), trial.task.nl_description);
        let row = run_planned(&cfg, trial).map_err(|e| match e.code {
            ErrorCode::Io => environment(e),
            _ => data(e),
        })?;
        rows.push(row);
        // flush after every trial so an interrupted session keeps its rows
        let text = rows_to_csv(&rows).map_err(data)?;
        let path = out.join(ROWS_FILE);
        std::fs::write(&path, text).map_err(|e| data(format!("{}: {e}", path.display())))?;
        if abort.load(Ordering::SeqCst) {
            eprintln!("gridthor: interrupted; trial marked broken, {} row(s) kept", rows.len());
            break;
        }
    }
    let report = RunReport::from_rows(&cfg.settings, rows);
    emit_report(&report, &ReportFormat::ALL, out).map_err(data)?;
    print!("{}", report.render_table());
    Ok(())
}

pub fn replay(args: ReplayArgs) -> Outcome {
    if !args.log.is_file() {
        return Err(config(format!("{}: no such replay log", args.log.display())));
    }
    let replay = replay_file(&args.log).map_err(|e: Error| data(format!("{}: {e}", args.log.display())))?;
    let last = replay.final_world();
    println!(
        "verified {}: {} ticks, status {}, hash {}",
        args.log.display(),
        last.tick,
        format!("{:?}", replay.final_status).to_lowercase(),
        replay.final_hash
    );
    if let Some(path) = &args.export_traj {
        let overlay = TrajectoryOverlay::from_replay(&replay);
        overlay.write_to(path).map_err(data)?;
        println!("wrote {} trajectories to {}", overlay.polylines.len(), path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use gridthor_bench::{Adoption, EpisodeResult};

    use super::*;

    fn rows(total: usize, broken: usize) -> RunReport {
        let rows = (0..total)
            .map(|i| EpisodeResult {
                task_id: format!("t{i}"),
                scene_id: "s".into(),
                setting: Setting::Frontier,
                participant: 0,
                trial_index: i,
                success: true,
                elapsed_ticks: 10,
                tick_duration_ms: 250,
                optimal_ticks: 10,
                twsr: 1.0,
                adopted: Adoption::NotAdopted,
                messages_sent: 0,
                trust: None,
                seed: 1,
                replay_path: None,
                broken: i < broken,
            })
            .collect();
        RunReport::from_rows(&[Setting::Frontier], rows)
    }

    #[test]
    fn more_than_a_fifth_broken_fails_the_run() {
        assert!(check_broken(&rows(10, 0)).is_ok());
        assert!(check_broken(&rows(10, 2)).is_ok());
        assert_eq!(check_broken(&rows(10, 3)).unwrap_err().exit, EXIT_DATA);
        assert_eq!(check_broken(&rows(1, 1)).unwrap_err().exit, EXIT_DATA);
    }

    #[test]
    fn human_flag_forms() {
        use crate::args::parse_human;
        assert_eq!(parse_human("live").unwrap(), HumanArg::Live);
        let HumanArg::Proxy(p) = parse_human("proxy:0.5,8").unwrap() else { panic!() };
        assert_eq!((p.confirm_probability, p.reaction_delay_ticks), (0.5, 8));
        assert_eq!(parse_human("proxy").unwrap(), HumanArg::Proxy(Default::default()));
        for bad in ["proxy:2,1", "proxy:0.5", "proxy:x,1", "robot", "proxyish"] {
            assert!(parse_human(bad).is_err(), "{bad}");
        }
    }
}
