//! Command-line flags. Every default here reproduces the shipped benchmark.

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gridthor_bench::Setting;
use gridthor_core::nav::ProxyParams;
use gridthor_core::world::{DEFAULT_DEADLINE_TICKS, DEFAULT_TICK_MS};

#[derive(Debug, Parser)]
#[command(name = "gridthor", version, about = "Human-in-the-loop grid world: task generation, benchmarks, live sessions and replays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the task dataset from scenes, templates and the knowledge graph
    Taskgen(TaskgenArgs),
    /// Run the benchmark suite headless and write the reports
    Run(RunArgs),
    /// Serve live sessions: one task after another for a human in the browser
    Serve(ServeArgs),
    /// Verify a replay log and optionally export agent trajectories
    Replay(ReplayArgs),
}

/// Where the benchmark data comes from. Unset paths use the data compiled
/// into the binary.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Directory of `.scene` files [default: the shipped scenes]
    #[arg(long, value_name = "DIR")]
    pub scenes: Option<PathBuf>,
    /// Category table (CSV) [default: the shipped table]
    #[arg(long, value_name = "PATH")]
    pub categories: Option<PathBuf>,
    /// Knowledge-graph triplets (CSV) [default: the shipped graph]
    #[arg(long, value_name = "PATH")]
    pub kg: Option<PathBuf>,
    /// Task templates (CSV) [default: the shipped templates]
    #[arg(long, value_name = "PATH")]
    pub templates: Option<PathBuf>,
    /// Weight of semantic similarity against the prior when sampling triplets
    #[arg(long, default_value_t = gridthor_core::taskforge::DEFAULT_ALPHA)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    /// Base seed for generation, ordering and episodes
    #[arg(long, env = "GRIDTHOR_SEED", default_value_t = gridthor_core::shipped::DEFAULT_BASE_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TaskgenArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Dataset file to write
    #[arg(long, value_name = "PATH", default_value = "dataset.jsonl")]
    pub out: PathBuf,
}

/// The tasks to play and the episode clock.
#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Dataset to draw the suite from [default: generated from the data in memory]
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    /// Manipulation tasks per scene in the suite
    #[arg(long, default_value_t = gridthor_bench::suite::TASKS_PER_SCENE)]
    pub per_scene: usize,
    /// Keep only the first N suite tasks [default: all]
    #[arg(long, value_name = "N")]
    pub tasks: Option<usize>,
    /// Tick duration in milliseconds
    #[arg(long, default_value_t = DEFAULT_TICK_MS)]
    pub tick_ms: u64,
    /// Ticks before an episode times out
    #[arg(long, default_value_t = DEFAULT_DEADLINE_TICKS)]
    pub deadline_ticks: u64,
    /// Directory for reports and replay logs
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ListenArgs {
    /// Agent socket address
    #[arg(long, default_value = gridthor_net::DEFAULT_LISTEN)]
    pub listen: SocketAddr,
    /// Browser (HTTP + WebSocket) address
    #[arg(long, default_value = gridthor_net::DEFAULT_WEB_LISTEN)]
    pub web_listen: SocketAddr,
    /// Directory of web client files [default: the built-in page]
    #[arg(long, value_name = "DIR")]
    pub assets: Option<PathBuf>,
    /// Seconds to wait for the trust rating from the browser before asking on the terminal
    #[arg(long, default_value_t = 30)]
    pub trust_wait_secs: u64,
}

/// Who plays the human side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HumanArg {
    Proxy(ProxyParams),
    Live,
}

pub fn parse_human(s: &str) -> Result<HumanArg, String> {
    if s == "live" {
        return Ok(HumanArg::Live);
    }
    let Some(rest) = s.strip_prefix("proxy") else {
        return Err(format!("expected proxy:<confirm_probability>,<delay> or live, got {s:?}"));
    };
    let mut params = ProxyParams::default();
    if let Some(spec) = rest.strip_prefix(':') {
        let (p, d) = spec
            .split_once(',')
            .ok_or_else(|| format!("expected proxy:<confirm_probability>,<delay>, got {s:?}"))?;
        params.confirm_probability = p.trim().parse().map_err(|e| format!("confirm probability {p:?}: {e}"))?;
        params.reaction_delay_ticks = d.trim().parse().map_err(|e| format!("delay {d:?}: {e}"))?;
        if !(0.0..=1.0).contains(&params.confirm_probability) {
            return Err(format!("confirm probability must be in [0, 1], got {p}"));
        }
    } else if !rest.is_empty() {
        return Err(format!("expected proxy:<confirm_probability>,<delay> or live, got {s:?}"));
    }
    Ok(HumanArg::Proxy(params))
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    s.parse::<Setting>().map_err(|e| e.message)
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub suite: SuiteArgs,
    /// Robot settings to compare, comma separated (no_robot, frontier, oracle)
    #[arg(long, value_delimiter = ',', value_parser = parse_setting, default_value = "no_robot,frontier,oracle")]
    pub settings: Vec<Setting>,
    /// Human side: proxy:<confirm_probability>,<delay> or live
    #[arg(long, value_parser = parse_human, default_value = "proxy:1,4")]
    pub human: HumanArg,
    /// Scripted participants per setting
    #[arg(long, default_value_t = 6)]
    pub proxies: usize,
    /// Episodes run at once, each with its own server
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Also write one replay log per trial under <out>/replays [default: off]
    #[arg(long)]
    pub replays: bool,
    #[command(flatten)]
    pub listen: ListenArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RobotArg {
    Frontier,
    Oracle,
    None,
}

impl RobotArg {
    pub fn setting(self) -> Setting {
        match self {
            RobotArg::Frontier => Setting::Frontier,
            RobotArg::Oracle => Setting::Oracle,
            RobotArg::None => Setting::NoRobot,
        }
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub suite: SuiteArgs,
    /// Robot that joins each task
    #[arg(long, value_enum, default_value_t = RobotArg::Frontier)]
    pub robot: RobotArg,
    #[command(flatten)]
    pub listen: ListenArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Replay log to verify
    #[arg(value_name = "LOG")]
    pub log: PathBuf,
    /// Write the trajectory overlay (JSON) here [default: not written]
    #[arg(long, value_name = "PATH")]
    pub export_traj: Option<PathBuf>,
}
