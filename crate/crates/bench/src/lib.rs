//! Benchmark harness: runs trials over the wire protocol with scripted
//! robots and human proxies, scores them and writes reports.

pub mod episode;
pub mod optimal;
pub mod replay;
pub mod report;
pub mod result;
pub mod suite;

pub use episode::{run_episode, EpisodeLimits, EpisodeRequest, EpisodeRun, HumanSeat, LiveSeat};
pub use optimal::estimate_optimal_ticks;
pub use report::{emit_report, read_rows, ReportFormat, RunReport, SettingSummary};
pub use result::{Adoption, EpisodeResult, Setting};
pub use suite::{run_suite, shipped_suite, Participants, SuiteConfig};
