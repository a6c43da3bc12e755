//! Aggregates and report files. Every number in a report is recomputed from
//! the per-trial rows, so a reloaded rows file reproduces the report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gridthor_core::metrics::{mean, mean_stderr, quartiles};
use gridthor_core::{Error, ErrorCode, Real, Result};
use serde::{Deserialize, Serialize};

use crate::result::{Adoption, EpisodeResult, Setting};

pub const TABLE_FILE: &str = "table.txt";
pub const ROWS_FILE: &str = "trials.csv";
pub const TRUST_FILE: &str = "trust_series.csv";
pub const TIMES_FILE: &str = "time_quartiles.csv";

/// Aggregates of one setting over its usable (non-broken) trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingSummary {
    pub setting: Setting,
    pub trials: usize,
    pub broken: usize,
    pub sr: Real,
    pub twsr: Real,
    /// Fraction of trials with a confirmed message; `None` without a robot.
    pub adoption: Option<Real>,
    /// `[min, q1, median, q3, max]` of the time spent, in seconds.
    pub time_quartiles: [Real; 5],
}

/// Mean trust at one position of the participants' task sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustPoint {
    pub setting: Setting,
    pub trial_index: usize,
    pub n: usize,
    pub mean: Real,
    pub stderr: Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// One entry per requested setting that has usable trials, in the
    /// requested order.
    pub summaries: Vec<SettingSummary>,
    pub rows: Vec<EpisodeResult>,
    pub trust_series: Vec<TrustPoint>,
}

fn summarize(setting: Setting, rows: &[&EpisodeResult], broken: usize) -> Option<SettingSummary> {
    let s: Vec<Real> = rows.iter().map(|r| r.s()).collect();
    let sr = mean(&s)?;
    let twsr = mean(&rows.iter().map(|r| r.twsr).collect::<Vec<_>>())?;
    let adoption = setting.has_robot().then(|| {
        let adopted: Vec<Real> = rows
            .iter()
            .map(|r| if r.adopted == Adoption::Adopted { 1.0 } else { 0.0 })
            .collect();
        mean(&adopted).unwrap_or(0.0)
    });
    let times: Vec<Real> = rows.iter().map(|r| r.elapsed_seconds()).collect();
    Some(SettingSummary {
        setting,
        trials: rows.len(),
        broken,
        sr,
        twsr,
        adoption,
        time_quartiles: quartiles(&times)?,
    })
}

impl RunReport {
    /// Aggregates `rows` for each of `settings`. Broken trials are kept in
    /// the rows but left out of every aggregate; a setting with no usable
    /// trial is omitted with a warning.
    pub fn from_rows(settings: &[Setting], rows: Vec<EpisodeResult>) -> RunReport {
        let mut summaries = Vec::new();
        let mut trust_series = Vec::new();
        for &setting in settings {
            let mine: Vec<&EpisodeResult> = rows.iter().filter(|r| r.setting == setting).collect();
            let usable: Vec<&EpisodeResult> = mine.iter().copied().filter(|r| !r.broken).collect();
            let broken = mine.len() - usable.len();
            if broken > 0 {
                log::warn!("{setting}: {broken} broken trial(s) excluded");
            }
            match summarize(setting, &usable, broken) {
                Some(s) => summaries.push(s),
                None => {
                    log::warn!("{setting}: no usable trials, row omitted");
                    continue;
                }
            }
            let mut by_index: BTreeMap<usize, Vec<Real>> = BTreeMap::new();
            for r in &usable {
                if let Some(t) = r.trust {
                    by_index.entry(r.trial_index).or_default().push(Real::from(t));
                }
            }
            for (trial_index, values) in by_index {
                let (m, se) = mean_stderr(&values).expect("non-empty group");
                trust_series.push(TrustPoint {
                    setting,
                    trial_index,
                    n: values.len(),
                    mean: m,
                    stderr: se,
                });
            }
        }
        RunReport {
            summaries,
            rows,
            trust_series,
        }
    }

    pub fn summary(&self, setting: Setting) -> Option<&SettingSummary> {
        self.summaries.iter().find(|s| s.setting == setting)
    }

    /// The results table: one row per setting, percentages to one decimal,
    /// `/` where adoption does not apply.
    pub fn render_table(&self) -> String {
        let mut out = String::from("Robot setting | SR (%) | TWSR (%) | Adoption Rate (%)\n");
        for s in &self.summaries {
            let adoption = s.adoption.map_or_else(|| "/".to_string(), percent);
            let _ = writeln!(out, "{} | {} | {} | {}", s.setting.label(), percent(s.sr), percent(s.twsr), adoption);
        }
        out
    }
}

/// A fraction as a percentage with one decimal.
pub fn percent(x: Real) -> String {
    format!("{:.1}", 100.0 * x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReportFormat {
    /// The results table.
    Table,
    /// One row per trial.
    Rows,
    /// Trust over trial index and time quartiles per setting.
    Series,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Table, ReportFormat::Rows, ReportFormat::Series];
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::new(ErrorCode::Io, format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn rows_to_csv(rows: &[EpisodeResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::new(ErrorCode::Io, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::new(ErrorCode::Io, e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::new(ErrorCode::Io, e.to_string()))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<EpisodeResult>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::new(ErrorCode::Parse, format!("row {}: {e}", i + 1))))
        .collect()
}

pub fn read_rows(path: &Path) -> Result<Vec<EpisodeResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    rows_from_csv(&text)
}

fn trust_csv(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &report.trust_series {
        w.serialize(p).map_err(|e| Error::new(ErrorCode::Io, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::new(ErrorCode::Io, e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::new(ErrorCode::Io, e.to_string()))
}

fn times_csv(report: &RunReport) -> String {
    let mut out = String::from("setting,trials,min_s,q1_s,median_s,q3_s,max_s\n");
    for s in &report.summaries {
        let q = s.time_quartiles;
        let _ = writeln!(out, "{},{},{},{},{},{},{}", s.setting, s.trials, q[0], q[1], q[2], q[3], q[4]);
    }
    out
}

/// Writes the requested report files under `dir` and returns their paths.
pub fn emit_report(report: &RunReport, formats: &[ReportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Table => {
                let path = dir.join(TABLE_FILE);
                write_text(&path, &report.render_table())?;
                written.push(path);
            }
            ReportFormat::Rows => {
                let path = dir.join(ROWS_FILE);
                write_text(&path, &rows_to_csv(&report.rows)?)?;
                written.push(path);
            }
            ReportFormat::Series => {
                let path = dir.join(TRUST_FILE);
                write_text(&path, &trust_csv(report)?)?;
                written.push(path);
                let path = dir.join(TIMES_FILE);
                write_text(&path, &times_csv(report))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
