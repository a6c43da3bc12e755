//! Dataset files: a header record followed by one task per line.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, ErrorCode, Result};
use crate::task::{TaskKind, TaskSpec};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub base_seed: u64,
    pub manipulation: usize,
    pub navigation: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub base_seed: u64,
    pub tasks: Vec<TaskSpec>,
}

impl Dataset {
    pub fn new(base_seed: u64, tasks: Vec<TaskSpec>) -> Self {
        Dataset { base_seed, tasks }
    }

    pub fn count(&self, kind: TaskKind) -> usize {
        self.tasks.iter().filter(|t| t.goal.task_kind == kind).count()
    }

    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            schema_version: DATASET_SCHEMA_VERSION,
            base_seed: self.base_seed,
            manipulation: self.count(TaskKind::Manipulation),
            navigation: self.count(TaskKind::Navigation),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = serde_json::to_string(&self.header()).expect("header serializes");
        out.push('\n');
        for t in &self.tasks {
            out.push_str(&serde_json::to_string(t).expect("task serializes"));
            out.push('\n');
        }
        out
    }

    pub fn emit(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)
            .map_err(|e| Error::new(ErrorCode::Io, format!("{}: {e}", path.display())))?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    /// Parses a dataset. Failures name the record index (0 is the header,
    /// `k` the k-th task).
    pub fn from_reader(reader: impl BufRead) -> Result<Dataset> {
        let mut lines = reader.lines();
        let header: DatasetHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)
                .map_err(|e| Error::new(ErrorCode::Parse, format!("record 0: {e}")))?,
            None => bail!(Parse, "record 0: empty dataset file"),
        };
        if header.schema_version != DATASET_SCHEMA_VERSION {
            bail!(Parse, "record 0: unsupported schema_version {}", header.schema_version);
        }
        let mut tasks = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let index = tasks.len() + 1;
            let task: TaskSpec =
                serde_json::from_str(&line).map_err(|e| Error::new(ErrorCode::Parse, format!("record {index}: {e}")))?;
            tasks.push(task);
        }
        let ds = Dataset::new(header.base_seed, tasks);
        if ds.header() != header {
            bail!(
                Parse,
                "record {}: header announces {} + {} tasks, file holds {} + {}",
                ds.tasks.len() + 1,
                header.manipulation,
                header.navigation,
                ds.count(TaskKind::Manipulation),
                ds.count(TaskKind::Navigation)
            );
        }
        Ok(ds)
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::new(ErrorCode::Io, format!("{}: {e}", path.display())))?;
        Self::from_reader(std::io::BufReader::new(f))
    }
}
