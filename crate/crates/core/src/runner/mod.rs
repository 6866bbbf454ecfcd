//! Experiment configuration, dispatch and result persistence behind the
//! `permlab` binary and the C interface.

mod config;
mod tasks;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{PermlabError, Result};

pub use config::{parse_rational, parse_time_grid, ExperimentConfig, Format, Task, MAX_GRID_POINTS};

/// How the run can be repeated exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    /// `null` unless timing was requested, so envelopes stay reproducible.
    pub runtime_seconds: Option<f64>,
    pub step_sizes: BTreeMap<String, f64>,
    pub truncation_orders: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub task: Task,
    pub parameters: ExperimentConfig,
    pub values: Value,
    pub provenance: Provenance,
}

impl ResultEnvelope {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Rows for the CSV form of a result.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        CsvTable { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8_lossy(&buf).into_owned()
    }
}

/// An envelope and the table written for `format = csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub envelope: ResultEnvelope,
    pub table: CsvTable,
}

pub(crate) struct TaskResult {
    pub values: Value,
    pub table: CsvTable,
    pub steps: BTreeMap<String, f64>,
    pub orders: BTreeMap<String, u64>,
}

/// Runs one experiment without touching the filesystem.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let started = Instant::now();
    let result = tasks::dispatch(config)?;
    let runtime = started.elapsed().as_secs_f64();
    // worker count never changes results, so it is not echoed
    let mut parameters = config.clone();
    parameters.threads = None;
    let envelope = ResultEnvelope {
        task: config.task,
        parameters,
        values: result.values,
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            runtime_seconds: config.timing.then_some(runtime),
            step_sizes: result.steps,
            truncation_orders: result.orders,
        },
    };
    Ok(RunOutput { envelope, table: result.table })
}

/// Path of the envelope written next to a CSV result.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the result in the configured format to `config.out`, or to
/// `stdout` when no path is given. A CSV result written to a file gets its
/// envelope in a `.json` sidecar.
pub fn write_output<W: Write>(config: &ExperimentConfig, output: &RunOutput, stdout: W) -> Result<()> {
    let envelope = output.envelope.to_json()?;
    match (&config.out, config.format) {
        (Some(path), Format::Json) => write_file(path, envelope.as_bytes()),
        (Some(path), Format::Csv) => {
            write_file(path, output.table.to_string_lossy().as_bytes())?;
            write_file(&sidecar_path(path), envelope.as_bytes())
        }
        (None, Format::Json) => write_all(stdout, envelope.as_bytes()),
        (None, Format::Csv) => output.table.write(stdout),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_all(BufWriter::new(File::create(path)?), bytes)
}

fn write_all<W: Write>(mut w: W, bytes: &[u8]) -> Result<()> {
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

/// Machine-readable record of a failed run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&PermlabError> for ErrorRecord {
    fn from(e: &PermlabError) -> Self {
        ErrorRecord { kind: e.kind().to_string(), message: e.to_string(), exit_code: e.exit_code() }
    }
}

impl ErrorRecord {
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}
