//! JSON run reports and the sinks that data rows are written to.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sprp_core::acceptance::CheckRow;

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: ExperimentConfig,
    /// Computed constants; `None` where a constant is undefined for the model.
    pub constants: BTreeMap<String, Option<f64>>,
    /// Free-form labelled values that are not plain numbers.
    pub details: BTreeMap<String, serde_json::Value>,
    pub checks: Vec<CheckRow>,
}

impl Report {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            constants: BTreeMap::new(),
            details: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    pub fn constant(&mut self, name: &str, value: Option<f64>) {
        self.constants.insert(name.to_string(), value.filter(|v| v.is_finite()));
    }

    pub fn detail(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report details serialise");
        self.details.insert(name.to_string(), v);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| io_err(path, e))
    }
}

pub fn io_err(path: &Path, source: io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

/// A file, or standard output when no path is configured.
pub struct Sink {
    path: Option<PathBuf>,
    inner: Box<dyn Write>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { path: path.map(Path::to_path_buf), inner })
    }

    fn err(&self, e: io::Error) -> CliError {
        match &self.path {
            Some(p) => io_err(p, e),
            None => io_err(Path::new("<stdout>"), e),
        }
    }

    pub fn csv(self) -> CsvSink {
        CsvSink { path: self.path, inner: csv::Writer::from_writer(self.inner) }
    }

    pub fn json_line(&mut self, value: &impl Serialize) -> Result<(), CliError> {
        let line = serde_json::to_string(value).expect("record serialises");
        writeln!(self.inner, "{line}").map_err(|e| self.err(e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(|e| self.err(e))
    }
}

pub struct CsvSink {
    path: Option<PathBuf>,
    inner: csv::Writer<Box<dyn Write>>,
}

impl CsvSink {
    fn err(&self, e: impl Into<io::Error>) -> CliError {
        let p = self.path.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
        io_err(&p, e.into())
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(|e| self.err(e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(|e| self.err(e))
    }
}

/// Shortest round-trip representation, so outputs are stable byte for byte.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
