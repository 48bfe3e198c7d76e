use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use serde::Serialize;

/// Why a command stopped. Each variant has a fixed exit code.
#[derive(Debug)]
pub enum Failure {
    /// A verification ran and did not pass.
    Check(String),
    /// Bad flags, bad values, or an input the library rejected.
    Usage(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        })
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Failure::Io(format!("i/o error on {}: {err}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<medianlab::Error> for Failure {
    fn from(e: medianlab::Error) -> Self {
        match e {
            medianlab::Error::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

/// Six decimals for tables meant to be read.
pub fn human(x: f64) -> String {
    format!("{x:.6}")
}

pub fn human_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), human)
}

/// Where machine-readable output goes: a file, or stdout when no path is given.
pub struct Sink {
    path: Option<PathBuf>,
    inner: Box<dyn Write>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> CliResult<Self> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(io::BufWriter::new(File::create(p).map_err(|e| Failure::io(p, e))?)),
            None => Box::new(io::stdout().lock()),
        };
        Ok(Sink {
            path: path.map(Path::to_path_buf),
            inner,
        })
    }

    fn fail(&self, e: impl fmt::Display) -> Failure {
        match &self.path {
            Some(p) => Failure::io(p, e),
            None => Failure::Io(format!("i/o error on stdout: {e}")),
        }
    }
}

/// Writes rows as CSV with a header line; the header comes from the row
/// type's field names, or from `header` when there are no rows.
pub fn write_csv<T: Serialize>(path: Option<&Path>, header: &[&str], rows: &[T]) -> CliResult {
    let mut sink = Sink::open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).map_err(|e| sink.fail(e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| sink.fail(e))?;
    }
    let bytes = w.into_inner().map_err(|e| sink.fail(e))?;
    sink.inner.write_all(&bytes).map_err(|e| sink.fail(e))?;
    sink.inner.flush().map_err(|e| sink.fail(e))
}

pub fn print_json<T: Serialize>(value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// Left-aligned key/value block.
pub fn print_pairs(pairs: &[(&str, String)]) {
    let width = pairs.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    for (k, v) in pairs {
        println!("{k:<width$}  {v}");
    }
}
