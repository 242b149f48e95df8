//! Table output: CSV plus a gnuplot data file, both under a `#` provenance
//! block.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use crate::config::RunConfig;
use crate::error::CliError;

/// Prefix of the only provenance line that changes between identical runs.
pub const TIMESTAMP_PREFIX: &str = "# generated:";

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub git_revision: String,
    pub timestamp: String,
}

impl Provenance {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            config_sha256: cfg.fingerprint(),
            seed: cfg.seed,
            git_revision: git_revision(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    fn block(&self, table: &str, notes: &[&str]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# table: {table}");
        let _ = writeln!(s, "# config_sha256: {}", self.config_sha256);
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# git_revision: {}", self.git_revision);
        let _ = writeln!(s, "{TIMESTAMP_PREFIX} {}", self.timestamp);
        for n in notes {
            let _ = writeln!(s, "# {n}");
        }
        s
    }
}

fn git_revision() -> String {
    Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

/// Writes tables into one output directory.
pub struct Artifacts {
    dir: PathBuf,
    prov: Provenance,
}

impl Artifacts {
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.out)?;
        Ok(Self {
            dir: cfg.out.clone(),
            prov: Provenance::new(cfg),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `<name>.csv` and `<name>.dat` from CSV bytes (header row
    /// first) and returns the CSV path.
    pub fn emit(&self, name: &str, notes: &[&str], csv: &[u8]) -> Result<PathBuf, CliError> {
        let block = self.prov.block(name, notes);
        let body = String::from_utf8_lossy(csv);
        let csv_path = self.dir.join(format!("{name}.csv"));
        fs::write(&csv_path, format!("{block}{body}"))?;
        fs::write(self.dir.join(format!("{name}.dat")), format!("{block}{}", to_dat(&body)))?;
        Ok(csv_path)
    }

    /// Writes `<name>.csv` only, for tables with text cells.
    pub fn emit_csv(&self, name: &str, notes: &[&str], csv: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{name}.csv"));
        let block = self.prov.block(name, notes);
        fs::write(&path, format!("{block}{}", String::from_utf8_lossy(csv)))?;
        Ok(path)
    }
}

/// Whitespace-separated columns with the header as a comment.
fn to_dat(csv: &str) -> String {
    let mut out = String::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 {
            out.push_str("# ");
        }
        out.push_str(&line.replace(',', " "));
        out.push('\n');
    }
    out
}

/// Small CSV builder for tables assembled in the CLI.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

/// Collect CSV bytes from one of the engine writers.
pub fn capture<F>(write: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> asianhedge::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}
