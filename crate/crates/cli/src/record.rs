use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use persistlab_core::bounds::BoundReport;
use persistlab_core::distributions::DecayReport;
use persistlab_core::montecarlo::{Estimate, ExponentFit};
use persistlab_core::Order;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Summary of an exact table; the full table goes to its own JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDigest {
    pub order: Order,
    pub n_max: usize,
    pub sha256: String,
    /// `(strict, weak)` at `n_max` as reduced fractions.
    pub last: (String, String),
    /// Order 1 only: all residuals zero and the sandwich holds.
    pub identities_hold: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub seconds: f64,
    pub limit_seconds: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "kebab-case")]
pub enum Payload {
    Estimate(Estimate),
    ExactTable(TableDigest),
    Bound(BoundReport),
    Fit(ExponentFit),
    Decay(DecayReport),
    Criterion(CriterionSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub command: String,
    pub config: Value,
    pub payload: Payload,
    pub version: String,
}

impl ResultRecord {
    pub fn new(command: &str, config: Value, payload: Payload) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            timestamp,
            command: command.to_string(),
            config,
            payload,
            version: VERSION.to_string(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(line)?)
    }
}

pub fn append_records(path: &Path, records: &[ResultRecord]) -> Result<(), CliError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    for r in records {
        writeln!(file, "{}", r.to_line())?;
    }
    Ok(())
}

/// Reads estimates from JSON-lines, accepting full records or bare
/// `Estimate` objects. Blank lines are skipped.
pub fn read_estimates(path: &Path) -> Result<Vec<Estimate>, CliError> {
    let file = std::fs::File::open(path)?;
    let mut out = vec![];
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(rec) = ResultRecord::from_line(&line) {
            if let Payload::Estimate(e) = rec.payload {
                out.push(e);
            }
            continue;
        }
        let e: Estimate = serde_json::from_str(&line).map_err(|e| {
            CliError::Usage(format!(
                "{}:{}: not an estimate record: {e}",
                path.display(),
                i + 1
            ))
        })?;
        out.push(e);
    }
    Ok(out)
}
