//! Machine-readable run reports: the verdict JSON and CSV table files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use szego_core::diagnostics::ConvergenceTable;
use szego_core::spectral::EmpiricalSpectralDistribution;

use crate::error::CliError;

/// One checked invariant. Only enforced invariants gate the exit code;
/// the rest are informational.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub enforced: bool,
    pub pass: bool,
    pub detail: String,
}

impl InvariantResult {
    pub fn enforced(name: &str, pass: bool, detail: String) -> Self {
        InvariantResult {
            name: name.to_string(),
            enforced: true,
            pass,
            detail,
        }
    }

    pub fn informational(name: &str, pass: bool, detail: String) -> Self {
        InvariantResult {
            name: name.to_string(),
            enforced: false,
            pass,
            detail,
        }
    }
}

/// Final run summary, serialized to `verdict.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub experiment: String,
    pub config_hash: String,
    pub library_version: String,
    pub seed: u64,
    pub invariants: Vec<InvariantResult>,
    pub pass: bool,
}

impl Verdict {
    pub fn new(experiment: &str, config_hash: &str, seed: u64, invariants: Vec<InvariantResult>) -> Self {
        let pass = invariants.iter().filter(|i| i.enforced).all(|i| i.pass);
        Verdict {
            experiment: experiment.to_string(),
            config_hash: config_hash.to_string(),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            invariants,
            pass,
        }
    }
}

/// Writes `verdict.json` into the output directory.
pub fn write_verdict(dir: &Path, verdict: &Verdict) -> Result<(), CliError> {
    let file = File::create(dir.join("verdict.json"))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, verdict)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    writeln!(w)?;
    Ok(())
}

/// Writes one or more convergence tables, stacked, into
/// `table_<experiment>.csv`.
pub fn write_tables(dir: &Path, experiment: &str, tables: &[ConvergenceTable]) -> Result<(), CliError> {
    let file = File::create(dir.join(format!("table_{experiment}.csv")))?;
    let mut w = BufWriter::new(file);
    for table in tables {
        table.write_csv(&mut w)?;
    }
    Ok(())
}

/// Writes `esd_N<k>.csv` for one cutoff.
pub fn write_esd(dir: &Path, cutoff: u32, esd: &EmpiricalSpectralDistribution) -> Result<(), CliError> {
    let file = File::create(dir.join(format!("esd_N{cutoff}.csv")))?;
    let mut w = BufWriter::new(file);
    esd.write_csv(&mut w)?;
    Ok(())
}
