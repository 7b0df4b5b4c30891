//! On-disk formats: sparse PTM models, topologies, trace CSV.
//!
//! Floats are written in shortest round-trip form so a write/read cycle is
//! bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HpoError, Result};
use crate::hpo::{ExperimentTrace, TraceRow};
use crate::ptm::{Coo, SparsePtm, TopologyGraph};

pub const MODEL_FORMAT: &str = "ptm-delta-coo-v1";
pub const TRACE_HEADER: &str = "epoch,stage,mse,lr";

/// `{"format":"ptm-delta-coo-v1","n":..,"entries":[[i,j,v],...]}`; entries
/// hold `Δ = R - I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub n: usize,
    pub entries: Vec<Coo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
}

impl ModelFile {
    pub fn from_ptm(ptm: &SparsePtm, generator: Option<&str>) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            n: ptm.num_qubits(),
            entries: ptm.delta().to_vec(),
            generator: generator.map(str::to_string),
        }
    }

    /// Rejects unknown formats, duplicate coordinates and nonzero row 0.
    pub fn to_ptm(&self) -> Result<SparsePtm> {
        if self.format != MODEL_FORMAT {
            return Err(HpoError::Validation(format!(
                "format: expected \"{MODEL_FORMAT}\", found \"{}\"",
                self.format
            )));
        }
        SparsePtm::from_entries(self.n, self.entries.clone())
    }
}

pub fn model_to_json(ptm: &SparsePtm, generator: Option<&str>) -> Result<String> {
    Ok(serde_json::to_string(&ModelFile::from_ptm(ptm, generator))?)
}

pub fn model_from_json(text: &str) -> Result<SparsePtm> {
    serde_json::from_str::<ModelFile>(text)?.to_ptm()
}

pub fn write_model(path: &Path, ptm: &SparsePtm, generator: Option<&str>) -> Result<()> {
    fs::write(path, model_to_json(ptm, generator)? + "\n")?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<SparsePtm> {
    model_from_json(&fs::read_to_string(path)?)
}

/// Reads any JSON document, naming the file on failure.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| HpoError::Validation(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn read_topology(path: &Path) -> Result<TopologyGraph> {
    read_json(path)
}

pub fn traces_to_csv(traces: &[&ExperimentTrace]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for trace in traces {
        for row in &trace.rows {
            let _ = writeln!(out, "{},{},{:e},{:e}", row.epoch, trace.stage, row.mse, row.lr);
        }
    }
    out
}

pub fn write_traces(path: &Path, traces: &[&ExperimentTrace]) -> Result<()> {
    fs::write(path, traces_to_csv(traces))?;
    Ok(())
}

/// Parses trace CSV back into `(stage, row)` records.
pub fn parse_trace_csv(text: &str) -> Result<Vec<(String, TraceRow)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(TRACE_HEADER) => {}
        other => {
            return Err(HpoError::Validation(format!("trace header: expected \"{TRACE_HEADER}\", found {other:?}")))
        }
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let bad = || HpoError::Validation(format!("trace line {}: malformed \"{line}\"", k + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad());
            }
            let row = TraceRow {
                epoch: fields[0].parse().map_err(|_| bad())?,
                mse: fields[2].parse().map_err(|_| bad())?,
                lr: fields[3].parse().map_err(|_| bad())?,
            };
            Ok((fields[1].to_string(), row))
        })
        .collect()
}
