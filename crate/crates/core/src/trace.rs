//! Trace CSV files and run-summary documents.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::manifold_fractions;
use crate::bd::BdConfig;
use crate::error::{Error, Result};
use crate::proposals::{MoveType, SamplerParams};
use crate::sampler::{ChainSummary, ChainTrace, StepReason, TraceRecord};

const FIXED_COLUMNS: [&str; 3] = ["step", "manifold_id", "m_L"];

/// Records read back from a trace file.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceTable {
    pub observable_names: Vec<String>,
    pub records: Vec<TraceRecord>,
}

impl TraceTable {
    /// Values of a numeric column (`step`, `m_L` or an observable).
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        match name {
            "step" => Ok(self.records.iter().map(|r| r.step as f64).collect()),
            "m_L" => Ok(self.records.iter().map(|r| r.m_l as f64).collect()),
            _ => {
                let k = self.column_index(name)?;
                Ok(self.records.iter().map(|r| r.observables[k]).collect())
            }
        }
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.observable_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Parse(format!("no column named {name:?}")))
    }

    /// Value of column `name` in `record`, rendered as a category key.
    pub fn key_of(&self, name: &str, record: &TraceRecord) -> Result<String> {
        Ok(match name {
            "manifold_id" => record.manifold_id.clone(),
            "m_L" => record.m_l.to_string(),
            "step" => record.step.to_string(),
            _ => format_value(record.observables[self.column_index(name)?]),
        })
    }
}

/// Integers print without a decimal point, so `level` 10 keys as "10".
pub fn format_value(v: f64) -> String {
    format!("{v}")
}

pub fn write_trace_csv<W: Write>(mut w: W, observable_names: &[String], records: &[TraceRecord]) -> Result<()> {
    let header: Vec<&str> = FIXED_COLUMNS.iter().copied().chain(observable_names.iter().map(String::as_str)).collect();
    writeln!(w, "{}", header.join(","))?;
    for r in records {
        write!(w, "{},{},{}", r.step, r.manifold_id, r.m_l)?;
        for v in &r.observables {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &ChainTrace) -> Result<()> {
    write_trace_csv(BufWriter::new(File::create(path)?), &trace.observable_names, &trace.records)
}

pub fn read_trace_csv<R: BufRead>(r: R) -> Result<TraceTable> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty trace file".into()))??;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 3 || cols[..3] != FIXED_COLUMNS {
        return Err(Error::Parse(format!("trace header must start with step,manifold_id,m_L: {header:?}")));
    }
    let observable_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse(format!("line {}: expected {} fields, got {}", lineno + 2, cols.len(), fields.len())));
        }
        let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 2));
        records.push(TraceRecord {
            step: fields[0].parse().map_err(|_| bad("step"))?,
            manifold_id: fields[1].to_string(),
            m_l: fields[2].parse().map_err(|_| bad("m_L"))?,
            observables: fields[3..].iter().map(|f| f.parse().map_err(|_| bad("observable"))).collect::<Result<_>>()?,
        });
    }
    Ok(TraceTable { observable_names, records })
}

pub fn read_trace_file(path: &Path) -> Result<TraceTable> {
    read_trace_csv(BufReader::new(File::open(path)?))
}

/// Per-chain section of a run summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain: usize,
    pub seed: u64,
    pub trace_file: String,
    pub n_steps: u64,
    pub thin: u64,
    pub n_records: usize,
    pub wall_time_s: f64,
    /// Fraction of recorded states on each manifold.
    pub fractions: BTreeMap<String, f64>,
    pub visits: BTreeMap<String, u64>,
    pub outcomes: BTreeMap<MoveType, BTreeMap<StepReason, u64>>,
    pub rejection_rates: BTreeMap<MoveType, f64>,
}

impl ChainReport {
    pub fn new(chain: usize, trace_file: String, trace: &ChainTrace) -> Self {
        let s: &ChainSummary = &trace.summary;
        ChainReport {
            chain,
            seed: s.seed,
            trace_file,
            n_steps: s.n_steps,
            thin: s.thin,
            n_records: trace.records.len(),
            wall_time_s: s.wall_time_s,
            fractions: manifold_fractions(&trace.records).unwrap_or_default(),
            visits: s.visits.clone(),
            outcomes: s.outcomes.clone(),
            rejection_rates: [MoveType::Same, MoveType::Gain, MoveType::Lose]
                .into_iter()
                .map(|m| (m, s.rejection_rate(m)))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: serde_json::Value,
    /// Present for sampler runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SamplerParams>,
    /// Present for Brownian-dynamics runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bd: Option<BdConfig>,
    pub chains: Vec<ChainReport>,
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, summary)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let names = vec!["x".to_string(), "y".to_string()];
        let records = vec![
            TraceRecord { step: 10, manifold_id: "2".into(), m_l: 1, observables: vec![0.1 + 0.2, -1e-300] },
            TraceRecord { step: 20, manifold_id: "EEI".into(), m_l: 2, observables: vec![std::f64::consts::PI, 3.0] },
        ];
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &names, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,manifold_id,m_L,x,y\n"));
        let table = read_trace_csv(&buf[..]).unwrap();
        assert_eq!(table.records, records);
        assert_eq!(table.column("y").unwrap(), vec![-1e-300, 3.0]);
        assert_eq!(table.key_of("y", &records[1]).unwrap(), "3");
    }

    #[test]
    fn rejects_malformed_traces() {
        assert!(read_trace_csv(&b""[..]).is_err());
        assert!(read_trace_csv(&b"a,b,c\n"[..]).is_err());
        assert!(read_trace_csv(&b"step,manifold_id,m_L,x\n1,0,0\n"[..]).is_err());
        assert!(read_trace_csv(&b"step,manifold_id,m_L\n1,0,z\n"[..]).is_err());
    }

    #[test]
    fn header_only_trace_reads_as_empty() {
        let t = read_trace_csv(&b"step,manifold_id,m_L,level\n"[..]).unwrap();
        assert!(t.records.is_empty());
        assert_eq!(t.observable_names, vec!["level"]);
    }
}
