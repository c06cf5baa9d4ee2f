//! File formats: CSV tables with a JSON metadata preamble, and line-delimited
//! JSON run logs.
//!
//! Every file starts with a line describing how it was produced. For CSV this
//! is `# ` followed by a JSON object; for run logs it is a record with
//! `"type": "meta"`. Numbers are written with Rust's shortest round-trip
//! formatting and lines end in `\n` only.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiments::{EntropyRow, HeatmapCell, Histogram, ScanResult};
use crate::problems::InstanceDescriptor;
use crate::strategies::{EsVariant, RunRecord, TracePoint};

/// Placeholder written for undefined values.
pub const UNDEFINED: &str = "NA";

/// Provenance of an output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Absent for commands that draw no random numbers.
    pub seed: Option<u64>,
    pub config: Value,
}

impl Metadata {
    pub fn new(command: impl Into<String>, seed: Option<u64>, config: Value) -> Self {
        Self { tool: "ies".into(), version: env!("CARGO_PKG_VERSION").into(), command: command.into(), seed, config }
    }

    fn preamble(&self) -> Result<String> {
        Ok(format!("# {}\n", serde_json::to_string(self)?))
    }
}

/// Parses the metadata line of a CSV produced by this module.
pub fn read_csv_metadata(text: &str) -> Result<Metadata> {
    let first = text.lines().next().ok_or_else(|| Error::Malformed("empty file".into()))?;
    let json = first.strip_prefix("# ").ok_or_else(|| Error::Malformed("missing '# ' metadata line".into()))?;
    Ok(serde_json::from_str(json)?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| x.to_string())
}

/// A CSV table assembled in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, meta: &Metadata) -> Result<String> {
        let mut out = meta.preamble()?;
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path, meta: &Metadata) -> Result<()> {
        fs::write(path, self.render(meta)?)?;
        Ok(())
    }
}

/// Long format: `series, <params...>, statistic, value, stderr`. The
/// parameter columns are taken from the first row.
pub fn scan_table(rows: &[ScanResult]) -> Result<CsvTable> {
    let names: Vec<String> =
        rows.first().map(|r| r.params.iter().map(|(k, _)| k.clone()).collect()).unwrap_or_default();
    let mut header = vec!["series".to_string()];
    header.extend(names.iter().cloned());
    header.extend(["statistic", "value", "stderr"].map(String::from));
    let mut table = CsvTable::new(header);
    for r in rows {
        if r.params.len() != names.len() || r.params.iter().zip(&names).any(|((k, _), n)| k != n) {
            return Err(Error::Malformed("scan rows have inconsistent parameter columns".into()));
        }
        let mut row = vec![r.series.clone()];
        row.extend(r.params.iter().map(|(_, v)| v.to_string()));
        row.push(r.statistic.clone());
        row.push(opt(r.estimate.map(|e| e.value)));
        row.push(opt(r.estimate.map(|e| e.stderr)));
        table.push(row);
    }
    Ok(table)
}

pub fn heatmap_table(cells: &[HeatmapCell]) -> CsvTable {
    let mut table = CsvTable::new(["series", "theta", "z1", "z2", "count"]);
    for c in cells {
        table.push(vec![
            c.series.clone(),
            c.theta.to_string(),
            c.z1.to_string(),
            c.z2.to_string(),
            c.count.to_string(),
        ]);
    }
    table
}

pub fn histogram_table(h: &Histogram) -> CsvTable {
    let mut table = CsvTable::new(["k", "exact", "approx", "empirical"]);
    for r in &h.rows {
        table.push(vec![r.k.to_string(), r.exact.to_string(), opt(r.approx), r.empirical.to_string()]);
    }
    table
}

pub fn entropy_table(rows: &[EntropyRow]) -> CsvTable {
    let mut table = CsvTable::new(["s", "du", "sb", "tn", "tn_approx", "dg"]);
    for r in rows {
        table.push([r.s, r.du, r.sb, r.tn, r.tn_approx, r.dg].iter().map(f64::to_string).collect());
    }
    table
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LogLine {
    Meta(Metadata),
    Trace {
        run_id: String,
        seed: u64,
        variant: EsVariant,
        instance: String,
        eval: u64,
        best_f: f64,
    },
    Final {
        run_id: String,
        seed: u64,
        variant: EsVariant,
        instance: InstanceDescriptor,
        evaluations: u64,
        best_f: f64,
        best_x: Vec<i64>,
    },
}

/// One `meta` line, one `trace` line per trace point, one `final` line.
pub fn render_run_log(meta: &Metadata, record: &RunRecord) -> Result<String> {
    let key = record.instance.key();
    let mut out = String::new();
    let mut line = |l: &LogLine| -> Result<()> {
        writeln!(out, "{}", serde_json::to_string(l)?).expect("writing to a String cannot fail");
        Ok(())
    };
    line(&LogLine::Meta(meta.clone()))?;
    for t in &record.trace {
        line(&LogLine::Trace {
            run_id: record.run_id.clone(),
            seed: record.seed,
            variant: record.variant,
            instance: key.clone(),
            eval: t.eval,
            best_f: t.best_f,
        })?;
    }
    line(&LogLine::Final {
        run_id: record.run_id.clone(),
        seed: record.seed,
        variant: record.variant,
        instance: record.instance.clone(),
        evaluations: record.evaluations,
        best_f: record.best_f,
        best_x: record.best_x.clone(),
    })?;
    Ok(out)
}

pub fn write_run_log(path: &Path, meta: &Metadata, record: &RunRecord) -> Result<()> {
    fs::write(path, render_run_log(meta, record)?)?;
    Ok(())
}

/// Rebuilds the metadata and run record from a log written by [`render_run_log`].
pub fn parse_run_log(text: &str) -> Result<(Metadata, RunRecord)> {
    let mut meta = None;
    let mut trace = Vec::new();
    let mut fin = None;
    for (no, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let parsed: LogLine =
            serde_json::from_str(raw).map_err(|e| Error::Malformed(format!("line {}: {e}", no + 1)))?;
        match parsed {
            LogLine::Meta(m) => meta = Some(m),
            LogLine::Trace { eval, best_f, .. } => trace.push(TracePoint { eval, best_f }),
            LogLine::Final { run_id, seed, variant, instance, evaluations, best_f, best_x } => {
                fin =
                    Some(RunRecord { run_id, seed, variant, instance, trace: Vec::new(), best_x, best_f, evaluations })
            }
        }
    }
    let meta = meta.ok_or_else(|| Error::Malformed("run log has no meta line".into()))?;
    let mut record = fin.ok_or_else(|| Error::Malformed("run log has no final line".into()))?;
    record.trace = trace;
    Ok((meta, record))
}

pub fn read_run_log(path: &Path) -> Result<(Metadata, RunRecord)> {
    parse_run_log(&fs::read_to_string(path)?)
}
