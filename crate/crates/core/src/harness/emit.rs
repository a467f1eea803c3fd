//! CSV and JSON output. Every float is rounded to 9 significant digits before
//! it is written, so both formats carry the same values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::RunSummary;
use crate::error::{Error, Result};
use crate::metrics::EpisodeMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::config("format", format!("`{other}` is not csv or json"))),
        }
    }
}

/// Rounds to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

pub trait Row: Serialize {
    const HEADER: &'static [&'static str];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub episode: usize,
    pub avg_cost: f64,
    pub cum_power: f64,
    pub cum_latency: f64,
    pub term_reason: String,
}

impl Row for ConvergenceRow {
    const HEADER: &'static [&'static str] = &["episode", "avg_cost", "cum_power", "cum_latency", "term_reason"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub mode: String,
    pub epoch: usize,
    pub mean_cum_power: f64,
    pub mean_cum_latency: f64,
    pub mean_cum_cost: f64,
}

impl Row for ComparisonRow {
    const HEADER: &'static [&'static str] = &["mode", "epoch", "mean_cum_power", "mean_cum_latency", "mean_cum_cost"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub epoch: usize,
    pub mean_cum_cost: f64,
}

impl Row for SweepRow {
    const HEADER: &'static [&'static str] = &["beta", "epoch", "mean_cum_cost"];
}

/// One row per training episode (1-based).
pub fn convergence_rows(episodes: &[EpisodeMetrics]) -> Vec<ConvergenceRow> {
    episodes
        .iter()
        .enumerate()
        .map(|(i, e)| ConvergenceRow {
            episode: i + 1,
            avg_cost: sig9(e.average_cost()),
            cum_power: sig9(e.total_power),
            cum_latency: sig9(e.total_latency),
            term_reason: e.termination.as_str().to_owned(),
        })
        .collect()
}

pub fn comparison_rows(summaries: &[RunSummary]) -> Vec<ComparisonRow> {
    summaries
        .iter()
        .flat_map(|s| {
            (0..s.mean_cum_cost.len()).map(move |k| ComparisonRow {
                mode: s.mode.as_str().to_owned(),
                epoch: k + 1,
                mean_cum_power: sig9(s.mean_cum_power[k]),
                mean_cum_latency: sig9(s.mean_cum_latency[k]),
                mean_cum_cost: sig9(s.mean_cum_cost[k]),
            })
        })
        .collect()
}

pub fn sweep_rows(summaries: &[RunSummary]) -> Vec<SweepRow> {
    summaries
        .iter()
        .flat_map(|s| {
            s.mean_cum_cost.iter().enumerate().map(move |(k, &c)| SweepRow {
                beta: sig9(s.beta),
                epoch: k + 1,
                mean_cum_cost: sig9(c),
            })
        })
        .collect()
}

pub fn emit<T: Row>(rows: &[T], format: Format, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
            w.write_record(T::HEADER)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes any serializable value as pretty JSON.
pub fn emit_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
