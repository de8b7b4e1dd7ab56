// SPDX-License-Identifier: MIT OR Apache-2.0

//! Result files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentResult;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "both" => Ok(Self::Both),
            _ => Err(Error::validation(format!(
                "unknown output format {s:?} (expected csv, json or both)"
            ))),
        }
    }
}

#[derive(Serialize)]
struct CurveRow<'a> {
    algorithm: &'a str,
    rep: usize,
    t: u64,
    cum_regret: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    algorithm: &'a str,
    mean_final_regret: f64,
    std_final_regret: f64,
    mean_restarts: f64,
    mean_wall_ms: f64,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Runtime(format!("cannot write {}: {other:?}", path.display())),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `curves.csv` and `summary.csv` and/or `results.json` into `dir`,
/// creating it if needed. Returns the paths written.
pub fn emit_results(
    result: &ExperimentResult,
    dir: impl AsRef<Path>,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let curves = dir.join("curves.csv");
        let rows = result.algorithms.iter().flat_map(|a| {
            a.curves.iter().enumerate().flat_map(move |(rep, c)| {
                result.times.iter().zip(c).map(move |(&t, &v)| CurveRow {
                    algorithm: &a.algorithm,
                    rep,
                    t,
                    cum_regret: v,
                })
            })
        });
        write_csv(&curves, rows)?;
        written.push(curves);
        let summary = dir.join("summary.csv");
        write_csv(
            &summary,
            result.algorithms.iter().map(|a| SummaryRow {
                algorithm: &a.algorithm,
                mean_final_regret: a.mean_final_regret,
                std_final_regret: a.std_final_regret,
                mean_restarts: a.mean_restarts,
                mean_wall_ms: a.mean_wall_ms,
            }),
        )?;
        written.push(summary);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let path = dir.join("results.json");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, result)
            .map_err(|e| Error::Runtime(format!("cannot write {}: {e}", path.display())))?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
