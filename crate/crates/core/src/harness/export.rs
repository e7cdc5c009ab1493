//! CSV and JSON output for regret tables, plus curve files for plotting.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::{OutputFormat, RegretRow, RegretTable, RowKind, BENCHMARK_NAME};
use crate::error::{IrsError, Result};

pub const CSV_HEADER: [&str; 8] = [
    "kind",
    "name",
    "T",
    "value",
    "stderr",
    "regret",
    "regret_bound",
    "runtime_ms",
];

fn ser(e: impl std::fmt::Display) -> IrsError {
    IrsError::Serialization(e.to_string())
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn write_rows(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(ser)?;
    for r in rows {
        w.write_record(r).map_err(ser)?;
    }
    String::from_utf8(w.into_inner().map_err(ser)?).map_err(ser)
}

pub fn to_csv(table: &RegretTable) -> Result<String> {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.kind.name().to_string(),
                r.name.clone(),
                r.horizon.to_string(),
                cell(r.value),
                cell(r.stderr),
                cell(r.regret),
                cell(r.regret_bound),
                cell(r.runtime_ms),
            ]
        })
        .collect();
    let header: Vec<String> = CSV_HEADER.iter().map(|s| s.to_string()).collect();
    write_rows(&header, &rows)
}

/// Parses the rows of [`to_csv`] output. Failures are not part of the CSV.
pub fn from_csv(text: &str) -> Result<RegretTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(ser)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(IrsError::Serialization("unexpected CSV header".into()));
    }
    let num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(ser)
        }
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(ser)?;
        let kind = match &rec[0] {
            "policy" => RowKind::Policy,
            "bound" => RowKind::Bound,
            "benchmark" => RowKind::Benchmark,
            other => return Err(IrsError::Serialization(format!("unknown row kind '{other}'"))),
        };
        rows.push(RegretRow {
            kind,
            name: rec[1].to_string(),
            horizon: rec[2].parse().map_err(ser)?,
            value: num(&rec[3])?,
            stderr: num(&rec[4])?,
            regret: num(&rec[5])?,
            regret_bound: num(&rec[6])?,
            runtime_ms: num(&rec[7])?,
        });
    }
    Ok(RegretTable {
        rows,
        failures: Vec::new(),
    })
}

pub fn to_json(table: &RegretTable) -> Result<String> {
    serde_json::to_string_pretty(table).map_err(ser)
}

pub fn from_json(text: &str) -> Result<RegretTable> {
    serde_json::from_str(text).map_err(ser)
}

pub fn render(table: &RegretTable, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => to_csv(table),
        OutputFormat::Json => to_json(table),
    }
}

/// Writes `table` to `path` in `format`.
pub fn export(table: &RegretTable, format: OutputFormat, path: &Path) -> Result<()> {
    fs::write(path, render(table, format)?)?;
    Ok(())
}

/// Wide curve tables: one line per horizon, one column per policy (regret)
/// or penalty (regret bound). Regret is measured against the quadrature
/// benchmark, so curves carry no benchmark noise. Missing cells are empty.
pub fn curves(table: &RegretTable) -> Result<(String, String)> {
    let horizons: BTreeSet<usize> = table.rows.iter().map(|r| r.horizon).collect();
    let build = |kind: RowKind| -> Result<String> {
        let mut names: Vec<&str> = Vec::new();
        for r in table.rows.iter().filter(|r| r.kind == kind) {
            if !names.contains(&r.name.as_str()) {
                names.push(&r.name);
            }
        }
        let mut header = vec!["T".to_string()];
        header.extend(names.iter().map(|n| n.to_string()));
        let mut lines = Vec::new();
        for &t in &horizons {
            let bench = table
                .row(RowKind::Benchmark, BENCHMARK_NAME, t)
                .and_then(|r| r.value);
            let mut line = vec![t.to_string()];
            for n in &names {
                let v = table.row(kind, n, t).and_then(|r| r.value);
                line.push(cell(bench.zip(v).map(|(b, v)| super::round_sig6(b - v))));
            }
            lines.push(line);
        }
        write_rows(&header, &lines)
    };
    Ok((build(RowKind::Policy)?, build(RowKind::Bound)?))
}

/// Writes `regret.csv` and `bounds.csv` into `dir`, creating it if needed.
pub fn write_curves(table: &RegretTable, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let (regret, bounds) = curves(table)?;
    let paths = vec![dir.join("regret.csv"), dir.join("bounds.csv")];
    fs::write(&paths[0], regret)?;
    fs::write(&paths[1], bounds)?;
    Ok(paths)
}
