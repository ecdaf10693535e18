//! Tabular data files. CSV carries a one-line header whose column names end
//! in their unit; JSON holds the same columns and rows.

use std::fs;
use std::path::Path;

use serde_json::json;

use preset_core::engine::Trajectory;
use preset_core::experiments::{ResetSequence, RethermalizationResult, ScanGrid, TraceResult};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(usize),
    Num(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Num(v) if v.is_finite() => v.to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(v) => v.clone(),
            Value::Num(_) | Value::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Value::Int(v) => json!(v),
            Value::Num(v) if v.is_finite() => json!(v),
            Value::Bool(v) => json!(v),
            Value::Text(v) => json!(v),
            Value::Num(_) | Value::Missing => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, csv::Error> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Value::csv))?;
                }
                Ok(w.into_inner().map_err(|e| e.into_error())?)
            }
            Format::Json => {
                let rows: Vec<Vec<serde_json::Value>> =
                    self.rows.iter().map(|r| r.iter().map(Value::json).collect()).collect();
                let doc = json!({ "columns": self.columns, "rows": rows });
                let mut text = serde_json::to_vec_pretty(&doc).expect("tables always serialize");
                text.push(b'\n');
                Ok(text)
            }
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<(), CliError> {
        let bytes = self
            .render(format)
            .map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))
    }
}

const LEVEL_NAMES: [&str; 3] = ["p_g", "p_e", "p_f"];

fn level_columns(levels: usize) -> impl Iterator<Item = String> {
    LEVEL_NAMES.iter().take(levels).map(|s| s.to_string())
}

/// One row per cell in evaluation order, axis values in their display unit.
pub fn scan_table(grid: &ScanGrid) -> Table {
    let levels = grid.metadata.setup.hilbert.qubit_levels;
    let axis_column = |label: &str, unit: &str| format!("{label}_{unit}");
    let mut columns = vec![
        "ix".to_string(),
        "iy".to_string(),
        axis_column(&grid.x.label, grid.x.unit.label()),
        axis_column(&grid.y.label, grid.y.unit.label()),
        "ok".to_string(),
    ];
    columns.extend(level_columns(levels));
    columns.extend(["n_photons".to_string(), "error".to_string()]);
    let mut table = Table::new(columns);
    for cell in &grid.cells {
        let mut row = vec![
            Value::Int(cell.ix),
            Value::Int(cell.iy),
            Value::Num(grid.x.unit.to_display(grid.x.values[cell.ix])),
            Value::Num(grid.y.unit.to_display(grid.y.values[cell.iy])),
            Value::Bool(cell.ok),
        ];
        row.extend((0..levels).map(|l| cell.population(l).map_or(Value::Missing, Value::Num)));
        row.push(if cell.ok {
            Value::Num(cell.photons)
        } else {
            Value::Missing
        });
        row.push(cell.error.clone().map_or(Value::Missing, Value::Text));
        table.rows.push(row);
    }
    table
}

fn trajectory_table(traj: &Trajectory, extra: &[(&str, &[f64])]) -> Table {
    let levels = traj.hilbert.qubit_levels;
    let mut columns = vec!["t_ns".to_string()];
    columns.extend(level_columns(levels));
    columns.extend(["n_photons".to_string(), "emitted".to_string()]);
    columns.extend(extra.iter().map(|(name, _)| name.to_string()));
    let mut table = Table::new(columns);
    for i in 0..traj.len() {
        // Rounded to 1 fs so sample times print without float noise.
        let mut row = vec![Value::Num((traj.times[i] * 1e15).round() / 1e6)];
        row.extend(traj.qubit[i].iter().map(|&p| Value::Num(p)));
        row.push(Value::Num(traj.photons[i]));
        row.push(Value::Num(traj.emitted[i]));
        row.extend(extra.iter().map(|(_, v)| Value::Num(v[i])));
        table.rows.push(row);
    }
    table
}

/// Trajectory with the closed-form P_e when the trace has one.
pub fn trace_table(result: &TraceResult) -> Table {
    match &result.closed_form {
        Some(cf) => trajectory_table(&result.trajectory, &[("p_e_closed_form", &cf.p_e)]),
        None => trajectory_table(&result.trajectory, &[]),
    }
}

pub fn reset_table(seq: &ResetSequence) -> Table {
    let mut table = Table::new(vec!["cycle".to_string(), "residual".to_string()]);
    for (k, r) in seq.residuals.iter().enumerate() {
        table.rows.push(vec![Value::Int(k + 1), Value::Num(*r)]);
    }
    table
}

/// Trajectory with the fitted exponential for P_e.
pub fn rethermalization_table(result: &RethermalizationResult) -> Table {
    let f = &result.fit;
    let fitted: Vec<f64> = result
        .trajectory
        .times
        .iter()
        .map(|&t| f.asymptote + (f.initial - f.asymptote) * (-t / f.tau).exp())
        .collect();
    trajectory_table(&result.trajectory, &[("p_e_fit", &fitted)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        Table {
            columns: vec!["t_ns".into(), "p_e".into(), "error".into()],
            rows: vec![
                vec![Value::Num(0.0), Value::Num(1.0), Value::Missing],
                vec![Value::Num(0.5), Value::Num(f64::NAN), Value::Text("step, size".into())],
            ],
        }
    }

    #[test]
    fn csv_has_one_header_line_and_blank_missing_values() {
        let text = String::from_utf8(sample().render(Format::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, ["t_ns,p_e,error", "0,1,", "0.5,,\"step, size\""]);
    }

    #[test]
    fn json_mirrors_the_csv_columns() {
        let doc: serde_json::Value = serde_json::from_slice(&sample().render(Format::Json).unwrap()).unwrap();
        assert_eq!(doc["columns"], json!(["t_ns", "p_e", "error"]));
        assert_eq!(doc["rows"][1], json!([0.5, null, "step, size"]));
    }
}
