//! Parameter sweeps over one numeric configuration field.

use rayon::prelude::*;

use crate::config::{with_parameter, LoadedConfig};
use crate::error::CliError;
use crate::scenario::{self, Table};

/// Parses `start:stop:step` (inclusive, tolerant of rounding at `stop`) or
/// a comma-separated list.
pub fn parse_values(spec: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.len() {
        1 => {
            let v: Result<Vec<f64>, String> = spec.split(',').map(num).collect();
            let v = v?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err("values must be finite".into());
            }
            Ok(v)
        }
        3 => {
            let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(a.is_finite() && b.is_finite() && h.is_finite()) || h <= 0.0 || b < a {
                return Err("range needs start <= stop and step > 0".into());
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| a + i as f64 * h).collect())
        }
        _ => Err("expected start:stop:step or a comma-separated list".into()),
    }
}

/// One sweep row: the value, the three summary metrics and a status.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub expectation_deflection: f64,
    pub asymmetry_metric: f64,
    pub deflection_formula: f64,
    pub status: String,
}

fn run_one(base: &LoadedConfig, param: &str, value: f64) -> SweepRow {
    let failed = |status: String| SweepRow {
        value,
        expectation_deflection: f64::NAN,
        asymmetry_metric: f64::NAN,
        deflection_formula: f64::NAN,
        status,
    };
    let cfg = match with_parameter(base, param, value).and_then(LoadedConfig::validated) {
        Ok(c) => c,
        Err(e) => return failed(format!("config: {e}")),
    };
    match scenario::run(&cfg.config) {
        Ok(out) => {
            let s = out.summary;
            let mut notes = Vec::new();
            if let Err(e) = &s.expectation_deflection {
                notes.push(format!("deflection: {e}"));
            }
            if let Err(e) = &s.asymmetry_metric {
                notes.push(format!("asymmetry: {e}"));
            }
            SweepRow {
                value,
                expectation_deflection: s.expectation_deflection.unwrap_or(f64::NAN),
                asymmetry_metric: s.asymmetry_metric.unwrap_or(f64::NAN),
                deflection_formula: s.deflection_formula,
                status: if notes.is_empty() { "ok".into() } else { notes.join("; ") },
            }
        }
        Err(e) => failed(format!("error: {e}")),
    }
}

/// Runs every value, in parallel, keeping input order.
pub fn sweep(base: &LoadedConfig, param: &str, values: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    with_parameter(base, param, values.first().copied().unwrap_or(0.0))?;
    Ok(values.par_iter().map(|&v| run_one(base, param, v)).collect())
}

/// Numeric columns of a sweep; the status column is written separately.
pub fn table(rows: &[SweepRow]) -> Table {
    Table {
        columns: vec![
            "value".into(),
            "expectation_deflection".into(),
            "asymmetry_metric".into(),
            "deflection_formula".into(),
        ],
        rows: rows
            .iter()
            .map(|r| vec![r.value, r.expectation_deflection, r.asymmetry_metric, r.deflection_formula])
            .collect(),
    }
}

pub fn csv_string(rows: &[SweepRow]) -> String {
    let t = table(rows);
    let mut s = t.columns.join(",");
    s.push_str(",status\n");
    for (r, row) in t.rows.iter().zip(rows) {
        let cells: Vec<String> = r.iter().map(|v| crate::output::cell(*v)).collect();
        s.push_str(&cells.join(","));
        s.push_str(&format!(",\"{}\"\n", row.status.replace('"', "'")));
    }
    s
}
