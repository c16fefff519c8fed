//! CSV, SVG and JSON manifest writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::scenario::{PlotSpec, ScenarioOutput, Table};

/// Formats one value the way every CSV cell is written.
pub fn cell(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn csv_string(table: &Table) -> String {
    let mut s = table.columns.join(",");
    s.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| cell(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Reads a CSV written by [`csv_string`] back into a table.
pub fn parse_csv(text: &str) -> Option<Table> {
    let mut lines = text.lines();
    let columns: Vec<String> = lines.next()?.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let row: Option<Vec<f64>> = line.split(',').map(|c| c.parse().ok()).collect();
        let row = row?;
        if row.len() != columns.len() {
            return None;
        }
        rows.push(row);
    }
    Some(Table { columns, rows })
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 86.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        return Some((lo - 0.5, hi + 0.5));
    }
    Some((lo, hi))
}

/// Line plot of the columns named in `spec`, drawn only from `table`.
/// Non-finite values break the line.
pub fn svg_string(table: &Table, spec: &PlotSpec) -> String {
    let x = table.column(&spec.x).unwrap_or_default();
    let ys: Vec<(String, Vec<f64>)> = spec
        .y
        .iter()
        .filter_map(|n| table.column(n).map(|c| (n.clone(), c)))
        .collect();
    let (x0, x1) = range(x.iter().copied()).unwrap_or((0.0, 1.0));
    let (y0, y1) = range(ys.iter().flat_map(|(_, c)| c.iter().copied())).unwrap_or((0.0, 1.0));
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |v: f64| MARGIN_L + (v - x0) / (x1 - x0) * pw;
    let py = |v: f64| MARGIN_T + (y1 - v) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&spec.title)
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.3e}</text>"#,
            px(xv),
            HEIGHT - MARGIN_B + 16.0,
            xv
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3e}</text>"#,
            MARGIN_L - 6.0,
            py(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 10.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(&spec.y_label)
    );

    for (k, (name, col)) in ys.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for (xv, yv) in x.iter().zip(col) {
            if xv.is_finite() && yv.is_finite() {
                let _ = write!(path, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, px(*xv), py(*yv));
                pen_down = true;
            } else {
                pen_down = false;
            }
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            path.trim_end()
        );
        let ly = MARGIN_T + 16.0 + 16.0 * k as f64;
        let lx = MARGIN_L + pw - 200.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 26.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Everything the manifest records besides the output itself.
pub struct RunInfo<'a> {
    pub config: &'a crate::config::ScenarioConfig,
    pub config_text: &'a str,
    pub duration_s: f64,
}

fn object(m: &std::collections::BTreeMap<String, Value>) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.clone(), v.clone())).collect::<Map<_, _>>())
}

pub fn manifest(out: &ScenarioOutput, info: &RunInfo, files: &[String]) -> Value {
    use abwave_core::constants::*;
    json!({
        "name": info.config.name,
        "version": env!("CARGO_PKG_VERSION"),
        "duration_s": info.duration_s,
        "config": info.config,
        "config_text": info.config_text,
        "constants": {
            "planck_j_s": PLANCK,
            "hbar_j_s": HBAR,
            "elementary_charge_c": ELEMENTARY_CHARGE,
            "speed_of_light_m_s": SPEED_OF_LIGHT,
            "electron_mass_kg": ELECTRON_MASS,
        },
        "conventions": {
            "kernel_phase_factor": info.config.kernel().name(),
            "normalization": info.config.normalization().name(),
            "angle_unit": info.config.grid.angle_unit.unit().label(),
            "global_phase": "exp(i k z) omitted",
            "coherence_model": "incoherent Gaussian source convolution, mass conserving",
            "camera_mtf": "not modelled",
            "csv_format": "%.16e",
        },
        "derived": object(&out.derived),
        "metrics": object(&out.metrics),
        "diagnostics": object(&out.diagnostics),
        "files": files,
    })
}

/// Writes the enabled outputs and the manifest into `dir`. Returns the
/// paths written.
pub fn write_all(out: &ScenarioOutput, info: &RunInfo, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = &info.config.name;
    let mut written = Vec::new();
    if info.config.outputs.csv {
        let p = dir.join(format!("{name}.csv"));
        write_file(&p, &csv_string(&out.table))?;
        written.push(p);
    }
    if info.config.outputs.svg {
        let p = dir.join(format!("{name}.svg"));
        write_file(&p, &svg_string(&out.table, &out.plot))?;
        written.push(p);
    }
    let mp = dir.join(format!("{name}.json"));
    let mut files: Vec<String> = written
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    files.push(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&manifest(out, info, &files)).expect("manifest is plain JSON");
    write_file(&mp, &text)?;
    written.push(mp);
    Ok(written)
}
