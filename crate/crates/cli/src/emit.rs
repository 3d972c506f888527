//! Serialization of experiment curves: CSV with `#` metadata lines, JSON,
//! and a dependency-free SVG line plot.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use zeno_core::curve::{ExperimentCurve, PlotHints};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }

    /// Parses a comma-separated subset such as `csv,svg`.
    pub fn parse_list(text: &str) -> Result<Vec<Format>, CliError> {
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let f = match item {
                "csv" => Format::Csv,
                "json" => Format::Json,
                "svg" => Format::Svg,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown format `{other}` (use csv, json, svg)"
                    )))
                }
            };
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if out.is_empty() {
            return Err(CliError::Usage("no output format selected".into()));
        }
        out.sort();
        Ok(out)
    }
}

/// 17 significant digits: enough to round-trip any `f64`.
fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn single_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

pub fn to_csv(curve: &ExperimentCurve) -> String {
    let mut out = String::new();
    for (k, v) in curve.metadata() {
        let _ = writeln!(out, "# {}={}", single_line(k), single_line(v));
    }
    out.push_str(&curve.columns().join(","));
    out.push('\n');
    for row in curve.rows() {
        let cells: Vec<String> = row.iter().map(|&v| number(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<ExperimentCurve, CliError> {
    let bad = |msg: String| CliError::Validation(format!("malformed CSV: {msg}"));
    let mut metadata = BTreeMap::new();
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if let Some(meta) = line.strip_prefix("# ") {
            let (k, v) = meta
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: metadata without `=`", n + 1)))?;
            metadata.insert(k.to_string(), v.to_string());
        } else if columns.is_none() {
            columns = Some(line.split(',').map(str::to_string).collect());
        } else {
            let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            rows.push(row.map_err(|e| bad(format!("line {}: {e}", n + 1)))?);
        }
    }
    let columns = columns.ok_or_else(|| bad("no header row".into()))?;
    Ok(ExperimentCurve::from_parts(columns, rows, metadata)?)
}

pub fn to_json(curve: &ExperimentCurve) -> String {
    let value = serde_json::json!({
        "metadata": curve.metadata(),
        "columns": curve.columns(),
        "rows": curve.rows(),
    });
    let mut s = serde_json::to_string_pretty(&value).expect("curve serializes");
    s.push('\n');
    s
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Axis> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let t = if log { v.log10() } else { v };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if !lo.is_finite() {
            return None;
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-12 {
            let pad = if log { 1.0 } else { lo.abs().max(1.0) * 0.5 };
            lo -= pad;
            hi += pad;
        }
        Some(Axis { log, lo, hi })
    }

    fn transform(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let t = if self.log { v.log10() } else { v };
        Some((t - self.lo) / (self.hi - self.lo))
    }

    /// Tick positions in data units with their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let decades = (self.hi - self.lo).round() as i64;
            let step = ((decades as f64) / 8.0).ceil().max(1.0) as i64;
            (self.lo as i64..=self.hi as i64)
                .filter(|k| (k - self.lo as i64) % step == 0)
                .map(|k| (10f64.powi(k as i32), format!("1e{k}")))
                .collect()
        } else {
            let span = self.hi - self.lo;
            let raw = span / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let decimals = (-step.log10().floor()).max(0.0) as usize;
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last)
                .map(|k| {
                    let v = k as f64 * step;
                    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
                    (v, format!("{v:.decimals$}"))
                })
                .collect()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Line plot of the curve's declared columns; `None` when the curve carries
/// no plot hints or nothing plottable.
pub fn to_svg(curve: &ExperimentCurve) -> Option<String> {
    let hints: &PlotHints = curve.plot()?;
    let xi = curve.column_index(&hints.x_column)?;
    let ys: Vec<(usize, &String)> = hints
        .y_columns
        .iter()
        .filter_map(|c| curve.column_index(c).map(|i| (i, c)))
        .collect();
    if ys.is_empty() {
        return None;
    }
    let xaxis = Axis::fit(curve.rows().iter().map(|r| r[xi]), hints.x_log)?;
    let yaxis = Axis::fit(
        curve
            .rows()
            .iter()
            .flat_map(|r| ys.iter().map(move |(i, _)| r[*i])),
        hints.y_log,
    )?;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |u: f64| LEFT + u * pw;
    let py = |u: f64| TOP + (1.0 - u) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(curve.experiment())
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (v, label) in xaxis.ticks() {
        if let Some(u) = xaxis.transform(v) {
            let x = px(u);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 20.0
            );
        }
    }
    for (v, label) in yaxis.ticks() {
        if let Some(u) = yaxis.transform(v) {
            let y = py(u);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&hints.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&hints.y_label)
    );
    for (k, (col, name)) in ys.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        // break the line wherever a point cannot be drawn (e.g. zero on a log axis)
        let mut segments: Vec<Vec<String>> = vec![Vec::new()];
        for r in curve.rows() {
            match (xaxis.transform(r[xi]), yaxis.transform(r[*col])) {
                (Some(u), Some(v)) => segments.last_mut().expect("nonempty").push(format!(
                    "{:.2},{:.2}",
                    px(u),
                    py(v)
                )),
                _ => {
                    if !segments.last().expect("nonempty").is_empty() {
                        segments.push(Vec::new());
                    }
                }
            }
        }
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            if seg.len() == 1 {
                let (x, y) = seg[0].split_once(',').expect("pair");
                let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2" fill="{color}"/>"#);
            } else {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    seg.join(" ")
                );
            }
        }
        let ly = TOP + 15.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

/// Writes every curve in every requested format to `dir`, named after the
/// curve's `experiment` metadata. Curves without plot hints get no SVG.
pub fn emit(
    curves: &[ExperimentCurve],
    formats: &[Format],
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for curve in curves {
        for &format in formats {
            let body = match format {
                Format::Csv => Some(to_csv(curve)),
                Format::Json => Some(to_json(curve)),
                Format::Svg => to_svg(curve),
            };
            let Some(body) = body else { continue };
            let path = dir.join(format!("{}.{}", curve.experiment(), format.extension()));
            if let Err(e) = fs::write(&path, body) {
                let done: Vec<String> = written
                    .iter()
                    .map(|p: &PathBuf| p.display().to_string())
                    .collect();
                return Err(CliError::Io(format!(
                    "failed writing {}: {e}; files already written: [{}]",
                    path.display(),
                    done.join(", ")
                )));
            }
            written.push(path);
        }
    }
    Ok(written)
}
