//! Minimal log-log SVG chart of rates CSV files: one polyline per
//! `(file, space)` series of `mean_sq_dist` against `n`, plus a slope -1
//! guide line.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use barylab::ratelab::RATES_CSV_HEADER;

use crate::error::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Reads the `(n, mean_sq_dist)` series of a rates CSV, one per space.
pub fn read_rates_csv(path: &Path) -> Result<Vec<Series>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(RATES_CSV_HEADER) {
        return Err(CliError::io(path, format!("expected header `{RATES_CSV_HEADER}`")));
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut by_space: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        let bad = || CliError::io(path, format!("malformed row {}", i + 2));
        if cells.len() != 9 {
            return Err(bad());
        }
        let n: f64 = cells[1].parse().map_err(|_| bad())?;
        let y: f64 = cells[3].parse().map_err(|_| bad())?;
        by_space.entry(cells[0].to_string()).or_default().push((n, y));
    }
    Ok(by_space
        .into_iter()
        .map(|(space, points)| Series { label: format!("{stem}: {space}"), points })
        .collect())
}

/// Renders the chart. Points with nonpositive coordinates are dropped.
pub fn render_svg(series: &[Series]) -> Result<String, CliError> {
    let series: Vec<Series> = series
        .iter()
        .map(|s| Series { label: s.label.clone(), points: s.points.iter().copied().filter(|&(x, y)| x > 0.0 && y > 0.0).collect() })
        .filter(|s| !s.points.is_empty())
        .collect();
    if series.is_empty() {
        return Err(CliError::Validation(vec!["no positive data points to plot".into()]));
    }
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    // guide through the first point of the first series
    let (gx, gy) = series[0].points[0];
    let guide = |lx: f64| gy.log10() - (lx - gx.log10());
    y0 = y0.min(guide(x1));
    y1 = y1.max(guide(x0));
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let px = |lx: f64| MARGIN + (lx - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |ly: f64| HEIGHT - MARGIN - (ly - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{b}" x2="{l}" y2="{t}"/></g>"#);
    let _ = writeln!(s, r#"<g class="ticks" font-family="sans-serif" font-size="11">"#);
    for e in x0 as i32..=x1 as i32 {
        let x = px(e as f64);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, b + 5.0, b + 18.0);
    }
    for e in y0 as i32..=y1 as i32 {
        let y = py(e as f64);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, l - 5.0, l - 8.0, y + 4.0);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">n</text>"#, WIDTH / 2.0, HEIGHT - 16.0);
    let _ = writeln!(s, r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">mean squared distance</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
    let _ = writeln!(
        s,
        r##"<line class="guide" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888888" stroke-dasharray="6 4"/>"##,
        px(x0),
        py(guide(x0)),
        px(x1),
        py(guide(x1))
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x.log10()), py(y.log10()))).collect();
        let _ = writeln!(s, r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}" font-family="sans-serif" font-size="11" fill="{color}" text-anchor="end">{}</text>"#, WIDTH - MARGIN, escape(&ser.label));
    }
    let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="#888888" text-anchor="end">slope -1</text>"##, WIDTH - MARGIN, MARGIN + 16.0 * series.len() as f64);
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
