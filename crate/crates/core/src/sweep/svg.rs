use std::fmt::Write as _;

use super::csv::{format_number, parse_cell, Table};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvgStyle {
    #[default]
    Linear,
    LogY,
}

/// One named sequence of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Picks the series to draw from a CSV table.
///
/// Tables with `n_users`, `rho` and `delta` columns give one `delta` curve per
/// user count. Otherwise the first column is the abscissa and every
/// `p_e_*` column (or, failing that, every other column) is a series.
pub fn series_from_table(table: &Table) -> Result<(String, String, Vec<Series>)> {
    if table.rows.is_empty() {
        return Err(Error::Invalid("nothing to plot: the table has no rows".into()));
    }
    if let (Some(g), Some(x), Some(y)) = (table.column("n_users"), table.column("rho"), table.column("delta")) {
        let mut series: Vec<Series> = Vec::new();
        for row in &table.rows {
            let label = format!("N = {}", row[g]);
            let point = (parse_cell(&row[x])?, parse_cell(&row[y])?);
            let idx = match series.iter().position(|s| s.label == label) {
                Some(i) => i,
                None => {
                    series.push(Series { label, points: Vec::new() });
                    series.len() - 1
                }
            };
            if let (Some(px), Some(py)) = point {
                series[idx].points.push((px, py));
            }
        }
        return Ok(("rho".into(), "delta".into(), series));
    }
    let x_name = table.header[0].clone();
    let mut y_cols: Vec<usize> = (1..table.header.len()).filter(|&i| table.header[i].starts_with("p_e_")).collect();
    if y_cols.is_empty() {
        y_cols = (1..table.header.len()).collect();
    }
    if y_cols.is_empty() {
        return Err(Error::Invalid("nothing to plot: only one column".into()));
    }
    let y_name = if y_cols.iter().all(|&i| table.header[i].starts_with("p_e_")) { "p_e" } else { "value" };
    let mut series = Vec::new();
    for &c in &y_cols {
        let mut points = Vec::new();
        for row in &table.rows {
            if let (Some(px), Some(py)) = (parse_cell(&row[0])?, parse_cell(&row[c])?) {
                points.push((px, py));
            }
        }
        let label = table.header[c].strip_prefix("p_e_").unwrap_or(&table.header[c]).to_string();
        series.push(Series { label, points });
    }
    Ok((x_name, y_name.into(), series))
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = first;
    while t <= hi + 1e-9 * step {
        ticks.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    ticks
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series as a self-contained SVG document.
pub fn render(x_label: &str, y_label: &str, series: &[Series], style: SvgStyle) -> Result<String> {
    let log_y = style == SvgStyle::LogY;
    let usable = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite() && (!log_y || p.1 > 0.0);
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().filter(usable).copied()).collect();
    if all.is_empty() {
        return Err(Error::Invalid("nothing to plot: no finite points".into()));
    }
    let (x0, x1) = extent(all.iter().map(|p| p.0));
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let (mut y0, mut y1) = extent(all.iter().map(|p| ty(p.1)));
    if log_y {
        y0 = y0.floor();
        y1 = y1.ceil().max(y0 + 1.0);
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (ty(y) - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#).ok();
    writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).ok();
    writeln!(w, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#).ok();

    for t in nice_ticks(x0, x1) {
        let x = sx(t);
        writeln!(w, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0).ok();
        writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, format_number(t)).ok();
    }
    let y_ticks: Vec<f64> = if log_y {
        (y0 as i64..=y1 as i64).map(|e| e as f64).collect()
    } else {
        nice_ticks(y0, y1)
    };
    for t in y_ticks {
        let y = TOP + ph - (t - y0) / (y1 - y0) * ph;
        let label = if log_y { format!("1e{}", t as i64) } else { format_number(t) };
        writeln!(w, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0).ok();
        writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, y + 4.0).ok();
    }
    writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0, esc(x_label)).ok();
    writeln!(
        w,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(y_label)
    )
    .ok();

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().filter(usable).map(|&(x, y)| (sx(x), sy(y))).collect();
        match pts.len() {
            0 => {}
            1 => {
                writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#, pts[0].0, pts[0].1).ok();
            }
            _ => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                writeln!(w, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" ")).ok();
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        writeln!(w, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0).ok();
        writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, esc(&s.label)).ok();
    }
    writeln!(w, "</svg>").ok();
    Ok(svg)
}

/// Plots a CSV table produced by one of the sweep commands.
pub fn emit_svg(table: &Table, style: SvgStyle) -> Result<String> {
    let (x, y, series) = series_from_table(table)?;
    render(&x, &y, &series, style)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_gives_marker() {
        let t = Table::parse("rho,p_e_exact\n1,0.1\n").unwrap();
        let svg = emit_svg(&t, SvgStyle::Linear).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn grouped_curves_and_determinism() {
        let text = "n_users,rho,tau_eps,delta\n100,1,1,1.01\n100,2,0.5,2.02\ninf,1,1,1\ninf,2,0.4,2.5\ninf,3,NA,NA\n";
        let t = Table::parse(text).unwrap();
        let a = emit_svg(&t, SvgStyle::Linear).unwrap();
        let b = emit_svg(&Table::parse(text).unwrap(), SvgStyle::Linear).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains("N = inf"));
    }

    #[test]
    fn log_scale_and_empty_input() {
        let t = Table::parse("rho,p_e_exact,p_e_asymptotic\n1,1e-8,2e-8\n2,1e-3,NA\n3,0.5,0.4\n").unwrap();
        let svg = emit_svg(&t, SvgStyle::LogY).unwrap();
        assert!(svg.contains(">1e-8<") && svg.contains(">1e0<"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(emit_svg(&Table::parse("rho,p_e_exact\n").unwrap(), SvgStyle::Linear).is_err());
    }
}
