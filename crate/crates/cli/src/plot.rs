//! Deterministic SVG figures drawn from result CSVs.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use suvsim_core::fit::fit_line;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Collapse,
    Reorient,
    LimitScan,
    Pencil,
    Trajectory,
    Bath,
    Quench,
}

impl PlotKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "collapse" => PlotKind::Collapse,
            "reorient" => PlotKind::Reorient,
            "limit-scan" => PlotKind::LimitScan,
            "pencil" => PlotKind::Pencil,
            "trajectory" => PlotKind::Trajectory,
            "bath" => PlotKind::Bath,
            "quench" => PlotKind::Quench,
            _ => bail!("unknown plot kind {s:?}"),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Style {
    Line,
    Points,
    Dashed,
}

#[derive(Clone, Debug)]
struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    style: Style,
}

#[derive(Clone, Debug)]
struct Heatmap {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `values[j][i]` at `(xs[i], ys[j])`.
    values: Vec<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, Default)]
struct Figure {
    title: String,
    x_label: String,
    y_label: String,
    x_log: bool,
    y_log: bool,
    series: Vec<Series>,
    heat: Option<Heatmap>,
}

/// A parsed CSV: header plus string cells.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .with_context(|| format!("parsing {}", path.display()))?;
        Ok(Self { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| anyhow!("column {name:?} missing"))
    }

    /// Column as numbers; blank cells become `None`.
    fn numbers(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let c = self.col(name)?;
        self.rows
            .iter()
            .map(|r| {
                let cell = r.get(c).map(String::as_str).unwrap_or("");
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).map_err(|_| anyhow!("bad number {cell:?} in column {name:?}"))
                }
            })
            .collect()
    }
}

fn distinct(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut d: Vec<f64> = v.into_iter().filter(|x| x.is_finite()).collect();
    d.sort_by(f64::total_cmp);
    d.dedup();
    d
}

fn scaling_figure(
    t: &Table,
    time_col: &str,
    x_of: impl Fn(f64, f64) -> f64,
    title: &str,
    x_label: &str,
    y_label: &str,
) -> Result<Figure> {
    let ns = t.numbers("N")?;
    let eps = t.numbers("epsilon")?;
    let times = t.numbers(time_col)?;
    let mut fig = Figure {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        x_log: true,
        y_log: true,
        ..Default::default()
    };
    let mut all = Vec::new();
    for n in distinct(ns.iter().flatten().copied()) {
        let pts: Vec<(f64, f64)> = (0..t.rows.len())
            .filter(|&k| ns[k] == Some(n))
            .filter_map(|k| Some((x_of(n, eps[k]?), times[k]?)))
            .filter(|&(x, y)| x > 0.0 && y > 0.0)
            .collect();
        all.extend(pts.iter().copied());
        fig.series.push(Series { label: format!("N = {n}"), points: pts, style: Style::Points });
    }
    if all.len() >= 2 {
        let xs: Vec<f64> = all.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = all.iter().map(|p| p.1.ln()).collect();
        if let Ok(f) = fit_line(&xs, &ys) {
            let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            let line = [lo, hi].iter().map(|&x| (x.exp(), (f.intercept + f.slope * x).exp())).collect();
            fig.series.push(Series { label: format!("fit, slope {:.3}", f.slope), points: line, style: Style::Dashed });
        }
    }
    Ok(fig)
}

fn heat_figure(t: &Table, x: &str, y: &str, v: &str, title: &str) -> Result<Figure> {
    let xs_all = t.numbers(x)?;
    let ys_all = t.numbers(y)?;
    let vs = t.numbers(v)?;
    let xs = distinct(xs_all.iter().flatten().copied());
    let ys = distinct(ys_all.iter().flatten().copied());
    let mut values = vec![vec![None; xs.len()]; ys.len()];
    for k in 0..t.rows.len() {
        if let (Some(a), Some(b)) = (xs_all[k], ys_all[k]) {
            let i = xs.iter().position(|&q| q == a).unwrap();
            let j = ys.iter().position(|&q| q == b).unwrap();
            values[j][i] = vs[k];
        }
    }
    Ok(Figure {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        heat: Some(Heatmap { xs, ys, values }),
        ..Default::default()
    })
}

fn time_figure(t: &Table, cols: &[(&str, Style)], title: &str, y_label: &str) -> Result<Figure> {
    let ts = t.numbers("t")?;
    let mut fig = Figure { title: title.into(), x_label: "t".into(), y_label: y_label.into(), ..Default::default() };
    for &(c, style) in cols {
        let ys = t.numbers(c)?;
        let points = ts.iter().zip(&ys).filter_map(|(a, b)| Some(((*a)?, (*b)?))).collect();
        fig.series.push(Series { label: c.into(), points, style });
    }
    Ok(fig)
}

/// Renders one CSV into an SVG document.
pub fn render(kind: PlotKind, input: &Path) -> Result<String> {
    let t = Table::read(input)?;
    let fig = match kind {
        PlotKind::Collapse => {
            scaling_figure(&t, "t_c", |n, e| e * n, "Collapse time", "epsilon * N", "t_c")?
        }
        PlotKind::Reorient => scaling_figure(&t, "t_r", |_, e| e, "Reorientation time", "epsilon", "t_r")?,
        PlotKind::LimitScan => heat_figure(&t, "N", "B", "op_modulus", "Order parameter |<e^{i theta}>|")?,
        PlotKind::Pencil => heat_figure(&t, "b", "phi0", "final_ratio", "Final r / r_max")?,
        PlotKind::Trajectory => time_figure(&t, &[("op_modulus", Style::Line)], "Order parameter", "|<O>|")?,
        PlotKind::Bath => {
            let mut cols = vec![("coherence", Style::Line), ("purity_reduced", Style::Line)];
            if t.numbers("coherence_closed_form").map(|v| v.iter().any(Option::is_some)).unwrap_or(false) {
                cols.push(("coherence_closed_form", Style::Dashed));
            }
            time_figure(&t, &cols, "Dephasing", "value")?
        }
        PlotKind::Quench => time_figure(&t, &[("m_x", Style::Line), ("p", Style::Dashed)], "Ramp", "value")?,
    };
    Ok(draw(&fig))
}

pub fn emit_plot(kind: PlotKind, input: &Path, output: &Path) -> Result<()> {
    let svg = render(kind, input)?;
    std::fs::write(output, svg).with_context(|| format!("writing {}", output.display()))
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let vals: Vec<f64> = values.filter(|v| v.is_finite() && (!log || *v > 0.0)).collect();
        let (mut lo, mut hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if vals.is_empty() {
            (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
        }
        if log {
            lo = 10f64.powf(lo.log10().floor());
            hi = 10f64.powf(hi.log10().ceil());
            if hi <= lo {
                hi = lo * 10.0;
            }
        } else {
            if hi <= lo {
                let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
                lo -= pad;
                hi += pad;
            }
            let span = hi - lo;
            lo -= 0.05 * span;
            hi += 0.05 * span;
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().round() as i32, self.hi.log10().round() as i32);
            let step = ((b - a) / 8).max(1);
            (a..=b).step_by(step as usize).map(|k| 10f64.powi(k)).collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last).map(|k| k as f64 * step).collect()
        }
    }
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.log10().round() as i32)
    } else if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn colour(v: f64) -> String {
    // Dark blue at 0 to yellow at 1.
    let v = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(40.0, 250.0), lerp(30.0, 220.0), lerp(120.0, 40.0))
}

fn draw(fig: &Figure) -> String {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(&fig.title));
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 16.0,
        escape(&fig.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&fig.y_label)
    );

    if let Some(h) = &fig.heat {
        draw_heat(&mut s, h, pw, ph);
    } else {
        draw_xy(&mut s, fig, pw, ph);
    }
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    s.push_str("</svg>\n");
    s
}

fn draw_xy(s: &mut String, fig: &Figure, pw: f64, ph: f64) {
    let xa = Axis::fit(fig.series.iter().flat_map(|r| r.points.iter().map(|p| p.0)), fig.x_log);
    let ya = Axis::fit(fig.series.iter().flat_map(|r| r.points.iter().map(|p| p.1)), fig.y_log);
    let px = |v: f64| LEFT + xa.frac(v) * pw;
    let py = |v: f64| TOP + (1.0 - ya.frac(v)) * ph;
    for t in xa.ticks() {
        let x = px(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{TOP}" stroke="#e0e0e0"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, tick_label(t, xa.log));
    }
    for t in ya.ticks() {
        let y = py(t);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(t, ya.log));
    }
    let visible = |p: &(f64, f64)| p.0.is_finite() && p.1.is_finite() && (!xa.log || p.0 > 0.0) && (!ya.log || p.1 > 0.0);
    for (k, sr) in fig.series.iter().enumerate() {
        let c = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = sr.points.iter().filter(|p| visible(p)).map(|&(x, y)| (px(x), py(y))).collect();
        match sr.style {
            Style::Points => {
                for (x, y) in &pts {
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{c}"/>"#);
                }
            }
            Style::Line | Style::Dashed if !pts.is_empty() => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let dash = if sr.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"{dash}/>"#, path.join(" "));
            }
            _ => {}
        }
        let ly = TOP + 16.0 + 16.0 * k as f64;
        let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{c}"/>"#, LEFT + 10.0, ly - 9.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, LEFT + 26.0, escape(&sr.label));
    }
}

fn draw_heat(s: &mut String, h: &Heatmap, pw: f64, ph: f64) {
    let (nx, ny) = (h.xs.len().max(1) as f64, h.ys.len().max(1) as f64);
    let (cw, chh) = (pw / nx, ph / ny);
    for (j, row) in h.values.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            let x = LEFT + i as f64 * cw;
            let y = TOP + ph - (j as f64 + 1.0) * chh;
            let fill = v.filter(|x| x.is_finite()).map_or_else(|| "#bbbbbb".to_string(), colour);
            let _ = writeln!(s, r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{chh:.2}" fill="{fill}"/>"#);
            if let Some(v) = v {
                let _ = writeln!(
                    s,
                    r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10" fill="{}">{}</text>"##,
                    x + cw / 2.0,
                    y + chh / 2.0 + 4.0,
                    if *v > 0.6 { "#000000" } else { "#ffffff" },
                    tick_label(*v, false)
                );
            }
        }
    }
    for (i, x) in h.xs.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + (i as f64 + 0.5) * cw,
            TOP + ph + 16.0,
            tick_label(*x, false)
        );
    }
    for (j, y) in h.ys.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            TOP + ph - (j as f64 + 0.5) * chh + 4.0,
            tick_label(*y, false)
        );
    }
}
