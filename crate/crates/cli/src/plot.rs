//! Self-contained SVG rendering of layer curves, delta scatter plots and
//! training curves.
//!
//! Element conventions (relied on by tests): every series of a curve plot
//! is one `<polyline>` plus, with bands on, one `<polygon>`; scatter points
//! are `<circle>`s and the least-squares fit is the only `<line>`. Axes,
//! ticks and legend swatches use `<path>` and `<rect>`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use entgeo::experiment::{delta_points, DeltaPair, DeltaRecord, Stage};
use entgeo::io::{read_deltas, read_summary, read_training};
use entgeo::stats::{linear_fit, mean_std};
use entgeo::{Error, Result};

pub const DEFAULT_POINT_CAP: usize = 5000;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PlotKind {
    LayerCurve,
    DeltaScatter,
    TrainingCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    Entropy,
    Gd,
    Gpf,
}

impl Metric {
    fn label(self) -> &'static str {
        match self {
            Metric::Entropy => "entanglement entropy S_A",
            Metric::Gd => "geodesic distance to target gd (rad)",
            Metric::Gpf => "geometric phase fraction gpf",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
    pub point_cap: usize,
    pub x_label: Option<String>,
    pub y_label: Option<String>,
    pub band: bool,
    pub metric: Metric,
    pub pair: DeltaPair,
    pub stage: Option<Stage>,
    pub exclude_final: bool,
    pub title: Option<String>,
}

impl PlotSpec {
    pub fn new(kind: PlotKind, inputs: Vec<PathBuf>, output: PathBuf) -> Self {
        Self {
            kind,
            inputs,
            output,
            point_cap: DEFAULT_POINT_CAP,
            x_label: None,
            y_label: None,
            band: true,
            metric: Metric::Entropy,
            pair: DeltaPair::EntropyGd,
            stage: None,
            exclude_final: false,
            title: None,
        }
    }
}

struct Series {
    label: String,
    xs: Vec<f64>,
    ys: Vec<f64>,
    band: Option<Vec<f64>>,
}

/// Linear map from data range to pixel range.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(mut lo: f64, mut hi: f64, px_lo: f64, px_hi: f64) -> Self {
        if !(hi - lo).is_normal() || hi <= lo {
            let pad = lo.abs().max(1.0) * 0.05;
            lo -= pad;
            hi += pad;
        } else {
            let pad = (hi - lo) * 0.04;
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi + 1e-12 * step {
            out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
            t += step;
        }
        out
    }
}

fn extent(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Canvas {
    svg: String,
    x: Axis,
    y: Axis,
}

impl Canvas {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        Self {
            svg,
            x: Axis::new(x.0, x.1, MARGIN_L, WIDTH - MARGIN_R),
            y: Axis::new(y.0, y.1, HEIGHT - MARGIN_B, MARGIN_T),
        }
    }

    fn axes(&mut self, x_label: &str, y_label: &str, title: Option<&str>) {
        let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
        let (y0, y1) = (HEIGHT - MARGIN_B, MARGIN_T);
        let mut d = format!("M{x0:.2},{y1:.2} V{y0:.2} H{x1:.2}");
        let mut labels = String::new();
        for t in self.x.ticks() {
            let px = self.x.map(t);
            let _ = write!(d, " M{px:.2},{y0:.2} v5");
            let _ = writeln!(
                labels,
                r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y0 + 18.0,
                fmt_tick(t)
            );
        }
        for t in self.y.ticks() {
            let py = self.y.map(t);
            let _ = write!(d, " M{x0:.2},{py:.2} h-5");
            let _ = writeln!(
                labels,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 8.0,
                py + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(self.svg, r#"<path d="{d}" stroke="black" fill="none"/>"#);
        self.svg.push_str(&labels);
        let _ = writeln!(
            self.svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 14.0,
            escape(x_label)
        );
        let (cx, cy) = (18.0, (y0 + y1) / 2.0);
        let _ = writeln!(
            self.svg,
            r#"<text x="{cx}" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 {cx} {cy:.2})">{}</text>"#,
            escape(y_label)
        );
        if let Some(t) = title {
            let _ = writeln!(
                self.svg,
                r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
                WIDTH / 2.0,
                escape(t)
            );
        }
    }

    fn legend(&mut self, labels: &[String]) {
        for (i, l) in labels.iter().enumerate() {
            let y = MARGIN_T + 8.0 + 18.0 * i as f64;
            let x = WIDTH - MARGIN_R - 170.0;
            let _ = writeln!(
                self.svg,
                r#"<rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                y - 10.0,
                PALETTE[i % PALETTE.len()],
                x + 18.0,
                y,
                escape(l)
            );
        }
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn render_curves(series: &[Series], x_label: &str, y_label: &str, title: Option<&str>) -> Result<String> {
    let xr = extent(series.iter().flat_map(|s| s.xs.iter().copied()));
    let yr = extent(series.iter().flat_map(|s| {
        let band = s.band.clone().unwrap_or_else(|| vec![0.0; s.ys.len()]);
        s.ys.iter().zip(band).flat_map(|(&y, b)| [y - b, y + b]).collect::<Vec<_>>()
    }));
    let (Some(xr), Some(yr)) = (xr, yr) else {
        return Err(Error::InvalidInput("nothing to plot".into()));
    };
    let mut c = Canvas::new(xr, yr);
    c.axes(x_label, y_label, title);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(b) = &s.band {
            let upper = s.xs.iter().zip(&s.ys).zip(b).map(|((&x, &y), &e)| (x, y + e));
            let lower = s.xs.iter().zip(&s.ys).zip(b).rev().map(|((&x, &y), &e)| (x, y - e));
            let pts: Vec<String> = upper
                .chain(lower)
                .map(|(x, y)| format!("{:.2},{:.2}", c.x.map(x), c.y.map(y)))
                .collect();
            let _ = writeln!(
                c.svg,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                pts.join(" ")
            );
        }
        let pts: Vec<String> =
            s.xs.iter()
                .zip(&s.ys)
                .map(|(&x, &y)| format!("{:.2},{:.2}", c.x.map(x), c.y.map(y)))
                .collect();
        let _ = writeln!(
            c.svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            pts.join(" ")
        );
    }
    c.legend(&series.iter().map(|s| s.label.clone()).collect::<Vec<_>>());
    Ok(c.finish())
}

fn series_name(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn layer_curve(spec: &PlotSpec) -> Result<String> {
    let mut series = Vec::new();
    for path in &spec.inputs {
        let rows = read_summary(path)?;
        for stage in [Stage::Init, Stage::Opt] {
            if spec.stage.is_some_and(|s| s != stage) {
                continue;
            }
            let rs: Vec<_> = rows.iter().filter(|r| r.stage == stage).collect();
            if rs.is_empty() {
                continue;
            }
            let (ys, sd): (Vec<f64>, Vec<f64>) = rs
                .iter()
                .map(|r| match spec.metric {
                    Metric::Entropy => (r.mean_entropy, r.std_entropy),
                    Metric::Gd => (r.mean_gd, r.std_gd),
                    Metric::Gpf => (r.mean_gpf, r.std_gpf),
                })
                .unzip();
            series.push(Series {
                label: format!("{} {stage}", series_name(path)),
                xs: rs.iter().map(|r| r.layer as f64).collect(),
                ys,
                band: spec.band.then_some(sd),
            });
        }
    }
    if series.is_empty() {
        return Err(Error::InvalidInput("no summary rows to plot".into()));
    }
    render_curves(
        &series,
        spec.x_label.as_deref().unwrap_or("circuit layer"),
        spec.y_label.as_deref().unwrap_or(spec.metric.label()),
        spec.title.as_deref(),
    )
}

fn training_curve(spec: &PlotSpec) -> Result<String> {
    let mut series = Vec::new();
    for path in &spec.inputs {
        let rows = read_training(path)?;
        let iters = rows.iter().map(|r| r.iter).max();
        let Some(iters) = iters else { continue };
        let mut by_iter = vec![Vec::new(); iters + 1];
        for r in &rows {
            by_iter[r.iter].push(r.energy);
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut sd = Vec::new();
        for (i, es) in by_iter.iter().enumerate() {
            if es.is_empty() {
                continue;
            }
            let (m, s) = mean_std(es)?;
            xs.push(i as f64);
            ys.push(m);
            sd.push(s);
        }
        series.push(Series {
            label: series_name(path),
            xs,
            ys,
            band: spec.band.then_some(sd),
        });
    }
    if series.is_empty() {
        return Err(Error::InvalidInput("no training rows to plot".into()));
    }
    render_curves(
        &series,
        spec.x_label.as_deref().unwrap_or("Adam iteration"),
        spec.y_label.as_deref().unwrap_or("energy"),
        spec.title.as_deref(),
    )
}

/// `(geometric delta, entropy delta)` points with the entropy delta as
/// ordinate, pooled over all inputs.
fn scatter_points(spec: &PlotSpec, deltas: &[DeltaRecord]) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for stage in [Stage::Init, Stage::Opt] {
        if spec.stage.is_some_and(|s| s != stage) {
            continue;
        }
        let (e, g) = delta_points(deltas, stage, spec.pair, spec.exclude_final);
        xs.extend(g);
        ys.extend(e);
    }
    (xs, ys)
}

fn delta_scatter(spec: &PlotSpec) -> Result<String> {
    let mut deltas = Vec::new();
    for path in &spec.inputs {
        deltas.extend(read_deltas(path)?);
    }
    let (xs, ys) = scatter_points(spec, &deltas);
    if xs.is_empty() {
        return Err(Error::InvalidInput("no delta rows to plot".into()));
    }
    let fit = linear_fit(&xs, &ys).ok();
    let (xr, yr) = (extent(xs.iter().copied()).unwrap(), extent(ys.iter().copied()).unwrap());
    let mut c = Canvas::new(xr, yr);
    let x_default = match spec.pair {
        DeltaPair::EntropyGd => "step change in gd (rad)",
        DeltaPair::EntropyGpf => "step change in gpf",
    };
    let title = spec
        .title
        .clone()
        .or_else(|| fit.map(|f| format!("Pearson r = {:.3}, n = {}", f.pearson_r, f.n)));
    c.axes(
        spec.x_label.as_deref().unwrap_or(x_default),
        spec.y_label.as_deref().unwrap_or("step change in S_A"),
        title.as_deref(),
    );
    let n = xs.len();
    let shown = n.min(spec.point_cap.max(1));
    for k in 0..shown {
        let i = k * n / shown;
        let _ = writeln!(
            c.svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}" fill-opacity="0.45"/>"#,
            c.x.map(xs[i]),
            c.y.map(ys[i]),
            PALETTE[0]
        );
    }
    if let Some(f) = fit {
        let (a, b) = (c.x.lo, c.x.hi);
        let _ = writeln!(
            c.svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="2"/>"#,
            c.x.map(a),
            c.y.map(f.slope * a + f.intercept).clamp(0.0, HEIGHT),
            c.x.map(b),
            c.y.map(f.slope * b + f.intercept).clamp(0.0, HEIGHT)
        );
    }
    Ok(c.finish())
}

pub fn render(spec: &PlotSpec) -> Result<String> {
    if spec.inputs.is_empty() {
        return Err(Error::InvalidInput("plot needs at least one input CSV".into()));
    }
    match spec.kind {
        PlotKind::LayerCurve => layer_curve(spec),
        PlotKind::DeltaScatter => delta_scatter(spec),
        PlotKind::TrainingCurve => training_curve(spec),
    }
}

pub fn write(spec: &PlotSpec) -> Result<()> {
    let svg = render(spec)?;
    std::fs::write(&spec.output, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        let a = Axis::new(0.0, 1.0, 0.0, 100.0);
        let t = a.ticks();
        assert!(t.contains(&0.0) && t.contains(&1.0));
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn constant_range_is_widened() {
        let a = Axis::new(2.0, 2.0, 0.0, 100.0);
        assert!(a.hi > a.lo);
        assert!((a.map(2.0) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn tick_labels() {
        assert_eq!(fmt_tick(0.5), "0.5");
        assert_eq!(fmt_tick(2.0), "2");
        assert_eq!(fmt_tick(-0.0), "0");
    }
}
