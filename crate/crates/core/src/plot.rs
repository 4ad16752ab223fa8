//! Standalone SVG 1.1 line and scatter plots, built by string formatting.
//!
//! The root `<svg>` element records the axis transform in three attributes so
//! that rendered coordinates can be mapped back to data:
//!
//! * `data-x-domain="lo hi"` and `data-y-domain="lo hi"`: data bounds of the
//!   plot area (the data bounding box widened by 5% on each side);
//! * `data-plot-box="left top width height"`: the plot area in pixels.
//!
//! `x` grows rightward from `left`; `y` grows upward from `top + height`.

use std::fmt::Write as _;

use crate::analysis::classify_regime;
use crate::error::{Error, Result};
use crate::model::{eval_solution, solution_coefficients, ModelParams, REGIME_TOLERANCE};
use crate::series::{TimeSeries, Trajectory};

const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const DATA_PADDING: f64 = 0.05;
const TICK_TARGET: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub data: TimeSeries,
    pub style: Style,
}

impl PlotSeries {
    pub fn new(label: impl Into<String>, data: TimeSeries, style: Style) -> Self {
        Self { label: label.into(), data, style }
    }

    pub fn from_trajectory(label: impl Into<String>, trajectory: &Trajectory, style: Style) -> Self {
        Self::new(label, trajectory.to_series(), style)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: u32,
    pub height: u32,
    pub series: Vec<PlotSeries>,
}

impl PlotSpec {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: "t".into(), y_label: "p(t)".into(), width: 800, height: 500, series: Vec::new() }
    }

    pub fn with_series(mut self, series: PlotSeries) -> Self {
        self.series.push(series);
        self
    }
}

/// Affine map between data coordinates and pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x_domain: (f64, f64),
    pub y_domain: (f64, f64),
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl Frame {
    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let (x0, x1) = self.x_domain;
        let (y0, y1) = self.y_domain;
        (self.left + (x - x0) / (x1 - x0) * self.width, self.top + self.height - (y - y0) / (y1 - y0) * self.height)
    }

    pub fn from_px(&self, px: f64, py: f64) -> (f64, f64) {
        let (x0, x1) = self.x_domain;
        let (y0, y1) = self.y_domain;
        (x0 + (px - self.left) / self.width * (x1 - x0), y0 + (self.top + self.height - py) / self.height * (y1 - y0))
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    if span > 0.0 {
        (lo - DATA_PADDING * span, hi + DATA_PADDING * span)
    } else {
        let half = if lo == 0.0 { 0.5 } else { 0.5 * lo.abs() };
        (lo - half, hi + half)
    }
}

fn frame_for(spec: &PlotSpec) -> Frame {
    let bounds = |pick: fn((f64, f64)) -> f64| {
        spec.series
            .iter()
            .flat_map(|s| s.data.points())
            .map(pick)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (xl, xh) = bounds(|p| p.0);
    let (yl, yh) = bounds(|p| p.1);
    Frame {
        x_domain: padded(xl, xh),
        y_domain: padded(yl, yh),
        left: MARGIN_LEFT,
        top: MARGIN_TOP,
        width: (f64::from(spec.width) - MARGIN_LEFT - MARGIN_RIGHT).max(10.0),
        height: (f64::from(spec.height) - MARGIN_TOP - MARGIN_BOTTOM).max(10.0),
    }
}

/// Round tick positions inside `[lo, hi]` at a 1/2/5 × 10ᵏ spacing.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / TICK_TARGET as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * magnitude).find(|s| *s >= raw).unwrap_or(10.0 * magnitude);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn tick_label(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    // Avoid "-0" and "-0.0".
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Renders every series onto shared, auto-scaled linear axes with a legend.
/// The same spec always produces the same bytes.
pub fn render_lineplot(spec: &PlotSpec) -> Result<String> {
    if spec.series.is_empty() || spec.series.iter().any(|s| s.data.is_empty()) {
        return Err(Error::EmptySeries);
    }
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::InvalidArgument("plot width and height must be positive".into()));
    }
    let frame = frame_for(spec);
    let (w, h) = (spec.width, spec.height);
    let bottom = frame.top + frame.height;
    let right = frame.left + frame.width;
    let mut svg = String::new();

    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" data-x-domain="{} {}" data-y-domain="{} {}" data-plot-box="{} {} {} {}">"#,
        frame.x_domain.0, frame.x_domain.1, frame.y_domain.0, frame.y_domain.1, frame.left, frame.top, frame.width, frame.height
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        frame.left + frame.width / 2.0,
        escape(&spec.title)
    );

    svg.push_str("<g class=\"axes\" stroke=\"#444444\" stroke-width=\"1\">\n");
    let _ = writeln!(svg, r#"<line x1="{:.3}" y1="{bottom:.3}" x2="{right:.3}" y2="{bottom:.3}"/>"#, frame.left);
    let _ = writeln!(svg, r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{bottom:.3}"/>"#, frame.left, frame.top, frame.left);
    let (xt, xd) = ticks(frame.x_domain.0, frame.x_domain.1);
    for x in &xt {
        let (px, _) = frame.to_px(*x, frame.y_domain.0);
        let _ = writeln!(svg, r#"<line x1="{px:.3}" y1="{bottom:.3}" x2="{px:.3}" y2="{:.3}"/>"#, bottom + 5.0);
    }
    let (yt, yd) = ticks(frame.y_domain.0, frame.y_domain.1);
    for y in &yt {
        let (_, py) = frame.to_px(frame.x_domain.0, *y);
        let _ = writeln!(svg, r#"<line x1="{:.3}" y1="{py:.3}" x2="{:.3}" y2="{py:.3}"/>"#, frame.left - 5.0, frame.left);
    }
    svg.push_str("</g>\n");

    svg.push_str("<g class=\"tick-labels\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#222222\">\n");
    for x in &xt {
        let (px, _) = frame.to_px(*x, frame.y_domain.0);
        let _ = writeln!(svg, r#"<text x="{px:.3}" y="{:.3}" text-anchor="middle">{}</text>"#, bottom + 18.0, tick_label(*x, xd));
    }
    for y in &yt {
        let (_, py) = frame.to_px(frame.x_domain.0, *y);
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#,
            frame.left - 8.0,
            py + 4.0,
            tick_label(*y, yd)
        );
    }
    svg.push_str("</g>\n");

    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        frame.left + frame.width / 2.0,
        f64::from(h) - 10.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {:.1})">{}</text>"#,
        frame.top + frame.height / 2.0,
        frame.top + frame.height / 2.0,
        escape(&spec.y_label)
    );

    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(svg, r#"<g class="series" data-label="{}">"#, escape(&series.label));
        match series.style {
            Style::Line => {
                let points: Vec<String> = series
                    .data
                    .points()
                    .map(|(x, y)| {
                        let (px, py) = frame.to_px(x, y);
                        format!("{px:.3},{py:.3}")
                    })
                    .collect();
                let _ =
                    writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, points.join(" "));
            }
            Style::Scatter => {
                for (x, y) in series.data.points() {
                    let (px, py) = frame.to_px(x, y);
                    let _ = writeln!(svg, r#"<circle cx="{px:.3}" cy="{py:.3}" r="2.5" fill="{color}"/>"#);
                }
            }
        }
        svg.push_str("</g>\n");
    }

    svg.push_str("<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n");
    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = frame.top + 10.0 + 20.0 * i as f64;
        let x = right + 15.0;
        match series.style {
            Style::Line => {
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"/>"#,
                    x + 20.0
                );
            }
            Style::Scatter => {
                let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#, x + 10.0);
            }
        }
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x + 26.0, y + 4.0, escape(&series.label));
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

/// How sweep curves are labelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepLabel {
    /// By the coefficients `(w1, w2)` of the exponential form.
    W1W2Signs,
    /// By the weights `(a, b)`.
    Rate,
}

fn sweep_times(horizon: f64, step: f64) -> Result<Vec<f64>> {
    if !(horizon.is_finite() && horizon > 0.0 && step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!("sweep needs T > 0 and step > 0 (T {horizon}, step {step})")));
    }
    let count = (horizon / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| k as f64 * step).collect())
}

/// `p(t)` for each grid entry, sampled at `0, step, 2·step, … ≤ T`.
pub fn sweep_curves(grid: &[ModelParams], horizon: f64, step: f64) -> Result<Vec<TimeSeries>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let times = sweep_times(horizon, step)?;
    grid.iter()
        .map(|params| {
            params.validate()?;
            let values = times.iter().map(|&t| eval_solution(params, t)).collect::<Result<Vec<_>>>()?;
            TimeSeries::new(times.clone(), values)
        })
        .collect()
}

fn sweep_label(params: &ModelParams, vary: SweepLabel) -> String {
    let weights = format!("a = {}, b = {}", params.a, params.b);
    match vary {
        SweepLabel::Rate => weights,
        SweepLabel::W1W2Signs => match solution_coefficients(params, REGIME_TOLERANCE) {
            Ok(k) => format!("w1 = {:.3}, w2 = {:.3}", k.w1, k.w2),
            Err(_) => format!("{weights} ({})", classify_regime(params, REGIME_TOLERANCE)),
        },
    }
}

/// One solution curve per grid entry on `[0, T]`.
pub fn render_sweep(base: &ModelParams, vary: SweepLabel, grid: &[ModelParams], horizon: f64, step: f64) -> Result<String> {
    let curves = sweep_curves(grid, horizon, step)?;
    let mut spec = PlotSpec::new(format!("Influence sweep around a = {}, b = {}, c = {}", base.a, base.b, base.c));
    for (params, data) in grid.iter().zip(curves) {
        spec.series.push(PlotSeries::new(sweep_label(params, vary), data, Style::Line));
    }
    render_lineplot(&spec)
}
