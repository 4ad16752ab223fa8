//! Regime classification, dominance of the exponential terms, editor-citation
//! correlation and windowed citation summaries.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{regime_of, solution_coefficients, Coefficients, ModelParams, Regime, REGIME_TOLERANCE};
use crate::series::TimeSeries;

/// Relative gap below which the two exponential terms count as balanced.
const BALANCE_TOLERANCE: f64 = 1e-9;

/// Time keys are matched after rounding to this resolution.
const ALIGNMENT_RESOLUTION: f64 = 1e-9;

/// Outliers deviate from the window mean by more than this many standard
/// deviations.
pub const OUTLIER_SIGMAS: f64 = 2.0;

/// Linear iff `|s| ≤ tol·(1 + a² + b²)`; exponential above the band,
/// oscillatory below.
pub fn classify_regime(params: &ModelParams, tol: f64) -> Regime {
    regime_of(params, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    /// `|w1·e^{rt}|` is larger.
    GrowingTerm,
    /// `|w2·e^{−rt}|` is larger.
    DecayingTerm,
    Balanced,
}

fn exponential_coefficients(params: &ModelParams) -> Result<Coefficients> {
    solution_coefficients(params, REGIME_TOLERANCE)
}

/// Which of the two exponential terms dominates at time `t`.
pub fn dominant_term(params: &ModelParams, t: f64) -> Result<Dominance> {
    let k = exponential_coefficients(params)?;
    // Compare logarithms so that large |r·t| does not overflow.
    let log_term = |w: f64, exponent: f64| if w == 0.0 { f64::NEG_INFINITY } else { w.abs().ln() + exponent };
    let grow = log_term(k.w1, k.r * t);
    let decay = log_term(k.w2, -k.r * t);
    if grow == decay || (grow - decay).abs() < BALANCE_TOLERANCE {
        Ok(Dominance::Balanced)
    } else if grow > decay {
        Ok(Dominance::GrowingTerm)
    } else {
        Ok(Dominance::DecayingTerm)
    }
}

/// The unique time `ln(|w2|/|w1|)/(2r)` at which the two terms have equal
/// magnitude, or `None` when one of them vanishes.
pub fn crossover_time(params: &ModelParams) -> Result<Option<f64>> {
    let k = exponential_coefficients(params)?;
    if k.w1 == 0.0 || k.w2 == 0.0 {
        return Ok(None);
    }
    Ok(Some((k.w2.abs() / k.w1.abs()).ln() / (2.0 * k.r)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    pub slope: f64,
    pub intercept: f64,
    /// Zero by convention when `y` is constant.
    pub pearson: f64,
    pub n: usize,
}

fn time_key(t: f64) -> i64 {
    (t / ALIGNMENT_RESOLUTION).round() as i64
}

/// Pairs of `(x, y)` values observed at the same time.
pub fn align(x: &TimeSeries, y: &TimeSeries) -> Vec<(f64, f64)> {
    let by_time: HashMap<i64, f64> = y.points().map(|(t, v)| (time_key(t), v)).collect();
    x.points().filter_map(|(t, xv)| by_time.get(&time_key(t)).map(|&yv| (xv, yv))).collect()
}

/// Ordinary least squares of `y` on `x` over time-aligned pairs.
pub fn correlate(x: &TimeSeries, y: &TimeSeries) -> Result<CorrelationResult> {
    let pairs = align(x, y);
    let n = pairs.len();
    if n < 2 {
        return Err(Error::TooFewAlignedPoints { got: n });
    }
    let nf = n as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(xv, yv) in &pairs {
        let (dx, dy) = (xv - mean_x, yv - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let slope = sxy / sxx;
    let pearson = if syy == 0.0 { 0.0 } else { (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0) };
    Ok(CorrelationResult { slope, intercept: mean_y - slope * mean_x, pearson, n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub window_start: f64,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
    /// Points with `|v − mean| > 2·stddev`.
    pub outliers: Vec<(f64, f64)>,
}

/// Splits the series into consecutive windows of width `window`, anchored at
/// the first observation, and summarises each non-empty one.
pub fn yearly_summary(series: &TimeSeries, window: f64) -> Result<Vec<SummaryRow>> {
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be > 0, got {window}")));
    }
    let Some(&origin) = series.times().first() else {
        return Err(Error::EmptySeries);
    };

    let mut buckets: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
    for (t, v) in series.points() {
        // Tolerate rounding for times that sit exactly on a boundary.
        let index = ((t - origin) / window + 1e-9).floor() as usize;
        match buckets.last_mut() {
            Some((i, points)) if *i == index => points.push((t, v)),
            _ => buckets.push((index, vec![(t, v)])),
        }
    }

    Ok(buckets
        .into_iter()
        .map(|(index, points)| {
            let count = points.len();
            let mean = points.iter().map(|p| p.1).sum::<f64>() / count as f64;
            let var = points.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / count as f64;
            let stddev = var.sqrt();
            let outliers = points.iter().copied().filter(|&(_, v)| (v - mean).abs() > OUTLIER_SIGMAS * stddev).collect();
            SummaryRow { window_start: origin + index as f64 * window, count, mean, stddev, outliers }
        })
        .collect())
}
