//! Parameter estimation for observed influence series.
//!
//! The pipeline has two stages. Finite differences of the observations give
//! rough growth and curvature rates, which seed the parameters. A damped
//! Gauss-Newton iteration then minimises the unweighted residual sum of
//! squares of the closed-form solution against the data.
//!
//! The solution depends on `(a, b)` only through `m = a + b` and
//! `s = a² − b² = m·d` with `d = a − b`, so the iteration runs in `(m, d, c)`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::model::{eval_smc, eval_solution, eval_solution_derivative, ModelParams};
use crate::series::TimeSeries;

/// Smallest positive value accepted as an initial influence when seeding.
const MIN_SEED_INFLUENCE: f64 = 1e-12;

/// Multiplicative damping update and its hard ceiling.
const DAMPING_FACTOR: f64 = 10.0;
const MAX_DAMPING: f64 = 1e20;
const MIN_DAMPING: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Forward,
    Backward,
    Central,
}

/// Derivative estimates from neighbouring samples, using the actual local gaps.
///
/// Forward differences exist at every point but the last, backward at every
/// point but the first, central at interior points. The central estimate is
/// the three-point formula for uneven spacing, which reduces to
/// `(v₊ − v₋)/(t₊ − t₋)` on a uniform grid and is exact for quadratics.
pub fn finite_difference(series: &TimeSeries, scheme: Scheme) -> Result<TimeSeries> {
    let needed = if scheme == Scheme::Central { 3 } else { 2 };
    if series.len() < needed {
        return Err(Error::TooFewPoints { needed, got: series.len() });
    }
    let t = series.times();
    let v = series.values();
    let n = t.len();
    let points: Vec<(f64, f64)> = match scheme {
        Scheme::Forward => (0..n - 1).map(|i| (t[i], (v[i + 1] - v[i]) / (t[i + 1] - t[i]))).collect(),
        Scheme::Backward => (1..n).map(|i| (t[i], (v[i] - v[i - 1]) / (t[i] - t[i - 1]))).collect(),
        Scheme::Central => (1..n - 1).map(|i| (t[i], central_at(t, v, i))).collect(),
    };
    TimeSeries::from_points(points)
}

fn central_at(t: &[f64], v: &[f64], i: usize) -> f64 {
    let h1 = t[i] - t[i - 1];
    let h2 = t[i + 1] - t[i];
    -h2 / (h1 * (h1 + h2)) * v[i - 1] + (h2 - h1) / (h1 * h2) * v[i] + h1 / (h2 * (h1 + h2)) * v[i + 1]
}

fn second_difference_at(t: &[f64], v: &[f64], i: usize) -> f64 {
    let h1 = t[i] - t[i - 1];
    let h2 = t[i + 1] - t[i];
    2.0 * (h1 * v[i + 1] - (h1 + h2) * v[i] + h2 * v[i - 1]) / (h1 * h2 * (h1 + h2))
}

fn check_seedable(series: &TimeSeries) -> Result<()> {
    if series.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: series.len() });
    }
    if series.times()[0] < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "seeding needs observations from t >= 0, first time is {}",
            series.times()[0]
        )));
    }
    if series.values().iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateSeries);
    }
    Ok(())
}

/// Initial growth `m₀ = p'(t₁)/p(t₁)` from the central difference at the
/// second observation.
fn growth_estimate(series: &TimeSeries) -> f64 {
    let (t, v) = (series.times(), series.values());
    if v[1] == 0.0 {
        return 0.0;
    }
    central_at(t, v, 1) / v[1]
}

/// Combines a growth estimate `m` and a discriminant estimate `s` into
/// `(a, b)` via `s = m·d`. The skew is clamped so a near-zero `m` cannot
/// throw the seed far away.
fn seed_from(m: f64, s: f64, c: f64) -> ModelParams {
    if m.abs() < 1e-8 {
        return ModelParams { a: 0.0, b: 0.0, c };
    }
    let limit = 10.0 * (1.0 + m.abs() + s.abs().sqrt());
    let d = (s / m).clamp(-limit, limit);
    ModelParams::from_growth_skew(m, d, c)
}

/// Heuristic starting point for [`fit`].
///
/// `c` is the first observation, the late exponential rate `r₀` comes from
/// the log-ratio of the last two positive values and the initial growth
/// `m₀ = a + b` from the central difference at the second observation. Then
/// `a = (m₀ + r₀²/m₀)/2` and `b = (m₀ − r₀²/m₀)/2`, so that `a + b = m₀` and
/// `a² − b² = r₀²`.
pub fn seed_parameters(series: &TimeSeries) -> Result<ModelParams> {
    check_seedable(series)?;
    let c = series.values()[0].max(MIN_SEED_INFLUENCE);

    let positive: Vec<(f64, f64)> = series.points().filter(|&(_, v)| v > 0.0).collect();
    let r0 = match positive.as_slice() {
        [.., (t1, v1), (t2, v2)] => ((v2 / v1).ln() / (t2 - t1)).abs(),
        _ => 0.0,
    };
    Ok(seed_from(growth_estimate(series), r0 * r0, c))
}

/// Alternative seed reading `s` off the curvature identity `p'' = s·p`,
/// as the least-squares ratio of second differences to values. Unlike the
/// log-ratio seed it can land in the oscillatory regime.
fn curvature_seed(series: &TimeSeries) -> Result<ModelParams> {
    check_seedable(series)?;
    let (t, v) = (series.times(), series.values());
    let (num, den) =
        (1..t.len() - 1).fold((0.0, 0.0), |(num, den), i| (num + second_difference_at(t, v, i) * v[i], den + v[i] * v[i]));
    let s = if den > 0.0 { num / den } else { 0.0 };
    Ok(seed_from(growth_estimate(series), s, v[0].max(MIN_SEED_INFLUENCE)))
}

/// Rates scanned by [`projected_seeds`] on each side of `s = 0`.
const PROJECTION_RATES: usize = 40;

/// Iterations each starting point gets before only the best one continues.
const SCREENING_ITERATIONS: usize = 10;

/// Local minima of the scan kept as starting points.
const PROJECTION_SEEDS: usize = 4;

/// For fixed `s` the solution `c·V(t) + m·c·U(t)` is linear in `(c, m·c)`,
/// so the best `(m, c)` is an exact 2×2 least-squares solve. Returns the
/// seed and its residual, or `None` if `c` would not be positive or `|m|`
/// would exceed `max_growth`.
fn project(series: &TimeSeries, s: f64, max_growth: f64) -> Option<(f64, ModelParams)> {
    let mut basis = Vec::with_capacity(series.len());
    for &t in series.times() {
        let (even, _) = eval_smc(s, 0.0, 1.0, t).ok()?;
        let (both, _) = eval_smc(s, 1.0, 1.0, t).ok()?;
        basis.push((even, both - even));
    }
    let (mut vv, mut vu, mut uu, mut vy, mut uy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&(bv, bu), &y) in basis.iter().zip(series.values()) {
        vv += bv * bv;
        vu += bv * bu;
        uu += bu * bu;
        vy += bv * y;
        uy += bu * y;
    }
    let det = vv * uu - vu * vu;
    if !(det.is_finite() && det > 1e-12 * vv * uu) {
        return None;
    }
    let c = (uu * vy - vu * uy) / det;
    let mc = (vv * uy - vu * vy) / det;
    if !(c > 0.0 && c.is_finite() && mc.is_finite() && mc.abs() <= max_growth * c) {
        return None;
    }
    let residual = basis.iter().zip(series.values()).map(|(&(bv, bu), &y)| (y - c * bv - mc * bu).powi(2)).sum();
    Some((residual, seed_from(mc / c, s, c)))
}

/// Golden-section iterations refining each local minimum of the scan.
const REFINE_ITERATIONS: usize = 40;

/// Seeds from a scan over `s`: exponential rates up to `20/t_max` and
/// oscillatory ones up to `min(40/t_max, Nyquist)`. Each local minimum of
/// the projected residual is refined by golden-section search between its
/// neighbours, and the lowest are returned, best first.
fn projected_seeds(series: &TimeSeries) -> Vec<ModelParams> {
    let t = series.times();
    let t_max = t[t.len() - 1];
    let growth_max = 20.0 / t_max;
    let nyquist = std::f64::consts::PI * (t.len() - 1) as f64 / (2.0 * t_max);
    let wave_max = nyquist.min(40.0 / t_max);
    // f runs from the fastest oscillation (−1) through s = 0 to the fastest
    // growth (+1), linear in the rate on each side.
    let s_at = |f: f64| if f < 0.0 { -(f * wave_max).powi(2) } else { (f * growth_max).powi(2) };
    // A fitted c near zero with m·c held fixed sends m to infinity; such
    // candidates are not usable starting points.
    let max_growth = 2.0 * growth_max.max(wave_max);
    let project = |s: f64| project(series, s, max_growth);
    let residual_at = |f: f64| project(s_at(f)).map_or(f64::INFINITY, |x| x.0);
    let n = PROJECTION_RATES as f64;
    let grid: Vec<f64> = (0..=2 * PROJECTION_RATES).map(|k| (k as f64 - n) / n).collect();
    let scan: Vec<f64> = grid.iter().map(|&f| residual_at(f)).collect();

    let mut minima: Vec<(f64, ModelParams)> = (0..grid.len())
        .filter(|&k| scan[k].is_finite() && (k == 0 || scan[k] <= scan[k - 1]) && (k + 1 == grid.len() || scan[k] <= scan[k + 1]))
        .filter_map(|k| {
            let lo = grid[k.saturating_sub(1)];
            let hi = grid[(k + 1).min(grid.len() - 1)];
            let f = golden_section(residual_at, lo, hi, REFINE_ITERATIONS);
            let refined = project(s_at(f));
            let coarse = project(s_at(grid[k]));
            match (refined, coarse) {
                (Some(r), Some(c)) => Some(if r.0 <= c.0 { r } else { c }),
                (r, c) => r.or(c),
            }
        })
        .collect();
    minima.sort_by(|x, y| x.0.total_cmp(&y.0));
    minima.into_iter().take(PROJECTION_SEEDS).map(|(_, seed)| seed).collect()
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iterations: usize) -> f64 {
    let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iterations {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Bound on the cosine between the residual and every Jacobian column.
    pub gradient_tolerance: f64,
    /// Bound on the accepted step relative to the parameter norm.
    pub step_tolerance: f64,
    /// Starting additive damping of the normal equations.
    pub initial_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 100, gradient_tolerance: 1e-10, step_tolerance: 1e-12, initial_damping: 1e-3 }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if self.max_iterations == 0
            || !positive(self.gradient_tolerance)
            || !positive(self.step_tolerance)
            || !positive(self.initial_damping)
        {
            return Err(Error::InvalidArgument(format!("fit options must all be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    /// Residual sum of squares at `params`.
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The starting point that produced `params`.
    pub seed: ModelParams,
    /// RSS after every accepted step, starting with the seed's.
    pub rss_history: Vec<f64>,
    /// `a + b` vanished, so only the constant solution is identified and the
    /// skew `a − b` is reported as zero.
    pub degenerate_growth: bool,
}

/// Residual sum of squares of `params` against `series`.
pub fn rss(params: &ModelParams, series: &TimeSeries) -> Result<f64> {
    series.points().try_fold(0.0, |acc, (t, v)| {
        let r = v - eval_solution(params, t)?;
        Ok(acc + r * r)
    })
}

/// Working coordinates `(m, d, c)`.
type Theta = Vector3<f64>;

fn to_theta(p: &ModelParams) -> Theta {
    Vector3::new(p.growth(), p.skew(), p.c)
}

fn model_at(theta: &Theta, t: f64) -> Result<f64> {
    let (m, d, c) = (theta[0], theta[1], theta[2]);
    eval_smc(m * d, m, c, t).map(|(p, _)| p)
}

fn rss_theta(theta: &Theta, series: &TimeSeries) -> f64 {
    let mut acc = 0.0;
    for (t, v) in series.points() {
        match model_at(theta, t) {
            Ok(p) => acc += (v - p) * (v - p),
            Err(_) => return f64::INFINITY,
        }
    }
    if acc.is_finite() {
        acc
    } else {
        f64::INFINITY
    }
}

/// Residuals, Jᵀr and JᵀJ at `theta` with a central-difference Jacobian.
struct Linearization {
    gradient: Vector3<f64>,
    normal: Matrix3<f64>,
    column_norms: Vector3<f64>,
}

fn linearize(theta: &Theta, series: &TimeSeries) -> Result<Linearization> {
    let steps = theta.map(|x| 1e-6 * (1.0 + x.abs()));
    let mut gradient = Vector3::zeros();
    let mut normal = Matrix3::zeros();
    for (t, v) in series.points() {
        let r = v - model_at(theta, t)?;
        let mut row = Vector3::zeros();
        for j in 0..3 {
            let mut up = *theta;
            let mut down = *theta;
            up[j] += steps[j];
            down[j] -= steps[j];
            row[j] = (model_at(&up, t)? - model_at(&down, t)?) / (2.0 * steps[j]);
        }
        gradient += row * r;
        normal += row * row.transpose();
    }
    let column_norms = Vector3::new(normal[(0, 0)].sqrt(), normal[(1, 1)].sqrt(), normal[(2, 2)].sqrt());
    Ok(Linearization { gradient, normal, column_norms })
}

/// Projects onto `c ≥ 0`.
fn feasible(mut theta: Theta) -> Theta {
    theta[2] = theta[2].max(0.0);
    theta
}

fn step_is_small(delta: &Theta, theta: &Theta, tol: f64) -> bool {
    delta.norm() <= tol * (theta.norm() + tol)
}

/// Longest accepted step is kept short of this many doublings.
const MAX_EXTRAPOLATIONS: u32 = 8;

/// Keeps doubling an accepted step while the residual keeps falling. In a
/// long, weakly curved valley the Gauss-Newton step is consistently too short
/// and this recovers most of the lost progress.
fn extrapolate(series: &TimeSeries, theta: &Theta, delta: &Theta, mut best: Theta, mut best_rss: f64) -> (Theta, f64) {
    let mut scale = 2.0;
    for _ in 0..MAX_EXTRAPOLATIONS {
        let candidate = feasible(theta + delta * scale);
        let trial = rss_theta(&candidate, series);
        if trial >= best_rss {
            break;
        }
        best = candidate;
        best_rss = trial;
        scale *= 2.0;
    }
    (best, best_rss)
}

/// Damped least squares from one starting point.
fn minimize(series: &TimeSeries, seed: &ModelParams, options: &FitOptions) -> Result<FitResult> {
    descend(series, to_theta(seed), seed, options).map(|(r, _)| r)
}

/// Iterates from `theta`, reporting `seed` as the start. Also returns the
/// final working coordinates so a run can be resumed without rounding.
fn descend(series: &TimeSeries, mut theta: Theta, seed: &ModelParams, options: &FitOptions) -> Result<(FitResult, Theta)> {
    let mut current = rss_theta(&theta, series);
    if !current.is_finite() {
        return Err(Error::Overflow { t: series.times()[series.len() - 1] });
    }
    let scale: f64 = series.values().iter().map(|v| v * v).sum();
    let mut history = vec![current];
    let mut damping = options.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    'outer: while iterations < options.max_iterations {
        if current <= 1e-30 * scale {
            converged = true;
            break;
        }
        let mut lin = linearize(&theta, series)?;
        // At c = 0 with the descent direction pointing to c < 0 the bound is
        // active: c is frozen for this iteration.
        if theta[2] <= 0.0 && lin.gradient[2] < 0.0 {
            lin.gradient[2] = 0.0;
            for j in 0..2 {
                lin.normal[(2, j)] = 0.0;
                lin.normal[(j, 2)] = 0.0;
            }
        }
        let residual_norm = current.sqrt();
        let cosine = (0..3)
            .map(|j| {
                let denom = lin.column_norms[j] * residual_norm;
                if denom > 0.0 {
                    lin.gradient[j].abs() / denom
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if cosine <= options.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        loop {
            let damped = lin.normal + Matrix3::identity() * damping;
            let delta = damped.cholesky().map(|ch| ch.solve(&lin.gradient)).filter(|d| d.iter().all(|x| x.is_finite()));
            let Some(delta) = delta else {
                damping *= DAMPING_FACTOR;
                if damping > MAX_DAMPING {
                    return Err(Error::SingularNormalEquations { iterations, damping });
                }
                continue;
            };
            let candidate = feasible(theta + delta);
            let trial = rss_theta(&candidate, series);
            if trial < current {
                let (candidate, trial) = extrapolate(series, &theta, &delta, candidate, trial);
                theta = candidate;
                current = trial;
                history.push(current);
                damping = (damping / DAMPING_FACTOR).max(MIN_DAMPING);
                if step_is_small(&delta, &theta, options.step_tolerance) {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            // No decrease. A step this small means the minimum is resolved to
            // the requested precision.
            if step_is_small(&delta, &theta, options.step_tolerance) {
                converged = true;
                break 'outer;
            }
            damping *= DAMPING_FACTOR;
            if damping > MAX_DAMPING {
                break 'outer;
            }
        }
    }

    let (mut m, mut d, c) = (theta[0], theta[1], theta[2]);
    let degenerate_growth = m.abs() <= 1e-12 && (m * d).abs() <= 1e-12;
    if degenerate_growth {
        m = 0.0;
        d = 0.0;
    }
    let params = ModelParams::from_growth_skew(m, d, c);
    let result = FitResult {
        params,
        rss: rss(&params, series)?,
        iterations,
        converged,
        seed: *seed,
        rss_history: history,
        degenerate_growth,
    };
    Ok((result, theta))
}

/// Fits `(a, b, c)` to `series` by damped least squares.
///
/// With an explicit `seed` only that start is used. Otherwise the log-ratio
/// seed of [`seed_parameters`], a curvature-based seed and the best points
/// of a scan over `s` are each run for a few iterations, and the one with the
/// lowest RSS is continued. The best parameters found are returned even
/// when `converged` is false.
pub fn fit(series: &TimeSeries, seed: Option<&ModelParams>, options: &FitOptions) -> Result<FitResult> {
    options.validate()?;
    if series.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: series.len() });
    }
    let seeds = match seed {
        Some(s) => vec![*s],
        None => {
            let mut seeds = vec![seed_parameters(series)?, curvature_seed(series)?];
            seeds.extend(projected_seeds(series));
            seeds
        }
    };
    if seeds.len() == 1 {
        return minimize(series, &seeds[0], options);
    }

    // Every start gets a short screening run; only the best is continued.
    let screening = FitOptions { max_iterations: options.max_iterations.min(SCREENING_ITERATIONS), ..*options };
    let mut best: Option<(FitResult, Theta)> = None;
    let mut first_err = None;
    for s in &seeds {
        match descend(series, to_theta(s), s, &screening) {
            Ok((r, theta)) => {
                let better = match &best {
                    None => true,
                    Some((b, _)) => r.rss < b.rss || (!b.converged && r.converged && r.rss <= b.rss),
                };
                if better {
                    best = Some((r, theta));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((screened, theta)) = best else {
        return Err(first_err.expect("at least one seed was tried"));
    };
    if screened.converged || screened.iterations >= options.max_iterations {
        return Ok(screened);
    }
    let remaining = FitOptions { max_iterations: options.max_iterations - screened.iterations, ..*options };
    let (rest, _) = descend(series, theta, &screened.seed, &remaining)?;
    let mut rss_history = screened.rss_history;
    rss_history.extend(rest.rss_history.iter().skip(1));
    Ok(FitResult { iterations: screened.iterations + rest.iterations, rss_history, ..rest })
}

/// Influence and its rate of change on the grid `from + k·step`, `k ≥ 1`,
/// up to `from + horizon`.
pub fn forecast(params: &ModelParams, from: f64, horizon: f64, step: f64) -> Result<(TimeSeries, TimeSeries)> {
    if !(horizon.is_finite() && horizon > 0.0 && step.is_finite() && step > 0.0 && from.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "forecast needs finite from, horizon > 0 and step > 0 (from {from}, horizon {horizon}, step {step})"
        )));
    }
    let count = (horizon / step + 1e-9).floor() as usize;
    let times: Vec<f64> = (1..=count).map(|k| from + k as f64 * step).collect();
    let mut influence = Vec::with_capacity(count);
    let mut rate = Vec::with_capacity(count);
    for &t in &times {
        influence.push(eval_solution(params, t)?);
        rate.push(eval_solution_derivative(params, t)?);
    }
    Ok((TimeSeries::new(times.clone(), influence)?, TimeSeries::new(times, rate)?))
}
