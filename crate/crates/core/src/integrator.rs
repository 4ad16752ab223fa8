//! Numerical solution of the forced equation
//!
//! ```text
//! p'(t) = a·p(t) + b·p(−t) + g(t),   g = θ + η
//! ```
//!
//! With the mirror variable `q(t) = p(−t)` the pair `(p, q)` obeys the forward
//! system
//!
//! ```text
//! p' =   a·p + b·q + g(t)
//! q' = −(a·q + b·p + g(−t))
//! ```
//!
//! with `p(0) = q(0) = c`. It is integrated on `[0, T]` with fixed-step
//! classical RK4; `p` on `[−T, 0)` is read off `q`.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::series::{TimeSeries, Trajectory};

/// Publisher goodwill `θ(t) = exp(−κ·t) + α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodwillSpec {
    /// Decay rate of the goodwill transient, per unit time.
    pub kappa: f64,
    /// Asymptotic goodwill floor.
    pub alpha: f64,
}

impl GoodwillSpec {
    /// Requires `kappa > 0` and `alpha ≥ 0`.
    pub fn new(kappa: f64, alpha: f64) -> Result<Self> {
        let g = Self { kappa, alpha };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::InvalidParams(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// The editor-reputation / control term `η(t)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Eta {
    #[default]
    Absent,
    Constant(f64),
    /// Linear interpolation in `table`. With `even` set, negative times read
    /// the table at `|t|`; otherwise the table must cover them explicitly.
    Tabulated {
        table: TimeSeries,
        even: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForcingSpec {
    pub theta: Option<GoodwillSpec>,
    pub eta: Eta,
}

impl ForcingSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.theta.is_none() && matches!(self.eta, Eta::Absent)
    }

    /// Checks that a tabulated `η` covers `[−horizon, horizon]`.
    pub fn check_coverage(&self, horizon: f64) -> Result<()> {
        if let Eta::Tabulated { even, .. } = &self.eta {
            let lo = if *even { 0.0 } else { -horizon };
            eval_forcing(self, lo)?;
            eval_forcing(self, horizon)?;
        }
        Ok(())
    }
}

pub fn goodwill_theta(spec: &GoodwillSpec, t: f64) -> f64 {
    (-spec.kappa * t).exp() + spec.alpha
}

/// `θ(t) + η(t)`; absent components contribute zero.
pub fn eval_forcing(forcing: &ForcingSpec, t: f64) -> Result<f64> {
    let theta = forcing.theta.as_ref().map_or(0.0, |g| goodwill_theta(g, t));
    let eta = match &forcing.eta {
        Eta::Absent => 0.0,
        Eta::Constant(v) => *v,
        Eta::Tabulated { table, even } => {
            let at = if *even { t.abs() } else { t };
            table.interpolate(at).map_err(|e| match e {
                // Report the caller's time, not the reflected one.
                Error::OutOfRange { lo, hi, .. } => Error::OutOfRange { t, lo, hi },
                other => other,
            })?
        }
    };
    Ok(theta + eta)
}

/// Forward samples of `p` and of the mirror `q(t) = p(−t)` on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorPair {
    pub h: f64,
    pub forward: Vec<f64>,
    pub mirror: Vec<f64>,
}

impl MirrorPair {
    /// Stitches `p` on `[−T, T]`: the mirror reversed, then the forward half.
    pub fn stitch(&self) -> Result<Trajectory> {
        let n = self.forward.len() - 1;
        let values: Vec<f64> = self.mirror[1..].iter().rev().chain(self.forward.iter()).copied().collect();
        Trajectory::new(-(n as f64) * self.h, self.h, values)
    }
}

/// Number of steps and the effective step for a horizon. A step that does not
/// divide `T` is shrunk to the next size that does.
fn grid(horizon: f64, h: f64) -> Result<(usize, f64)> {
    if !(horizon.is_finite() && horizon > 0.0) || !(h.is_finite() && h > 0.0) || h > horizon {
        return Err(Error::InvalidStep { h, horizon });
    }
    let ratio = horizon / h;
    let nearest = ratio.round();
    let steps = if (ratio - nearest).abs() <= 1e-9 * ratio { nearest } else { ratio.ceil() };
    Ok((steps as usize, horizon / steps))
}

/// Integrates the coupled `(p, q)` system on `[0, T]`.
pub fn integrate_pair(params: &ModelParams, forcing: &ForcingSpec, horizon: f64, h: f64) -> Result<MirrorPair> {
    params.validate()?;
    let (steps, h) = grid(horizon, h)?;
    forcing.check_coverage(horizon)?;

    let (a, b) = (params.a, params.b);
    let zero = forcing.is_zero();
    let g = |t: f64| -> Result<(f64, f64)> {
        if zero {
            Ok((0.0, 0.0))
        } else {
            Ok((eval_forcing(forcing, t)?, eval_forcing(forcing, -t)?))
        }
    };
    let rhs = |p: f64, q: f64, (gp, gm): (f64, f64)| (a * p + b * q + gp, -(a * q + b * p + gm));

    let mut forward = Vec::with_capacity(steps + 1);
    let mut mirror = Vec::with_capacity(steps + 1);
    let (mut p, mut q) = (params.c, params.c);
    forward.push(p);
    mirror.push(q);
    for k in 0..steps {
        let t = k as f64 * h;
        let g0 = g(t)?;
        let gh = g(t + 0.5 * h)?;
        let g1 = g((k + 1) as f64 * h)?;
        let k1 = rhs(p, q, g0);
        let k2 = rhs(p + 0.5 * h * k1.0, q + 0.5 * h * k1.1, gh);
        let k3 = rhs(p + 0.5 * h * k2.0, q + 0.5 * h * k2.1, gh);
        let k4 = rhs(p + h * k3.0, q + h * k3.1, g1);
        p += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        q += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(p.is_finite() && q.is_finite()) {
            return Err(Error::Overflow { t: (k + 1) as f64 * h });
        }
        forward.push(p);
        mirror.push(q);
    }
    Ok(MirrorPair { h, forward, mirror })
}

/// `p` on `[−T, T]` with `p(0) = c`.
///
/// The returned step equals `h` when it divides `T`, otherwise the largest
/// step below `h` that does.
pub fn integrate(params: &ModelParams, forcing: &ForcingSpec, horizon: f64, h: f64) -> Result<Trajectory> {
    integrate_pair(params, forcing, horizon, h)?.stitch()
}
