//! Closed-form solution of the time-reversed influence equation
//!
//! ```text
//! p'(t) = a·p(t) + b·p(−t),   p(0) = c
//! ```
//!
//! Differentiating once and substituting the equation at `−t` gives
//! `p''(t) = (a² − b²)·p(t)` with `p'(0) = (a + b)·c`. Writing `s = a² − b²`
//! and `m = a + b`, every solution is
//!
//! ```text
//! p(t) = c·V(s, t) + m·c·U(s, t)
//! ```
//!
//! where `V` is even and `U` is odd in `t`:
//!
//! | regime      | `V`          | `U`              |
//! |-------------|--------------|------------------|
//! | `s > 0`     | `cosh(√s·t)` | `sinh(√s·t)/√s`  |
//! | `s = 0`     | `1`          | `t`              |
//! | `s < 0`     | `cos(ω·t)`   | `sin(ω·t)/ω`     |
//!
//! Near `s·t² = 0` a truncated Taylor series replaces the quotients, so the
//! evaluation is smooth in `s` across the linear regime.
//!
//! Note that real exponential solutions need `|a| > |b|`; the sign of the
//! discriminant is `a² − b²`, not `b² − a²`.

use crate::error::{Error, Result};
use crate::series::Trajectory;

/// Relative band around `s = 0` treated as the linear regime.
pub const REGIME_TOLERANCE: f64 = 1e-12;

/// Below this value of `|s·t²|` the `V`/`U` pair uses its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-8;

/// Weights of current and historical influence plus the initial influence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Weight of the current influence `p(t)`, per unit time.
    pub a: f64,
    /// Weight of the mirrored influence `p(−t)`, per unit time.
    pub b: f64,
    /// Initial influence `p(0)`.
    pub c: f64,
}

impl ModelParams {
    /// Validated constructor: all fields finite, `c ≥ 0`.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = Self { a, b, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite field in {self:?}")));
        }
        if self.c < 0.0 {
            return Err(Error::InvalidParams(format!("initial influence c = {} is negative", self.c)));
        }
        Ok(())
    }

    /// `a + b`, the initial relative growth rate.
    pub fn growth(&self) -> f64 {
        self.a + self.b
    }

    /// `a − b`.
    pub fn skew(&self) -> f64 {
        self.a - self.b
    }

    /// Rebuilds `(a, b)` from `m = a + b` and `d = a − b`.
    pub fn from_growth_skew(m: f64, d: f64, c: f64) -> Self {
        Self { a: 0.5 * (m + d), b: 0.5 * (m - d), c }
    }
}

/// Discriminant `s = a² − b²` and the associated rate `√|s|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discriminant {
    pub s: f64,
    pub rate: f64,
}

/// Coefficients of `p(t) = w1·e^{rt} + w2·e^{−rt}` in the exponential regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub w1: f64,
    pub w2: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Linear,
    Exponential,
    Oscillatory,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Linear => "Linear",
            Regime::Exponential => "Exponential",
            Regime::Oscillatory => "Oscillatory",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn discriminant(params: &ModelParams) -> Discriminant {
    // (a+b)(a−b) avoids cancellation when |a| ≈ |b|.
    let s = params.growth() * params.skew();
    Discriminant { s, rate: s.abs().sqrt() }
}

/// Classifies the regime with the band `|s| ≤ tol·(1 + a² + b²)` as linear.
pub fn regime_of(params: &ModelParams, tol: f64) -> Regime {
    let s = discriminant(params).s;
    let band = tol * (1.0 + params.a * params.a + params.b * params.b);
    if s.abs() <= band {
        Regime::Linear
    } else if s > 0.0 {
        Regime::Exponential
    } else {
        Regime::Oscillatory
    }
}

/// `w1 = (c/2r)(r + a + b)`, `w2 = (c/2r)(r − a − b)`, `r = √(a² − b²)`.
///
/// Fails with [`Error::NotExponential`] unless `s` lies above the linear band
/// used by [`regime_of`].
pub fn solution_coefficients(params: &ModelParams, tol: f64) -> Result<Coefficients> {
    let d = discriminant(params);
    if regime_of(params, tol) != Regime::Exponential {
        return Err(Error::NotExponential { s: d.s });
    }
    let r = d.rate;
    let m = params.growth();
    let w1 = params.c / (2.0 * r) * (r + m);
    // c − w1 keeps the sum rule within one rounding.
    let w2 = params.c - w1;
    Ok(Coefficients { w1, w2, r })
}

/// The even/odd basis pair `(V, U)` and `s·U` (the derivative of `V`).
#[derive(Debug, Clone, Copy)]
struct Basis {
    v: f64,
    u: f64,
    dv: f64,
}

fn basis(s: f64, t: f64) -> Basis {
    let st2 = s * t * t;
    if st2.abs() < SERIES_THRESHOLD {
        let v = 1.0 + 0.5 * st2;
        let u = t * (1.0 + st2 / 6.0);
        return Basis { v, u, dv: s * u };
    }
    if s > 0.0 {
        let r = s.sqrt();
        let (sh, ch) = ((r * t).sinh(), (r * t).cosh());
        Basis { v: ch, u: sh / r, dv: r * sh }
    } else {
        let w = (-s).sqrt();
        let (sn, cs) = (w * t).sin_cos();
        Basis { v: cs, u: sn / w, dv: -w * sn }
    }
}

/// Value and derivative of the solution with `s`, `m = a + b` and `c` given
/// directly; used by the fitter, which works in those coordinates.
pub(crate) fn eval_smc(s: f64, m: f64, c: f64, t: f64) -> Result<(f64, f64)> {
    let Basis { v, u, dv } = basis(s, t);
    let p = c * v + m * c * u;
    let dp = c * dv + m * c * v;
    if p.is_finite() && dp.is_finite() {
        Ok((p, dp))
    } else {
        Err(Error::Overflow { t })
    }
}

/// `p(t)` for any regime and any finite `t`, negative times included.
pub fn eval_solution(params: &ModelParams, t: f64) -> Result<f64> {
    eval_smc(discriminant(params).s, params.growth(), params.c, t).map(|(p, _)| p)
}

/// `p'(t) = c·s·U + (a + b)·c·V`.
pub fn eval_solution_derivative(params: &ModelParams, t: f64) -> Result<f64> {
    eval_smc(discriminant(params).s, params.growth(), params.c, t).map(|(_, dp)| dp)
}

/// Largest residual `|Δp(t) − a·p(t) − b·p(−t)|` over the interior grid points,
/// with `Δ` the central difference.
///
/// The trajectory grid must be symmetric about `t = 0`.
pub fn fde_residual(params: &ModelParams, trajectory: &Trajectory) -> Result<f64> {
    if !trajectory.is_symmetric() {
        return Err(Error::AsymmetricDomain);
    }
    let p = trajectory.values();
    let n = p.len();
    let h2 = 2.0 * trajectory.step();
    let worst = (1..n.saturating_sub(1))
        .map(|k| {
            let dp = (p[k + 1] - p[k - 1]) / h2;
            (dp - params.a * p[k] - params.b * p[n - 1 - k]).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}
