//! Sampled data: observed series and uniform-grid trajectories.

use crate::error::{Error, Result};

/// Ordered `(time, value)` observations with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series, rejecting non-finite entries and non-increasing times.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidArgument(format!("{} times but {} values", times.len(), values.len())));
        }
        for (i, (&t, &v)) in times.iter().zip(&values).enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite sample at index {i}: ({t}, {v})")));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(Error::InvalidArgument(format!(
                    "times must increase strictly (index {i}: {} then {t})",
                    times[i - 1]
                )));
            }
        }
        Ok(Self { times, values })
    }

    pub fn from_points<I: IntoIterator<Item = (f64, f64)>>(points: I) -> Result<Self> {
        let (times, values) = points.into_iter().unzip();
        Self::new(times, values)
    }

    /// Samples `f` at the given times.
    pub fn sample<F: FnMut(f64) -> f64>(times: &[f64], mut f: F) -> Result<Self> {
        Self::new(times.to_vec(), times.iter().map(|&t| f(t)).collect())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Keeps the observations whose time satisfies `keep`.
    pub fn filter_times<F: Fn(f64) -> bool>(&self, keep: F) -> Self {
        let (times, values) = self.points().filter(|&(t, _)| keep(t)).unzip();
        Self { times, values }
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { times: self.times.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Piecewise-linear interpolation inside `[first, last]`.
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        let (lo, hi) = match (self.times.first(), self.times.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::EmptySeries),
        };
        if !(lo..=hi).contains(&t) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 {
            return Ok(self.values[0]);
        }
        if k == self.times.len() {
            return Ok(self.values[k - 1]);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }
}

/// A model solution sampled on the uniform grid `t0 + k·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    h: f64,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(t0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) || !t0.is_finite() {
            return Err(Error::InvalidArgument(format!("trajectory needs finite t0 and h > 0 (t0 = {t0}, h = {h})")));
        }
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Overflow { t: t0 + k as f64 * h });
        }
        Ok(Self { t0, h, values })
    }

    /// Samples `f` on the symmetric grid `-n·h, …, n·h`.
    pub fn sample_symmetric<F: FnMut(f64) -> f64>(half_steps: usize, h: f64, mut f: F) -> Result<Self> {
        let t0 = -(half_steps as f64) * h;
        let values = (0..=2 * half_steps).map(|k| f(t0 + k as f64 * h)).collect();
        Self::new(t0, h, values)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("trajectory is non-empty")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Index of the grid point at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.h;
        let k = x.round();
        if k < 0.0 || k as usize >= self.values.len() || (x - k).abs() > 1e-6 {
            return None;
        }
        Some(k as usize)
    }

    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.index_of(t).map(|k| self.values[k])
    }

    /// Whether the grid is symmetric about `t = 0`, so that sample `k`
    /// mirrors sample `len - 1 - k`.
    pub fn is_symmetric(&self) -> bool {
        let n = self.values.len();
        n % 2 == 1 && (self.t0 + (n - 1) as f64 / 2.0 * self.h).abs() <= 1e-9 * self.h
    }

    pub fn to_series(&self) -> TimeSeries {
        TimeSeries { times: (0..self.values.len()).map(|k| self.time(k)).collect(), values: self.values.clone() }
    }
}

impl From<&Trajectory> for TimeSeries {
    fn from(tr: &Trajectory) -> Self {
        tr.to_series()
    }
}
