//! The time-reversed influence model `p'(t) = a·p(t) + b·p(−t)`.
//!
//! * [`model`]: closed-form solution in every regime and a residual check.
//! * [`integrator`]: RK4 solution of the forced equation with goodwill and
//!   control terms.
//! * [`estimation`]: finite differences, seeding, damped least-squares
//!   fitting and forecasting.
//! * [`analysis`]: regime classification, term dominance, correlation and
//!   windowed summaries.
//! * [`dataio`]: `t,value` CSV and TOML model documents.
//! * [`plot`]: SVG line plots and parameter sweeps.

pub mod analysis;
pub mod dataio;
pub mod error;
pub mod estimation;
pub mod integrator;
pub mod model;
pub mod plot;
pub mod series;

pub use analysis::{classify_regime, correlate, dominant_term, yearly_summary, CorrelationResult, Dominance, SummaryRow};
pub use dataio::{
    decode_model_document, encode_model_document, load_timeseries_csv, write_forecast_csv, write_timeseries_csv, ModelDocument,
};
pub use error::{Error, Result};
pub use estimation::{finite_difference, fit, forecast, seed_parameters, FitOptions, FitResult, Scheme};
pub use integrator::{eval_forcing, goodwill_theta, integrate, Eta, ForcingSpec, GoodwillSpec};
pub use model::{
    discriminant, eval_solution, eval_solution_derivative, fde_residual, solution_coefficients, Coefficients, Discriminant,
    ModelParams, Regime, REGIME_TOLERANCE,
};
pub use plot::{render_lineplot, render_sweep, PlotSeries, PlotSpec, Style, SweepLabel};
pub use series::{TimeSeries, Trajectory};
