//! Time-series CSV and model documents.
//!
//! CSV files carry the header `t,value` followed by one `time,value` record
//! per line (UTF-8, LF or CRLF, `.` as decimal point, no comments). Values are
//! written in shortest round-trip form, so a write/read cycle is exact.
//!
//! Model documents are TOML:
//!
//! ```toml
//! a = 0.8
//! b = 0.3
//! c = 1.0
//!
//! [forcing]          # optional
//! kappa = 1.0        # goodwill decay rate, > 0 (with alpha)
//! alpha = 0.5        # goodwill floor, >= 0 (with kappa)
//! eta = 2.0          # constant, or [[t, v], ...], or { points = [[t, v], ...], even = true }
//!
//! [metadata]         # optional, string values
//! source = "synthetic"
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::integrator::{Eta, ForcingSpec, GoodwillSpec};
use crate::model::ModelParams;
use crate::series::TimeSeries;

pub const CSV_HEADER: &str = "t,value";

fn parse_number(field: &str, line: usize, what: &str) -> Result<f64> {
    let x: f64 =
        field.parse().map_err(|_| Error::NonNumericField { line, reason: format!("{what} `{field}` is not a number") })?;
    if !x.is_finite() {
        return Err(Error::NonNumericField { line, reason: format!("{what} `{field}` is not finite") });
    }
    Ok(x)
}

/// Parses a `t,value` CSV body. Line numbers in errors are 1-based, the
/// header being line 1.
pub fn load_timeseries_csv(text: &str) -> Result<TimeSeries> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let header = header.strip_prefix('\u{feff}').unwrap_or(header);
    if header != CSV_HEADER {
        return Err(Error::MalformedHeader { found: header.to_string() });
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (offset, record) in lines.enumerate() {
        let line = offset + 2;
        let mut fields = record.split(',');
        let (Some(t), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::NonNumericField { line, reason: format!("expected 2 fields in `{record}`") });
        };
        let t = parse_number(t, line, "time")?;
        let v = parse_number(v, line, "value")?;
        if times.last().is_some_and(|&prev| t <= prev) {
            return Err(Error::NonMonotonicTime { line });
        }
        times.push(t);
        values.push(v);
    }
    if times.is_empty() {
        return Err(Error::EmptyBody);
    }
    TimeSeries::new(times, values)
}

/// Renders a series in the format read by [`load_timeseries_csv`].
pub fn write_timeseries_csv(series: &TimeSeries) -> Result<String> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut out = String::with_capacity(16 * (series.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (t, v) in series.points() {
        let _ = writeln!(out, "{t},{v}");
    }
    Ok(out)
}

/// Forecast CSV: `t,value,rate`, a superset of the base schema.
pub fn write_forecast_csv(influence: &TimeSeries, rate: &TimeSeries) -> Result<String> {
    if influence.is_empty() {
        return Err(Error::EmptySeries);
    }
    if influence.times() != rate.times() {
        return Err(Error::InvalidArgument("influence and rate must share a time grid".into()));
    }
    let mut out = String::from("t,value,rate\n");
    for ((t, v), r) in influence.points().zip(rate.values()) {
        let _ = writeln!(out, "{t},{v},{r}");
    }
    Ok(out)
}

/// Parameters, optional forcing and free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub params: ModelParams,
    pub forcing: Option<ForcingSpec>,
    pub metadata: BTreeMap<String, String>,
}

impl ModelDocument {
    pub fn new(params: ModelParams) -> Self {
        Self { params, forcing: None, metadata: BTreeMap::new() }
    }

    pub fn forcing_or_none(&self) -> ForcingSpec {
        self.forcing.clone().unwrap_or_default()
    }
}

fn mismatch(path: &str, reason: impl Into<String>) -> Error {
    Error::TypeMismatch { path: path.to_string(), reason: reason.into() }
}

fn number(value: &Value, path: &str) -> Result<f64> {
    let x = match value {
        Value::Float(x) => *x,
        Value::Integer(i) => *i as f64,
        other => return Err(mismatch(path, format!("expected a number, found {}", other.type_str()))),
    };
    if !x.is_finite() {
        return Err(mismatch(path, "number must be finite"));
    }
    Ok(x)
}

fn reject_unknown(table: &Table, allowed: &[&str], prefix: &str) -> Result<()> {
    match table.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::UnknownField { path: format!("{prefix}{k}") }),
        None => Ok(()),
    }
}

fn required_number(table: &Table, key: &str, path: &str) -> Result<f64> {
    let value = table.get(key).ok_or_else(|| Error::MissingField { path: path.to_string() })?;
    number(value, path)
}

fn decode_points(value: &Value, path: &str) -> Result<TimeSeries> {
    let Value::Array(rows) = value else {
        return Err(mismatch(path, format!("expected an array of [t, v] pairs, found {}", value.type_str())));
    };
    let mut points = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let row_path = format!("{path}[{i}]");
        match row.as_array().map(Vec::as_slice) {
            Some([t, v]) => points.push((number(t, &row_path)?, number(v, &row_path)?)),
            _ => return Err(mismatch(&row_path, "expected a [t, v] pair")),
        }
    }
    if points.len() < 2 {
        return Err(mismatch(path, "a tabulated eta needs at least 2 points"));
    }
    TimeSeries::from_points(points).map_err(|e| mismatch(path, e.to_string()))
}

fn decode_eta(value: &Value) -> Result<Eta> {
    const PATH: &str = "forcing.eta";
    match value {
        Value::Float(_) | Value::Integer(_) => Ok(Eta::Constant(number(value, PATH)?)),
        Value::Array(_) => Ok(Eta::Tabulated { table: decode_points(value, PATH)?, even: false }),
        Value::Table(t) => {
            reject_unknown(t, &["points", "even"], "forcing.eta.")?;
            let points = t.get("points").ok_or_else(|| Error::MissingField { path: "forcing.eta.points".into() })?;
            let even = match t.get("even") {
                None => false,
                Some(Value::Boolean(b)) => *b,
                Some(other) => {
                    return Err(mismatch("forcing.eta.even", format!("expected a boolean, found {}", other.type_str())))
                }
            };
            Ok(Eta::Tabulated { table: decode_points(points, "forcing.eta.points")?, even })
        }
        other => Err(mismatch(PATH, format!("expected a number, array or table, found {}", other.type_str()))),
    }
}

fn decode_forcing(value: &Value) -> Result<ForcingSpec> {
    let Value::Table(t) = value else {
        return Err(mismatch("forcing", format!("expected a table, found {}", value.type_str())));
    };
    reject_unknown(t, &["kappa", "alpha", "eta"], "forcing.")?;
    let theta = match (t.contains_key("kappa"), t.contains_key("alpha")) {
        (false, false) => None,
        (true, false) => return Err(Error::MissingField { path: "forcing.alpha".into() }),
        (false, true) => return Err(Error::MissingField { path: "forcing.kappa".into() }),
        (true, true) => {
            let kappa = required_number(t, "kappa", "forcing.kappa")?;
            let alpha = required_number(t, "alpha", "forcing.alpha")?;
            if kappa <= 0.0 {
                return Err(mismatch("forcing.kappa", format!("must be > 0, got {kappa}")));
            }
            if alpha < 0.0 {
                return Err(mismatch("forcing.alpha", format!("must be >= 0, got {alpha}")));
            }
            Some(GoodwillSpec { kappa, alpha })
        }
    };
    let eta = t.get("eta").map(decode_eta).transpose()?.unwrap_or_default();
    Ok(ForcingSpec { theta, eta })
}

/// Parses a model document, naming the offending field path on failure.
pub fn decode_model_document(text: &str) -> Result<ModelDocument> {
    let root: Table = toml::from_str(text).map_err(|e: toml::de::Error| Error::Syntax(e.message().to_string()))?;
    reject_unknown(&root, &["a", "b", "c", "forcing", "metadata"], "")?;
    let a = required_number(&root, "a", "a")?;
    let b = required_number(&root, "b", "b")?;
    let c = required_number(&root, "c", "c")?;
    if c < 0.0 {
        return Err(mismatch("c", format!("initial influence must be >= 0, got {c}")));
    }
    let forcing = root.get("forcing").map(decode_forcing).transpose()?;
    let metadata = match root.get("metadata") {
        None => BTreeMap::new(),
        Some(Value::Table(t)) => t
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => Ok((k.clone(), s.clone())),
                other => Err(mismatch(&format!("metadata.{k}"), format!("expected a string, found {}", other.type_str()))),
            })
            .collect::<Result<_>>()?,
        Some(other) => return Err(mismatch("metadata", format!("expected a table, found {}", other.type_str()))),
    };
    Ok(ModelDocument { params: ModelParams { a, b, c }, forcing, metadata })
}

fn points_value(series: &TimeSeries) -> Value {
    Value::Array(series.points().map(|(t, v)| Value::Array(vec![Value::Float(t), Value::Float(v)])).collect())
}

/// Renders a model document. Keys come out in a fixed order, so equal
/// documents encode to identical text.
pub fn encode_model_document(doc: &ModelDocument) -> Result<String> {
    doc.params.validate()?;
    let mut root = Table::new();
    root.insert("a".into(), Value::Float(doc.params.a));
    root.insert("b".into(), Value::Float(doc.params.b));
    root.insert("c".into(), Value::Float(doc.params.c));
    if let Some(forcing) = &doc.forcing {
        let mut f = Table::new();
        if let Some(g) = &forcing.theta {
            g.validate()?;
            f.insert("kappa".into(), Value::Float(g.kappa));
            f.insert("alpha".into(), Value::Float(g.alpha));
        }
        match &forcing.eta {
            Eta::Absent => {}
            Eta::Constant(v) => {
                f.insert("eta".into(), Value::Float(*v));
            }
            Eta::Tabulated { table, even: false } => {
                f.insert("eta".into(), points_value(table));
            }
            Eta::Tabulated { table, even: true } => {
                let mut e = Table::new();
                e.insert("points".into(), points_value(table));
                e.insert("even".into(), Value::Boolean(true));
                f.insert("eta".into(), Value::Table(e));
            }
        }
        root.insert("forcing".into(), Value::Table(f));
    }
    if !doc.metadata.is_empty() {
        let meta = doc.metadata.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        root.insert("metadata".into(), Value::Table(meta));
    }
    toml::to_string(&root).map_err(|e| Error::Syntax(e.to_string()))
}
