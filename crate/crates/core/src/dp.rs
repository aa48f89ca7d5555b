//! Laplace-mechanism differential privacy for edge-side queries.
//!
//! For a query `f` with L1 sensitivity `Δf`, releasing
//! `f(D) + Lap(0, b)` with `b = Δf / ε` is ε-differentially private:
//!
//! ```text
//! Pr[M(D) ∈ O] ≤ exp(ε) · Pr[M(D') ∈ O]
//! ```
//!
//! for all neighbouring datasets `D`, `D'`. Sampling is by inverse CDF:
//! with `u` uniform on (−½, ½), `μ − b·sign(u)·ln(1 − 2|u|)` is
//! Laplace(μ, b).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::PersonRecord;

/// ε values swept in the privacy experiments.
pub const EPSILON_PRESETS: [f64; 6] = [0.01, 0.05, 0.1, 0.2, 0.5, 1.0];

/// Sensitivity assumed when none is derived from the data.
pub const DEFAULT_SENSITIVITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDpParams")]
pub struct DpParams {
    epsilon: f64,
    sensitivity: f64,
    scale: f64,
}

#[derive(Deserialize)]
struct RawDpParams {
    epsilon: f64,
    sensitivity: f64,
}

impl TryFrom<RawDpParams> for DpParams {
    type Error = Error;

    fn try_from(raw: RawDpParams) -> Result<Self> {
        DpParams::new(raw.epsilon, raw.sensitivity)
    }
}

impl DpParams {
    pub fn new(epsilon: f64, sensitivity: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon {epsilon} must be finite and > 0")));
        }
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return Err(Error::InvalidConfig(format!("sensitivity {sensitivity} must be finite and > 0")));
        }
        Ok(Self {
            epsilon,
            sensitivity,
            scale: sensitivity / epsilon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    /// Laplace scale `b = Δf / ε`.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    HeartRate,
    BodyTemperature,
}

impl Field {
    pub fn of(self, person: &PersonRecord) -> f64 {
        match self {
            Field::HeartRate => person.heart_rate,
            Field::BodyTemperature => person.body_temperature,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::HeartRate => "heart_rate",
            Field::BodyTemperature => "body_temperature",
        })
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heart_rate" | "heart-rate" | "hr" => Ok(Field::HeartRate),
            "body_temperature" | "body-temperature" | "bt" => Ok(Field::BodyTemperature),
            other => Err(Error::InvalidValue(format!("unknown field `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Mean,
    Sum,
    Count,
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregate::Mean => "mean",
            Aggregate::Sum => "sum",
            Aggregate::Count => "count",
        })
    }
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregate::Mean),
            "sum" => Ok(Aggregate::Sum),
            "count" => Ok(Aggregate::Count),
            other => Err(Error::InvalidValue(format!("unknown aggregate `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDpQuery")]
pub struct DpQuery {
    aggregate: Aggregate,
    field: Option<Field>,
}

#[derive(Deserialize)]
struct RawDpQuery {
    aggregate: Aggregate,
    #[serde(default)]
    field: Option<Field>,
}

impl TryFrom<RawDpQuery> for DpQuery {
    type Error = Error;

    fn try_from(raw: RawDpQuery) -> Result<Self> {
        DpQuery::new(raw.aggregate, raw.field)
    }
}

impl DpQuery {
    /// `field` is required for mean and sum and dropped for count.
    pub fn new(aggregate: Aggregate, field: Option<Field>) -> Result<Self> {
        match (aggregate, field) {
            (Aggregate::Count, _) => Ok(Self { aggregate, field: None }),
            (_, Some(_)) => Ok(Self { aggregate, field }),
            (_, None) => Err(Error::InvalidConfig(format!("{aggregate} query needs a field"))),
        }
    }

    pub fn mean(field: Field) -> Self {
        Self { aggregate: Aggregate::Mean, field: Some(field) }
    }

    pub fn sum(field: Field) -> Self {
        Self { aggregate: Aggregate::Sum, field: Some(field) }
    }

    pub fn count() -> Self {
        Self { aggregate: Aggregate::Count, field: None }
    }

    pub fn aggregate(&self) -> Aggregate {
        self.aggregate
    }

    pub fn field(&self) -> Option<Field> {
        self.field
    }

    /// The exact, un-noised answer.
    pub fn evaluate(&self, dataset: &[PersonRecord]) -> Result<f64> {
        let values = || dataset.iter().map(|p| self.field.expect("validated").of(p));
        match self.aggregate {
            Aggregate::Count => Ok(dataset.len() as f64),
            Aggregate::Sum => Ok(values().sum()),
            Aggregate::Mean => {
                if dataset.is_empty() {
                    return Err(Error::EmptyDataset);
                }
                Ok(values().sum::<f64>() / dataset.len() as f64)
            }
        }
    }
}

impl fmt::Display for DpQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.field {
            Some(field) => write!(f, "{}({field})", self.aggregate),
            None => write!(f, "{}", self.aggregate),
        }
    }
}

/// Value range per field, used for replacement neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBounds {
    pub heart_rate: (f64, f64),
    pub body_temperature: (f64, f64),
}

impl Default for FieldBounds {
    fn default() -> Self {
        Self {
            heart_rate: (40.0, 140.0),
            body_temperature: (30.0, 45.0),
        }
    }
}

impl FieldBounds {
    pub fn range(&self, field: Field) -> (f64, f64) {
        match field {
            Field::HeartRate => self.heart_rate,
            Field::BodyTemperature => self.body_temperature,
        }
    }

    fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.heart_rate, self.body_temperature] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!("bad field range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Which datasets count as neighbours when measuring sensitivity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborModel {
    /// Remove any one record.
    #[default]
    Deletion,
    /// Remove any one record, or move one record's field to either end of
    /// its range.
    BoundedReplacement,
}

/// Largest change in the query answer over all enumerated neighbours.
/// Neighbours on which the query is undefined (the empty set for a mean)
/// are skipped.
pub fn l1_sensitivity(
    query: &DpQuery,
    dataset: &[PersonRecord],
    bounds: &FieldBounds,
    model: NeighborModel,
) -> Result<f64> {
    bounds.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let base = query.evaluate(dataset)?;
    let mut worst = 0.0f64;
    let mut consider = |neighbour: &[PersonRecord]| {
        if let Ok(v) = query.evaluate(neighbour) {
            worst = worst.max((base - v).abs());
        }
    };

    for i in 0..dataset.len() {
        let mut without = dataset.to_vec();
        without.remove(i);
        consider(&without);
    }

    if model == NeighborModel::BoundedReplacement {
        if let Some(field) = query.field() {
            let (lo, hi) = bounds.range(field);
            for i in 0..dataset.len() {
                for endpoint in [lo, hi] {
                    let mut replaced = dataset.to_vec();
                    match field {
                        Field::HeartRate => replaced[i].heart_rate = endpoint,
                        Field::BodyTemperature => replaced[i].body_temperature = endpoint,
                    }
                    consider(&replaced);
                }
            }
        }
    }
    Ok(worst)
}

fn check_scale(b: f64) -> Result<()> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidValue(format!("Laplace scale {b} must be finite and > 0")));
    }
    Ok(())
}

/// Density of Laplace(μ, b).
pub fn laplace_pdf(x: f64, mu: f64, b: f64) -> Result<f64> {
    check_scale(b)?;
    Ok((-(x - mu).abs() / b).exp() / (2.0 * b))
}

/// Density written in terms of ε and Δf rather than the scale.
pub fn laplace_pdf_calibrated(x: f64, mu: f64, epsilon: f64, sensitivity: f64) -> Result<f64> {
    let params = DpParams::new(epsilon, sensitivity)?;
    let (e, df) = (params.epsilon(), params.sensitivity());
    Ok(e / (2.0 * df) * (-e * (x - mu).abs() / df).exp())
}

pub fn laplace_cdf(x: f64, mu: f64, b: f64) -> Result<f64> {
    check_scale(b)?;
    let z = (x - mu) / b;
    Ok(if z < 0.0 {
        0.5 * z.exp()
    } else {
        1.0 - 0.5 * (-z).exp()
    })
}

/// Inverse CDF with the uniform variate centred on zero, `u ∈ (−½, ½)`.
pub fn laplace_quantile(u: f64, mu: f64, b: f64) -> Result<f64> {
    check_scale(b)?;
    if !(u > -0.5 && u < 0.5) {
        return Err(Error::InvalidValue(format!("u = {u} outside (-0.5, 0.5)")));
    }
    let sign = if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok(mu - b * sign * (1.0 - 2.0 * u.abs()).ln())
}

pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, mu: f64, b: f64) -> Result<f64> {
    check_scale(b)?;
    loop {
        let u = rng.gen::<f64>() - 0.5;
        // gen() is [0, 1); the single excluded endpoint maps to -0.5
        if u > -0.5 {
            return laplace_quantile(u, mu, b);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoisedResult {
    pub real_result: f64,
    pub noise: f64,
    pub out_result: f64,
    pub params: DpParams,
}

/// Answers `query` with one Laplace(0, Δf/ε) draw added.
pub fn noisy_query<R: Rng + ?Sized>(
    dataset: &[PersonRecord],
    query: &DpQuery,
    params: &DpParams,
    rng: &mut R,
) -> Result<NoisedResult> {
    let real_result = query.evaluate(dataset)?;
    let draw = sample_laplace(rng, 0.0, params.scale())?;
    let out_result = real_result + draw;
    Ok(NoisedResult {
        real_result,
        // recorded as the realised difference so out − real == noise holds bitwise
        noise: out_result - real_result,
        out_result,
        params: *params,
    })
}

/// Adds an independent Laplace(0, Δf/ε) draw to every element.
pub fn perturb_series<R: Rng + ?Sized>(values: &[f64], params: &DpParams, rng: &mut R) -> Vec<f64> {
    values
        .iter()
        .map(|&v| v + sample_laplace(rng, 0.0, params.scale()).expect("scale validated by DpParams"))
        .collect()
}

/// Largest density ratio `p(x | 0, b) / p(x | shift, b)` over `grid`.
///
/// Evaluated in log space so far-tail grid points do not underflow.
pub fn verify_dp_ratio(params: &DpParams, shift: f64, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidValue("empty evaluation grid".into()));
    }
    if !shift.is_finite() {
        return Err(Error::InvalidValue(format!("shift {shift} must be finite")));
    }
    let b = params.scale();
    let log_pdf = |x: f64, mu: f64| -(x - mu).abs() / b - (2.0 * b).ln();
    let max_log = grid
        .iter()
        .map(|&x| log_pdf(x, 0.0) - log_pdf(x, shift))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(max_log.exp())
}
