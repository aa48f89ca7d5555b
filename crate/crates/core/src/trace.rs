//! Time series and population records, CSV ingestion, and seeded synthetic
//! generators standing in for recorded sleep-monitoring data.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Autoregressive coefficient of the synthetic noise process.
pub const AR_COEFFICIENT: f64 = 0.9;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Values written to CSV carry this many fractional digits.
const CSV_DECIMALS: i32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensorKind {
    HeartRate,
    BodyTemperature,
    Other,
}

impl SensorKind {
    pub fn code(self) -> u8 {
        match self {
            SensorKind::HeartRate => 0,
            SensorKind::BodyTemperature => 1,
            SensorKind::Other => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SensorKind::HeartRate),
            1 => Some(SensorKind::BodyTemperature),
            2 => Some(SensorKind::Other),
            _ => None,
        }
    }

    /// The unit a sensor of this kind reports in unless told otherwise.
    pub fn default_unit(self) -> Unit {
        match self {
            SensorKind::HeartRate => Unit::Bpm,
            SensorKind::BodyTemperature => Unit::Celsius,
            SensorKind::Other => Unit::Dimensionless,
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SensorKind::HeartRate => "heart-rate",
            SensorKind::BodyTemperature => "body-temperature",
            SensorKind::Other => "other",
        })
    }
}

impl FromStr for SensorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "heart-rate" | "heart_rate" | "hr" => Ok(SensorKind::HeartRate),
            "body-temperature" | "body_temperature" | "bt" => Ok(SensorKind::BodyTemperature),
            "other" => Ok(SensorKind::Other),
            other => Err(Error::InvalidValue(format!("unknown sensor kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    Bpm,
    Celsius,
    Dimensionless,
}

impl Unit {
    pub fn code(self) -> u8 {
        match self {
            Unit::Bpm => 0,
            Unit::Celsius => 1,
            Unit::Dimensionless => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Unit::Bpm),
            1 => Some(Unit::Celsius),
            2 => Some(Unit::Dimensionless),
            _ => None,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Bpm => "bpm",
            Unit::Celsius => "celsius",
            Unit::Dimensionless => "dimensionless",
        })
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpm" => Ok(Unit::Bpm),
            "celsius" | "c" => Ok(Unit::Celsius),
            "dimensionless" | "none" => Ok(Unit::Dimensionless),
            other => Err(Error::InvalidValue(format!("unknown unit `{other}`"))),
        }
    }
}

/// One sensed data point: whole seconds from trace start and a reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: u64,
    pub value: f64,
}

impl Sample {
    pub fn new(t: u64, value: f64) -> Self {
        Self { t, value }
    }
}

/// A validated, strictly time-ordered series of readings from one sensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    kind: SensorKind,
    unit: Unit,
    samples: Vec<Sample>,
}

impl Trace {
    pub fn new(kind: SensorKind, unit: Unit, samples: Vec<Sample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            // Rows are reported 1-based with the CSV header as row 1.
            if !s.value.is_finite() {
                return Err(Error::NonFiniteValue { row: i + 2 });
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(Error::NonIncreasingTimestamps { row: i + 2 });
            }
        }
        Ok(Self {
            kind,
            unit,
            samples,
        })
    }

    /// Builds a trace sampled every `period` seconds starting at zero.
    pub fn from_values(kind: SensorKind, unit: Unit, period: u64, values: &[f64]) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidConfig("period must be at least 1".into()));
        }
        let samples = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Sample::new(i as u64 * period, v))
            .collect();
        Self::new(kind, unit, samples)
    }

    pub fn kind(&self) -> SensorKind {
        self.kind
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    pub fn times(&self) -> Vec<u64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn read_csv<R: Read>(reader: R, kind: SensorKind, unit: Unit) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse { row: 1, message: e.to_string() })?;
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
            return Err(Error::Parse {
                row: 1,
                message: format!("expected header `t,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }

        let mut samples: Vec<Sample> = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 2;
            let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
            if record.len() != 2 {
                return Err(Error::Parse {
                    row,
                    message: format!("expected 2 fields, found {}", record.len()),
                });
            }
            let t: u64 = record[0].parse().map_err(|_| Error::Parse {
                row,
                message: format!("bad time offset `{}`", &record[0]),
            })?;
            let value: f64 = record[1].parse().map_err(|_| Error::Parse {
                row,
                message: format!("bad value `{}`", &record[1]),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFiniteValue { row });
            }
            if let Some(prev) = samples.last() {
                if t <= prev.t {
                    return Err(Error::NonIncreasingTimestamps { row });
                }
            }
            samples.push(Sample::new(t, value));
        }
        Self::new(kind, unit, samples)
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(writer, "t,value")?;
        for s in &self.samples {
            writeln!(writer, "{},{:.6}", s.t, s.value)?;
        }
        Ok(())
    }
}

/// Loads a `t,value` CSV file into a validated trace.
pub fn load_csv(path: impl AsRef<Path>, kind: SensorKind, unit: Unit) -> Result<Trace> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Trace::read_csv(std::io::BufReader::new(file), kind, unit)
}

pub fn save_csv(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    trace.write_csv(&mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parameters of a synthetic physiological trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SensorKind,
    pub n: usize,
    pub period: u64,
    pub seed: u64,
    pub baseline: f64,
    pub drift_amplitude: f64,
    pub noise_scale: f64,
}

impl SyntheticSpec {
    /// Minute-sampled heart rate over roughly one day.
    pub fn heart_rate_day(seed: u64) -> Self {
        Self {
            kind: SensorKind::HeartRate,
            n: 1420,
            period: 60,
            seed,
            baseline: 70.0,
            drift_amplitude: 8.0,
            noise_scale: 1.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.period < 1 {
            return Err(Error::InvalidConfig("period must be at least 1".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidConfig("noise_scale must be finite and >= 0".into()));
        }
        if !self.baseline.is_finite() || !self.drift_amplitude.is_finite() {
            return Err(Error::InvalidConfig("baseline and drift must be finite".into()));
        }
        Ok(())
    }
}

fn quantize(v: f64) -> f64 {
    let scale = 10f64.powi(CSV_DECIMALS);
    (v * scale).round() / scale
}

/// Generates `baseline + drift·sin(2πt/day) + AR(1)` readings.
///
/// Values are quantized to the CSV resolution so a written trace loads back
/// bit-identical.
pub fn generate_trace(spec: &SyntheticSpec) -> Result<Trace> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut ar = 0.0f64;
    let mut values = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let z: f64 = StandardNormal.sample(&mut rng);
        ar = AR_COEFFICIENT * ar + spec.noise_scale * z;
        let t = i as f64 * spec.period as f64;
        let v = spec.baseline + spec.drift_amplitude * (2.0 * PI * t / SECONDS_PER_DAY).sin() + ar;
        values.push(quantize(v));
    }
    Trace::from_values(spec.kind, spec.kind.default_unit(), spec.period, &values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Female => "female",
            Gender::Male => "male",
        })
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f" | "female" | "2" => Ok(Gender::Female),
            "m" | "male" | "1" => Ok(Gender::Male),
            other => Err(Error::InvalidValue(format!("unknown gender `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemperatureScale {
    Celsius,
    Fahrenheit,
}

/// Plausibility bounds used when validating population records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysiologicBounds {
    pub celsius: (f64, f64),
    pub fahrenheit: (f64, f64),
}

impl Default for PhysiologicBounds {
    fn default() -> Self {
        Self {
            celsius: (30.0, 45.0),
            fahrenheit: (90.0, 110.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonRecord {
    pub id: String,
    pub gender: Gender,
    pub body_temperature: f64,
    pub temperature_scale: TemperatureScale,
    pub heart_rate: f64,
}

impl PersonRecord {
    pub fn validate(&self, bounds: &PhysiologicBounds) -> Result<()> {
        if !(self.heart_rate.is_finite() && self.heart_rate > 0.0) {
            return Err(Error::InvalidValue(format!(
                "record {}: heart rate {} must be positive",
                self.id, self.heart_rate
            )));
        }
        let (lo, hi) = match self.temperature_scale {
            TemperatureScale::Celsius => bounds.celsius,
            TemperatureScale::Fahrenheit => bounds.fahrenheit,
        };
        if !(self.body_temperature >= lo && self.body_temperature <= hi) {
            return Err(Error::InvalidValue(format!(
                "record {}: body temperature {} outside [{lo}, {hi}]",
                self.id, self.body_temperature
            )));
        }
        Ok(())
    }
}

pub const POPULATION_HR_MEAN: f64 = 73.76;
pub const POPULATION_HR_STD: f64 = 7.0;
pub const POPULATION_HR_RANGE: (f64, f64) = (40.0, 140.0);
pub const POPULATION_BT_MEAN: f64 = 36.8;
pub const POPULATION_BT_STD: f64 = 0.4;

/// Draws `n` people with normally distributed heart rate and temperature.
pub fn generate_population(n: usize, seed: u64) -> Vec<PersonRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hr = Normal::new(POPULATION_HR_MEAN, POPULATION_HR_STD).expect("valid normal");
    let bt = Normal::new(POPULATION_BT_MEAN, POPULATION_BT_STD).expect("valid normal");
    let (bt_lo, bt_hi) = PhysiologicBounds::default().celsius;
    (0..n)
        .map(|i| {
            let gender = if rng.gen_bool(0.5) { Gender::Female } else { Gender::Male };
            let heart_rate = hr
                .sample(&mut rng)
                .clamp(POPULATION_HR_RANGE.0, POPULATION_HR_RANGE.1);
            let body_temperature = bt.sample(&mut rng).clamp(bt_lo, bt_hi);
            PersonRecord {
                id: format!("P{:04}", i + 1),
                gender,
                body_temperature: quantize(body_temperature),
                temperature_scale: TemperatureScale::Celsius,
                heart_rate: quantize(heart_rate),
            }
        })
        .collect()
}

pub fn read_population_csv<R: Read>(
    reader: R,
    scale: TemperatureScale,
    bounds: &PhysiologicBounds,
) -> Result<Vec<PersonRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 1, message: e.to_string() })?
        .clone();
    let expected = ["id", "gender", "body_temperature", "heart_rate"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            row: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        let parse_f = |idx: usize| -> Result<f64> {
            record[idx].parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("bad number `{}`", &record[idx]),
            })
        };
        let person = PersonRecord {
            id: record[0].to_string(),
            gender: record[1].parse().map_err(|e: Error| Error::Parse {
                row,
                message: e.to_string(),
            })?,
            body_temperature: parse_f(2)?,
            temperature_scale: scale,
            heart_rate: parse_f(3)?,
        };
        person.validate(bounds).map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        out.push(person);
    }
    Ok(out)
}

pub fn load_population_csv(
    path: impl AsRef<Path>,
    scale: TemperatureScale,
    bounds: &PhysiologicBounds,
) -> Result<Vec<PersonRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_population_csv(std::io::BufReader::new(file), scale, bounds)
}

pub fn write_population_csv<W: Write>(people: &[PersonRecord], mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "id,gender,body_temperature,heart_rate")?;
    for p in people {
        writeln!(
            writer,
            "{},{},{:.6},{:.6}",
            p.id, p.gender, p.body_temperature, p.heart_rate
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hr(values: &[f64]) -> Trace {
        Trace::from_values(SensorKind::HeartRate, Unit::Bpm, 60, values).unwrap()
    }

    #[test]
    fn parses_simple_csv() {
        let csv = "t,value\n0,60.0\n60,61.0\n120,60.5\n";
        let trace = Trace::read_csv(csv.as_bytes(), SensorKind::HeartRate, Unit::Bpm).unwrap();
        assert_eq!(trace.len(), 3);
        assert_eq!(trace.unit(), Unit::Bpm);
        assert_eq!(trace.values(), vec![60.0, 61.0, 60.5]);
        assert_eq!(trace.times(), vec![0, 60, 120]);
    }

    #[test]
    fn rejects_repeated_timestamp_with_row_number() {
        let csv = "t,value\n0,60.0\n0,61.0\n";
        let err = Trace::read_csv(csv.as_bytes(), SensorKind::HeartRate, Unit::Bpm).unwrap_err();
        assert_eq!(err.to_string(), "non-increasing timestamps at row 3");
    }

    #[test]
    fn header_only_is_empty_trace() {
        let trace = Trace::read_csv("t,value\n".as_bytes(), SensorKind::HeartRate, Unit::Bpm).unwrap();
        assert!(trace.is_empty());
    }

    #[test]
    fn rejects_garbage_and_non_finite() {
        let err = Trace::read_csv("t,value\n0,abc\n".as_bytes(), SensorKind::Other, Unit::Dimensionless)
            .unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
        let err = Trace::read_csv("t,value\n0,1\n5,NaN\n".as_bytes(), SensorKind::Other, Unit::Dimensionless)
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { row: 3 }));
        let err = Trace::read_csv("time,v\n".as_bytes(), SensorKind::Other, Unit::Dimensionless).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
    }

    #[test]
    fn zero_noise_trace_is_baseline() {
        let spec = SyntheticSpec {
            kind: SensorKind::HeartRate,
            n: 3,
            period: 60,
            seed: 1,
            baseline: 70.0,
            drift_amplitude: 0.0,
            noise_scale: 0.0,
        };
        let trace = generate_trace(&spec).unwrap();
        assert_eq!(trace.values(), vec![70.0, 70.0, 70.0]);
        assert_eq!(trace.times(), vec![0, 60, 120]);
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = SyntheticSpec::heart_rate_day(7);
        let a = generate_trace(&spec).unwrap();
        let b = generate_trace(&spec).unwrap();
        let bits = |t: &Trace| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = generate_trace(&SyntheticSpec::heart_rate_day(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_synthetic_trace() {
        let spec = SyntheticSpec { n: 0, ..SyntheticSpec::heart_rate_day(1) };
        assert!(generate_trace(&spec).unwrap().is_empty());
        let bad = SyntheticSpec { period: 0, ..SyntheticSpec::heart_rate_day(1) };
        assert!(generate_trace(&bad).is_err());
    }

    #[test]
    fn generated_trace_round_trips_through_csv() {
        let trace = generate_trace(&SyntheticSpec::heart_rate_day(3)).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let back = Trace::read_csv(buf.as_slice(), trace.kind(), trace.unit()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn population_statistics_and_determinism() {
        assert!(generate_population(0, 5).is_empty());
        let pop = generate_population(130, 5);
        assert_eq!(pop.len(), 130);
        let mean = pop.iter().map(|p| p.heart_rate).sum::<f64>() / 130.0;
        assert!((mean - 73.76).abs() <= 2.0, "mean {mean}");
        assert_eq!(pop, generate_population(130, 5));
        let bounds = PhysiologicBounds::default();
        assert!(pop.iter().all(|p| p.validate(&bounds).is_ok()));
    }

    #[test]
    fn population_csv_round_trip() {
        let pop = generate_population(20, 11);
        let mut buf = Vec::new();
        write_population_csv(&pop, &mut buf).unwrap();
        let back =
            read_population_csv(buf.as_slice(), TemperatureScale::Celsius, &PhysiologicBounds::default()).unwrap();
        assert_eq!(back, pop);
    }

    #[test]
    fn person_validation() {
        let bounds = PhysiologicBounds::default();
        let mut p = PersonRecord {
            id: "x".into(),
            gender: Gender::Male,
            body_temperature: 98.6,
            temperature_scale: TemperatureScale::Fahrenheit,
            heart_rate: 70.0,
        };
        assert!(p.validate(&bounds).is_ok());
        p.temperature_scale = TemperatureScale::Celsius;
        assert!(p.validate(&bounds).is_err());
        p.body_temperature = 37.0;
        p.heart_rate = 0.0;
        assert!(p.validate(&bounds).is_err());
    }

    #[test]
    fn trace_constructor_checks_order() {
        assert!(Trace::new(
            SensorKind::Other,
            Unit::Dimensionless,
            vec![Sample::new(5, 1.0), Sample::new(4, 1.0)]
        )
        .is_err());
        assert_eq!(hr(&[1.0, 2.0]).len(), 2);
    }
}
