//! Tier-1 data reduction.
//!
//! A sample is transmitted when it differs from its previous or next
//! neighbour by more than `|value| * vr`. The first and last samples are
//! always sent (anchors) and, optionally, every k-th sample is sent as a
//! beacon regardless of the rule. The receiver rebuilds the series from the
//! transmitted points and the distortion is measured as the area between the
//! original and the rebuilt curves, split by sign.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{Sample, Trace};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconMode {
    /// Hold the last transmitted value until the next one arrives.
    StepHold,
    /// Interpolate linearly in time between transmitted samples.
    #[default]
    Linear,
}

impl fmt::Display for ReconMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReconMode::StepHold => "step-hold",
            ReconMode::Linear => "linear",
        })
    }
}

impl FromStr for ReconMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step-hold" | "step" | "hold" => Ok(ReconMode::StepHold),
            "linear" => Ok(ReconMode::Linear),
            other => Err(Error::InvalidValue(format!("unknown reconstruction mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    /// Variance rate as a fraction, e.g. `0.025` for 2.5%.
    pub vr: f64,
    #[serde(default)]
    pub beacon_period: Option<usize>,
    #[serde(default)]
    pub recon_mode: ReconMode,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            vr: 0.025,
            beacon_period: None,
            recon_mode: ReconMode::Linear,
        }
    }
}

impl InferenceConfig {
    pub fn new(vr: f64, beacon_period: Option<usize>, recon_mode: ReconMode) -> Result<Self> {
        let config = Self {
            vr,
            beacon_period,
            recon_mode,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vr >= 0.0 && self.vr.is_finite()) {
            return Err(Error::InvalidConfig(format!("variance rate {} must be finite and >= 0", self.vr)));
        }
        if self.beacon_period == Some(0) {
            return Err(Error::InvalidConfig("beacon period must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why a sample was put on the wire. Declaration order is reporting
/// precedence: a sample that qualifies for several reasons is recorded with
/// the highest one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reason {
    Anchor,
    Variance,
    Beacon,
}

impl Reason {
    pub fn code(self) -> u8 {
        match self {
            Reason::Anchor => 0,
            Reason::Variance => 1,
            Reason::Beacon => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Reason::Anchor),
            1 => Some(Reason::Variance),
            2 => Some(Reason::Beacon),
            _ => None,
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::Anchor => "anchor",
            Reason::Variance => "variance",
            Reason::Beacon => "beacon",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selected {
    pub index: usize,
    pub reason: Reason,
}

/// The indices of a trace chosen for transmission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransmissionSet {
    source_len: usize,
    selected: Vec<Selected>,
}

impl TransmissionSet {
    /// Checks ordering, range, and that both ends are present.
    pub fn new(source_len: usize, selected: Vec<Selected>) -> Result<Self> {
        for w in selected.windows(2) {
            if w[1].index <= w[0].index {
                return Err(Error::InvalidValue(format!(
                    "selected indices must be strictly increasing ({} then {})",
                    w[0].index, w[1].index
                )));
            }
        }
        if let Some(last) = selected.last() {
            if last.index >= source_len {
                return Err(Error::InvalidValue(format!(
                    "selected index {} out of range for {source_len} samples",
                    last.index
                )));
            }
        }
        if source_len > 0 {
            let first = selected.first().map(|s| s.index);
            let last = selected.last().map(|s| s.index);
            if first != Some(0) || last != Some(source_len - 1) {
                return Err(Error::NoAnchors);
            }
        }
        Ok(Self { source_len, selected })
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn selected(&self) -> &[Selected] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.selected.iter().map(|s| s.index)
    }

    pub fn count(&self, reason: Reason) -> usize {
        self.selected.iter().filter(|s| s.reason == reason).count()
    }
}

#[inline]
fn differs(current: f64, neighbor: f64, vr: f64) -> bool {
    (current - neighbor).abs() > current.abs() * vr
}

/// Applies the variance-rate rule with anchors and optional beacons.
pub fn select_samples(trace: &Trace, config: &InferenceConfig) -> Result<TransmissionSet> {
    config.validate()?;
    let v: Vec<f64> = trace.values();
    let n = v.len();
    let mut selected = Vec::new();
    for i in 0..n {
        let variance = i >= 1
            && i + 1 < n
            && (differs(v[i], v[i + 1], config.vr) || differs(v[i], v[i - 1], config.vr));
        let anchor = i == 0 || i + 1 == n;
        let beacon = config.beacon_period.is_some_and(|k| i % k == 0);
        let reason = if variance {
            Reason::Variance
        } else if anchor {
            Reason::Anchor
        } else if beacon {
            Reason::Beacon
        } else {
            continue;
        };
        selected.push(Selected { index: i, reason });
    }
    TransmissionSet::new(n, selected)
}

/// The receiver-side estimate of the original series, one value per sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub values: Vec<f64>,
}

pub fn reconstruct(trace: &Trace, tx: &TransmissionSet, mode: ReconMode) -> Result<Reconstruction> {
    let samples = trace.samples();
    if tx.is_empty() && !samples.is_empty() {
        return Err(Error::NoAnchors);
    }
    if tx.source_len() != samples.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            actual: tx.source_len(),
        });
    }

    let mut values = Vec::with_capacity(samples.len());
    let idx: Vec<usize> = tx.indices().collect();
    for pair in idx.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (sa, sb) = (samples[a], samples[b]);
        values.push(sa.value);
        for s in &samples[a + 1..b] {
            let v = match mode {
                ReconMode::StepHold => sa.value,
                ReconMode::Linear => interpolate(sa, sb, s.t),
            };
            values.push(v);
        }
    }
    if let Some(&last) = idx.last() {
        values.push(samples[last].value);
    }
    debug_assert_eq!(values.len(), samples.len());
    Ok(Reconstruction { values })
}

fn interpolate(a: Sample, b: Sample, t: u64) -> f64 {
    let frac = (t - a.t) as f64 / (b.t - a.t) as f64;
    a.value + (b.value - a.value) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapAreas {
    /// Area where the reconstruction lies below the original.
    pub upper: f64,
    /// Area where the reconstruction lies above the original.
    pub lower: f64,
}

impl GapAreas {
    pub fn total(&self) -> f64 {
        self.upper + self.lower
    }

    pub fn diff(&self) -> f64 {
        (self.upper - self.lower).abs()
    }
}

/// Integrates the positive and negative parts of `original − recon`,
/// treating both as piecewise linear between sample times. Segments whose
/// difference changes sign are split at the zero crossing, so the result is
/// exact. Traces shorter than two samples enclose no area.
pub fn gap_areas(trace: &Trace, recon: &Reconstruction) -> Result<GapAreas> {
    let samples = trace.samples();
    if samples.len() != recon.values.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            actual: recon.values.len(),
        });
    }
    let mut areas = GapAreas { upper: 0.0, lower: 0.0 };
    for i in 1..samples.len() {
        let dt = (samples[i].t - samples[i - 1].t) as f64;
        let d0 = samples[i - 1].value - recon.values[i - 1];
        let d1 = samples[i].value - recon.values[i];
        if d0 >= 0.0 && d1 >= 0.0 {
            areas.upper += 0.5 * (d0 + d1) * dt;
        } else if d0 <= 0.0 && d1 <= 0.0 {
            areas.lower -= 0.5 * (d0 + d1) * dt;
        } else {
            let cross = d0 / (d0 - d1);
            let first = 0.5 * d0.abs() * cross * dt;
            let second = 0.5 * d1.abs() * (1.0 - cross) * dt;
            if d0 > 0.0 {
                areas.upper += first;
                areas.lower += second;
            } else {
                areas.lower += first;
                areas.upper += second;
            }
        }
    }
    Ok(areas)
}

/// Percentage of sensed samples that were not transmitted.
pub fn savings_ratio(n: usize, t: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    100.0 * (n - t) as f64 / n as f64
}

/// Samples saved per sample transmitted.
pub fn efficiency_ratio(n: usize, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::NothingTransmitted);
    }
    Ok((n - t) as f64 / t as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InferenceMetrics {
    pub n: usize,
    pub t: usize,
    pub sr: f64,
    pub er: f64,
    /// `None` when the original values sum to zero.
    pub ar: Option<f64>,
    pub s_upper: f64,
    pub s_lower: f64,
    pub s_diff: f64,
}

pub fn compute_metrics(trace: &Trace, tx: &TransmissionSet, recon: &Reconstruction) -> Result<InferenceMetrics> {
    let n = trace.len();
    if tx.source_len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: tx.source_len(),
        });
    }
    let t = tx.len();
    let er = efficiency_ratio(n, t)?;
    let areas = gap_areas(trace, recon)?;
    let original_sum: f64 = trace.samples().iter().map(|s| s.value).sum();
    let recon_sum: f64 = recon.values.iter().sum();
    let ar = (original_sum != 0.0).then(|| 100.0 * recon_sum / original_sum);
    Ok(InferenceMetrics {
        n,
        t,
        sr: savings_ratio(n, t),
        er,
        ar,
        s_upper: areas.upper,
        s_lower: areas.lower,
        s_diff: areas.diff(),
    })
}

/// Machine-readable metrics together with the settings that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub metrics: InferenceMetrics,
    pub vr: f64,
    pub beacon_period: Option<usize>,
    pub recon_mode: ReconMode,
}

impl MetricsReport {
    pub fn new(metrics: InferenceMetrics, config: &InferenceConfig) -> Self {
        Self {
            metrics,
            vr: config.vr,
            beacon_period: config.beacon_period,
            recon_mode: config.recon_mode,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Inference {
    pub tx: TransmissionSet,
    pub recon: Reconstruction,
    pub metrics: InferenceMetrics,
}

/// Select, rebuild, and score in one step.
pub fn infer(trace: &Trace, config: &InferenceConfig) -> Result<Inference> {
    let tx = select_samples(trace, config)?;
    let recon = reconstruct(trace, &tx, config.recon_mode)?;
    let metrics = compute_metrics(trace, &tx, &recon)?;
    Ok(Inference { tx, recon, metrics })
}
