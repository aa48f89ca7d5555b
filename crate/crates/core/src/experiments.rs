//! Parameter sweeps: savings versus variance rate, ciphertext size versus
//! savings, and noise versus ε.
//!
//! Each sweep returns rows at full precision plus helpers that lay them out
//! as CSV and chart series. Grid points run in parallel and are collected in
//! grid order.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{ChartStyle, Series};
use crate::crypto::{ciphertext_size, encrypt, plaintext_size_for_savings, CipherKey, CipherSuite};
use crate::dp::{perturb_series, DpParams, Field, EPSILON_PRESETS};
use crate::error::{Error, Result};
use crate::inference::{infer, InferenceConfig, ReconMode};
use crate::rng::derive_stream;
use crate::trace::{PersonRecord, Trace};

pub const DEFAULT_VR_GRID: [f64; 5] = [0.0, 0.025, 0.05, 0.10, 0.20];
pub const DEFAULT_SAVINGS_GRID: [f64; 5] = [0.0, 51.3, 78.5, 89.7, 98.8];
pub const DEFAULT_EPSILON_GRID: [f64; 6] = EPSILON_PRESETS;

fn require_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig(format!("{what} grid is empty")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VrRow {
    pub vr: f64,
    pub n: usize,
    pub t: usize,
    pub sr: f64,
    pub er: f64,
    pub ar: Option<f64>,
    pub s_upper: f64,
    pub s_lower: f64,
    pub s_diff: f64,
}

pub fn run_vr_sweep(
    trace: &Trace,
    grid: &[f64],
    beacon_period: Option<usize>,
    recon_mode: ReconMode,
) -> Result<Vec<VrRow>> {
    require_grid(grid, "variance rate")?;
    if trace.len() < 3 {
        return Err(Error::InvalidValue(format!(
            "variance-rate sweep needs at least 3 samples, got {}",
            trace.len()
        )));
    }
    grid.par_iter()
        .map(|&vr| {
            let config = InferenceConfig::new(vr, beacon_period, recon_mode)?;
            let m = infer(trace, &config)?.metrics;
            Ok(VrRow {
                vr,
                n: m.n,
                t: m.t,
                sr: m.sr,
                er: m.er,
                ar: m.ar,
                s_upper: m.s_upper,
                s_lower: m.s_lower,
                s_diff: m.s_diff,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn vr_sweep_csv(rows: &[VrRow]) -> String {
    let mut out = String::from("vr,n,t,sr,er,ar,s_upper,s_lower,s_diff\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.vr,
            r.n,
            r.t,
            r.sr,
            r.er,
            opt(r.ar),
            r.s_upper,
            r.s_lower,
            r.s_diff
        );
    }
    out
}

pub fn vr_sweep_series(rows: &[VrRow]) -> Vec<Series> {
    vec![Series::new("savings %", rows.iter().map(|r| (100.0 * r.vr, r.sr)).collect())]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeRow {
    pub savings: f64,
    pub plaintext_bytes: usize,
    pub aes_128_ecb: usize,
    pub des_ecb: usize,
    pub blowfish_ecb: usize,
}

impl SizeRow {
    pub fn ciphertext(&self, suite: CipherSuite) -> usize {
        match suite {
            CipherSuite::Aes128Ecb => self.aes_128_ecb,
            CipherSuite::DesEcb => self.des_ecb,
            CipherSuite::BlowfishEcb => self.blowfish_ecb,
        }
    }
}

/// Plaintext and ciphertext sizes per savings level. Each ciphertext size is
/// taken from the padding law and cross-checked against a real encryption of
/// that many bytes.
pub fn run_size_sweep(savings_grid: &[f64]) -> Result<Vec<SizeRow>> {
    require_grid(savings_grid, "savings")?;
    savings_grid
        .par_iter()
        .map(|&savings| {
            let plaintext_bytes = plaintext_size_for_savings(savings)?;
            let plaintext = vec![0u8; plaintext_bytes];
            let mut sizes = [0usize; 3];
            for (slot, suite) in sizes.iter_mut().zip(CipherSuite::ALL) {
                let predicted = ciphertext_size(plaintext_bytes, suite);
                let key = CipherKey::new(vec![0x5a; suite.key_bytes()]);
                let measured = encrypt(&plaintext, suite, &key)?.ciphertext.len();
                if measured != predicted {
                    return Err(Error::Integrity(format!(
                        "{suite}: {plaintext_bytes} B encrypted to {measured} B, padding law says {predicted} B"
                    )));
                }
                *slot = predicted;
            }
            Ok(SizeRow {
                savings,
                plaintext_bytes,
                aes_128_ecb: sizes[0],
                des_ecb: sizes[1],
                blowfish_ecb: sizes[2],
            })
        })
        .collect()
}

pub fn size_sweep_csv(rows: &[SizeRow]) -> String {
    let mut out = String::from("savings,plaintext_bytes,aes-128-ecb,des-ecb,blowfish-ecb\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.savings, r.plaintext_bytes, r.aes_128_ecb, r.des_ecb, r.blowfish_ecb
        );
    }
    out
}

pub fn size_sweep_series(rows: &[SizeRow]) -> Vec<Series> {
    let mut series = vec![Series::new(
        "plaintext",
        rows.iter().map(|r| (r.savings, r.plaintext_bytes as f64)).collect(),
    )];
    for suite in CipherSuite::ALL {
        series.push(Series::new(
            suite.name(),
            rows.iter().map(|r| (r.savings, r.ciphertext(suite) as f64)).collect(),
        ));
    }
    series
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSweepSpec {
    pub grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub sensitivity: f64,
    pub field: Field,
}

impl Default for EpsilonSweepSpec {
    fn default() -> Self {
        Self {
            grid: DEFAULT_EPSILON_GRID.to_vec(),
            trials: 200,
            seed: 0,
            sensitivity: 1.0,
            field: Field::HeartRate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub scale: f64,
    pub real_mean: f64,
    /// Noised mean from the first trial, the single-draw figure.
    pub noised_mean: f64,
    /// Mean over trials of |noised mean − real mean|.
    pub mean_abs_dev: f64,
    /// Noised mean of every trial, in trial order.
    pub trial_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedSeries {
    pub epsilon: f64,
    pub original: Vec<f64>,
    pub noised: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSweep {
    pub rows: Vec<EpsilonRow>,
    /// First-trial perturbed series per ε, for per-point plots.
    pub series: Vec<PerturbedSeries>,
}

/// Perturbs every record's field with Laplace(Δf/ε) noise and tracks how far
/// the noised average drifts from the true one. Trial `j` of grid point `i`
/// draws from stream `(i << 32) | j` under `seed`.
pub fn run_epsilon_sweep(population: &[PersonRecord], spec: &EpsilonSweepSpec) -> Result<EpsilonSweep> {
    require_grid(&spec.grid, "epsilon")?;
    if population.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if spec.trials == 0 {
        return Err(Error::InvalidConfig("epsilon sweep needs at least one trial".into()));
    }
    let original: Vec<f64> = population.iter().map(|p| spec.field.of(p)).collect();
    let n = original.len() as f64;
    let real_mean = original.iter().sum::<f64>() / n;

    let results: Vec<(EpsilonRow, PerturbedSeries)> = spec
        .grid
        .par_iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let params = DpParams::new(epsilon, spec.sensitivity)?;
            let mut first = Vec::new();
            let mut trial_means = Vec::with_capacity(spec.trials);
            for j in 0..spec.trials {
                let mut rng = derive_stream(spec.seed, ((i as u64) << 32) | j as u64);
                let noised = perturb_series(&original, &params, &mut rng);
                trial_means.push(noised.iter().sum::<f64>() / n);
                if j == 0 {
                    first = noised;
                }
            }
            let mean_abs_dev = trial_means.iter().map(|m| (m - real_mean).abs()).sum::<f64>() / spec.trials as f64;
            Ok((
                EpsilonRow {
                    epsilon,
                    scale: params.scale(),
                    real_mean,
                    noised_mean: trial_means[0],
                    mean_abs_dev,
                    trial_means,
                },
                PerturbedSeries {
                    epsilon,
                    original: original.clone(),
                    noised: first,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let (rows, series) = results.into_iter().unzip();
    Ok(EpsilonSweep { rows, series })
}

pub fn epsilon_sweep_csv(rows: &[EpsilonRow]) -> String {
    let mut out = String::from("epsilon,scale,real_mean,noised_mean,mean_abs_dev\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.epsilon, r.scale, r.real_mean, r.noised_mean, r.mean_abs_dev
        );
    }
    out
}

pub fn perturbed_series_csv(series: &PerturbedSeries) -> String {
    let mut out = String::from("index,original,noised\n");
    for (i, (o, n)) in series.original.iter().zip(&series.noised).enumerate() {
        let _ = writeln!(out, "{i},{o},{n}");
    }
    out
}

/// Original values as a line and noised values as points.
pub fn perturbed_chart_series(series: &PerturbedSeries) -> Vec<Series> {
    vec![
        Series::new(
            "original",
            series.original.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect(),
        )
        .with_style(ChartStyle::Line),
        Series::new(
            format!("noised (eps={})", series.epsilon),
            series.noised.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect(),
        )
        .with_style(ChartStyle::Points),
    ]
}
