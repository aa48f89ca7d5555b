//! Reference implementations used to cross-check the library.

#![allow(dead_code)]

use ioht_core::trace::{Gender, PersonRecord, Sample, SensorKind, TemperatureScale, Trace, Unit};
use rand::Rng;

/// Piecewise-linear interpolation of `(t, y)` points at `x`.
pub fn interp(ts: &[f64], ys: &[f64], x: f64) -> f64 {
    let j = ts.partition_point(|&t| t <= x).clamp(1, ts.len() - 1);
    let (t0, t1) = (ts[j - 1], ts[j]);
    ys[j - 1] + (ys[j] - ys[j - 1]) * (x - t0) / (t1 - t0)
}

/// Midpoint-rule integral of the positive and negative parts of
/// `original - recon`, each series interpolated linearly on its own.
pub fn quadrature_gap(ts: &[f64], original: &[f64], recon: &[f64], steps_per_interval: usize) -> (f64, f64) {
    let (mut upper, mut lower) = (0.0, 0.0);
    for j in 1..ts.len() {
        let (a, b) = (&ts[j - 1..=j], j - 1..=j);
        let h = (a[1] - a[0]) / steps_per_interval as f64;
        for k in 0..steps_per_interval {
            let x = a[0] + (k as f64 + 0.5) * h;
            let d = interp(a, &original[b.clone()], x) - interp(a, &recon[b.clone()], x);
            if d > 0.0 {
                upper += d * h;
            } else {
                lower -= d * h;
            }
        }
    }
    (upper, lower)
}

/// Worst change in the mean when any single element is removed.
pub fn deletion_mean_sensitivity(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let full = values.iter().sum::<f64>() / n as f64;
    (0..n)
        .map(|skip| {
            let rest: f64 = values.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, v)| v).sum();
            (full - rest / (n - 1) as f64).abs()
        })
        .fold(0.0, f64::max)
}

/// Sup distance between the empirical CDF of `draws` and `cdf`.
pub fn ks_distance(draws: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Random walk with occasional jumps, on irregular integer timestamps.
pub fn random_trace<R: Rng>(rng: &mut R, n: usize, noise: f64) -> Trace {
    let mut t = 0u64;
    let mut v = rng.gen_range(40.0..120.0);
    let samples = (0..n)
        .map(|_| {
            t += rng.gen_range(1..120);
            v += rng.gen_range(-noise..=noise);
            if rng.gen_bool(0.05) {
                v += rng.gen_range(-15.0..15.0);
            }
            Sample::new(t, v)
        })
        .collect();
    Trace::new(SensorKind::HeartRate, Unit::Bpm, samples).unwrap()
}

pub fn random_people<R: Rng>(rng: &mut R, n: usize) -> Vec<PersonRecord> {
    (0..n)
        .map(|i| PersonRecord {
            id: format!("R{i}"),
            gender: if rng.gen_bool(0.5) { Gender::Female } else { Gender::Male },
            body_temperature: rng.gen_range(35.0..39.5),
            temperature_scale: TemperatureScale::Celsius,
            heart_rate: rng.gen_range(45.0..135.0),
        })
        .collect()
}
