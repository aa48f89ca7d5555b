//! End-to-end simulation of both tiers.
//!
//! A sensor stage batches the selected samples into wire payloads and hands
//! them to a gateway stage over a body-area link (counted, not encrypted).
//! The gateway encrypts each batch and forwards it to the edge stage, which
//! decrypts, decodes, and checks that every value arrived bit-exact. The edge
//! then answers the configured statistical queries with Laplace noise.
//!
//! Stages run on their own threads and talk over ordered channels, so the
//! report does not depend on scheduling. The same transport is run a second
//! time with every sample marked for sending to obtain the unfiltered
//! baseline used for the energy comparison.
//!
//! No packet loss, latency or retransmission is modelled.

use std::fmt;
use std::io::Write;
use std::sync::mpsc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::crypto::{decode_payload, decrypt, encode_payload, encrypt, payload_records, CipherKey, CipherSuite, PayloadRecord};
use crate::dp::{noisy_query, DpParams, DpQuery, NoisedResult};
use crate::error::{Error, Result};
use crate::inference::{infer, select_samples, InferenceConfig, MetricsReport};
use crate::rng::derive_stream;
use crate::trace::{PersonRecord, SensorKind, Trace, Unit};

pub const DEFAULT_BATCH_SAMPLES: usize = 60;

/// Linear radio cost: a per-byte transmit cost plus a fixed per-message cost.
///
/// The defaults (1 µJ/byte, 100 µJ/message) are illustrative constants, not
/// measurements of any particular radio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub joules_per_byte_tx: f64,
    pub joules_per_message_overhead: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            joules_per_byte_tx: 1e-6,
            joules_per_message_overhead: 1e-4,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(self.joules_per_byte_tx) || !ok(self.joules_per_message_overhead) {
            return Err(Error::InvalidConfig("energy coefficients must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hop {
    SensorToGateway,
    GatewayToEdge,
}

impl fmt::Display for Hop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hop::SensorToGateway => "sensor_to_gateway",
            Hop::GatewayToEdge => "gateway_to_edge",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HopEntry {
    pub hop: Hop,
    pub messages: u64,
    pub payload_bytes: u64,
    /// Present only on encrypted hops.
    pub ciphertext_bytes: Option<u64>,
}

impl HopEntry {
    pub fn new(hop: Hop) -> Self {
        Self {
            hop,
            messages: 0,
            payload_bytes: 0,
            ciphertext_bytes: None,
        }
    }

    fn record(&mut self, payload: usize, ciphertext: Option<usize>) {
        self.messages += 1;
        self.payload_bytes += payload as u64;
        if let Some(c) = ciphertext {
            *self.ciphertext_bytes.get_or_insert(0) += c as u64;
        }
    }

    /// Bytes actually put on the air for this hop.
    pub fn wire_bytes(&self) -> u64 {
        self.ciphertext_bytes.unwrap_or(self.payload_bytes)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TransmissionLog {
    pub entries: Vec<HopEntry>,
}

impl TransmissionLog {
    pub fn hop(&self, hop: Hop) -> Option<&HopEntry> {
        self.entries.iter().find(|e| e.hop == hop)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "hop,messages,payload_bytes,ciphertext_bytes")?;
        for e in &self.entries {
            let ct = e.ciphertext_bytes.map(|c| c.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", e.hop, e.messages, e.payload_bytes, ct)?;
        }
        Ok(())
    }
}

pub fn energy_estimate(log: &TransmissionLog, model: &EnergyModel) -> f64 {
    log.entries
        .iter()
        .map(|e| e.wire_bytes() as f64 * model.joules_per_byte_tx + e.messages as f64 * model.joules_per_message_overhead)
        .sum()
}

fn default_batch() -> usize {
    DEFAULT_BATCH_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub inference: InferenceConfig,
    pub suite: CipherSuite,
    pub key: CipherKey,
    pub dp: DpParams,
    #[serde(default)]
    pub queries: Vec<DpQuery>,
    #[serde(default = "default_batch")]
    pub batch_samples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub energy: EnergyModel,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.inference.validate()?;
        self.key.check(self.suite)?;
        self.energy.validate()?;
        if self.batch_samples < 1 {
            return Err(Error::InvalidConfig("batch_samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryAnswer {
    pub query: DpQuery,
    #[serde(flatten)]
    pub result: NoisedResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub inference_metrics: MetricsReport,
    pub suite: CipherSuite,
    pub batch_samples: usize,
    pub delivered_samples: usize,
    pub log: TransmissionLog,
    pub baseline_log: TransmissionLog,
    pub energy_model: EnergyModel,
    pub energy_baseline: f64,
    pub energy_actual: f64,
    /// `None` when the baseline costs nothing.
    pub energy_saving_percent: Option<f64>,
    pub query_results: Vec<QueryAnswer>,
}

impl PipelineReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct LinkOutcome {
    log: TransmissionLog,
    delivered: Vec<PayloadRecord>,
}

fn transmit(
    kind: SensorKind,
    unit: Unit,
    records: &[PayloadRecord],
    batch: usize,
    suite: CipherSuite,
    key: &CipherKey,
) -> Result<LinkOutcome> {
    thread::scope(|s| {
        let (to_gateway, gateway_rx) = mpsc::channel::<Vec<u8>>();
        let (to_edge, edge_rx) = mpsc::channel();

        let sensor = s.spawn(move || -> Result<HopEntry> {
            let mut entry = HopEntry::new(Hop::SensorToGateway);
            for chunk in records.chunks(batch) {
                let bytes = encode_payload(kind, unit, chunk)?;
                entry.record(bytes.len(), None);
                if to_gateway.send(bytes).is_err() {
                    break;
                }
            }
            Ok(entry)
        });

        let gateway = s.spawn(move || -> Result<HopEntry> {
            let mut entry = HopEntry::new(Hop::GatewayToEdge);
            for plain in gateway_rx {
                let enc = encrypt(&plain, suite, key)?;
                entry.record(plain.len(), Some(enc.ciphertext.len()));
                if to_edge.send(enc).is_err() {
                    break;
                }
            }
            Ok(entry)
        });

        let edge = s.spawn(move || -> Result<Vec<PayloadRecord>> {
            let mut delivered = Vec::new();
            for enc in edge_rx {
                let decoded = decode_payload(&decrypt(&enc, key)?)?;
                if decoded.kind != kind || decoded.unit != unit {
                    return Err(Error::Integrity("sensor kind or unit changed in transit".into()));
                }
                delivered.extend(decoded.records);
            }
            Ok(delivered)
        });

        let sensor = sensor.join().expect("sensor stage panicked")?;
        let gateway = gateway.join().expect("gateway stage panicked")?;
        let delivered = edge.join().expect("edge stage panicked")?;
        Ok(LinkOutcome {
            log: TransmissionLog {
                entries: vec![sensor, gateway],
            },
            delivered,
        })
    })
}

fn check_delivery(sent: &[PayloadRecord], delivered: &[PayloadRecord]) -> Result<()> {
    if sent.len() != delivered.len() {
        return Err(Error::Integrity(format!(
            "sent {} samples, edge decoded {}",
            sent.len(),
            delivered.len()
        )));
    }
    if let Some(i) = sent.iter().zip(delivered).position(|(a, b)| !a.bit_eq(b)) {
        return Err(Error::Integrity(format!("sample {i} differs after decryption")));
    }
    Ok(())
}

/// Runs both tiers over `trace` and answers `config.queries` over `dataset`.
pub fn run_pipeline(trace: &Trace, config: &PipelineConfig, dataset: &[PersonRecord]) -> Result<PipelineReport> {
    config.validate()?;
    if trace.is_empty() {
        return Err(Error::InvalidValue("pipeline needs a trace with at least one sample".into()));
    }

    let outcome = infer(trace, &config.inference)?;
    let sent = payload_records(trace, &outcome.tx)?;
    let actual = transmit(trace.kind(), trace.unit(), &sent, config.batch_samples, config.suite, &config.key)?;
    check_delivery(&sent, &actual.delivered)?;

    // every sample is a beacon with period 1
    let all = InferenceConfig {
        beacon_period: Some(1),
        ..config.inference
    };
    let baseline_tx = select_samples(trace, &all)?;
    let baseline_sent = payload_records(trace, &baseline_tx)?;
    let baseline = transmit(
        trace.kind(),
        trace.unit(),
        &baseline_sent,
        config.batch_samples,
        config.suite,
        &config.key,
    )?;
    check_delivery(&baseline_sent, &baseline.delivered)?;

    let energy_actual = energy_estimate(&actual.log, &config.energy);
    let energy_baseline = energy_estimate(&baseline.log, &config.energy);
    let energy_saving_percent =
        (energy_baseline > 0.0).then(|| 100.0 * (energy_baseline - energy_actual) / energy_baseline);

    let query_results = config
        .queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut rng = derive_stream(config.master_seed, i as u64);
            noisy_query(dataset, q, &config.dp, &mut rng).map(|result| QueryAnswer { query: *q, result })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PipelineReport {
        inference_metrics: MetricsReport::new(outcome.metrics, &config.inference),
        suite: config.suite,
        batch_samples: config.batch_samples,
        delivered_samples: actual.delivered.len(),
        log: actual.log,
        baseline_log: baseline.log,
        energy_model: config.energy,
        energy_baseline,
        energy_actual,
        energy_saving_percent,
        query_results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::Field;
    use crate::inference::ReconMode;
    use crate::trace::generate_population;

    fn config(vr: f64, beacon: Option<usize>, epsilon: f64) -> PipelineConfig {
        PipelineConfig {
            inference: InferenceConfig::new(vr, beacon, ReconMode::Linear).unwrap(),
            suite: CipherSuite::Aes128Ecb,
            key: CipherKey::from_hex("000102030405060708090a0b0c0d0e0f").unwrap(),
            dp: DpParams::new(epsilon, 1.0).unwrap(),
            queries: vec![DpQuery::mean(Field::HeartRate), DpQuery::count()],
            batch_samples: DEFAULT_BATCH_SAMPLES,
            master_seed: 42,
            energy: EnergyModel::default(),
        }
    }

    #[test]
    fn energy_of_empty_and_simple_logs() {
        let model = EnergyModel::default();
        assert_eq!(energy_estimate(&TransmissionLog::default(), &model), 0.0);
        let mut entry = HopEntry::new(Hop::SensorToGateway);
        entry.record(100, None);
        let log = TransmissionLog { entries: vec![entry] };
        assert!((energy_estimate(&log, &model) - 2.0e-4).abs() < 1e-18);
    }

    #[test]
    fn doubling_bytes_doubles_byte_term() {
        let model = EnergyModel { joules_per_byte_tx: 1e-6, joules_per_message_overhead: 0.0 };
        let log = TransmissionLog {
            entries: vec![
                HopEntry { hop: Hop::SensorToGateway, messages: 3, payload_bytes: 400, ciphertext_bytes: None },
                HopEntry { hop: Hop::GatewayToEdge, messages: 3, payload_bytes: 400, ciphertext_bytes: Some(416) },
            ],
        };
        let doubled = TransmissionLog {
            entries: log
                .entries
                .iter()
                .map(|e| HopEntry {
                    payload_bytes: e.payload_bytes * 2,
                    ciphertext_bytes: e.ciphertext_bytes.map(|c| c * 2),
                    ..*e
                })
                .collect(),
        };
        assert_eq!(energy_estimate(&doubled, &model), 2.0 * energy_estimate(&log, &model));
    }

    #[test]
    fn constant_trace_with_beacons_saves_energy() {
        let trace = Trace::from_values(SensorKind::HeartRate, Unit::Bpm, 60, &[70.0; 100]).unwrap();
        let report = run_pipeline(&trace, &config(0.01, Some(10), 0.5), &generate_population(130, 5)).unwrap();
        assert_eq!(report.delivered_samples, 11);
        let sensor = report.log.hop(Hop::SensorToGateway).unwrap();
        assert_eq!((sensor.messages, sensor.payload_bytes), (1, 11 + 13 * 11));
        let edge = report.log.hop(Hop::GatewayToEdge).unwrap();
        assert_eq!(edge.ciphertext_bytes, Some(160));
        // actual 154 + 160 B + 2 msgs; baseline (791 + 531) + (800 + 544) B + 4 msgs
        assert!((report.energy_actual - 5.14e-4).abs() < 1e-12);
        assert!((report.energy_baseline - 3.066e-3).abs() < 1e-12);
        assert!(report.energy_saving_percent.unwrap() > 80.0);
    }

    #[test]
    fn pass_through_configuration() {
        let values: Vec<f64> = (0..200).map(|i| 60.0 + (i as f64 * 0.37).sin() * 5.0 + i as f64 * 1e-3).collect();
        let trace = Trace::from_values(SensorKind::HeartRate, Unit::Bpm, 60, &values).unwrap();
        let report = run_pipeline(&trace, &config(0.0, None, 1e6), &generate_population(130, 5)).unwrap();
        assert_eq!(report.inference_metrics.metrics.t, 200);
        assert_eq!(report.energy_saving_percent, Some(0.0));
        for q in &report.query_results {
            assert!(q.result.noise.abs() < 1e-3);
        }
    }

    #[test]
    fn ciphertext_never_smaller_than_payload() {
        let trace = Trace::from_values(SensorKind::HeartRate, Unit::Bpm, 60, &[70.0, 90.0, 70.0, 90.0]).unwrap();
        let report = run_pipeline(&trace, &config(0.01, None, 1.0), &generate_population(10, 1)).unwrap();
        for log in [&report.log, &report.baseline_log] {
            let e = log.hop(Hop::GatewayToEdge).unwrap();
            assert!(e.ciphertext_bytes.unwrap() >= e.payload_bytes);
        }
    }

    #[test]
    fn rejects_empty_trace_and_bad_config() {
        let empty = Trace::from_values(SensorKind::HeartRate, Unit::Bpm, 60, &[]).unwrap();
        assert!(run_pipeline(&empty, &config(0.1, None, 1.0), &[]).is_err());

        let trace = Trace::from_values(SensorKind::HeartRate, Unit::Bpm, 60, &[1.0, 2.0]).unwrap();
        let mut bad = config(0.1, None, 1.0);
        bad.key = CipherKey::new(vec![1, 2, 3]);
        assert!(matches!(run_pipeline(&trace, &bad, &[]), Err(Error::KeyLength { .. })));
        let mut bad = config(0.1, None, 1.0);
        bad.batch_samples = 0;
        assert!(run_pipeline(&trace, &bad, &[]).is_err());
        // mean over an empty population
        assert!(matches!(run_pipeline(&trace, &config(0.1, None, 1.0), &[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn delivery_check_detects_tampering() {
        let a = PayloadRecord { t: 0, value: 1.0, reason: crate::inference::Reason::Anchor };
        let b = PayloadRecord { value: f64::from_bits(1.0f64.to_bits() + 1), ..a };
        assert!(check_delivery(&[a], &[a]).is_ok());
        assert!(matches!(check_delivery(&[a], &[b]), Err(Error::Integrity(_))));
        assert!(matches!(check_delivery(&[a], &[]), Err(Error::Integrity(_))));
    }

    #[test]
    fn config_from_json() {
        let text = r#"{
            "inference": {"vr": 0.025, "beacon_period": 60, "recon_mode": "linear"},
            "suite": "blowfish-ecb",
            "key": "00112233445566778899aabbccddeeff",
            "dp": {"epsilon": 0.5, "sensitivity": 1.0},
            "queries": [{"aggregate": "mean", "field": "heart_rate"}, {"aggregate": "count"}],
            "batch_samples": 30,
            "master_seed": 7
        }"#;
        let c = PipelineConfig::from_json(text).unwrap();
        assert_eq!(c.suite, CipherSuite::BlowfishEcb);
        assert_eq!(c.batch_samples, 30);
        assert_eq!(c.energy, EnergyModel::default());
        let bad = text.replace("00112233445566778899aabbccddeeff", "0011");
        assert!(PipelineConfig::from_json(&bad).is_err());
    }

    #[test]
    fn log_csv_layout() {
        let trace = Trace::from_values(SensorKind::HeartRate, Unit::Bpm, 60, &[70.0; 5]).unwrap();
        let report = run_pipeline(&trace, &config(0.01, None, 1.0), &generate_population(3, 1)).unwrap();
        let mut buf = Vec::new();
        report.log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "hop,messages,payload_bytes,ciphertext_bytes\nsensor_to_gateway,1,37,\ngateway_to_edge,1,37,48\n");
    }
}
