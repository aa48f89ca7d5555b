//! Payload codec and block-cipher stage.
//!
//! The selected samples are packed into a fixed binary layout and encrypted
//! with one of three block ciphers in ECB mode with PKCS#7 padding.
//!
//! **ECB is not a secure mode.** Identical plaintext blocks produce identical
//! ciphertext blocks, and DES has a 56-bit effective key. They are offered so
//! that ciphertext size as a function of plaintext size can be studied; do
//! not use this module to protect real health data.
//!
//! Wire layout (all integers big-endian):
//!
//! ```text
//! "IOHT" | version u8 = 1 | kind u8 | unit u8 | count u32
//! count × ( t u32 | value f64 (IEEE-754 bits) | reason u8 )
//! ```

use std::fmt;
use std::str::FromStr;

use aes::cipher::block_padding::Pkcs7;
use aes::cipher::{BlockDecryptMut, BlockEncryptMut, KeyInit};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::inference::{Reason, TransmissionSet};
use crate::trace::{SensorKind, Trace, Unit};

pub const MAGIC: &[u8; 4] = b"IOHT";
pub const FORMAT_VERSION: u8 = 0x01;
pub const HEADER_BYTES: usize = 4 + 1 + 1 + 1 + 4;
pub const RECORD_BYTES: usize = 4 + 8 + 1;

/// Plaintext size that stands for an unreduced payload in the size model.
pub const REFERENCE_PLAINTEXT_BYTES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CipherSuite {
    Aes128Ecb,
    DesEcb,
    BlowfishEcb,
}

impl CipherSuite {
    pub const ALL: [CipherSuite; 3] = [CipherSuite::Aes128Ecb, CipherSuite::DesEcb, CipherSuite::BlowfishEcb];

    pub fn name(self) -> &'static str {
        match self {
            CipherSuite::Aes128Ecb => "aes-128-ecb",
            CipherSuite::DesEcb => "des-ecb",
            CipherSuite::BlowfishEcb => "blowfish-ecb",
        }
    }

    pub fn block_bytes(self) -> usize {
        match self {
            CipherSuite::Aes128Ecb => 16,
            CipherSuite::DesEcb | CipherSuite::BlowfishEcb => 8,
        }
    }

    pub fn key_bits(self) -> usize {
        match self {
            CipherSuite::Aes128Ecb | CipherSuite::BlowfishEcb => 128,
            CipherSuite::DesEcb => 64,
        }
    }

    pub fn key_bytes(self) -> usize {
        self.key_bits() / 8
    }
}

impl fmt::Display for CipherSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CipherSuite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CipherSuite::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown cipher suite `{s}`")))
    }
}

impl Serialize for CipherSuite {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for CipherSuite {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Raw key bytes, carried as hex in configuration files.
#[derive(Clone, PartialEq, Eq)]
pub struct CipherKey(Vec<u8>);

impl CipherKey {
    pub fn new(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        hex::decode(s.trim())
            .map(Self)
            .map_err(|e| Error::InvalidValue(format!("bad hex key: {e}")))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn check(&self, suite: CipherSuite) -> Result<()> {
        if self.0.len() != suite.key_bytes() {
            return Err(Error::KeyLength {
                suite: suite.name(),
                expected: suite.key_bytes(),
                actual: self.0.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for CipherKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CipherKey({} bytes)", self.0.len())
    }
}

impl Serialize for CipherKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CipherKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CipherKey::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// One transmitted sample as it appears on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayloadRecord {
    pub t: u32,
    pub value: f64,
    pub reason: Reason,
}

impl PayloadRecord {
    /// Equality on the exact bit pattern of the value.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.t == other.t && self.value.to_bits() == other.value.to_bits() && self.reason == other.reason
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPayload {
    pub kind: SensorKind,
    pub unit: Unit,
    pub records: Vec<PayloadRecord>,
}

fn record_count(len: usize) -> Result<u32> {
    u32::try_from(len).map_err(|_| Error::InvalidValue(format!("{len} records exceed the 2^32-1 wire limit")))
}

/// Gathers the selected samples of `trace` as wire records.
pub fn payload_records(trace: &Trace, tx: &TransmissionSet) -> Result<Vec<PayloadRecord>> {
    if tx.source_len() != trace.len() {
        return Err(Error::LengthMismatch {
            expected: trace.len(),
            actual: tx.source_len(),
        });
    }
    let samples = trace.samples();
    tx.selected()
        .iter()
        .map(|sel| {
            let s = samples[sel.index];
            let t = u32::try_from(s.t)
                .map_err(|_| Error::InvalidValue(format!("time offset {} does not fit in 32 bits", s.t)))?;
            Ok(PayloadRecord {
                t,
                value: s.value,
                reason: sel.reason,
            })
        })
        .collect()
}

pub fn encode_payload(kind: SensorKind, unit: Unit, records: &[PayloadRecord]) -> Result<Vec<u8>> {
    let count = record_count(records.len())?;
    let mut out = Vec::with_capacity(HEADER_BYTES + RECORD_BYTES * records.len());
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.push(kind.code());
    out.push(unit.code());
    out.extend_from_slice(&count.to_be_bytes());
    for r in records {
        out.extend_from_slice(&r.t.to_be_bytes());
        out.extend_from_slice(&r.value.to_bits().to_be_bytes());
        out.push(r.reason.code());
    }
    Ok(out)
}

/// Canonical wire bytes for the selected samples of a trace.
pub fn serialize_payload(trace: &Trace, tx: &TransmissionSet) -> Result<Vec<u8>> {
    let records = payload_records(trace, tx)?;
    encode_payload(trace.kind(), trace.unit(), &records)
}

pub fn decode_payload(bytes: &[u8]) -> Result<DecodedPayload> {
    let malformed = |m: &str| Error::MalformedPayload(m.to_string());
    if bytes.len() < HEADER_BYTES {
        return Err(malformed("truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(malformed("bad magic"));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::MalformedPayload(format!("unsupported version {}", bytes[4])));
    }
    let kind = SensorKind::from_code(bytes[5]).ok_or_else(|| malformed("unknown sensor kind"))?;
    let unit = Unit::from_code(bytes[6]).ok_or_else(|| malformed("unknown unit"))?;
    let count = u32::from_be_bytes(bytes[7..11].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_BYTES..];
    if body.len() != count * RECORD_BYTES {
        return Err(Error::MalformedPayload(format!(
            "expected {} record bytes, found {}",
            count * RECORD_BYTES,
            body.len()
        )));
    }
    let records = body
        .chunks_exact(RECORD_BYTES)
        .map(|rec| {
            let t = u32::from_be_bytes(rec[0..4].try_into().unwrap());
            let value = f64::from_bits(u64::from_be_bytes(rec[4..12].try_into().unwrap()));
            let reason = Reason::from_code(rec[12]).ok_or_else(|| malformed("unknown reason code"))?;
            Ok(PayloadRecord { t, value, reason })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecodedPayload { kind, unit, records })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedPayload {
    pub suite: CipherSuite,
    pub ciphertext: Vec<u8>,
    pub plaintext_len: usize,
}

fn ecb_encrypt<C>(key: &[u8], plaintext: &[u8]) -> Vec<u8>
where
    C: BlockEncryptMut + aes::cipher::BlockCipher + KeyInit,
{
    let cipher = ecb::Encryptor::<C>::new_from_slice(key).expect("key length checked");
    cipher.encrypt_padded_vec_mut::<Pkcs7>(plaintext)
}

fn ecb_decrypt<C>(key: &[u8], ciphertext: &[u8]) -> Result<Vec<u8>>
where
    C: BlockDecryptMut + aes::cipher::BlockCipher + KeyInit,
{
    let cipher = ecb::Decryptor::<C>::new_from_slice(key).expect("key length checked");
    cipher
        .decrypt_padded_vec_mut::<Pkcs7>(ciphertext)
        .map_err(|_| Error::Decrypt("invalid padding".into()))
}

pub fn encrypt(plaintext: &[u8], suite: CipherSuite, key: &CipherKey) -> Result<EncryptedPayload> {
    key.check(suite)?;
    let k = key.as_bytes();
    let ciphertext = match suite {
        CipherSuite::Aes128Ecb => ecb_encrypt::<aes::Aes128>(k, plaintext),
        CipherSuite::DesEcb => ecb_encrypt::<des::Des>(k, plaintext),
        CipherSuite::BlowfishEcb => ecb_encrypt::<blowfish::Blowfish>(k, plaintext),
    };
    debug_assert_eq!(ciphertext.len(), ciphertext_size(plaintext.len(), suite));
    Ok(EncryptedPayload {
        suite,
        ciphertext,
        plaintext_len: plaintext.len(),
    })
}

pub fn decrypt(payload: &EncryptedPayload, key: &CipherKey) -> Result<Vec<u8>> {
    let suite = payload.suite;
    key.check(suite)?;
    let ct = &payload.ciphertext;
    if ct.is_empty() || !ct.len().is_multiple_of(suite.block_bytes()) {
        return Err(Error::Decrypt(format!(
            "ciphertext length {} is not a positive multiple of {}",
            ct.len(),
            suite.block_bytes()
        )));
    }
    let k = key.as_bytes();
    let plain = match suite {
        CipherSuite::Aes128Ecb => ecb_decrypt::<aes::Aes128>(k, ct)?,
        CipherSuite::DesEcb => ecb_decrypt::<des::Des>(k, ct)?,
        CipherSuite::BlowfishEcb => ecb_decrypt::<blowfish::Blowfish>(k, ct)?,
    };
    if plain.len() != payload.plaintext_len {
        return Err(Error::Decrypt(format!(
            "recovered {} bytes, expected {}",
            plain.len(),
            payload.plaintext_len
        )));
    }
    Ok(plain)
}

/// Size of a reduced payload when an unreduced one is taken as 1024 bytes,
/// rounded down to whole bytes.
pub fn plaintext_size_for_savings(savings_percent: f64) -> Result<usize> {
    if !(0.0..=100.0).contains(&savings_percent) {
        return Err(Error::InvalidValue(format!("savings {savings_percent}% outside [0, 100]")));
    }
    let exact = (100.0 - savings_percent) * REFERENCE_PLAINTEXT_BYTES as f64 / 100.0;
    // absorb representation error such as 511.99999999999994
    Ok((exact + 1e-9).floor() as usize)
}

/// Ciphertext length after PKCS#7 padding, which always adds 1..=block bytes.
pub fn ciphertext_size(plaintext_len: usize, suite: CipherSuite) -> usize {
    let block = suite.block_bytes();
    (plaintext_len / block + 1) * block
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{select_samples, InferenceConfig, ReconMode};

    fn key_for(suite: CipherSuite) -> CipherKey {
        CipherKey::new((0..suite.key_bytes() as u8).collect())
    }

    #[test]
    fn suite_parameters() {
        assert_eq!(CipherSuite::Aes128Ecb.block_bytes(), 16);
        assert_eq!(CipherSuite::DesEcb.block_bytes(), 8);
        assert_eq!(CipherSuite::BlowfishEcb.block_bytes(), 8);
        assert_eq!(CipherSuite::Aes128Ecb.key_bits(), 128);
        assert_eq!(CipherSuite::DesEcb.key_bits(), 64);
        assert_eq!(CipherSuite::BlowfishEcb.key_bits(), 128);
        for s in CipherSuite::ALL {
            assert_eq!(s.name().parse::<CipherSuite>().unwrap(), s);
        }
        assert!("aes-256-cbc".parse::<CipherSuite>().is_err());
    }

    #[test]
    fn header_and_record_sizes() {
        let empty = encode_payload(SensorKind::HeartRate, Unit::Bpm, &[]).unwrap();
        assert_eq!(empty.len(), 11);
        assert_eq!(&empty[..4], b"IOHT");
        assert_eq!(empty[4], 0x01);
        assert_eq!(&empty[7..11], &[0, 0, 0, 0]);

        let one = encode_payload(
            SensorKind::BodyTemperature,
            Unit::Celsius,
            &[PayloadRecord { t: 60, value: 36.6, reason: Reason::Variance }],
        )
        .unwrap();
        assert_eq!(one.len(), 24);
        assert_eq!(&one[5..7], &[1, 1]);
        assert_eq!(&one[7..11], &[0, 0, 0, 1]);
        assert_eq!(&one[11..15], &[0, 0, 0, 60]);
        assert_eq!(&one[15..23], &36.6f64.to_bits().to_be_bytes());
        assert_eq!(one[23], 1);
    }

    #[test]
    fn count_limit() {
        assert!(record_count(u32::MAX as usize).is_ok());
        assert!(record_count(u32::MAX as usize + 1).is_err());
    }

    #[test]
    fn trace_payload_round_trip() {
        let trace = Trace::from_values(SensorKind::HeartRate, Unit::Bpm, 60, &[70.0, 80.0, 80.0, 80.0, 65.5]).unwrap();
        let tx = select_samples(&trace, &InferenceConfig::new(0.05, Some(2), ReconMode::Linear).unwrap()).unwrap();
        let bytes = serialize_payload(&trace, &tx).unwrap();
        assert_eq!(bytes.len(), HEADER_BYTES + RECORD_BYTES * tx.len());
        let decoded = decode_payload(&bytes).unwrap();
        assert_eq!(decoded.kind, SensorKind::HeartRate);
        assert_eq!(decoded.unit, Unit::Bpm);
        let expected = payload_records(&trace, &tx).unwrap();
        assert_eq!(decoded.records.len(), expected.len());
        assert!(decoded.records.iter().zip(&expected).all(|(a, b)| a.bit_eq(b)));
    }

    #[test]
    fn decode_rejects_corruption() {
        let good = encode_payload(SensorKind::Other, Unit::Dimensionless, &[PayloadRecord { t: 0, value: 1.0, reason: Reason::Anchor }]).unwrap();
        assert!(decode_payload(&good[..10]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode_payload(&bad).is_err());
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(decode_payload(&bad).is_err());
        let mut bad = good.clone();
        bad[23] = 9;
        assert!(decode_payload(&bad).is_err());
        assert!(decode_payload(&good[..good.len() - 1]).is_err());
    }

    #[test]
    fn encrypt_round_trip_each_suite() {
        let plaintext: Vec<u8> = (0..100u8).collect();
        for suite in CipherSuite::ALL {
            let key = key_for(suite);
            let enc = encrypt(&plaintext, suite, &key).unwrap();
            assert_eq!(enc.ciphertext.len(), ciphertext_size(100, suite));
            assert_ne!(&enc.ciphertext[..16], &plaintext[..16]);
            assert_eq!(decrypt(&enc, &key).unwrap(), plaintext);
        }
    }

    #[test]
    fn aes_matches_fips197_vector() {
        // FIPS-197 appendix C.1; the trailing 16 bytes are the padding block.
        let key = CipherKey::from_hex("000102030405060708090a0b0c0d0e0f").unwrap();
        let pt = hex::decode("00112233445566778899aabbccddeeff").unwrap();
        let enc = encrypt(&pt, CipherSuite::Aes128Ecb, &key).unwrap();
        assert_eq!(hex::encode(&enc.ciphertext[..16]), "69c4e0d86a7b0430d8cdb78070b4c55a");
        assert_eq!(enc.ciphertext.len(), 32);
    }

    #[test]
    fn wrong_key_length_rejected() {
        let key = CipherKey::new(vec![0; 8]);
        assert!(matches!(
            encrypt(b"abc", CipherSuite::Aes128Ecb, &key),
            Err(Error::KeyLength { expected: 16, actual: 8, .. })
        ));
        assert!(encrypt(b"abc", CipherSuite::DesEcb, &key).is_ok());
        assert!(encrypt(b"abc", CipherSuite::BlowfishEcb, &key).is_err());
    }

    #[test]
    fn decrypt_rejects_bad_lengths() {
        let key = key_for(CipherSuite::DesEcb);
        let bogus = EncryptedPayload { suite: CipherSuite::DesEcb, ciphertext: vec![0; 7], plaintext_len: 0 };
        assert!(decrypt(&bogus, &key).is_err());
        let empty = EncryptedPayload { suite: CipherSuite::DesEcb, ciphertext: vec![], plaintext_len: 0 };
        assert!(decrypt(&empty, &key).is_err());
    }

    #[test]
    fn size_model() {
        assert_eq!(plaintext_size_for_savings(0.0).unwrap(), 1024);
        assert_eq!(plaintext_size_for_savings(51.3).unwrap(), 498);
        assert_eq!(plaintext_size_for_savings(78.5).unwrap(), 220);
        assert_eq!(plaintext_size_for_savings(50.0).unwrap(), 512);
        assert_eq!(plaintext_size_for_savings(100.0).unwrap(), 0);
        assert!(plaintext_size_for_savings(-1.0).is_err());
        assert!(plaintext_size_for_savings(100.5).is_err());
        assert!(plaintext_size_for_savings(f64::NAN).is_err());

        assert_eq!(ciphertext_size(0, CipherSuite::Aes128Ecb), 16);
        assert_eq!(ciphertext_size(15, CipherSuite::Aes128Ecb), 16);
        assert_eq!(ciphertext_size(16, CipherSuite::Aes128Ecb), 32);
        assert_eq!(ciphertext_size(12, CipherSuite::DesEcb), 16);
        assert_eq!(ciphertext_size(498, CipherSuite::Aes128Ecb), 512);
        assert_eq!(ciphertext_size(1024, CipherSuite::Aes128Ecb), 1040);
    }

    #[test]
    fn key_hex_serde() {
        let key = CipherKey::from_hex("00112233445566778899aabbccddeeff").unwrap();
        let json = serde_json::to_string(&key).unwrap();
        assert_eq!(json, "\"00112233445566778899aabbccddeeff\"");
        let back: CipherKey = serde_json::from_str(&json).unwrap();
        assert_eq!(back, key);
        assert!(CipherKey::from_hex("zz").is_err());
    }
}
