use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::IopError;

/// Rejection-sampling retry cap. With `bits >= log2(modulus) + 64` the
/// chance of exhausting it is below 2^-512.
pub const REJECTION_RETRY_CAP: usize = 8;

/// A verifier message: a bit string of a fixed length, packed MSB-first,
/// final partial byte zero-padded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Challenge {
    bits: u32,
    bytes: Vec<u8>,
}

impl Challenge {
    pub fn new(bits: u32, bytes: Vec<u8>) -> Result<Self, IopError> {
        if bytes.len() != (bits as usize).div_ceil(8) {
            return Err(IopError::ProtocolViolation(format!(
                "challenge of {bits} bits needs {} bytes, got {}",
                (bits as usize).div_ceil(8),
                bytes.len()
            )));
        }
        let slack = (8 - bits % 8) % 8;
        if slack > 0 && bytes.last().is_some_and(|b| b & ((1u8 << slack) - 1) != 0) {
            return Err(IopError::ProtocolViolation("nonzero challenge padding bits".into()));
        }
        Ok(Self { bits, bytes })
    }

    /// Uniform bit string of `bits` bits.
    pub fn sample_raw<R: RngCore + ?Sized>(rng: &mut R, bits: u32) -> Self {
        let mut bytes = vec![0u8; (bits as usize).div_ceil(8)];
        rng.fill_bytes(&mut bytes);
        let slack = (8 - bits % 8) % 8;
        if let Some(last) = bytes.last_mut() {
            *last &= !((1u16 << slack) - 1) as u8;
        }
        Self { bits, bytes }
    }

    /// Bit string whose big-endian integer value is `value`.
    pub fn from_value(bits: u32, value: u128) -> Self {
        assert!(bits <= 128, "challenge values are limited to 128 bits");
        assert!(bits == 128 || value >> bits == 0, "value does not fit in {bits} bits");
        let nbytes = (bits as usize).div_ceil(8);
        let slack = (8 * nbytes as u32) - bits;
        let shifted = if nbytes == 0 { 0 } else { value << slack };
        let bytes = shifted.to_be_bytes()[16 - nbytes..].to_vec();
        Self { bits, bytes }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Big-endian integer value of the bit string (at most 128 bits).
    pub fn value(&self) -> u128 {
        assert!(self.bits <= 128);
        if self.bytes.is_empty() {
            return 0;
        }
        let mut buf = [0u8; 16];
        buf[16 - self.bytes.len()..].copy_from_slice(&self.bytes);
        let slack = 8 * self.bytes.len() as u32 - self.bits;
        u128::from_be_bytes(buf) >> slack
    }

    /// Bit `index` counted from the most significant end.
    pub fn bit(&self, index: u32) -> bool {
        assert!(index < self.bits);
        self.bytes[(index / 8) as usize] >> (7 - index % 8) & 1 == 1
    }
}

/// The structured value space behind one round's challenge: `bits` random
/// bits that decode to a uniform element of `[0, modulus)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChallengeSpace {
    pub bits: u32,
    pub modulus: u64,
}

impl ChallengeSpace {
    /// Space for `modulus` values with `ceil(log2 modulus) + 64` bits.
    pub fn for_modulus(modulus: u64) -> Self {
        Self { bits: ceil_log2(modulus) + 64, modulus }
    }

    pub fn validate(&self) -> Result<(), IopError> {
        if self.modulus == 0 {
            return Err(IopError::InvalidInstance("empty challenge space".into()));
        }
        if self.bits > 127 || (self.bits < 64 && (1u64 << self.bits) < self.modulus) {
            return Err(IopError::InvalidInstance(format!(
                "{} bits cannot index {} challenge values",
                self.bits, self.modulus
            )));
        }
        Ok(())
    }

    /// Values `>= limit` are rejected so that `value mod modulus` is uniform.
    fn limit(&self) -> u128 {
        let span = 1u128 << self.bits;
        span - span % self.modulus as u128
    }

    /// Draws a bit string whose decoded value is uniform on `[0, modulus)`.
    /// Retries consume further generator output; after the cap the last
    /// draw is kept.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Challenge {
        let limit = self.limit();
        let mut draw = Challenge::sample_raw(rng, self.bits);
        for _ in 1..REJECTION_RETRY_CAP {
            if draw.value() < limit {
                break;
            }
            draw = Challenge::sample_raw(rng, self.bits);
        }
        draw
    }

    pub fn decode(&self, challenge: &Challenge) -> u64 {
        (challenge.value() % self.modulus as u128) as u64
    }

    /// Canonical bit string for the `index`-th value.
    pub fn canonical(&self, index: u64) -> Challenge {
        debug_assert!(index < self.modulus);
        Challenge::from_value(self.bits, index as u128)
    }
}

pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}
