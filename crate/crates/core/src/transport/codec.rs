//! Payload codecs for every protocol message.
//!
//! Big-endian throughout, digests as raw 32 bytes.
//!
//! ```text
//! commit          digest
//! challenge       ceil(r_i / 8) bytes, MSB-first, zero-padded
//! decision        u8 (0 or 1)
//! final response  k x (u32 q_i | u32 d_i)
//!                 bitstream: for each round, for each query,
//!                            (position - 1) in ceil(log2 l_i) bits then
//!                            the symbol in `symbol_bits` bits,
//!                            zero-padded to a byte
//!                 (d_1 + .. + d_k) digests, round order
//! opening         u32 q | u32 d | q x u32 position | q x symbol | d x digest
//! ```
//!
//! Standalone openings use 4-byte positions and fixed-width symbols; the
//! final response packs both to their information-theoretic width so that
//! its size follows the communication formula up to the count fields and
//! one padding byte.

use thiserror::Error;

use crate::argument::position_width;
use crate::iop::{Challenge, IopSpec, Symbol};
use crate::vc::{Digest, Opening, DIGEST_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("truncated input at byte {offset}: {needed} more bytes needed")]
    Truncated { offset: usize, needed: usize },
    #[error("unknown tag {tag:#04x} at byte {offset}")]
    UnknownTag { offset: usize, tag: u8 },
    #[error("{count} trailing bytes at byte {offset}")]
    TrailingBytes { offset: usize, count: usize },
    #[error("malformed field at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
}

impl DecodeError {
    pub fn offset(&self) -> usize {
        match self {
            DecodeError::Truncated { offset, .. }
            | DecodeError::UnknownTag { offset, .. }
            | DecodeError::TrailingBytes { offset, .. }
            | DecodeError::Malformed { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot encode: {0}")]
pub struct EncodeError(pub String);

/// Cursor over a byte slice that reports absolute offsets.
#[derive(Debug)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    /// Fails early when fewer than `n` bytes remain.
    pub fn expect_remaining(&self, n: usize) -> Result<(), DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::Truncated { offset: self.buf.len(), needed: n - self.remaining() });
        }
        Ok(())
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        self.expect_remaining(n)?;
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn digest(&mut self) -> Result<Digest, DecodeError> {
        Ok(self.take(DIGEST_LEN)?.try_into().expect("32 bytes"))
    }

    /// Big-endian unsigned integer of `width` bytes (at most 8).
    pub fn uint(&mut self, width: usize) -> Result<u64, DecodeError> {
        Ok(self.take(width)?.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64))
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        if self.remaining() > 0 {
            return Err(DecodeError::TrailingBytes { offset: self.pos, count: self.remaining() });
        }
        Ok(())
    }
}

/// MSB-first bit packer.
#[derive(Debug, Default)]
struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    fn push(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            if self.bits % 8 == 0 {
                self.bytes.push(0);
            }
            if (value >> i) & 1 == 1 {
                *self.bytes.last_mut().expect("pushed") |= 0x80 >> (self.bits % 8);
            }
            self.bits += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    bit: u64,
}

impl BitReader<'_> {
    fn pull(&mut self, width: u32) -> u64 {
        let mut v = 0u64;
        for _ in 0..width {
            let b = (self.bytes[(self.bit / 8) as usize] >> (7 - self.bit % 8)) & 1;
            v = (v << 1) | b as u64;
            self.bit += 1;
        }
        v
    }
}

fn fits(value: u64, width: u32) -> bool {
    width >= 64 || value >> width == 0
}

pub fn encode_commitment(root: &Digest) -> Vec<u8> {
    root.to_vec()
}

pub fn decode_commitment(payload: &[u8]) -> Result<Digest, DecodeError> {
    let mut r = Reader::new(payload);
    let d = r.digest()?;
    r.finish()?;
    Ok(d)
}

pub fn encode_challenge(c: &Challenge) -> Vec<u8> {
    c.bytes().to_vec()
}

pub fn decode_challenge(payload: &[u8], bits: u32) -> Result<Challenge, DecodeError> {
    let mut r = Reader::new(payload);
    let bytes = r.take((bits as usize).div_ceil(8))?.to_vec();
    r.finish()?;
    let last = bytes.len().saturating_sub(1);
    Challenge::new(bits, bytes).map_err(|e| DecodeError::Malformed { offset: last, reason: e.to_string() })
}

pub fn encode_decision(accepted: bool) -> Vec<u8> {
    vec![accepted as u8]
}

pub fn decode_decision(payload: &[u8]) -> Result<bool, DecodeError> {
    let mut r = Reader::new(payload);
    let b = r.u8()?;
    r.finish()?;
    match b {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(DecodeError::Malformed { offset: 0, reason: format!("decision byte {b}") }),
    }
}

/// Bits of the packed query/answer stream of a final response.
pub fn final_response_stream_bits(spec: &IopSpec, query_counts: &[usize]) -> u64 {
    query_counts
        .iter()
        .zip(&spec.proof_lengths)
        .map(|(&q, &l)| q as u64 * (position_width(l) + spec.symbol_bits as u32) as u64)
        .sum()
}

pub fn encode_final_response(spec: &IopSpec, openings: &[Opening]) -> Result<Vec<u8>, EncodeError> {
    if openings.len() != spec.rounds() {
        return Err(EncodeError(format!("{} openings for {} rounds", openings.len(), spec.rounds())));
    }
    let sb = spec.symbol_bits as u32;
    let mut out = Vec::new();
    let mut bits = BitWriter::default();
    for (i, o) in openings.iter().enumerate() {
        if o.answers.len() != o.positions.len() {
            return Err(EncodeError(format!("round {}: answer count differs from query count", i + 1)));
        }
        out.extend((o.positions.len() as u32).to_be_bytes());
        out.extend((o.proof.len() as u32).to_be_bytes());
        let w = position_width(spec.proof_lengths[i]);
        for (&q, &a) in o.positions.iter().zip(&o.answers) {
            if q == 0 || !fits(q as u64 - 1, w) {
                return Err(EncodeError(format!("round {}: position {q} does not fit {w} bits", i + 1)));
            }
            if !fits(a, sb) {
                return Err(EncodeError(format!("round {}: symbol {a} does not fit {sb} bits", i + 1)));
            }
            bits.push(q as u64 - 1, w);
            bits.push(a, sb);
        }
    }
    out.extend(bits.bytes);
    for o in openings {
        for d in &o.proof {
            out.extend(d);
        }
    }
    Ok(out)
}

pub fn decode_final_response(payload: &[u8], spec: &IopSpec) -> Result<Vec<Opening>, DecodeError> {
    let k = spec.rounds();
    let mut r = Reader::new(payload);
    let mut counts = Vec::with_capacity(k);
    for _ in 0..k {
        counts.push((r.u32()? as usize, r.u32()? as usize));
    }
    let sb = spec.symbol_bits as u32;
    let stream_bits = final_response_stream_bits(spec, &counts.iter().map(|c| c.0).collect::<Vec<_>>());
    let stream_start = r.offset();
    let stream_len = usize::try_from(stream_bits.div_ceil(8)).map_err(|_| DecodeError::Malformed {
        offset: stream_start,
        reason: "query counts too large".into(),
    })?;
    let stream = r.take(stream_len)?;
    let slack = stream_len as u64 * 8 - stream_bits;
    if slack > 0 && stream[stream_len - 1] & ((1u16 << slack) - 1) as u8 != 0 {
        return Err(DecodeError::Malformed { offset: stream_start + stream_len - 1, reason: "nonzero padding bits".into() });
    }
    let total_digests: usize = counts.iter().map(|c| c.1).sum();
    r.expect_remaining(total_digests.saturating_mul(DIGEST_LEN))?;
    let mut bits = BitReader { bytes: stream, bit: 0 };
    let mut openings = Vec::with_capacity(k);
    for (i, &(q, _)) in counts.iter().enumerate() {
        let w = position_width(spec.proof_lengths[i]);
        let mut positions = Vec::with_capacity(q);
        let mut answers = Vec::with_capacity(q);
        for _ in 0..q {
            positions.push(bits.pull(w) as usize + 1);
            answers.push(bits.pull(sb));
        }
        openings.push(Opening { positions, answers, proof: Vec::new() });
    }
    for (o, &(_, d)) in openings.iter_mut().zip(&counts) {
        for _ in 0..d {
            o.proof.push(r.digest()?);
        }
    }
    r.finish()?;
    Ok(openings)
}

/// Standalone opening with 4-byte positions and `symbol_bytes`-wide symbols.
pub fn encode_opening(o: &Opening, symbol_bytes: usize) -> Result<Vec<u8>, EncodeError> {
    if o.answers.len() != o.positions.len() {
        return Err(EncodeError("answer count differs from query count".into()));
    }
    let mut out = Vec::new();
    out.extend((o.positions.len() as u32).to_be_bytes());
    out.extend((o.proof.len() as u32).to_be_bytes());
    for &q in &o.positions {
        let q = u32::try_from(q).map_err(|_| EncodeError(format!("position {q} exceeds 32 bits")))?;
        out.extend(q.to_be_bytes());
    }
    for &a in &o.answers {
        if !fits(a, 8 * symbol_bytes as u32) {
            return Err(EncodeError(format!("symbol {a} exceeds {symbol_bytes} bytes")));
        }
        out.extend(&a.to_be_bytes()[8 - symbol_bytes..]);
    }
    for d in &o.proof {
        out.extend(d);
    }
    Ok(out)
}

pub fn decode_opening(payload: &[u8], symbol_bytes: usize) -> Result<Opening, DecodeError> {
    let mut r = Reader::new(payload);
    let q = r.u32()? as usize;
    let d = r.u32()? as usize;
    r.expect_remaining(q.saturating_mul(4 + symbol_bytes).saturating_add(d.saturating_mul(DIGEST_LEN)))?;
    let positions = (0..q).map(|_| r.u32().map(|p| p as usize)).collect::<Result<Vec<_>, _>>()?;
    let answers = (0..q).map(|_| r.uint(symbol_bytes)).collect::<Result<Vec<Symbol>, _>>()?;
    let proof = (0..d).map(|_| r.digest()).collect::<Result<Vec<_>, _>>()?;
    r.finish()?;
    Ok(Opening { positions, answers, proof })
}
