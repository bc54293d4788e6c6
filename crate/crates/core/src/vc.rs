//! Merkle-tree vector commitment over a fixed-width symbol alphabet.
//!
//! The tree has `width = capacity.next_power_of_two()` leaves. Leaf and
//! node hashes are domain separated:
//!
//! ```text
//! leaf(j)    = H(tag || 0x00 || j (u64 BE) || symbol (fixed-width BE))
//! padding(j) = H(tag || 0x02 || j (u64 BE) || 0x00 * symbol_bytes)
//! node       = H(tag || 0x01 || left || right)
//! ```
//!
//! Positions are 1-based. Positions past the committed message length are
//! padding leaves and cannot be opened.
//!
//! Multi-openings carry only the sibling digests that cannot be recomputed
//! from the opened leaves, emitted bottom-up and left-to-right.

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::iop::Symbol;

pub type Digest = [u8; 32];

pub const DIGEST_LEN: usize = 32;
pub const DEFAULT_DOMAIN_TAG: &[u8] = b"ibcs/vc/v1";

const LEAF_MARKER: u8 = 0x00;
const NODE_MARKER: u8 = 0x01;
const PADDING_MARKER: u8 = 0x02;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid message: {0}")]
    InvalidMessage(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("malformed parameter encoding at byte {offset}: {reason}")]
    Encoding { offset: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HashId {
    Sha256,
}

impl HashId {
    fn code(self) -> u8 {
        match self {
            HashId::Sha256 => 1,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(HashId::Sha256),
            _ => None,
        }
    }
}

/// Public parameters of the vector commitment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VcParams {
    lambda: u16,
    capacity: u64,
    symbol_bits: u8,
    hash: HashId,
    tag: Vec<u8>,
}

/// Samples VC parameters. The Merkle instantiation is deterministic, so
/// "sampling" only validates and fixes the shape.
pub fn vc_gen(lambda: u16, capacity: u64, symbol_bits: u8) -> Result<VcParams, VcError> {
    VcParams::with_tag(lambda, capacity, symbol_bits, DEFAULT_DOMAIN_TAG)
}

impl VcParams {
    pub fn with_tag(lambda: u16, capacity: u64, symbol_bits: u8, tag: &[u8]) -> Result<Self, VcError> {
        if lambda != 128 && lambda != 256 {
            return Err(VcError::InvalidParameter(format!("security parameter {lambda} not in {{128, 256}}")));
        }
        if capacity == 0 {
            return Err(VcError::InvalidParameter("capacity must be at least 1".into()));
        }
        if capacity > (1u64 << 40) {
            return Err(VcError::InvalidParameter(format!("capacity {capacity} exceeds 2^40")));
        }
        if !(1..=64).contains(&symbol_bits) {
            return Err(VcError::InvalidParameter(format!("symbol width {symbol_bits} not in 1..=64")));
        }
        if tag.len() > u16::MAX as usize {
            return Err(VcError::InvalidParameter("domain tag longer than 65535 bytes".into()));
        }
        Ok(Self { lambda, capacity, symbol_bits, hash: HashId::Sha256, tag: tag.to_vec() })
    }

    pub fn lambda(&self) -> u16 {
        self.lambda
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn symbol_bits(&self) -> u8 {
        self.symbol_bits
    }

    pub fn symbol_bytes(&self) -> usize {
        (self.symbol_bits as usize).div_ceil(8)
    }

    pub fn hash(&self) -> HashId {
        self.hash
    }

    pub fn tag(&self) -> &[u8] {
        &self.tag
    }

    /// Number of leaves: the least power of two not below the capacity.
    pub fn width(&self) -> usize {
        (self.capacity as usize).next_power_of_two()
    }

    pub fn depth(&self) -> usize {
        self.width().trailing_zeros() as usize
    }

    pub fn symbol_in_range(&self, s: Symbol) -> bool {
        self.symbol_bits == 64 || s < (1u64 << self.symbol_bits)
    }

    /// Canonical encoding:
    /// `lambda u16 | capacity u64 | symbol_bits u8 | hash u8 | tag_len u16 | tag`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(14 + self.tag.len());
        out.extend_from_slice(&self.lambda.to_be_bytes());
        out.extend_from_slice(&self.capacity.to_be_bytes());
        out.push(self.symbol_bits);
        out.push(self.hash.code());
        out.extend_from_slice(&(self.tag.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.tag);
        out
    }

    /// Parses a prefix of `bytes`; returns the parameters and bytes consumed.
    pub fn parse_prefix(bytes: &[u8]) -> Result<(Self, usize), VcError> {
        let need = |off: usize, n: usize| {
            if bytes.len() < off + n {
                Err(VcError::Encoding { offset: bytes.len(), reason: "truncated parameters".into() })
            } else {
                Ok(())
            }
        };
        need(0, 14)?;
        let lambda = u16::from_be_bytes([bytes[0], bytes[1]]);
        let capacity = u64::from_be_bytes(bytes[2..10].try_into().expect("8 bytes"));
        let symbol_bits = bytes[10];
        let hash = HashId::from_code(bytes[11])
            .ok_or_else(|| VcError::Encoding { offset: 11, reason: format!("unknown hash id {}", bytes[11]) })?;
        let tag_len = u16::from_be_bytes([bytes[12], bytes[13]]) as usize;
        need(14, tag_len)?;
        let mut params = Self::with_tag(lambda, capacity, symbol_bits, &bytes[14..14 + tag_len])
            .map_err(|e| VcError::Encoding { offset: 0, reason: e.to_string() })?;
        params.hash = hash;
        Ok((params, 14 + tag_len))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, VcError> {
        let (params, used) = Self::parse_prefix(bytes)?;
        if used != bytes.len() {
            return Err(VcError::Encoding { offset: used, reason: "trailing bytes".into() });
        }
        Ok(params)
    }

    fn hasher(&self, marker: u8) -> Sha256 {
        let mut h = Sha256::new();
        h.update(&self.tag);
        h.update([marker]);
        h
    }

    pub fn leaf_hash(&self, position: usize, symbol: Symbol) -> Digest {
        let mut h = self.hasher(LEAF_MARKER);
        h.update((position as u64).to_be_bytes());
        h.update(&symbol.to_be_bytes()[8 - self.symbol_bytes()..]);
        h.finalize().into()
    }

    pub fn padding_hash(&self, position: usize) -> Digest {
        let mut h = self.hasher(PADDING_MARKER);
        h.update((position as u64).to_be_bytes());
        h.update(vec![0u8; self.symbol_bytes()]);
        h.finalize().into()
    }

    pub fn node_hash(&self, left: &Digest, right: &Digest) -> Digest {
        let mut h = self.hasher(NODE_MARKER);
        h.update(left);
        h.update(right);
        h.finalize().into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Commitment {
    pub root: Digest,
    /// Number of committed (non-padding) symbols.
    pub len: u64,
}

/// Prover-side state kept after committing: every tree layer plus the message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitAux {
    layers: Vec<Vec<Digest>>,
    message: Vec<Symbol>,
}

impl CommitAux {
    /// `layers()[0]` are the leaves, the last layer holds the root.
    pub fn layers(&self) -> &[Vec<Digest>] {
        &self.layers
    }

    pub fn message(&self) -> &[Symbol] {
        &self.message
    }

    pub fn root(&self) -> Digest {
        self.layers.last().expect("at least one layer")[0]
    }
}

/// A multi-position opening: query set, answers and the deduplicated proof.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Opening {
    pub positions: Vec<usize>,
    pub answers: Vec<Symbol>,
    pub proof: Vec<Digest>,
}

pub fn vc_commit(params: &VcParams, message: &[Symbol]) -> Result<(Commitment, CommitAux), VcError> {
    if message.len() as u64 > params.capacity {
        return Err(VcError::InvalidMessage(format!(
            "message of {} symbols exceeds capacity {}",
            message.len(),
            params.capacity
        )));
    }
    if let Some((j, s)) = message.iter().enumerate().find(|(_, s)| !params.symbol_in_range(**s)) {
        return Err(VcError::InvalidMessage(format!(
            "symbol {s} at position {} exceeds {} bits",
            j + 1,
            params.symbol_bits
        )));
    }
    let width = params.width();
    let leaves: Vec<Digest> = (1..=width)
        .map(|j| match message.get(j - 1) {
            Some(&s) => params.leaf_hash(j, s),
            None => params.padding_hash(j),
        })
        .collect();
    let mut layers = vec![leaves];
    while layers.last().expect("nonempty").len() > 1 {
        let next = layers
            .last()
            .expect("nonempty")
            .chunks(2)
            .map(|pair| params.node_hash(&pair[0], &pair[1]))
            .collect();
        layers.push(next);
    }
    let aux = CommitAux { layers, message: message.to_vec() };
    Ok((Commitment { root: aux.root(), len: message.len() as u64 }, aux))
}

fn validate_positions(positions: &[usize], len: u64) -> Result<(), String> {
    if positions.is_empty() {
        return Err("empty query set".into());
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err("query set must be strictly increasing".into());
    }
    if positions[0] == 0 || *positions.last().expect("nonempty") as u64 > len {
        return Err(format!("positions must lie in [1, {len}]"));
    }
    Ok(())
}

pub fn vc_open(params: &VcParams, aux: &CommitAux, positions: &[usize]) -> Result<Opening, VcError> {
    validate_positions(positions, aux.message.len() as u64).map_err(VcError::InvalidQuery)?;
    debug_assert_eq!(aux.layers[0].len(), params.width());

    let mut proof = Vec::new();
    let mut known: Vec<usize> = positions.iter().map(|q| q - 1).collect();
    for layer in &aux.layers[..aux.layers.len() - 1] {
        let mut parents = Vec::with_capacity(known.len());
        let mut i = 0;
        while i < known.len() {
            let idx = known[i];
            let sibling = idx ^ 1;
            if idx & 1 == 0 && known.get(i + 1) == Some(&sibling) {
                i += 2;
            } else {
                proof.push(layer[sibling]);
                i += 1;
            }
            parents.push(idx >> 1);
        }
        known = parents;
    }
    let answers = positions.iter().map(|q| aux.message[q - 1]).collect();
    Ok(Opening { positions: positions.to_vec(), answers, proof })
}

/// Verifies an opening. Malformed inputs are a verification failure.
pub fn vc_check(params: &VcParams, cm: &Commitment, positions: &[usize], answers: &[Symbol], proof: &[Digest]) -> bool {
    if cm.len > params.capacity
        || answers.len() != positions.len()
        || validate_positions(positions, cm.len).is_err()
        || !answers.iter().all(|s| params.symbol_in_range(*s))
    {
        return false;
    }
    let mut nodes: Vec<(usize, Digest)> =
        positions.iter().zip(answers).map(|(&q, &s)| (q - 1, params.leaf_hash(q, s))).collect();
    let mut siblings = proof.iter();
    for _ in 0..params.depth() {
        let mut parents = Vec::with_capacity(nodes.len());
        let mut i = 0;
        while i < nodes.len() {
            let (idx, digest) = nodes[i];
            let (left, right) = if idx & 1 == 0 {
                match nodes.get(i + 1) {
                    Some(&(next, ref d)) if next == idx ^ 1 => {
                        i += 1;
                        (digest, *d)
                    }
                    _ => match siblings.next() {
                        Some(s) => (digest, *s),
                        None => return false,
                    },
                }
            } else {
                match siblings.next() {
                    Some(s) => (*s, digest),
                    None => return false,
                }
            };
            parents.push((idx >> 1, params.node_hash(&left, &right)));
            i += 1;
        }
        nodes = parents;
    }
    siblings.next().is_none() && nodes.len() == 1 && nodes[0].1 == cm.root
}

/// Convenience wrapper checking an [`Opening`] struct.
pub fn vc_check_opening(params: &VcParams, cm: &Commitment, opening: &Opening) -> bool {
    vc_check(params, cm, &opening.positions, &opening.answers, &opening.proof)
}
