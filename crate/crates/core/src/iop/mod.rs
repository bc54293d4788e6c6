//! Public-coin IOPs with non-adaptive verifiers.
//!
//! A verifier is split into [`Iop::query`] (which positions of each proof
//! string it reads, as a function of the instance and its randomness only)
//! and [`Iop::decide`] (the accept bit given the answers at those
//! positions). Because every verifier message is fresh randomness, queries
//! can be postponed to the end of the interaction; [`iop_interact`] runs
//! exactly that postponed form.

mod brute;
mod challenge;

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use brute::{brute_force_soundness, strategy_tree_size, STRATEGY_NODE_CAP};
pub use challenge::{ceil_log2, Challenge, ChallengeSpace, REJECTION_RETRY_CAP};

pub type Symbol = u64;

/// Witness as a symbol sequence; empty for language-type relations.
pub type Witness = Vec<Symbol>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IopError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("strategy space of {nodes} nodes exceeds the enumeration cap of {cap}")]
    Infeasible { nodes: String, cap: u128 },
}

/// Static shape of an IOP for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IopSpec {
    pub relation: String,
    pub alphabet_size: u64,
    pub symbol_bits: u8,
    pub proof_lengths: Vec<usize>,
    pub challenges: Vec<ChallengeSpace>,
    pub query_counts: Vec<usize>,
}

impl IopSpec {
    pub fn new(
        relation: impl Into<String>,
        alphabet_size: u64,
        proof_lengths: Vec<usize>,
        challenges: Vec<ChallengeSpace>,
        query_counts: Vec<usize>,
    ) -> Result<Self, IopError> {
        let k = proof_lengths.len();
        if k == 0 {
            return Err(IopError::InvalidInstance("an IOP needs at least one round".into()));
        }
        if challenges.len() != k || query_counts.len() != k {
            return Err(IopError::InvalidInstance("per-round vectors disagree on the round count".into()));
        }
        if alphabet_size < 2 {
            return Err(IopError::InvalidInstance("alphabet needs at least two symbols".into()));
        }
        for (i, (&l, &q)) in proof_lengths.iter().zip(&query_counts).enumerate() {
            if l == 0 {
                return Err(IopError::InvalidInstance(format!("round {} has an empty proof string", i + 1)));
            }
            if q > l {
                return Err(IopError::InvalidInstance(format!("round {} queries {q} of {l} positions", i + 1)));
            }
        }
        for c in &challenges {
            c.validate()?;
        }
        Ok(Self {
            relation: relation.into(),
            alphabet_size,
            symbol_bits: ceil_log2(alphabet_size) as u8,
            proof_lengths,
            challenges,
            query_counts,
        })
    }

    pub fn rounds(&self) -> usize {
        self.proof_lengths.len()
    }

    pub fn l_max(&self) -> usize {
        *self.proof_lengths.iter().max().expect("k >= 1")
    }

    pub fn total_length(&self) -> usize {
        self.proof_lengths.iter().sum()
    }

    pub fn total_queries(&self) -> usize {
        self.query_counts.iter().sum()
    }

    /// `max_i q_i`.
    pub fn q_max(&self) -> usize {
        *self.query_counts.iter().max().expect("k >= 1")
    }

    pub fn randomness_bits(&self) -> u64 {
        self.challenges.iter().map(|c| c.bits as u64).sum()
    }

    /// Checks that `randomness` has one challenge per round of the right length.
    pub fn check_randomness(&self, randomness: &[Challenge]) -> Result<(), IopError> {
        if randomness.len() != self.rounds() {
            return Err(IopError::ProtocolViolation(format!(
                "expected {} challenges, got {}",
                self.rounds(),
                randomness.len()
            )));
        }
        for (i, (r, space)) in randomness.iter().zip(&self.challenges).enumerate() {
            if r.bits() != space.bits {
                return Err(IopError::ProtocolViolation(format!(
                    "challenge {} has {} bits, expected {}",
                    i + 1,
                    r.bits(),
                    space.bits
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProofString {
    pub round: usize,
    pub symbols: Vec<Symbol>,
}

/// Per-round query sets, 1-based and strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryPlan {
    pub sets: Vec<Vec<usize>>,
}

impl QueryPlan {
    /// Reads the answers of every round's query set out of `strings`.
    /// Positions beyond a string's length read as `pad`.
    pub fn answers_from<S: AsRef<[Symbol]>>(&self, strings: &[S], pad: Symbol) -> Vec<Vec<Symbol>> {
        self.sets
            .iter()
            .zip(strings)
            .map(|(set, s)| set.iter().map(|&q| s.as_ref().get(q - 1).copied().unwrap_or(pad)).collect())
            .collect()
    }
}

/// A public-coin IOP with a non-adaptive verifier, bound to one instance.
pub trait Iop: Send + Sync + fmt::Debug {
    /// Short selector name ("gc", "sumcheck").
    fn name(&self) -> &'static str;

    fn spec(&self) -> &IopSpec;

    /// Query sets as a function of the verifier randomness only.
    fn query(&self, randomness: &[Challenge]) -> Result<QueryPlan, IopError>;

    /// Accept bit; any shape mismatch rejects.
    fn decide(&self, randomness: &[Challenge], answers: &[Vec<Symbol>]) -> bool;

    fn in_language(&self) -> bool;

    fn check_witness(&self, witness: &[Symbol]) -> bool;

    /// The IOP knowledge extractor applied to the prover's strings.
    fn extract_witness(&self, strings: &[ProofString]) -> Witness;

    fn honest_prover(&self, witness: &[Symbol]) -> Result<Box<dyn IopProver>, IopError>;

    /// Canonical binary encoding of the instance.
    fn encode_instance(&self) -> Vec<u8>;
}

/// A (possibly malicious) IOP prover. Cloning a boxed prover is a snapshot.
pub trait IopProver: Send {
    /// Emits the next proof string. `prev` is the previous round's challenge
    /// and must be `None` exactly for the first round.
    fn next_string(&mut self, prev: Option<&Challenge>) -> Result<ProofString, IopError>;

    fn rounds_done(&self) -> usize;

    fn box_clone(&self) -> Box<dyn IopProver>;

    /// Canonical serialization of the internal state.
    fn state_bytes(&self) -> Vec<u8>;
}

impl Clone for Box<dyn IopProver> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// Starts the honest prover: returns the first proof string and the state.
pub fn prover_init(iop: &dyn Iop, witness: &[Symbol]) -> Result<(ProofString, Box<dyn IopProver>), IopError> {
    let mut prover = iop.honest_prover(witness)?;
    let first = prover.next_string(None)?;
    Ok((first, prover))
}

pub fn prover_next(state: &mut dyn IopProver, prev: &Challenge) -> Result<ProofString, IopError> {
    state.next_string(Some(prev))
}

/// Standard round bookkeeping shared by the concrete provers.
pub(crate) fn check_round_input(
    spec: &IopSpec,
    rounds_done: usize,
    prev: Option<&Challenge>,
) -> Result<(), IopError> {
    let k = spec.rounds();
    match (rounds_done, prev) {
        (0, None) => Ok(()),
        (0, Some(_)) => Err(IopError::ProtocolViolation("first round takes no challenge".into())),
        (i, _) if i >= k => Err(IopError::ProtocolViolation(format!("all {k} rounds already played"))),
        (_, None) => Err(IopError::ProtocolViolation("missing challenge for a later round".into())),
        (i, Some(r)) => {
            let want = spec.challenges[i - 1].bits;
            if r.bits() != want {
                return Err(IopError::ProtocolViolation(format!(
                    "challenge {} has {} bits, expected {want}",
                    i,
                    r.bits()
                )));
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IopTranscript {
    pub strings: Vec<ProofString>,
    pub challenges: Vec<Challenge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionOutcome {
    pub accepted: bool,
    pub transcript: IopTranscript,
    /// Set when the prover violated the protocol.
    pub diagnostic: Option<String>,
}

fn check_string(spec: &IopSpec, round: usize, s: &ProofString) -> Result<(), String> {
    let want = spec.proof_lengths[round];
    if s.symbols.len() != want {
        return Err(format!("round {} string has length {}, expected {want}", round + 1, s.symbols.len()));
    }
    Ok(())
}

/// Runs the postponed-query interaction: collect every proof string while
/// sending fresh challenges, then run `Query` and `Decision` once.
pub fn iop_interact<R: RngCore + ?Sized>(iop: &dyn Iop, prover: &mut dyn IopProver, rng: &mut R) -> InteractionOutcome {
    let spec = iop.spec();
    let mut transcript = IopTranscript { strings: Vec::new(), challenges: Vec::new() };
    for i in 0..spec.rounds() {
        let string = match prover.next_string(transcript.challenges.last()) {
            Ok(s) => s,
            Err(e) => return reject(transcript, e.to_string()),
        };
        if let Err(e) = check_string(spec, i, &string) {
            return reject(transcript, e);
        }
        transcript.strings.push(string);
        transcript.challenges.push(spec.challenges[i].sample(rng));
    }
    let accepted = match iop.query(&transcript.challenges) {
        Ok(plan) => {
            let strings: Vec<&[Symbol]> = transcript.strings.iter().map(|s| s.symbols.as_slice()).collect();
            iop.decide(&transcript.challenges, &plan.answers_from(&strings, 0))
        }
        Err(e) => return reject(transcript, e.to_string()),
    };
    InteractionOutcome { accepted, transcript, diagnostic: None }
}

fn reject(transcript: IopTranscript, diagnostic: String) -> InteractionOutcome {
    InteractionOutcome { accepted: false, transcript, diagnostic: Some(diagnostic) }
}

/// Interleaved form: the verifier holds oracle access to each string as it
/// arrives and reads answers one position at a time through the oracle.
/// Returns the decision and the positions actually read per round.
pub fn iop_interact_with_oracles<R: RngCore + ?Sized>(
    iop: &dyn Iop,
    prover: &mut dyn IopProver,
    rng: &mut R,
) -> (bool, Vec<Vec<usize>>) {
    let spec = iop.spec();
    let mut oracles: Vec<ProofString> = Vec::new();
    let mut challenges: Vec<Challenge> = Vec::new();
    for i in 0..spec.rounds() {
        let Ok(s) = prover.next_string(challenges.last()) else {
            return (false, Vec::new());
        };
        if check_string(spec, i, &s).is_err() {
            return (false, Vec::new());
        }
        oracles.push(s);
        challenges.push(spec.challenges[i].sample(rng));
    }
    let Ok(plan) = iop.query(&challenges) else {
        return (false, Vec::new());
    };
    let mut read: Vec<Vec<usize>> = vec![Vec::new(); spec.rounds()];
    let answers: Vec<Vec<Symbol>> = plan
        .sets
        .iter()
        .enumerate()
        .map(|(i, set)| {
            set.iter()
                .map(|&q| {
                    read[i].push(q);
                    oracles[i].symbols[q - 1]
                })
                .collect()
        })
        .collect();
    (iop.decide(&challenges, &answers), read)
}
