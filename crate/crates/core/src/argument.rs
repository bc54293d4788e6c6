//! The compiled argument.
//!
//! Message order for a `k`-round IOP:
//!
//! ```text
//! P -> V  cm_1        V -> P  r_1
//! ...
//! P -> V  cm_k        V -> P  r_k
//! P -> V  (ans_1, pf_1), ..., (ans_k, pf_k)
//! ```
//!
//! One set of VC parameters with capacity `l_max` serves every round; a
//! string shorter than `l_max` is padded with the symbol [`PAD_SYMBOL`]
//! before it is committed, and the verifier checks that any opened padding
//! position carries it.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iop::{ceil_log2, Challenge, Iop, IopError, IopProver, IopSpec, Symbol};
use crate::vc::{vc_check, vc_commit, vc_gen, vc_open, CommitAux, Commitment, Digest, Opening, VcError, VcParams, DIGEST_LEN};

/// Padding symbol for strings shorter than `l_max`.
pub const PAD_SYMBOL: Symbol = 0;

/// Public parameters: VC parameters sized for `l_max`, the instance-size
/// bound, and the IOP shape they were generated for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgParams {
    pub vc: VcParams,
    pub n: u64,
    pub spec: IopSpec,
}

pub fn arg_setup(lambda: u16, n: u64, spec: &IopSpec) -> Result<ArgParams, VcError> {
    if n == 0 {
        return Err(VcError::InvalidParameter("instance size bound must be at least 1".into()));
    }
    let vc = vc_gen(lambda, spec.l_max() as u64, spec.symbol_bits.max(1))?;
    Ok(ArgParams { vc, n, spec: spec.clone() })
}

impl ArgParams {
    pub fn l_max(&self) -> usize {
        self.spec.l_max()
    }

    /// Generator output: VC parameter encoding followed by `n` (u64 BE).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.vc.to_bytes();
        out.extend(self.n.to_be_bytes());
        out
    }

    /// Parses [`ArgParams::to_bytes`] output for a known IOP shape.
    pub fn from_bytes(bytes: &[u8], spec: &IopSpec) -> Result<Self, VcError> {
        let (vc, used) = VcParams::parse_prefix(bytes)?;
        let rest = &bytes[used..];
        if rest.len() != 8 {
            return Err(VcError::Encoding { offset: used, reason: "expected an 8-byte instance bound".into() });
        }
        let n = u64::from_be_bytes(rest.try_into().expect("8 bytes"));
        let pp = Self { vc, n, spec: spec.clone() };
        let want = arg_setup(pp.vc.lambda(), n, spec)?;
        if want.vc.capacity() != pp.vc.capacity() || want.vc.symbol_bits() != pp.vc.symbol_bits() || n == 0 {
            return Err(VcError::Encoding { offset: 0, reason: "parameters do not fit the IOP shape".into() });
        }
        Ok(pp)
    }

    pub fn commitment(&self, root: Digest) -> Commitment {
        Commitment { root, len: self.l_max() as u64 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProverError {
    #[error("prover aborted: {0}")]
    Abort(String),
    #[error("prover violated the protocol: {0}")]
    Violation(String),
    #[error(transparent)]
    Iop(#[from] IopError),
}

/// An argument prover. `snapshot` returns an independent copy of the full
/// state, which is all the rewinding machinery needs.
pub trait ArgProver: Send {
    /// Next round's commitment; `prev` is the previous challenge, `None`
    /// exactly in round 1.
    fn commit(&mut self, prev: Option<&Challenge>) -> Result<Digest, ProverError>;

    /// Final response after the last challenge, one opening per round.
    fn respond(&mut self, last: &Challenge) -> Result<Vec<Opening>, ProverError>;

    fn rounds_done(&self) -> usize;

    fn snapshot(&self) -> Box<dyn ArgProver>;

    /// Canonical serialization of the state, for snapshot equality checks.
    fn state_bytes(&self) -> Vec<u8>;

    fn behavior(&self) -> String;
}

/// The compiled honest prover around any IOP prover.
pub struct HonestArgProver {
    vc: VcParams,
    l_max: usize,
    iop: Arc<dyn Iop>,
    prover: Box<dyn IopProver>,
    /// VC auxiliary output per committed round, kept apart from the IOP
    /// prover state.
    aux: Vec<CommitAux>,
    challenges: Vec<Challenge>,
}

impl Clone for HonestArgProver {
    fn clone(&self) -> Self {
        Self {
            vc: self.vc.clone(),
            l_max: self.l_max,
            iop: Arc::clone(&self.iop),
            prover: self.prover.clone(),
            aux: self.aux.clone(),
            challenges: self.challenges.clone(),
        }
    }
}

impl HonestArgProver {
    pub fn new(pp: &ArgParams, iop: Arc<dyn Iop>, prover: Box<dyn IopProver>) -> Self {
        Self { vc: pp.vc.clone(), l_max: pp.l_max(), iop, prover, aux: Vec::new(), challenges: Vec::new() }
    }

    pub fn from_witness(pp: &ArgParams, iop: Arc<dyn Iop>, witness: &[Symbol]) -> Result<Self, IopError> {
        let prover = iop.honest_prover(witness)?;
        Ok(Self::new(pp, iop, prover))
    }

    /// Padded strings committed so far.
    pub fn committed(&self) -> impl Iterator<Item = &[Symbol]> {
        self.aux.iter().map(|a| a.message())
    }

    pub fn challenges(&self) -> &[Challenge] {
        &self.challenges
    }
}

/// Opens `positions` of a committed padded string.
pub(crate) fn open_round(vc: &VcParams, aux: &CommitAux, positions: &[usize]) -> Result<Opening, ProverError> {
    if positions.is_empty() {
        return Ok(Opening { positions: Vec::new(), answers: Vec::new(), proof: Vec::new() });
    }
    vc_open(vc, aux, positions).map_err(|e| ProverError::Violation(e.to_string()))
}

/// Pads `symbols` to `l_max` and commits.
pub(crate) fn commit_padded(vc: &VcParams, l_max: usize, symbols: &[Symbol]) -> Result<CommitAux, ProverError> {
    if symbols.len() > l_max {
        return Err(ProverError::Violation(format!("string of length {} exceeds l_max = {l_max}", symbols.len())));
    }
    let mut padded = symbols.to_vec();
    padded.resize(l_max, PAD_SYMBOL);
    vc_commit(vc, &padded).map(|(_, aux)| aux).map_err(|e| ProverError::Violation(e.to_string()))
}

impl ArgProver for HonestArgProver {
    fn commit(&mut self, prev: Option<&Challenge>) -> Result<Digest, ProverError> {
        let round = self.aux.len();
        let string = self.prover.next_string(prev)?;
        let want = self.iop.spec().proof_lengths[round];
        if string.symbols.len() != want {
            return Err(ProverError::Violation(format!(
                "IOP prover sent {} symbols in round {}, expected {want}",
                string.symbols.len(),
                round + 1
            )));
        }
        let aux = commit_padded(&self.vc, self.l_max, &string.symbols)?;
        let root = aux.root();
        if let Some(r) = prev {
            self.challenges.push(r.clone());
        }
        self.aux.push(aux);
        Ok(root)
    }

    fn respond(&mut self, last: &Challenge) -> Result<Vec<Opening>, ProverError> {
        let k = self.iop.spec().rounds();
        if self.aux.len() != k || self.challenges.len() != k - 1 {
            return Err(ProverError::Violation("final response requested before all rounds were committed".into()));
        }
        self.challenges.push(last.clone());
        let plan = self.iop.query(&self.challenges)?;
        plan.sets.iter().zip(&self.aux).map(|(set, aux)| open_round(&self.vc, aux, set)).collect()
    }

    fn rounds_done(&self) -> usize {
        self.aux.len()
    }

    fn snapshot(&self) -> Box<dyn ArgProver> {
        Box::new(self.clone())
    }

    fn state_bytes(&self) -> Vec<u8> {
        let mut out = self.prover.state_bytes();
        for a in &self.aux {
            out.extend(a.root());
        }
        for c in &self.challenges {
            out.extend(c.bytes());
        }
        out
    }

    fn behavior(&self) -> String {
        "honest".into()
    }
}

/// Everything exchanged in one run, in message order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub instance: Vec<u8>,
    pub commitments: Vec<Digest>,
    pub challenges: Vec<Challenge>,
    pub response: Vec<Opening>,
}

impl Transcript {
    pub fn new(instance: Vec<u8>) -> Self {
        Self { instance, commitments: Vec::new(), challenges: Vec::new(), response: Vec::new() }
    }

    /// Number of protocol messages; a complete run of a `k`-round IOP has `2k + 1`.
    pub fn messages(&self) -> usize {
        self.commitments.len() + self.challenges.len() + usize::from(!self.response.is_empty())
    }

    /// The opened answers per round.
    pub fn answers(&self) -> Vec<Vec<Symbol>> {
        self.response.iter().map(|o| o.answers.clone()).collect()
    }
}

/// Why a transcript was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("transcript shape: {0}")]
    Shape(String),
    #[error("round {round}: opened positions differ from the query set")]
    WrongPositions { round: usize },
    #[error("round {round}: query position {position} lies outside the committed range")]
    OutOfRange { round: usize, position: usize },
    #[error("round {round}: padding position {position} does not hold the padding symbol")]
    Padding { round: usize, position: usize },
    #[error("round {round}: opening does not verify against the commitment")]
    Opening { round: usize },
    #[error("IOP decision rejected")]
    Decision,
}

/// The argument verifier.
pub fn arg_verify(pp: &ArgParams, iop: &dyn Iop, transcript: &Transcript) -> bool {
    arg_verify_detailed(pp, iop, transcript).is_ok()
}

pub fn arg_verify_detailed(pp: &ArgParams, iop: &dyn Iop, t: &Transcript) -> Result<(), Rejection> {
    let spec = iop.spec();
    let k = spec.rounds();
    if pp.spec != *spec {
        return Err(Rejection::Shape("parameters were generated for another IOP shape".into()));
    }
    if t.instance != iop.encode_instance() {
        return Err(Rejection::Shape("transcript is for another instance".into()));
    }
    if t.commitments.len() != k || t.challenges.len() != k || t.response.len() != k {
        return Err(Rejection::Shape(format!("expected {k} commitments, challenges and openings")));
    }
    spec.check_randomness(&t.challenges).map_err(|e| Rejection::Shape(e.to_string()))?;
    let plan = iop.query(&t.challenges).map_err(|e| Rejection::Shape(e.to_string()))?;
    check_openings(pp, &plan.sets, &t.commitments, &t.response, 0..k)?;
    if !iop.decide(&t.challenges, &t.answers()) {
        return Err(Rejection::Decision);
    }
    Ok(())
}

/// Position, padding and VC checks for the given rounds (0-based).
pub(crate) fn check_openings(
    pp: &ArgParams,
    sets: &[Vec<usize>],
    commitments: &[Digest],
    response: &[Opening],
    rounds: impl Iterator<Item = usize>,
) -> Result<(), Rejection> {
    for i in rounds {
        let round = i + 1;
        let (set, opening) = (&sets[i], &response[i]);
        if opening.positions != *set || opening.answers.len() != set.len() {
            return Err(Rejection::WrongPositions { round });
        }
        let l_i = pp.spec.proof_lengths[i];
        for (&q, &a) in set.iter().zip(&opening.answers) {
            if q == 0 || q > pp.l_max() {
                return Err(Rejection::OutOfRange { round, position: q });
            }
            if q > l_i && a != PAD_SYMBOL {
                return Err(Rejection::Padding { round, position: q });
            }
        }
        let ok = if set.is_empty() {
            opening.proof.is_empty()
        } else {
            vc_check(&pp.vc, &pp.commitment(commitments[i]), set, &opening.answers, &opening.proof)
        };
        if !ok {
            return Err(Rejection::Opening { round });
        }
    }
    Ok(())
}

/// Outcome of an in-process run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgOutcome {
    pub accepted: bool,
    pub transcript: Transcript,
    /// Prover abort or violation, if the run did not reach the decision.
    pub abort: Option<String>,
}

/// Runs prover and verifier in one thread. The verifier draws `r_i` from
/// `rng` right after receiving `cm_i`, exactly like the session driver, so
/// both produce identical transcripts for the same generator state.
pub fn run_argument<R: RngCore + ?Sized>(
    pp: &ArgParams,
    iop: &dyn Iop,
    prover: &mut dyn ArgProver,
    rng: &mut R,
) -> ArgOutcome {
    let spec = iop.spec();
    let mut t = Transcript::new(iop.encode_instance());
    let abort = |t: Transcript, e: ProverError| ArgOutcome { accepted: false, transcript: t, abort: Some(e.to_string()) };
    for i in 0..spec.rounds() {
        match prover.commit(t.challenges.last()) {
            Ok(cm) => t.commitments.push(cm),
            Err(e) => return abort(t, e),
        }
        t.challenges.push(spec.challenges[i].sample(rng));
    }
    match prover.respond(t.challenges.last().expect("k >= 1")) {
        Ok(openings) => t.response = openings,
        Err(e) => return abort(t, e),
    }
    ArgOutcome { accepted: arg_verify(pp, iop, &t), transcript: t, abort: None }
}

/// The verifier's messages for a run: they depend on the generator only.
pub fn verifier_challenges<R: RngCore + ?Sized>(spec: &IopSpec, rng: &mut R) -> Vec<Challenge> {
    spec.challenges.iter().map(|c| c.sample(rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStats {
    pub commitment_bits: u64,
    pub challenge_bits: u64,
    pub queries: u64,
    pub position_bits: u64,
    pub answer_bits: u64,
    pub proof_digests: u64,
    pub proof_bits: u64,
}

/// Communication in bits, per term and in total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommStats {
    pub rounds: usize,
    pub messages: usize,
    pub per_round: Vec<RoundStats>,
    pub prover_to_verifier_bits: u64,
    pub verifier_to_prover_bits: u64,
    pub generator_bits: u64,
}

/// Bits per opened position: `ceil(log2 l_i)`.
pub fn position_width(l_i: usize) -> u32 {
    ceil_log2(l_i as u64)
}

pub fn comm_stats(transcript: &Transcript, pp: &ArgParams) -> CommStats {
    let spec = &pp.spec;
    let sb = spec.symbol_bits as u64;
    let digest_bits = 8 * DIGEST_LEN as u64;
    let per_round: Vec<RoundStats> = (0..spec.rounds())
        .map(|i| {
            let opening = transcript.response.get(i);
            let queries = opening.map_or(0, |o| o.positions.len() as u64);
            let proof_digests = opening.map_or(0, |o| o.proof.len() as u64);
            RoundStats {
                commitment_bits: if i < transcript.commitments.len() { digest_bits } else { 0 },
                challenge_bits: transcript.challenges.get(i).map_or(0, |c| c.bits() as u64),
                queries,
                position_bits: queries * position_width(spec.proof_lengths[i]) as u64,
                answer_bits: queries * sb,
                proof_digests,
                proof_bits: proof_digests * digest_bits,
            }
        })
        .collect();
    CommStats {
        rounds: spec.rounds() + 1,
        messages: transcript.messages(),
        prover_to_verifier_bits: per_round
            .iter()
            .map(|r| r.commitment_bits + r.position_bits + r.answer_bits + r.proof_bits)
            .sum(),
        verifier_to_prover_bits: per_round.iter().map(|r| r.challenge_bits).sum(),
        generator_bits: 8 * pp.to_bytes().len() as u64,
        per_round,
    }
}
