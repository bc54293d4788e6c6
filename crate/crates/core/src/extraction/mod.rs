//! Rewinding extraction: per-round knowledge sets, the sampler and reductor,
//! the extracting IOP prover, and the experiments built on them.
//!
//! Round indices in public types are 1-based; slices are 0-based.

mod bounds;
mod experiments;
mod stats;

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::argument::{check_openings, ArgParams, ArgProver, ProverError, PAD_SYMBOL};
use crate::iop::{check_round_input, Challenge, Iop, IopError, IopProver, IopSpec, ProofString, Symbol};
use crate::vc::{Digest, Opening};

pub use bounds::{bounds_for, theorem_bounds, BoundInputs, Bounds};
pub use experiments::{
    end_to_end_knowledge, events_trial, hybrid_chain, hybrid_trial, hybrid_value, knowledge_experiment, play_trial,
    run_events_experiment, BindingBreak, EventCounters, HybridPoint, KnowledgeOutcome, KnowledgeReport, Lab, TrialRun,
    KNOWLEDGE_ATTEMPTS,
};
pub use stats::{hoeffding_radius, Estimate, DEFAULT_DELTA};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractionError {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error(transparent)]
    Iop(#[from] IopError),
}

/// Rewinding budget `T = ceil(l_max / (eps / 2k))`; each reductor call
/// draws its iteration count uniformly from `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewindBudget {
    pub epsilon: f64,
    pub rounds: usize,
    pub l_max: usize,
    pub t_max: u64,
}

/// Upper limit on `T`, to keep a mistyped epsilon from hanging a run.
pub const MAX_BUDGET: u64 = 1 << 32;

impl RewindBudget {
    pub fn new(epsilon: f64, spec: &IopSpec) -> Result<Self, ExtractionError> {
        Self::for_shape(epsilon, spec.rounds(), spec.l_max())
    }

    pub fn for_shape(epsilon: f64, rounds: usize, l_max: usize) -> Result<Self, ExtractionError> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(ExtractionError::OutOfRange(format!("epsilon = {epsilon} is not in (0, 1]")));
        }
        let x = 2.0 * rounds as f64 * l_max as f64 / epsilon;
        // Snap values within float noise of an integer, so 64 / 0.125 is 512 and not 513.
        let r = x.round();
        let t = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
        if t > MAX_BUDGET as f64 {
            return Err(ExtractionError::OutOfRange(format!("rewinding budget {t} exceeds {MAX_BUDGET}")));
        }
        Ok(Self { epsilon, rounds, l_max, t_max: t as u64 })
    }

    /// Per-round error `eps / 2k`.
    pub fn per_round_error(&self) -> f64 {
        self.epsilon / (2.0 * self.rounds as f64)
    }

    pub fn sample_t<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..=self.t_max)
    }
}

/// Append-only list of accepted openings for one round, with the union of
/// their positions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeSet {
    entries: Vec<Opening>,
    coverage: BTreeSet<usize>,
}

impl KnowledgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `opening` if it touches a position not yet covered.
    pub fn insert(&mut self, opening: &Opening) -> bool {
        if self.covers(&opening.positions) {
            return false;
        }
        self.coverage.extend(opening.positions.iter().copied());
        self.entries.push(opening.clone());
        true
    }

    pub fn covers(&self, positions: &[usize]) -> bool {
        positions.iter().all(|q| self.coverage.contains(q))
    }

    pub fn entries(&self) -> &[Opening] {
        &self.entries
    }

    pub fn coverage(&self) -> &BTreeSet<usize> {
        &self.coverage
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The entry that fixed the symbol at `q` (the first one containing it).
    pub fn first_entry_for(&self, q: usize) -> Option<(&Opening, Symbol)> {
        self.entries.iter().find_map(|e| e.positions.iter().position(|&p| p == q).map(|at| (e, e.answers[at])))
    }
}

/// A reconstructed proof string: covered positions from the knowledge set
/// (first write wins), everything else the padding symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedOracle {
    pub round: usize,
    pub string: Vec<Symbol>,
    pub covered: BTreeSet<usize>,
}

impl ExtractedOracle {
    pub fn empty(round: usize, len: usize) -> Self {
        Self { round, string: vec![PAD_SYMBOL; len], covered: BTreeSet::new() }
    }

    pub fn from_knowledge(round: usize, len: usize, knowledge: &KnowledgeSet) -> Self {
        let mut out = Self::empty(round, len);
        for e in knowledge.entries() {
            for (&q, &a) in e.positions.iter().zip(&e.answers) {
                if (1..=len).contains(&q) && out.covered.insert(q) {
                    out.string[q - 1] = a;
                }
            }
        }
        out
    }

    pub fn answer(&self, set: &[usize]) -> Vec<Symbol> {
        set.iter().map(|&q| self.string.get(q.wrapping_sub(1)).copied().unwrap_or(PAD_SYMBOL)).collect()
    }

    pub fn to_proof_string(&self) -> ProofString {
        ProofString { round: self.round, symbols: self.string.clone() }
    }
}

/// What the sampler needs to know about the run so far, at round `i`:
/// `cm_1..cm_i`, `r_1..r_{i-1}` and the oracles already extracted for
/// rounds before `i`.
#[derive(Clone, Copy)]
pub struct RoundContext<'a> {
    pub pp: &'a ArgParams,
    pub iop: &'a dyn Iop,
    pub commitments: &'a [Digest],
    pub challenges: &'a [Challenge],
    pub oracles: &'a [ExtractedOracle],
}

impl RoundContext<'_> {
    /// 1-based index of the round being extracted.
    pub fn round(&self) -> usize {
        self.commitments.len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerStats {
    pub iterations: u64,
    /// Continuations on which the round predicate held.
    pub accepted: u64,
    /// Accepted continuations that grew the knowledge set.
    pub appended: u64,
    /// Continuations ending in a clean abort.
    pub aborted: u64,
    /// Continuations ending in a protocol violation (a crash).
    pub voided: u64,
}

/// Accept bit of the verifier that reads rounds `< oracles.len()` from
/// extracted oracles and later rounds from the openings, running position,
/// padding and VC checks on rounds `vc_from..k`. Requires
/// `vc_from <= oracles.len()`.
pub fn mixed_decision(
    pp: &ArgParams,
    iop: &dyn Iop,
    challenges: &[Challenge],
    commitments: &[Digest],
    openings: &[Opening],
    oracles: &[ExtractedOracle],
    vc_from: usize,
) -> bool {
    let k = iop.spec().rounds();
    debug_assert!(vc_from <= oracles.len());
    if challenges.len() != k || commitments.len() != k || openings.len() != k || oracles.len() > k {
        return false;
    }
    let Ok(plan) = iop.query(challenges) else { return false };
    if check_openings(pp, &plan.sets, commitments, openings, vc_from..k).is_err() {
        return false;
    }
    let answers: Vec<Vec<Symbol>> = (0..k)
        .map(|j| match oracles.get(j) {
            Some(o) => o.answer(&plan.sets[j]),
            None => openings[j].answers.clone(),
        })
        .collect();
    iop.decide(challenges, &answers)
}

/// Result of driving an adversary from its current state to the end.
pub(crate) enum Continuation {
    Finished { commitments: Vec<Digest>, openings: Vec<Opening> },
    Aborted,
    Crashed,
}

/// Feeds `fresh` (the challenges of rounds `i..k`, 1-based `i` =
/// `adv.rounds_done()`) to an adversary that has committed round `i`.
pub(crate) fn continue_run(adv: &mut dyn ArgProver, mut commitments: Vec<Digest>, fresh: &[Challenge]) -> Continuation {
    let (last, middle) = fresh.split_last().expect("at least one challenge");
    for r in middle {
        match adv.commit(Some(r)) {
            Ok(cm) => commitments.push(cm),
            Err(ProverError::Abort(_)) => return Continuation::Aborted,
            Err(_) => return Continuation::Crashed,
        }
    }
    match adv.respond(last) {
        Ok(openings) => Continuation::Finished { commitments, openings },
        Err(ProverError::Abort(_)) => Continuation::Aborted,
        Err(_) => Continuation::Crashed,
    }
}

/// Runs `t` independent continuations of `adv` from its current state
/// (round `i` committed), each with fresh challenges for rounds `i..k`, and
/// collects the round-`i` openings of those on which the round predicate
/// holds. The adversary itself is never advanced: every continuation starts
/// from a snapshot, so the caller's state is exactly restored.
pub fn sampler<R: RngCore + ?Sized>(
    adv: &dyn ArgProver,
    ctx: &RoundContext<'_>,
    t: u64,
    rng: &mut R,
) -> (KnowledgeSet, SamplerStats) {
    let spec = ctx.iop.spec();
    let i0 = ctx.round() - 1;
    let mut knowledge = KnowledgeSet::new();
    let mut stats = SamplerStats::default();
    for _ in 0..t {
        stats.iterations += 1;
        let fresh: Vec<Challenge> = spec.challenges[i0..].iter().map(|c| c.sample(rng)).collect();
        let mut run = adv.snapshot();
        let (commitments, openings) = match continue_run(run.as_mut(), ctx.commitments.to_vec(), &fresh) {
            Continuation::Finished { commitments, openings } => (commitments, openings),
            Continuation::Aborted => {
                stats.aborted += 1;
                continue;
            }
            Continuation::Crashed => {
                stats.voided += 1;
                continue;
            }
        };
        let mut challenges = ctx.challenges.to_vec();
        challenges.extend(fresh);
        if mixed_decision(ctx.pp, ctx.iop, &challenges, &commitments, &openings, ctx.oracles, i0) {
            stats.accepted += 1;
            if knowledge.insert(&openings[i0]) {
                stats.appended += 1;
            }
        }
    }
    (knowledge, stats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    pub oracle: ExtractedOracle,
    pub knowledge: KnowledgeSet,
    pub t: u64,
    pub stats: SamplerStats,
}

/// Draws `t` uniformly from `[0, T]`, runs the sampler and fills the
/// round's string from the knowledge set.
pub fn reductor<R: RngCore + ?Sized>(
    adv: &dyn ArgProver,
    ctx: &RoundContext<'_>,
    budget: &RewindBudget,
    rng: &mut R,
) -> Reduction {
    let round = ctx.round();
    let t = budget.sample_t(rng);
    let (knowledge, stats) = sampler(adv, ctx, t, rng);
    let oracle = ExtractedOracle::from_knowledge(round, ctx.iop.spec().proof_lengths[round - 1], &knowledge);
    Reduction { oracle, knowledge, t, stats }
}

/// The IOP prover obtained from an argument adversary: each round it lets
/// the adversary commit, then emits the string the reductor reconstructs.
/// If the adversary aborts while committing, the remaining strings are all
/// padding.
pub struct ExtractingProver {
    adversary: Box<dyn ArgProver>,
    pp: ArgParams,
    iop: Arc<dyn Iop>,
    budget: RewindBudget,
    rng: ChaCha20Rng,
    commitments: Vec<Digest>,
    challenges: Vec<Challenge>,
    oracles: Vec<ExtractedOracle>,
    stats: Vec<SamplerStats>,
    dead: bool,
}

pub fn build_iop_prover(
    adversary: Box<dyn ArgProver>,
    pp: &ArgParams,
    iop: Arc<dyn Iop>,
    budget: RewindBudget,
    rng: ChaCha20Rng,
) -> ExtractingProver {
    ExtractingProver {
        adversary,
        pp: pp.clone(),
        iop,
        budget,
        rng,
        commitments: Vec::new(),
        challenges: Vec::new(),
        oracles: Vec::new(),
        stats: Vec::new(),
        dead: false,
    }
}

impl ExtractingProver {
    pub fn oracles(&self) -> &[ExtractedOracle] {
        &self.oracles
    }

    pub fn sampler_stats(&self) -> &[SamplerStats] {
        &self.stats
    }
}

impl IopProver for ExtractingProver {
    fn next_string(&mut self, prev: Option<&Challenge>) -> Result<ProofString, IopError> {
        let spec = self.iop.spec();
        check_round_input(spec, self.oracles.len(), prev)?;
        if let Some(r) = prev {
            self.challenges.push(r.clone());
        }
        let round = self.oracles.len() + 1;
        if !self.dead {
            match self.adversary.commit(prev) {
                Ok(cm) => self.commitments.push(cm),
                Err(_) => self.dead = true,
            }
        }
        let oracle = if self.dead {
            self.stats.push(SamplerStats::default());
            ExtractedOracle::empty(round, spec.proof_lengths[round - 1])
        } else {
            let ctx = RoundContext {
                pp: &self.pp,
                iop: self.iop.as_ref(),
                commitments: &self.commitments,
                challenges: &self.challenges,
                oracles: &self.oracles,
            };
            let red = reductor(self.adversary.as_ref(), &ctx, &self.budget, &mut self.rng);
            self.stats.push(red.stats);
            red.oracle
        };
        let out = oracle.to_proof_string();
        self.oracles.push(oracle);
        Ok(out)
    }

    fn rounds_done(&self) -> usize {
        self.oracles.len()
    }

    fn box_clone(&self) -> Box<dyn IopProver> {
        Box::new(ExtractingProver {
            adversary: self.adversary.snapshot(),
            pp: self.pp.clone(),
            iop: Arc::clone(&self.iop),
            budget: self.budget,
            rng: self.rng.clone(),
            commitments: self.commitments.clone(),
            challenges: self.challenges.clone(),
            oracles: self.oracles.clone(),
            stats: self.stats.clone(),
            dead: self.dead,
        })
    }

    fn state_bytes(&self) -> Vec<u8> {
        let mut out = self.adversary.state_bytes();
        out.extend(serde_json::to_vec(&self.rng).expect("rng serializes"));
        out.extend(serde_json::to_vec(&self.oracles).expect("oracles serialize"));
        out.push(self.dead as u8);
        out
    }
}
