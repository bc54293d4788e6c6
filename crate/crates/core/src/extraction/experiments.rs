//! Monte-Carlo experiments: the hybrid chain, the two bad events of a
//! hybrid step, and end-to-end knowledge extraction.
//!
//! Trial `n` of every experiment draws verifier coins from
//! `stream(master, "verifier", n)` and reductor coins from
//! `stream(master, "reductor", n)`, so all experiments over the same seed
//! are coupled: `H_0` reproduces the plain argument run, and the event
//! experiment at round `l` sees exactly the runs of `H_{l-1}` and `H_l`.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_iop_prover, mixed_decision, reductor, Estimate, ExtractedOracle, ExtractionError, Reduction, RewindBudget,
    RoundContext,
};
use crate::argument::{check_openings, run_argument, ArgParams, ArgProver, ProverError};
use crate::iop::{iop_interact, Challenge, Iop, Witness};
use crate::seed;
use crate::vc::{vc_check, Digest, Opening};

/// Binding-break witnesses kept per experiment; the count is exact.
const KEPT_BREAKS: usize = 8;

/// Shared setup: parameters, the IOP, the budget and an adversary
/// prototype that every trial snapshots.
pub struct Lab {
    pp: ArgParams,
    iop: Arc<dyn Iop>,
    budget: RewindBudget,
    prototype: Mutex<Box<dyn ArgProver>>,
}

impl Lab {
    pub fn new(pp: ArgParams, iop: Arc<dyn Iop>, adversary: Box<dyn ArgProver>, epsilon: f64) -> Result<Self, ExtractionError> {
        let budget = RewindBudget::new(epsilon, iop.spec())?;
        Ok(Self { pp, iop, budget, prototype: Mutex::new(adversary) })
    }

    pub fn pp(&self) -> &ArgParams {
        &self.pp
    }

    pub fn iop(&self) -> &dyn Iop {
        self.iop.as_ref()
    }

    pub fn budget(&self) -> &RewindBudget {
        &self.budget
    }

    pub fn fresh_adversary(&self) -> Box<dyn ArgProver> {
        self.prototype.lock().expect("prototype lock").snapshot()
    }
}

/// One run of `H_l`: reductors after the commitments of rounds `1..=l`,
/// plain play afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRun {
    pub commitments: Vec<Digest>,
    pub challenges: Vec<Challenge>,
    pub reductions: Vec<Reduction>,
    pub response: Option<Vec<Opening>>,
    pub crashed: bool,
}

impl TrialRun {
    pub fn oracles(&self) -> Vec<ExtractedOracle> {
        self.reductions.iter().map(|r| r.oracle.clone()).collect()
    }

    /// Verifier reading the first `m` rounds from the extracted oracles,
    /// with VC checks from round `vc_from` (0-based) on.
    pub fn accepts(&self, lab: &Lab, m: usize, vc_from: usize) -> bool {
        let Some(response) = &self.response else { return false };
        let oracles = self.oracles();
        if oracles.len() < m {
            return false;
        }
        mixed_decision(&lab.pp, lab.iop(), &self.challenges, &self.commitments, response, &oracles[..m], vc_from)
    }
}

pub fn play_trial(lab: &Lab, ell: usize, master: u64, trial: u64) -> TrialRun {
    let spec = lab.iop.spec();
    let mut v_rng = seed::stream(master, "verifier", trial);
    let mut p_rng = seed::stream(master, "reductor", trial);
    let mut adv = lab.fresh_adversary();
    let mut run =
        TrialRun { commitments: Vec::new(), challenges: Vec::new(), reductions: Vec::new(), response: None, crashed: false };
    let mut oracles: Vec<ExtractedOracle> = Vec::new();
    let mut alive = true;
    for j in 0..spec.rounds() {
        if alive {
            match adv.commit(run.challenges.last()) {
                Ok(cm) => run.commitments.push(cm),
                Err(e) => {
                    alive = false;
                    run.crashed = !matches!(e, ProverError::Abort(_));
                }
            }
        }
        if alive && j < ell {
            let ctx = RoundContext {
                pp: &lab.pp,
                iop: lab.iop(),
                commitments: &run.commitments,
                challenges: &run.challenges,
                oracles: &oracles,
            };
            let red = reductor(adv.as_ref(), &ctx, &lab.budget, &mut p_rng);
            oracles.push(red.oracle.clone());
            run.reductions.push(red);
        }
        run.challenges.push(spec.challenges[j].sample(&mut v_rng));
    }
    if alive {
        match adv.respond(run.challenges.last().expect("k >= 1")) {
            Ok(openings) => run.response = Some(openings),
            Err(e) => run.crashed = !matches!(e, ProverError::Abort(_)),
        }
    }
    run
}

/// Accept bit of one `H_l` trial; `None` when the adversary crashed.
pub fn hybrid_trial(lab: &Lab, ell: usize, master: u64, trial: u64) -> Option<bool> {
    let run = play_trial(lab, ell, master, trial);
    if run.crashed {
        return None;
    }
    Some(run.accepts(lab, ell, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridPoint {
    pub ell: usize,
    pub estimate: Estimate,
    pub voided: u64,
}

pub fn hybrid_value(lab: &Lab, ell: usize, trials: u64, master: u64) -> HybridPoint {
    assert!(ell <= lab.iop.spec().rounds(), "hybrid index out of range");
    let (acc, voided) = (0..trials)
        .into_par_iter()
        .map(|n| match hybrid_trial(lab, ell, master, n) {
            Some(b) => (b as u64, 0),
            None => (0, 1),
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    HybridPoint { ell, estimate: Estimate::new(acc, trials - voided), voided }
}

/// `H_0, ..., H_k` over common seeds.
pub fn hybrid_chain(lab: &Lab, trials: u64, master: u64) -> Vec<HybridPoint> {
    (0..=lab.iop.spec().rounds()).map(|ell| hybrid_value(lab, ell, trials, master)).collect()
}

/// Two valid openings of one commitment that disagree at `position`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingBreak {
    pub round: usize,
    pub position: usize,
    pub commitment: Digest,
    pub first: Opening,
    pub second: Opening,
}

impl BindingBreak {
    pub fn verify(&self, pp: &ArgParams) -> bool {
        let cm = pp.commitment(self.commitment);
        let at = |o: &Opening| o.positions.iter().position(|&p| p == self.position).map(|i| o.answers[i]);
        let (Some(a), Some(b)) = (at(&self.first), at(&self.second)) else { return false };
        a != b
            && vc_check(&pp.vc, &cm, &self.first.positions, &self.first.answers, &self.first.proof)
            && vc_check(&pp.vc, &cm, &self.second.positions, &self.second.answers, &self.second.proof)
    }
}

/// Counters of the experiment coupling `H_{l-1}` and `H_l` at one round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventCounters {
    pub round: usize,
    pub trials: u64,
    pub voided: u64,
    /// Final answer disagrees with the reconstructed string at a covered
    /// position while the round's opening verifies.
    pub event_i: u64,
    /// Some queried position was never covered.
    pub event_ii: u64,
    /// Event (ii) on a run where the round predicate holds.
    pub event_ii_accepted: u64,
    pub predicate_accepted: u64,
    pub accept_prev: u64,
    pub accept_next: u64,
    pub binding_breaks: Vec<BindingBreak>,
}

impl EventCounters {
    fn merge(mut self, other: Self) -> Self {
        self.round = self.round.max(other.round);
        self.trials += other.trials;
        self.voided += other.voided;
        self.event_i += other.event_i;
        self.event_ii += other.event_ii;
        self.event_ii_accepted += other.event_ii_accepted;
        self.predicate_accepted += other.predicate_accepted;
        self.accept_prev += other.accept_prev;
        self.accept_next += other.accept_next;
        self.binding_breaks.extend(other.binding_breaks);
        self.binding_breaks.truncate(KEPT_BREAKS);
        self
    }

    fn valid(&self) -> u64 {
        self.trials - self.voided
    }

    pub fn event_i_rate(&self) -> Estimate {
        Estimate::new(self.event_i, self.valid())
    }

    pub fn event_ii_rate(&self) -> Estimate {
        Estimate::new(self.event_ii, self.valid())
    }

    pub fn event_ii_accepted_rate(&self) -> Estimate {
        Estimate::new(self.event_ii_accepted, self.valid())
    }

    pub fn accept_prev_rate(&self) -> Estimate {
        Estimate::new(self.accept_prev, self.valid())
    }

    pub fn accept_next_rate(&self) -> Estimate {
        Estimate::new(self.accept_next, self.valid())
    }
}

/// One trial of the event experiment at round `ell` (1-based).
pub fn events_trial(lab: &Lab, ell: usize, master: u64, trial: u64) -> EventCounters {
    let k = lab.iop.spec().rounds();
    assert!((1..=k).contains(&ell), "event round out of range");
    let i0 = ell - 1;
    let run = play_trial(lab, ell, master, trial);
    let mut c = EventCounters { round: ell, trials: 1, ..Default::default() };
    if run.crashed {
        c.voided = 1;
        return c;
    }
    let Ok(plan) = lab.iop.query(&run.challenges) else { return c };
    let set = &plan.sets[i0];
    let reduction = run.reductions.get(i0);
    let covered = |q: &usize| reduction.is_some_and(|r| r.oracle.covered.contains(q));
    let missing = set.iter().any(|q| !covered(q));
    let predicate = run.accepts(lab, i0, i0);
    c.predicate_accepted = predicate as u64;
    c.event_ii = missing as u64;
    c.event_ii_accepted = (missing && predicate) as u64;
    c.accept_prev = run.accepts(lab, i0, 0) as u64;
    c.accept_next = run.accepts(lab, ell, 0) as u64;

    if let (Some(response), Some(red)) = (&run.response, reduction) {
        let full = run.commitments.len() == k && response.len() == k;
        if full && check_openings(&lab.pp, &plan.sets, &run.commitments, response, std::iter::once(i0)).is_ok() {
            let opening = &response[i0];
            let clash = set.iter().zip(&opening.answers).find(|(q, &a)| covered(q) && red.oracle.string[**q - 1] != a);
            if let Some((&q, _)) = clash {
                c.event_i = 1;
                let (first, _) = red.knowledge.first_entry_for(q).expect("covered position has an entry");
                let witness = BindingBreak {
                    round: ell,
                    position: q,
                    commitment: run.commitments[i0],
                    first: first.clone(),
                    second: opening.clone(),
                };
                debug_assert!(witness.verify(&lab.pp));
                c.binding_breaks.push(witness);
            }
        }
    }
    c
}

pub fn run_events_experiment(lab: &Lab, ell: usize, trials: u64, master: u64) -> EventCounters {
    (0..trials)
        .into_par_iter()
        .map(|n| events_trial(lab, ell, master, n))
        .reduce(|| EventCounters { round: ell, ..Default::default() }, EventCounters::merge)
}

/// Attempts the end-to-end extractor makes before reporting failure.
pub const KNOWLEDGE_ATTEMPTS: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeOutcome {
    /// A witness that passed the relation check, if any attempt produced one.
    pub witness: Option<Witness>,
    pub attempts: u32,
    /// The first attempt alone produced a valid witness.
    pub first_attempt: bool,
    /// The IOP verifier accepted the extracting prover on the first attempt.
    pub first_iop_accept: bool,
}

/// Argument knowledge extractor: runs the extracting IOP prover with fresh
/// reductor and verifier coins, applies the IOP extractor to its strings,
/// and checks the result against the relation; repeats until a witness
/// checks or [`KNOWLEDGE_ATTEMPTS`] runs are spent. Every attempt restarts
/// the adversary from its initial state.
pub fn end_to_end_knowledge(lab: &Lab, master: u64, trial: u64) -> KnowledgeOutcome {
    let iop = lab.iop();
    let mut out = KnowledgeOutcome { witness: None, attempts: 0, first_attempt: false, first_iop_accept: false };
    for attempt in 0..KNOWLEDGE_ATTEMPTS {
        out.attempts = attempt + 1;
        let mut prover = build_iop_prover(
            lab.fresh_adversary(),
            &lab.pp,
            Arc::clone(&lab.iop),
            lab.budget,
            seed::stream(master, &format!("knowledge/reductor/{attempt}"), trial),
        );
        let run = iop_interact(iop, &mut prover, &mut seed::stream(master, &format!("knowledge/iop/{attempt}"), trial));
        let witness = iop.extract_witness(&run.transcript.strings);
        let valid = run.transcript.strings.len() == iop.spec().rounds() && iop.check_witness(&witness);
        if attempt == 0 {
            out.first_attempt = valid;
            out.first_iop_accept = run.accepted;
        }
        if valid {
            out.witness = Some(witness);
            break;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeReport {
    /// Acceptance of the adversary in the plain argument.
    pub acceptance: Estimate,
    /// Valid witness from a single pass of the extracting prover.
    pub single_pass: Estimate,
    /// Valid witness within the attempt cap.
    pub extraction: Estimate,
    /// Acceptance of the IOP verifier against the extracting prover.
    pub iop_acceptance: Estimate,
    pub attempts: u64,
    /// Trials where every attempt failed.
    pub failures: u64,
}

/// Per trial: one plain argument run and one end-to-end extraction.
pub fn knowledge_experiment(lab: &Lab, trials: u64, master: u64) -> KnowledgeReport {
    let zero = [0u64; 5];
    let sums = (0..trials)
        .into_par_iter()
        .map(|n| {
            let mut adv = lab.fresh_adversary();
            let accepted =
                run_argument(&lab.pp, lab.iop(), adv.as_mut(), &mut seed::stream(master, "knowledge/verifier", n)).accepted;
            let k = end_to_end_knowledge(lab, master, n);
            [accepted as u64, k.first_attempt as u64, k.witness.is_some() as u64, k.first_iop_accept as u64, k.attempts as u64]
        })
        .reduce(|| zero, |a, b| std::array::from_fn(|i| a[i] + b[i]));
    KnowledgeReport {
        acceptance: Estimate::new(sums[0], trials),
        single_pass: Estimate::new(sums[1], trials),
        extraction: Estimate::new(sums[2], trials),
        iop_acceptance: Estimate::new(sums[3], trials),
        attempts: sums[4],
        failures: trials - sums[2],
    }
}
