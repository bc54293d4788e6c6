//! Scripted malicious argument provers.
//!
//! Every adversary is a plain value: `snapshot` deep-copies it and the next
//! message is a deterministic function of the state and the incoming
//! challenge, so rewinding is exact.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::argument::{ArgParams, ArgProver, HonestArgProver, ProverError};
use crate::iop::{Challenge, Iop, IopError, IopProver, Symbol, Witness};
use crate::toy::{GcPcp, Instance, SumcheckIop};
use crate::vc::{Digest, Opening};

/// Which (round, position) pairs a withholder refuses to open.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefusalRule {
    Nothing,
    Everything,
    /// 1-based (round, position) pairs.
    Positions(Vec<(usize, usize)>),
}

impl RefusalRule {
    pub fn refuses(&self, round: usize, position: usize) -> bool {
        match self {
            RefusalRule::Nothing => false,
            RefusalRule::Everything => true,
            RefusalRule::Positions(list) => list.contains(&(round, position)),
        }
    }
}

/// Accept set of a grinder, over the concatenation of all challenge bits
/// (MSB-first, round order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChallengePredicate {
    Always,
    Never,
    /// The first `bits` bits, read as an integer, are below `threshold`.
    PrefixBelow { bits: u32, threshold: u64 },
}

impl ChallengePredicate {
    pub const FIRST_BIT_ZERO: Self = ChallengePredicate::PrefixBelow { bits: 1, threshold: 1 };

    pub fn holds(&self, challenges: &[Challenge]) -> bool {
        match *self {
            ChallengePredicate::Always => true,
            ChallengePredicate::Never => false,
            ChallengePredicate::PrefixBelow { bits, threshold } => {
                let mut value = 0u64;
                let mut taken = 0;
                for c in challenges {
                    for i in 0..c.bits() {
                        if taken == bits {
                            break;
                        }
                        value = (value << 1) | c.bit(i) as u64;
                        taken += 1;
                    }
                }
                taken == bits && value < threshold
            }
        }
    }

    /// Probability that uniform challenge bits satisfy the predicate.
    pub fn measure(&self) -> Ratio<u128> {
        match *self {
            ChallengePredicate::Always => Ratio::from_integer(1),
            ChallengePredicate::Never => Ratio::from_integer(0),
            ChallengePredicate::PrefixBelow { bits, threshold } => {
                let span = 1u128 << bits;
                Ratio::new((threshold as u128).min(span), span)
            }
        }
    }
}

/// Adversary selection, as written on the command line.
///
/// `honest`, `cheat`, `abort`, `equivocator[:shift]`,
/// `withholder:none|all|<round>:<position>[,<round>:<position>..]`,
/// `grinder:always|never|<bits>:<threshold>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "behavior", rename_all = "lowercase")]
pub enum AdversarySpec {
    Honest,
    Cheat,
    Abort,
    Equivocator { shift: u64 },
    Withholder { rule: RefusalRule },
    Grinder { predicate: ChallengePredicate },
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversarySpec::Honest => write!(f, "honest"),
            AdversarySpec::Cheat => write!(f, "cheat"),
            AdversarySpec::Abort => write!(f, "abort"),
            AdversarySpec::Equivocator { shift } => write!(f, "equivocator:{shift}"),
            AdversarySpec::Withholder { rule } => match rule {
                RefusalRule::Nothing => write!(f, "withholder:none"),
                RefusalRule::Everything => write!(f, "withholder:all"),
                RefusalRule::Positions(list) => {
                    let parts: Vec<String> = list.iter().map(|(r, q)| format!("{r}:{q}")).collect();
                    write!(f, "withholder:{}", parts.join(","))
                }
            },
            AdversarySpec::Grinder { predicate } => match predicate {
                ChallengePredicate::Always => write!(f, "grinder:always"),
                ChallengePredicate::Never => write!(f, "grinder:never"),
                ChallengePredicate::PrefixBelow { bits, threshold } => write!(f, "grinder:{bits}:{threshold}"),
            },
        }
    }
}

impl FromStr for AdversarySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, rest) = s.split_once(':').map_or((s, None), |(h, r)| (h, Some(r)));
        let int = |w: &str| w.parse::<u64>().map_err(|_| format!("'{w}' is not a number in adversary '{s}'"));
        match (head, rest) {
            ("honest", None) => Ok(AdversarySpec::Honest),
            ("cheat", None) => Ok(AdversarySpec::Cheat),
            ("abort", None) => Ok(AdversarySpec::Abort),
            ("equivocator", None) => Ok(AdversarySpec::Equivocator { shift: 1 }),
            ("equivocator", Some(w)) => Ok(AdversarySpec::Equivocator { shift: int(w)? }),
            ("withholder", Some("none")) => Ok(AdversarySpec::Withholder { rule: RefusalRule::Nothing }),
            ("withholder", Some("all")) => Ok(AdversarySpec::Withholder { rule: RefusalRule::Everything }),
            ("withholder", Some(list)) => {
                let pairs = list
                    .split(',')
                    .map(|pair| {
                        let (r, q) = pair.split_once(':').ok_or_else(|| format!("expected <round>:<position>, got '{pair}'"))?;
                        let (r, q) = (int(r)? as usize, int(q)? as usize);
                        if r == 0 || q == 0 {
                            return Err("rounds and positions are 1-based".to_string());
                        }
                        Ok((r, q))
                    })
                    .collect::<Result<Vec<_>, String>>()?;
                Ok(AdversarySpec::Withholder { rule: RefusalRule::Positions(pairs) })
            }
            ("grinder", Some("always")) => Ok(AdversarySpec::Grinder { predicate: ChallengePredicate::Always }),
            ("grinder", Some("never")) => Ok(AdversarySpec::Grinder { predicate: ChallengePredicate::Never }),
            ("grinder", Some(arg)) => {
                let (b, t) = arg.split_once(':').ok_or_else(|| format!("expected grinder:<bits>:<threshold>, got '{s}'"))?;
                let bits = int(b)? as u32;
                if bits == 0 || bits > 63 {
                    return Err("grinder prefix must have 1..=63 bits".into());
                }
                Ok(AdversarySpec::Grinder { predicate: ChallengePredicate::PrefixBelow { bits, threshold: int(t)? } })
            }
            _ => Err(format!("unknown adversary '{s}'")),
        }
    }
}

/// The strongest fixed cheating IOP prover available for an instance: the
/// best coloring for graphs, the root-shift prover for sumcheck.
pub fn cheating_iop_prover(instance: &Instance) -> Result<Box<dyn IopProver>, IopError> {
    match instance {
        Instance::Gc(g) => GcPcp::new(g.clone()).coloring_prover(&g.best_coloring()?.0),
        Instance::Sumcheck(s) => Ok(SumcheckIop::new(s.clone()).cheating_prover()),
    }
}

/// A witness for the instance: the supplied one, or one found by search.
pub fn find_witness(instance: &Instance, supplied: Option<&Witness>) -> Option<Witness> {
    let iop = instance.iop();
    if let Some(w) = supplied {
        return iop.check_witness(w).then(|| w.clone());
    }
    match instance {
        Instance::Gc(g) => g.find_coloring(),
        Instance::Sumcheck(_) => iop.in_language().then(Vec::new),
    }
}

/// Base prover for wrapped adversaries: honest when a witness exists,
/// otherwise the cheating prover.
fn base_prover(pp: &ArgParams, iop: Arc<dyn Iop>, instance: &Instance, witness: Option<&Witness>) -> Result<HonestArgProver, IopError> {
    match find_witness(instance, witness) {
        Some(w) => HonestArgProver::from_witness(pp, iop, &w),
        None => Ok(HonestArgProver::new(pp, iop, cheating_iop_prover(instance)?)),
    }
}

impl AdversarySpec {
    pub fn build(
        &self,
        pp: &ArgParams,
        instance: &Instance,
        witness: Option<&Witness>,
    ) -> Result<Box<dyn ArgProver>, IopError> {
        let iop = instance.iop();
        Ok(match self {
            AdversarySpec::Honest => {
                let w = find_witness(instance, witness)
                    .ok_or_else(|| IopError::InvalidWitness("no witness: the honest prover needs a true instance".into()))?;
                Box::new(honest_wrapper(pp, iop, &w)?)
            }
            AdversarySpec::Cheat => Box::new(HonestArgProver::new(pp, iop, cheating_iop_prover(instance)?)),
            AdversarySpec::Abort => Box::new(Withholder::new(base_prover(pp, iop.clone(), instance, witness)?, iop, RefusalRule::Everything)),
            AdversarySpec::Equivocator { shift } => {
                Box::new(Equivocator::new(base_prover(pp, iop.clone(), instance, witness)?, iop, *shift))
            }
            AdversarySpec::Withholder { rule } => {
                Box::new(Withholder::new(base_prover(pp, iop.clone(), instance, witness)?, iop, rule.clone()))
            }
            AdversarySpec::Grinder { predicate } => {
                Box::new(Grinder::new(base_prover(pp, iop, instance, witness)?, *predicate))
            }
        })
    }
}

/// The compiled honest prover, as an adversary.
pub fn honest_wrapper(pp: &ArgParams, iop: Arc<dyn Iop>, witness: &[Symbol]) -> Result<HonestArgProver, IopError> {
    HonestArgProver::from_witness(pp, iop, witness)
}

fn challenge_bytes(out: &mut Vec<u8>, challenges: &[Challenge]) {
    for c in challenges {
        out.extend(c.bytes());
    }
}

/// Commits honestly, then aborts the final response when a refused
/// position is queried.
#[derive(Clone)]
pub struct Withholder {
    base: HonestArgProver,
    iop: Arc<dyn Iop>,
    rule: RefusalRule,
    challenges: Vec<Challenge>,
}

impl Withholder {
    pub fn new(base: HonestArgProver, iop: Arc<dyn Iop>, rule: RefusalRule) -> Self {
        Self { base, iop, rule, challenges: Vec::new() }
    }
}

impl ArgProver for Withholder {
    fn commit(&mut self, prev: Option<&Challenge>) -> Result<Digest, ProverError> {
        let cm = self.base.commit(prev)?;
        self.challenges.extend(prev.cloned());
        Ok(cm)
    }

    fn respond(&mut self, last: &Challenge) -> Result<Vec<Opening>, ProverError> {
        let mut all = self.challenges.clone();
        all.push(last.clone());
        let plan = self.iop.query(&all)?;
        for (i, set) in plan.sets.iter().enumerate() {
            if let Some(q) = set.iter().find(|&&q| self.rule.refuses(i + 1, q)) {
                return Err(ProverError::Abort(format!("refusing to open round {} position {q}", i + 1)));
            }
        }
        self.challenges.push(last.clone());
        self.base.respond(last)
    }

    fn rounds_done(&self) -> usize {
        self.base.rounds_done()
    }

    fn snapshot(&self) -> Box<dyn ArgProver> {
        Box::new(self.clone())
    }

    fn state_bytes(&self) -> Vec<u8> {
        let mut out = self.base.state_bytes();
        challenge_bytes(&mut out, &self.challenges);
        out
    }

    fn behavior(&self) -> String {
        AdversarySpec::Withholder { rule: self.rule.clone() }.to_string()
    }
}

/// Plays the base prover when the challenge vector lies in the accept set
/// and aborts otherwise.
#[derive(Clone)]
pub struct Grinder {
    base: HonestArgProver,
    predicate: ChallengePredicate,
    challenges: Vec<Challenge>,
}

impl Grinder {
    pub fn new(base: HonestArgProver, predicate: ChallengePredicate) -> Self {
        Self { base, predicate, challenges: Vec::new() }
    }
}

impl ArgProver for Grinder {
    fn commit(&mut self, prev: Option<&Challenge>) -> Result<Digest, ProverError> {
        let cm = self.base.commit(prev)?;
        self.challenges.extend(prev.cloned());
        Ok(cm)
    }

    fn respond(&mut self, last: &Challenge) -> Result<Vec<Opening>, ProverError> {
        let mut all = self.challenges.clone();
        all.push(last.clone());
        if !self.predicate.holds(&all) {
            return Err(ProverError::Abort("challenges outside the accept set".into()));
        }
        self.challenges = all;
        self.base.respond(last)
    }

    fn rounds_done(&self) -> usize {
        self.base.rounds_done()
    }

    fn snapshot(&self) -> Box<dyn ArgProver> {
        Box::new(self.clone())
    }

    fn state_bytes(&self) -> Vec<u8> {
        let mut out = self.base.state_bytes();
        challenge_bytes(&mut out, &self.challenges);
        out
    }

    fn behavior(&self) -> String {
        AdversarySpec::Grinder { predicate: self.predicate }.to_string()
    }
}

/// Commits to message A (the base prover's strings) and answers every
/// query from message B = A + `shift` (mod the alphabet), attaching A's
/// authentication paths.
#[derive(Clone)]
pub struct Equivocator {
    base: HonestArgProver,
    alphabet: u64,
    shift: u64,
}

impl Equivocator {
    pub fn new(base: HonestArgProver, iop: Arc<dyn Iop>, shift: u64) -> Self {
        Self { base, alphabet: iop.spec().alphabet_size, shift }
    }
}

impl ArgProver for Equivocator {
    fn commit(&mut self, prev: Option<&Challenge>) -> Result<Digest, ProverError> {
        self.base.commit(prev)
    }

    fn respond(&mut self, last: &Challenge) -> Result<Vec<Opening>, ProverError> {
        let mut openings = self.base.respond(last)?;
        for o in &mut openings {
            for a in &mut o.answers {
                *a = (*a + self.shift) % self.alphabet;
            }
        }
        Ok(openings)
    }

    fn rounds_done(&self) -> usize {
        self.base.rounds_done()
    }

    fn snapshot(&self) -> Box<dyn ArgProver> {
        Box::new(self.clone())
    }

    fn state_bytes(&self) -> Vec<u8> {
        let mut out = self.base.state_bytes();
        out.extend(self.shift.to_be_bytes());
        out
    }

    fn behavior(&self) -> String {
        AdversarySpec::Equivocator { shift: self.shift }.to_string()
    }
}
