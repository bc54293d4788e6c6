//! Exhaustive soundness oracle.
//!
//! Computes `max_{pi_1} E_{r_1} max_{pi_2} E_{r_2} ... max_{pi_k} E_{r_k} [accept]`
//! by walking the full strategy tree of an adaptive prover. Challenges are
//! enumerated in their decoded value space. The tree size is computed up
//! front; trees above [`STRATEGY_NODE_CAP`] are refused rather than
//! approximated.

use num_rational::Ratio;

use super::{Challenge, Iop, IopError, Symbol};

pub const STRATEGY_NODE_CAP: u128 = 1 << 24;

/// Number of (proof string, challenge) nodes over all levels, or `None` on
/// overflow.
pub fn strategy_tree_size(iop: &dyn Iop) -> Option<u128> {
    let spec = iop.spec();
    let mut level: u128 = 1;
    let mut total: u128 = 0;
    for (l, c) in spec.proof_lengths.iter().zip(&spec.challenges) {
        let strings = (spec.alphabet_size as u128).checked_pow(u32::try_from(*l).ok()?)?;
        level = level.checked_mul(strings)?.checked_mul(c.modulus as u128)?;
        total = total.checked_add(level)?;
    }
    Some(total)
}

pub fn brute_force_soundness(iop: &dyn Iop) -> Result<Ratio<u128>, IopError> {
    match strategy_tree_size(iop) {
        Some(n) if n <= STRATEGY_NODE_CAP => {}
        n => {
            return Err(IopError::Infeasible {
                nodes: n.map_or_else(|| "more than 2^128".to_string(), |n| n.to_string()),
                cap: STRATEGY_NODE_CAP,
            })
        }
    }
    let mut strings = Vec::with_capacity(iop.spec().rounds());
    let mut challenges = Vec::with_capacity(iop.spec().rounds());
    Ok(best_value(iop, &mut strings, &mut challenges))
}

fn best_value(iop: &dyn Iop, strings: &mut Vec<Vec<Symbol>>, challenges: &mut Vec<Challenge>) -> Ratio<u128> {
    let spec = iop.spec();
    let round = strings.len();
    if round == spec.rounds() {
        let accepted = iop
            .query(challenges)
            .map(|plan| iop.decide(challenges, &plan.answers_from(strings, 0)))
            .unwrap_or(false);
        return Ratio::from_integer(accepted as u128);
    }
    let space = spec.challenges[round];
    let len = spec.proof_lengths[round];
    let mut best = Ratio::from_integer(0);
    let mut candidate = vec![0 as Symbol; len];
    loop {
        strings.push(candidate.clone());
        let mut sum = Ratio::from_integer(0);
        for v in 0..space.modulus {
            challenges.push(space.canonical(v));
            sum += best_value(iop, strings, challenges);
            challenges.pop();
        }
        strings.pop();
        let value = sum / Ratio::from_integer(space.modulus as u128);
        if value > best {
            best = value;
            if best == Ratio::from_integer(1) {
                return best;
            }
        }
        if !advance(&mut candidate, spec.alphabet_size) {
            return best;
        }
    }
}

/// Odometer over `[0, base)^len`; returns false after the last string.
fn advance(digits: &mut [Symbol], base: u64) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}
