//! The sumcheck protocol as a `k = n` round IOP over `F_p`.
//!
//! `g(X_1..X_n) = sum_e c_e * prod_j X_j^{e_j}` with every exponent in
//! `[0, d]`. Coefficients are stored with the exponent of `X_1` as the most
//! significant base-`(d+1)` digit. Round `i` sends the coefficient table of
//! `g_i(X) = sum_{x in {0,1}^{n-i}} g(r_1, .., r_{i-1}, X, x)`.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::iop::{
    check_round_input, Challenge, ChallengeSpace, Iop, IopError, IopProver, IopSpec, ProofString, QueryPlan, Symbol,
    Witness,
};

/// Largest accepted coefficient table.
pub const MAX_TABLE: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SumcheckInstance {
    p: u64,
    n: usize,
    d: usize,
    coeffs: Vec<u64>,
    claim: u64,
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut f = 2u64;
    while f * f <= p {
        if p % f == 0 {
            return false;
        }
        f += 1;
    }
    true
}

impl SumcheckInstance {
    pub fn new(p: u64, n: usize, d: usize, coeffs: Vec<u64>, claim: u64) -> Result<Self, IopError> {
        if !is_prime(p) {
            return Err(IopError::InvalidInstance(format!("{p} is not prime")));
        }
        if p >= 1 << 32 {
            return Err(IopError::InvalidInstance("field modulus must be below 2^32".into()));
        }
        if n == 0 {
            return Err(IopError::InvalidInstance("need at least one variable".into()));
        }
        let size = (d + 1).checked_pow(n as u32).filter(|&s| s <= MAX_TABLE);
        if size != Some(coeffs.len()) {
            return Err(IopError::InvalidInstance(format!(
                "coefficient table must have (d+1)^n = {} entries (at most {MAX_TABLE}), got {}",
                size.map_or_else(|| "too many".to_string(), |s| s.to_string()),
                coeffs.len()
            )));
        }
        if coeffs.iter().chain([&claim]).any(|&c| c >= p) {
            return Err(IopError::InvalidInstance("coefficients and claim must lie in [0, p)".into()));
        }
        Ok(Self { p, n, d, coeffs, claim })
    }

    /// Instance with the true sum as its claim.
    pub fn honest(p: u64, n: usize, d: usize, coeffs: Vec<u64>) -> Result<Self, IopError> {
        let mut inst = Self::new(p, n, d, coeffs, 0)?;
        inst.claim = inst.true_sum();
        Ok(inst)
    }

    pub fn with_claim(&self, claim: u64) -> Result<Self, IopError> {
        Self::new(self.p, self.n, self.d, self.coeffs.clone(), claim)
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn variables(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn claim(&self) -> u64 {
        self.claim
    }

    fn exponents(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let base = self.d + 1;
        (0..self.n).map(move |j| (index / base.pow((self.n - 1 - j) as u32)) % base)
    }

    pub fn eval(&self, point: &[u64]) -> u64 {
        assert_eq!(point.len(), self.n);
        let p = self.p;
        self.coeffs.iter().enumerate().fold(0, |acc, (idx, &c)| {
            let term = self.exponents(idx).zip(point).fold(c, |t, (e, &x)| mul(t, pow(x, e as u64, p), p));
            add(acc, term, p)
        })
    }

    pub fn true_sum(&self) -> u64 {
        (0..1usize << self.n).fold(0, |acc, mask| {
            let point: Vec<u64> = (0..self.n).map(|j| ((mask >> (self.n - 1 - j)) & 1) as u64).collect();
            add(acc, self.eval(&point), self.p)
        })
    }

    /// Coefficients of `g_i` for the round after `prefix` (so `i = prefix.len() + 1`).
    pub fn round_poly(&self, prefix: &[u64]) -> Vec<u64> {
        let i = prefix.len();
        assert!(i < self.n);
        let p = self.p;
        let mut out = vec![0u64; self.d + 1];
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut term = c;
            let mut own = 0;
            for (j, e) in self.exponents(idx).enumerate() {
                if j < i {
                    term = mul(term, pow(prefix[j], e as u64, p), p);
                } else if j == i {
                    own = e;
                } else if e == 0 {
                    // sum over x in {0,1} of x^0
                    term = mul(term, 2, p);
                }
            }
            out[own] = add(out[own], term, p);
        }
        out
    }
}

fn add(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + b as u128) % p as u128) as u64
}

fn sub(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + p as u128 - b as u128) % p as u128) as u64
}

fn mul(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow(mut base: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(acc, base, p);
        }
        base = mul(base, base, p);
        e >>= 1;
    }
    acc
}

fn inv(a: u64, p: u64) -> u64 {
    pow(a, p - 2, p)
}

/// Horner evaluation of a coefficient table (constant term first).
pub fn eval_poly(coeffs: &[u64], x: u64, p: u64) -> u64 {
    coeffs.iter().rev().fold(0, |acc, &c| add(mul(acc, x, p), c, p))
}

fn sum_at_boolean(coeffs: &[u64], p: u64) -> u64 {
    add(eval_poly(coeffs, 0, p), eval_poly(coeffs, 1, p), p)
}

#[derive(Debug, Clone)]
pub struct SumcheckIop {
    instance: SumcheckInstance,
    spec: IopSpec,
}

impl SumcheckIop {
    pub fn new(instance: SumcheckInstance) -> Self {
        let n = instance.n;
        let spec = IopSpec::new(
            "sumcheck",
            instance.p,
            vec![instance.d + 1; n],
            vec![ChallengeSpace::for_modulus(instance.p); n],
            vec![instance.d + 1; n],
        )
        .expect("validated instance gives a valid spec");
        Self { instance, spec }
    }

    pub fn instance(&self) -> &SumcheckInstance {
        &self.instance
    }

    pub fn decode(&self, randomness: &[Challenge]) -> Vec<u64> {
        randomness.iter().zip(&self.spec.challenges).map(|(r, s)| s.decode(r)).collect()
    }

    /// Prover for a false claim: in every round it sends the true round
    /// polynomial shifted by a degree-`d` polynomial that fixes the running
    /// claim and vanishes on `d` points, so a challenge landing on one of
    /// those points turns the claim true again.
    pub fn cheating_prover(&self) -> Box<dyn IopProver> {
        Box::new(SumcheckProver {
            instance: self.instance.clone(),
            spec: self.spec.clone(),
            prefix: Vec::new(),
            claim: self.instance.claim,
            last: Vec::new(),
            cheat: true,
        })
    }

    /// Exact optimum of an adaptive cheating prover. The verifier's checks
    /// only depend on the prover's messages through the running claim, so
    /// the strategy tree collapses onto `(challenge prefix, claim)` states.
    pub fn optimal_cheat_probability(&self) -> Ratio<u128> {
        let inst = &self.instance;
        let num = best_row(inst, &mut Vec::new())[inst.claim as usize];
        Ratio::new(num, (inst.p as u128).pow(inst.n as u32))
    }
}

/// Numerators of the optimal acceptance probability for every claim, over
/// denominator `p^(n - prefix.len())`, indexed by claim.
fn best_row(inst: &SumcheckInstance, prefix: &mut Vec<u64>) -> Vec<u128> {
    let p = inst.p;
    if prefix.len() == inst.n {
        let v = inst.eval(prefix);
        return (0..p).map(|c| (c == v) as u128).collect();
    }
    let children: Vec<Vec<u128>> = (0..p)
        .map(|r| {
            prefix.push(r);
            let row = best_row(inst, prefix);
            prefix.pop();
            row
        })
        .collect();
    let mut best = vec![0u128; p as usize];
    let mut poly = vec![0u64; inst.d + 1];
    loop {
        let s = add(eval_poly(&poly, 0, p), eval_poly(&poly, 1, p), p);
        let total: u128 = (0..p).map(|r| children[r as usize][eval_poly(&poly, r, p) as usize]).sum();
        best[s as usize] = best[s as usize].max(total);
        if !poly.iter_mut().rev().any(|c| {
            *c += 1;
            if *c < p {
                return true;
            }
            *c = 0;
            false
        }) {
            return best;
        }
    }
}

/// Degree-`d` polynomial `D` with `D(0) + D(1) = delta` and `d` distinct
/// roots, the roots chosen as the lexicographically first valid set.
fn root_shift(d: usize, p: u64, delta: u64) -> Vec<u64> {
    fn search(start: u64, d: usize, p: u64, roots: &mut Vec<u64>) -> bool {
        if roots.len() == d {
            let at = |x: u64| roots.iter().fold(1, |acc, &a| mul(acc, sub(x, a, p), p));
            return add(at(0), at(1), p) != 0;
        }
        for a in start..p {
            roots.push(a);
            if search(a + 1, d, p, roots) {
                return true;
            }
            roots.pop();
        }
        false
    }
    let mut roots = Vec::new();
    if !search(0, d, p, &mut roots) {
        // no valid root set: fall back to a constant shift
        let mut out = vec![0; d + 1];
        out[0] = mul(delta, inv(2, p), p);
        return out;
    }
    let mut poly = vec![1u64];
    for &a in &roots {
        let mut next = vec![0u64; poly.len() + 1];
        for (j, &c) in poly.iter().enumerate() {
            next[j + 1] = add(next[j + 1], c, p);
            next[j] = sub(next[j], mul(c, a, p), p);
        }
        poly = next;
    }
    let scale = mul(delta, inv(sum_at_boolean(&poly, p), p), p);
    poly.iter().map(|&c| mul(c, scale, p)).collect()
}

#[derive(Debug, Clone, Serialize)]
struct SumcheckProver {
    #[serde(skip)]
    instance: SumcheckInstance,
    #[serde(skip)]
    spec: IopSpec,
    prefix: Vec<u64>,
    claim: u64,
    last: Vec<u64>,
    cheat: bool,
}

impl IopProver for SumcheckProver {
    fn next_string(&mut self, prev: Option<&Challenge>) -> Result<ProofString, IopError> {
        let done = self.prefix.len() + usize::from(!self.last.is_empty());
        check_round_input(&self.spec, done, prev)?;
        let p = self.instance.p;
        if let Some(r) = prev {
            let r = self.spec.challenges[done - 1].decode(r);
            self.claim = eval_poly(&self.last, r, p);
            self.prefix.push(r);
        }
        let truth = self.instance.round_poly(&self.prefix);
        let sent = if self.cheat && sum_at_boolean(&truth, p) != self.claim {
            let delta = sub(self.claim, sum_at_boolean(&truth, p), p);
            let shift = root_shift(self.instance.d, p, delta);
            truth.iter().zip(&shift).map(|(&a, &b)| add(a, b, p)).collect()
        } else {
            truth
        };
        self.last = sent.clone();
        Ok(ProofString { round: done + 1, symbols: sent })
    }

    fn rounds_done(&self) -> usize {
        self.prefix.len() + usize::from(!self.last.is_empty())
    }

    fn box_clone(&self) -> Box<dyn IopProver> {
        Box::new(self.clone())
    }

    fn state_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("serializable")
    }
}

impl Iop for SumcheckIop {
    fn name(&self) -> &'static str {
        "sumcheck"
    }

    fn spec(&self) -> &IopSpec {
        &self.spec
    }

    fn query(&self, randomness: &[Challenge]) -> Result<QueryPlan, IopError> {
        self.spec.check_randomness(randomness)?;
        Ok(QueryPlan { sets: vec![(1..=self.instance.d + 1).collect(); self.instance.n] })
    }

    fn decide(&self, randomness: &[Challenge], answers: &[Vec<Symbol>]) -> bool {
        let inst = &self.instance;
        let p = inst.p;
        if self.spec.check_randomness(randomness).is_err()
            || answers.len() != inst.n
            || answers.iter().any(|a| a.len() != inst.d + 1 || a.iter().any(|&s| s >= p))
        {
            return false;
        }
        let r = self.decode(randomness);
        let mut claim = inst.claim;
        for (i, g) in answers.iter().enumerate() {
            if sum_at_boolean(g, p) != claim {
                return false;
            }
            claim = eval_poly(g, r[i], p);
        }
        claim == inst.eval(&r)
    }

    fn in_language(&self) -> bool {
        self.instance.claim == self.instance.true_sum()
    }

    fn check_witness(&self, witness: &[Symbol]) -> bool {
        witness.is_empty() && self.in_language()
    }

    fn extract_witness(&self, _strings: &[ProofString]) -> Witness {
        Vec::new()
    }

    fn honest_prover(&self, witness: &[Symbol]) -> Result<Box<dyn IopProver>, IopError> {
        if !witness.is_empty() {
            return Err(IopError::InvalidWitness("sumcheck takes the empty witness".into()));
        }
        if !self.in_language() {
            return Err(IopError::InvalidWitness("claimed sum is false".into()));
        }
        Ok(Box::new(SumcheckProver {
            instance: self.instance.clone(),
            spec: self.spec.clone(),
            prefix: Vec::new(),
            claim: self.instance.claim,
            last: Vec::new(),
            cheat: false,
        }))
    }

    fn encode_instance(&self) -> Vec<u8> {
        super::Instance::Sumcheck(self.instance.clone()).encode()
    }
}
