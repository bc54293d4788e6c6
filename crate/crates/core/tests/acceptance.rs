//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//! `cargo test -p ibcs-core --test acceptance` runs everything; numeric
//! arguments (`-- 3 7`) select criteria.

use std::collections::BTreeSet;
use std::net::TcpListener;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::{Arc, OnceLock};
use std::thread;
use std::time::Instant;

use num_rational::Ratio;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use ibcs_core::adversary::{find_witness, AdversarySpec, ChallengePredicate};
use ibcs_core::argument::comm_stats;
use ibcs_core::extraction::{
    bounds_for, hybrid_chain, knowledge_experiment, run_events_experiment, theorem_bounds, BoundInputs, Lab,
};
use ibcs_core::iop::brute_force_soundness;
use ibcs_core::report::{run_experiment, setup_for, ExperimentConfig, ExperimentKind, ExperimentResult, Report};
use ibcs_core::seed;
use ibcs_core::toy::{GcPcp, GraphColoringInstance, Instance, SumcheckInstance, SumcheckIop};
use ibcs_core::transport::{
    run_prover, run_session, run_verifier, serve, session_rng, Frame, MemoryChannel, SessionReport, Tag, TcpChannel,
};
use ibcs_core::vc::{vc_check, vc_commit, vc_gen, vc_open, Opening};
use ibcs_core::{ArgParams, HonestArgProver, Iop, Symbol, Witness};

const MASTER: u64 = 0x1bc5;
const SESSIONS: u64 = 1000;
const LAMBDA: u16 = 128;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

// ---------------------------------------------------------------------------
// shared fixtures

fn k3() -> Instance {
    Instance::Gc(GraphColoringInstance::complete(3))
}

fn k4() -> Instance {
    Instance::Gc(GraphColoringInstance::complete(4))
}

fn petersen() -> Instance {
    Instance::Gc(GraphColoringInstance::petersen())
}

fn random_sumcheck(n: usize, d: usize) -> Instance {
    let mut rng = seed::stream(MASTER, "sumcheck/coeffs", n as u64);
    let coeffs = (0..(d + 1).pow(n as u32)).map(|_| rng.gen_range(0..17)).collect();
    Instance::Sumcheck(SumcheckInstance::honest(17, n, d, coeffs).unwrap())
}

fn sumcheck_n2d2() -> SumcheckInstance {
    SumcheckInstance::honest(17, 2, 2, vec![3, 1, 4, 1, 5, 9, 2, 6, 5]).unwrap()
}

fn sumcheck_n2d2_false() -> Instance {
    let s = sumcheck_n2d2();
    Instance::Sumcheck(s.with_claim((s.true_sum() + 1) % 17).unwrap())
}

fn sumcheck_n1d1p5_false() -> Instance {
    Instance::Sumcheck(SumcheckInstance::new(5, 1, 1, vec![1, 2], 0).unwrap())
}

struct Family {
    name: &'static str,
    pp: ArgParams,
    iop: Arc<dyn Iop>,
    sessions: Vec<Result<SessionReport, String>>,
}

fn honest_session(pp: &ArgParams, iop: &Arc<dyn Iop>, w: &Witness, id: u64) -> Result<SessionReport, String> {
    let mut prover = HonestArgProver::from_witness(pp, iop.clone(), w).map_err(|e| e.to_string())?;
    run_session(pp, iop.as_ref(), &mut prover, &mut session_rng(MASTER, id)).map_err(|e| e.to_string())
}

/// Honest sessions over every completeness instance, run once and shared.
fn corpus() -> &'static [Family] {
    static CORPUS: OnceLock<Vec<Family>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let menu = [
            ("K3", k3()),
            ("Petersen", petersen()),
            ("sumcheck n1 d2", random_sumcheck(1, 2)),
            ("sumcheck n2 d2", random_sumcheck(2, 2)),
            ("sumcheck n3 d2", random_sumcheck(3, 2)),
        ];
        menu.into_iter()
            .map(|(name, instance)| {
                let pp = setup_for(&instance, LAMBDA).unwrap();
                let iop = instance.iop();
                let w = find_witness(&instance, None).expect("completeness instances are true");
                let sessions = (0..SESSIONS).into_par_iter().map(|id| honest_session(&pp, &iop, &w, id)).collect();
                Family { name, pp, iop, sessions }
            })
            .collect()
    })
}

fn experiment(kind: ExperimentKind, instance: Instance, adversary: &str, epsilon: f64, trials: u64, seed: u64) -> Report {
    let config = ExperimentConfig {
        kind,
        instance,
        witness: None,
        adversary: adversary.to_string(),
        lambda: LAMBDA,
        epsilon,
        trials,
        seed,
    };
    run_experiment(&config).unwrap_or_else(|e| panic!("{adversary}: {e}"))
}

fn lab(instance: &Instance, adversary: &str, epsilon: f64) -> Lab {
    let pp = setup_for(instance, LAMBDA).unwrap();
    let adv: AdversarySpec = adversary.parse().unwrap();
    let prototype = adv.build(&pp, instance, None).unwrap();
    Lab::new(pp, instance.iop(), prototype, epsilon).unwrap()
}

fn ceil_log2(x: usize) -> u64 {
    let mut bits = 0;
    while (1usize << bits) < x {
        bits += 1;
    }
    bits
}

// ---------------------------------------------------------------------------
// 1. completeness

fn completeness() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for fam in corpus() {
        let accepted = fam.sessions.iter().filter(|s| matches!(s, Ok(r) if r.accepted)).count();
        pass &= accepted as u64 == SESSIONS;
        parts.push(format!("{} {accepted}/{SESSIONS}", fam.name));
    }
    Verdict::new(pass, parts.join(", "))
}

// ---------------------------------------------------------------------------
// 2. round shape and ordering

fn expected_tags(k: usize) -> Vec<Tag> {
    let mut tags = vec![Tag::Params, Tag::Instance];
    for _ in 0..k {
        tags.extend([Tag::Commit, Tag::Challenge]);
    }
    tags.extend([Tag::FinalResponse, Tag::Decision]);
    tags
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

/// Feeds a scripted prover-side frame sequence to a verifier. Every script
/// holds at least as many frames as the verifier reads, so it never blocks.
fn scripted_accepts(fam: &Family, id: u64, frames: &[Frame]) -> bool {
    let (mut v, mut p) = MemoryChannel::pair();
    for f in frames {
        p.send_raw(f.encode()).unwrap();
    }
    let result = run_verifier(&mut v, &fam.pp, fam.iop.as_ref(), &mut session_rng(MASTER, id));
    drop(p);
    matches!(result, Ok(r) if r.accepted)
}

fn shape() -> Verdict {
    let mut bad_shape = 0;
    let mut checked = 0;
    let mut scripts = 0;
    let mut wrongly_accepted = 0;
    let mut identity_ok = true;
    for fam in corpus() {
        let k = fam.iop.spec().rounds();
        let tags = expected_tags(k);
        for r in fam.sessions.iter().flatten() {
            checked += 1;
            let got: Vec<Tag> = r.frames.iter().map(|f| f.tag).collect();
            if got != tags || r.protocol_frames != 2 * k + 1 || r.transcript.messages() != 2 * k + 1 {
                bad_shape += 1;
            }
        }
        let Some(Ok(sample)) = fam.sessions.first() else {
            return Verdict::new(false, format!("{}: no sample session", fam.name));
        };
        let sent: Vec<Frame> =
            sample.frames.iter().filter(|f| !matches!(f.tag, Tag::Challenge | Tag::Decision)).cloned().collect();
        identity_ok &= scripted_accepts(fam, 0, &sent);
        for perm in permutations(sent.len()).into_iter().filter(|p| p.iter().enumerate().any(|(i, &j)| i != j)) {
            scripts += 1;
            let script: Vec<Frame> = perm.iter().map(|&j| sent[j].clone()).collect();
            wrongly_accepted += scripted_accepts(fam, 0, &script) as usize;
        }
        // Stray verifier frames and duplicates spliced in ahead of the final
        // response. Anything after it arrives once the decision is made.
        let stray = [
            sample.frames.iter().find(|f| f.tag == Tag::Challenge).cloned().unwrap(),
            sample.frames.last().cloned().unwrap(),
        ];
        let last = sent.len() - 1;
        for at in 0..=last {
            for extra in stray.iter().chain((at < last).then_some(&sent[at])) {
                let mut script = sent.clone();
                script.insert(at, extra.clone());
                scripts += 1;
                wrongly_accepted += scripted_accepts(fam, 0, &script) as usize;
            }
        }
    }
    Verdict::new(
        bad_shape == 0 && wrongly_accepted == 0 && identity_ok,
        format!(
            "{checked} sessions with 2k+1 protocol frames in order ({bad_shape} malformed); \
             in-order replay accepted: {identity_ok}; {wrongly_accepted}/{scripts} reordered or spliced scripts accepted"
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. communication accounting

fn accounting() -> Verdict {
    let mut runs = 0;
    let mut mismatches = Vec::new();
    for fam in corpus() {
        let spec = fam.iop.spec();
        let k = spec.rounds() as u64;
        let sb = spec.symbol_bits as u64;
        for r in fam.sessions.iter().flatten() {
            runs += 1;
            let t = &r.transcript;
            let mut p2v = 0u64;
            let mut stream = 0u64;
            for (i, o) in t.response.iter().enumerate() {
                let q = o.positions.len() as u64;
                let w = ceil_log2(spec.proof_lengths[i]);
                p2v += 256 + q * (w + sb) + 256 * o.proof.len() as u64;
                stream += q * (w + sb);
            }
            let v2p: u64 = t.challenges.iter().map(|c| c.bits() as u64).sum();
            let pad = |bits: u64| bits.div_ceil(8) * 8 - bits;
            let p2v_layout = (k + 1) * 40 + k * 64 + pad(stream);
            let v2p_layout = k * 40 + t.challenges.iter().map(|c| pad(c.bits() as u64)).sum::<u64>();

            // Measured at the verifier's channel endpoint, less the setup
            // frames and the decision epilogue.
            let setup: u64 =
                r.frames.iter().filter(|f| matches!(f.tag, Tag::Params | Tag::Instance)).map(|f| f.wire_len() as u64).sum();
            let epilogue = r.frames.last().unwrap().wire_len() as u64;
            let wire_p2v = 8 * (r.channel.received - setup);
            let wire_v2p = 8 * (r.channel.sent - epilogue);

            let stats = comm_stats(t, &fam.pp);
            let ok = stats.prover_to_verifier_bits == p2v
                && stats.verifier_to_prover_bits == v2p
                && wire_p2v == p2v + p2v_layout
                && wire_v2p == v2p + v2p_layout
                && wire_p2v == 8 * r.prover_to_verifier_bytes
                && wire_v2p == 8 * r.verifier_to_prover_bytes;
            if !ok && mismatches.len() < 3 {
                mismatches.push(format!(
                    "{}: formula {p2v}/{v2p}, stats {}/{}, wire {wire_p2v}/{wire_v2p}, layout {p2v_layout}/{v2p_layout}",
                    fam.name, stats.prover_to_verifier_bits, stats.verifier_to_prover_bits
                ));
            }
        }
    }
    let detail = if mismatches.is_empty() {
        format!("{runs} honest runs: wire bits = formula + frame layout in both directions")
    } else {
        format!("mismatches: {}", mismatches.join("; "))
    };
    Verdict::new(mismatches.is_empty(), detail)
}

// ---------------------------------------------------------------------------
// 4. vector commitment

fn sibling_count(width: usize, positions: &[usize]) -> usize {
    let mut level: BTreeSet<usize> = positions.iter().map(|q| q - 1).collect();
    let mut count = 0;
    let mut w = width;
    while w > 1 {
        count += level.iter().filter(|&&i| !level.contains(&(i ^ 1))).count();
        level = level.iter().map(|i| i >> 1).collect();
        w /= 2;
    }
    count
}

fn random_message(rng: &mut ChaCha20Rng, len: usize, sb: u8) -> Vec<Symbol> {
    let mask = if sb == 64 { u64::MAX } else { (1u64 << sb) - 1 };
    (0..len).map(|_| rng.gen::<u64>() & mask).collect()
}

fn random_positions(rng: &mut ChaCha20Rng, len: usize) -> Vec<usize> {
    let density: f64 = rng.gen_range(0.05..1.0);
    let mut q: Vec<usize> = (1..=len).filter(|_| rng.gen_bool(density)).collect();
    if q.is_empty() {
        q.push(rng.gen_range(1..=len));
    }
    q
}

fn vc_round_trip_property() -> Result<u32, String> {
    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, ..Config::default() });
    let strategy = (1usize..=96, 0u64..=40, 1u8..=64, any::<u64>());
    runner
        .run(&strategy, |(len, extra, sb, s)| {
            let mut rng = ChaCha20Rng::seed_from_u64(s);
            let params = vc_gen(LAMBDA, len as u64 + extra, sb).unwrap();
            let m = random_message(&mut rng, len, sb);
            let (cm, aux) = vc_commit(&params, &m).unwrap();
            let q = random_positions(&mut rng, len);
            let o = vc_open(&params, &aux, &q).unwrap();
            prop_assert!(vc_check(&params, &cm, &q, &o.answers, &o.proof));
            prop_assert_eq!(o.answers.clone(), q.iter().map(|&p| m[p - 1]).collect::<Vec<_>>());
            let width = (len as u64 + extra).next_power_of_two() as usize;
            prop_assert_eq!(o.proof.len(), sibling_count(width, &q));
            Ok(())
        })
        .map_err(|e: proptest::test_runner::TestError<_>| e.to_string())?;
    Ok(10_000)
}

/// One forged opening against `m`'s commitment whose answers disagree with
/// `m` somewhere. Returns whether it verified.
fn equivocation_attempt(attempt: u64) -> bool {
    let mut rng = seed::stream(MASTER, "vc/equivocation", attempt);
    let len = rng.gen_range(2..=48);
    let sb = rng.gen_range(1..=16u8);
    let params = vc_gen(LAMBDA, len as u64 + rng.gen_range(0..8), sb).unwrap();
    let m = random_message(&mut rng, len, sb);
    let (cm, aux) = vc_commit(&params, &m).unwrap();
    let q = random_positions(&mut rng, len);
    let honest = vc_open(&params, &aux, &q).unwrap();
    let flip = |a: Symbol, rng: &mut ChaCha20Rng| a ^ (1 + rng.gen_range(0..((1u64 << sb) - 1)));
    let which = rng.gen_range(0..q.len());

    let forged = match attempt % 5 {
        // Altered answer, honest proof.
        0 => {
            let mut o = honest.clone();
            o.answers[which] = flip(o.answers[which], &mut rng);
            o
        }
        // A valid opening of a different message.
        1 => {
            let mut m2 = m.clone();
            m2[q[which] - 1] = flip(m2[q[which] - 1], &mut rng);
            let (_, aux2) = vc_commit(&params, &m2).unwrap();
            vc_open(&params, &aux2, &q).unwrap()
        }
        // Altered answer and a random digest in the proof.
        2 => {
            let mut o = honest.clone();
            o.answers[which] = flip(o.answers[which], &mut rng);
            if !o.proof.is_empty() {
                let at = rng.gen_range(0..o.proof.len());
                rng.fill(&mut o.proof[at]);
            }
            o
        }
        // Altered answer with reordered or truncated siblings.
        3 => {
            let mut o = honest.clone();
            o.answers[which] = flip(o.answers[which], &mut rng);
            if o.proof.len() >= 2 && rng.gen_bool(0.5) {
                let (a, b) = (rng.gen_range(0..o.proof.len()), rng.gen_range(0..o.proof.len()));
                o.proof.swap(a, b);
            } else {
                o.proof.pop();
            }
            o
        }
        // Honest answers relabelled to other positions.
        _ => {
            let shifted: Vec<usize> = q.iter().map(|&p| p % len + 1).collect();
            let mut sorted = shifted.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() == q.len() && sorted != q {
                let answers = sorted
                    .iter()
                    .map(|p| honest.answers[shifted.iter().position(|s| s == p).unwrap()])
                    .collect();
                Opening { positions: sorted, answers, proof: honest.proof.clone() }
            } else {
                let mut o = honest.clone();
                o.answers[which] = flip(o.answers[which], &mut rng);
                o
            }
        }
    };
    let conflicting = forged.positions.iter().zip(&forged.answers).any(|(&p, &a)| m[p - 1] != a);
    conflicting && vc_check(&params, &cm, &forged.positions, &forged.answers, &forged.proof)
}

fn vector_commitment() -> Verdict {
    let cases = match vc_round_trip_property() {
        Ok(n) => n,
        Err(e) => return Verdict::new(false, format!("round-trip property failed: {e}")),
    };
    const ATTEMPTS: u64 = 100_000;
    let broken: u64 = (0..ATTEMPTS).into_par_iter().map(|a| equivocation_attempt(a) as u64).sum();
    Verdict::new(
        broken == 0,
        format!(
            "{cases} random (m, Q) open/check with sibling-count oracle; {broken} valid conflicting openings in {ATTEMPTS} forgery attempts"
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. exact soundness oracles

fn best_static_coloring(g: &GraphColoringInstance) -> Ratio<u128> {
    let n = g.vertices();
    let mut best = 0;
    for code in 0..3usize.pow(n as u32) {
        let colors: Vec<usize> = (0..n).map(|v| code / 3usize.pow(v as u32) % 3).collect();
        best = best.max(g.edges().iter().filter(|&&(u, v)| colors[u] != colors[v]).count());
    }
    Ratio::new(best as u128, g.edges().len() as u128)
}

/// One round, one query: the best cheat fixes a line `g` with
/// `g(0) + g(1) = claim` and wins when `g(r) = f(r)`.
fn best_linear_cheat(p: u64, f: [u64; 2], claim: u64) -> Ratio<u128> {
    let mut best = 0;
    for a in 0..p {
        for b in 0..p {
            if (2 * a + b) % p != claim {
                continue;
            }
            best = best.max((0..p).filter(|r| (a + b * r) % p == (f[0] + f[1] * r) % p).count());
        }
    }
    Ratio::new(best as u128, p as u128)
}

fn oracles() -> Verdict {
    let Instance::Gc(g4) = k4() else { unreachable!() };
    let gc = brute_force_soundness(&GcPcp::new(g4.clone())).unwrap();
    let gc_direct = best_static_coloring(&g4);
    let Instance::Sumcheck(s) = sumcheck_n1d1p5_false() else { unreachable!() };
    let iop = SumcheckIop::new(s.clone());
    let sc = brute_force_soundness(&iop).unwrap();
    let sc_collapsed = iop.optimal_cheat_probability();
    let sc_direct = best_linear_cheat(5, [s.coeffs()[0], s.coeffs()[1]], s.claim());
    let pass = gc == Ratio::new(5, 6)
        && gc_direct == gc
        && sc == Ratio::new(1, 5)
        && sc_collapsed == sc
        && sc_direct == sc;
    Verdict::new(
        pass,
        format!(
            "K4 brute force {gc} (direct coloring count {gc_direct}); sumcheck n1 d1 p5 brute force {sc} (collapsed {sc_collapsed}, direct {sc_direct})"
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. soundness

fn soundness() -> Verdict {
    const TRIALS: u64 = 10_000;
    const EPSILON: f64 = 0.05;
    let runs: Vec<(&str, Instance, &str)> = vec![
        ("K4", k4(), "cheat"),
        ("K4", k4(), "grinder:1:1"),
        ("K4", k4(), "grinder:3:5"),
        ("K4", k4(), "withholder:1:1"),
        ("K4", k4(), "equivocator"),
        ("K4", k4(), "abort"),
        ("sumcheck n1 d1 p5", sumcheck_n1d1p5_false(), "cheat"),
        ("sumcheck n1 d1 p5", sumcheck_n1d1p5_false(), "grinder:1:1"),
        ("sumcheck n1 d1 p5", sumcheck_n1d1p5_false(), "equivocator"),
        ("sumcheck n2 d2", sumcheck_n2d2_false(), "cheat"),
        ("sumcheck n2 d2", sumcheck_n2d2_false(), "grinder:2:1"),
        ("sumcheck n2 d2", sumcheck_n2d2_false(), "withholder:2:1"),
        ("sumcheck n2 d2", sumcheck_n2d2_false(), "equivocator"),
        ("sumcheck n2 d2", sumcheck_n2d2_false(), "abort"),
    ];
    let mut pass = true;
    let mut strong = 0;
    let mut parts = Vec::new();
    for (i, (name, instance, adv)) in runs.iter().enumerate() {
        let report = experiment(ExperimentKind::Soundness, instance.clone(), adv, EPSILON, TRIALS, MASTER + i as u64);
        let ExperimentResult::Soundness(r) = report.result else { unreachable!() };
        let eps_iop = r.bound.unwrap() - EPSILON;
        let ok = r.within_bound == Some(true);
        pass &= ok;
        strong += (r.acceptance.value <= eps_iop + 3.0 * r.acceptance.radius) as usize;
        parts.push(format!("{name}/{adv} {:.4}<={}{}", r.acceptance.value, r.eps_iop.unwrap(), if ok { "" } else { " VIOLATED" }));
    }
    Verdict::new(
        pass,
        format!(
            "{} configs x {TRIALS} trials, acceptance <= eps_IOP + {EPSILON} + 3r; {strong}/{} also <= eps_IOP + 3r [{}]",
            runs.len(),
            runs.len(),
            parts.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. missing positions

fn missing_positions() -> Verdict {
    const TRIALS: u64 = 10_000;
    let configs: Vec<(&str, Instance, &str)> = vec![
        ("K3", k3(), "withholder:1:1"),
        ("K3", k3(), "withholder:1:2,1:3"),
        ("Petersen", petersen(), "withholder:1:1"),
        ("Petersen", petersen(), "withholder:1:4,1:7"),
        // Sumcheck queries every coefficient, so these always abort.
        ("sumcheck n2 d2", Instance::Sumcheck(sumcheck_n2d2()), "withholder:1:1"),
        ("sumcheck n2 d2", Instance::Sumcheck(sumcheck_n2d2()), "withholder:2:2"),
        ("sumcheck n2 d2", Instance::Sumcheck(sumcheck_n2d2()), "withholder:1:3,2:1"),
    ];
    let mut pass = true;
    let mut points = 0;
    let mut parts = Vec::new();
    for (c, (name, instance, adv)) in configs.iter().enumerate() {
        for epsilon in [0.5, 0.25] {
            let lab = lab(instance, adv, epsilon);
            let t_max = lab.budget().t_max as f64;
            for ell in 1..=lab.iop().spec().rounds() {
                let ev = run_events_experiment(&lab, ell, TRIALS, MASTER + c as u64);
                let joint = ev.event_ii_accepted_rate();
                let bound = lab.iop().spec().proof_lengths[ell - 1] as f64 / t_max;
                let ok = joint.value <= bound + 3.0 * joint.radius && ev.event_i == 0;
                pass &= ok;
                points += 1;
                parts.push(format!(
                    "{name}/{adv} eps={epsilon} l={ell}: {:.4}<={bound:.4} (unconditional {:.4}){}",
                    joint.value,
                    ev.event_ii_rate().value,
                    if ok { "" } else { " VIOLATED" }
                ));
            }
        }
    }
    Verdict::new(
        pass,
        format!("{points} points x {TRIALS} trials, Pr[accept and missing] <= l_l/T + 3r [{}]", parts.join(", ")),
    )
}

// ---------------------------------------------------------------------------
// 8. hybrid chain

fn hybrid_chains() -> Verdict {
    const TRIALS: u64 = 5_000;
    let configs: Vec<(&str, Instance, &str)> = vec![
        ("K3", k3(), "honest"),
        ("K3", k3(), "grinder:1:1"),
        ("K3", k3(), "withholder:1:1"),
        ("sumcheck n2 d2", Instance::Sumcheck(sumcheck_n2d2()), "honest"),
        ("sumcheck n2 d2", Instance::Sumcheck(sumcheck_n2d2()), "grinder:1:1"),
        ("sumcheck n2 d2", Instance::Sumcheck(sumcheck_n2d2()), "withholder:2:2"),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, (name, instance, adv)) in configs.iter().enumerate() {
        for epsilon in [0.5, 0.25] {
            let lab = lab(instance, adv, epsilon);
            let chain = hybrid_chain(&lab, TRIALS, MASTER + c as u64);
            let (h0, hk) = (chain[0].estimate, chain.last().unwrap().estimate);
            let ok = h0.value <= hk.value + epsilon + h0.radius + hk.radius;
            pass &= ok;
            let values: Vec<String> = chain.iter().map(|h| format!("{:.4}", h.estimate.value)).collect();
            parts.push(format!("{name}/{adv} eps={epsilon}: [{}]{}", values.join(" "), if ok { "" } else { " VIOLATED" }));
        }
    }
    Verdict::new(pass, format!("{TRIALS} trials per hybrid, H_0 <= H_k + eps + r_0 + r_k [{}]", parts.join(", ")))
}

// ---------------------------------------------------------------------------
// 9. knowledge

fn knowledge() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, instance) in [("K3", k3()), ("Petersen", petersen())] {
        let lab = lab(&instance, "honest", 0.5);
        let k = knowledge_experiment(&lab, SESSIONS, MASTER);
        let ok = k.extraction.successes == SESSIONS && k.failures == 0;
        pass &= ok;
        parts.push(format!(
            "{name} honest: extracted {}/{SESSIONS} (single pass {:.3}, {} extractor runs)",
            k.extraction.successes, k.single_pass.value, k.attempts
        ));
    }
    let epsilon = 0.1;
    let predicate = ChallengePredicate::FIRST_BIT_ZERO;
    let p_star = predicate.measure();
    let p_star = *p_star.numer() as f64 / *p_star.denom() as f64;
    let lab = lab(&k3(), "grinder:1:1", epsilon);
    let k = knowledge_experiment(&lab, 10 * SESSIONS, MASTER + 1);
    let floor = p_star - epsilon - 3.0 * k.single_pass.radius;
    let ok = k.single_pass.value >= floor;
    pass &= ok;
    parts.push(format!(
        "K3 grinder p*={p_star}: acceptance {:.3}, single-pass extraction {:.3} >= {floor:.3}, with reruns {:.3}",
        k.acceptance.value, k.single_pass.value, k.extraction.value
    ));
    Verdict::new(pass, parts.join("; "))
}

// ---------------------------------------------------------------------------
// 10. bound calculator

fn bound_calculator() -> Verdict {
    let mut failures = Vec::new();
    let inputs = BoundInputs { eps_iop: 5.0 / 6.0, kappa_iop: 0.5, eps_vc: 0.01, eps_vc_collapse: 0.002, epsilon: 0.1 };
    let b = bounds_for(2, 4, inputs).unwrap();
    // 5/6 + 2 * (0.01 + 4 * 0.002) + 0.1 and 0.5 + 0.036 + 0.1.
    if (b.soundness - (5.0 / 6.0 + 0.036 + 0.1)).abs() > 1e-12 || (b.knowledge - 0.636).abs() > 1e-12 {
        failures.push(format!("hand example gave {} / {}", b.soundness, b.knowledge));
    }
    let Instance::Gc(g4) = k4() else { unreachable!() };
    let spec = GcPcp::new(g4).spec().clone();
    let zero = BoundInputs { eps_iop: 5.0 / 6.0, kappa_iop: 0.0, eps_vc: 0.0, eps_vc_collapse: 0.0, epsilon: 0.05 };
    let tb = theorem_bounds(&spec, zero).unwrap();
    if tb.commitment_term != 0.0 || (tb.soundness - (5.0 / 6.0 + 0.05)).abs() > 1e-12 || tb.k != 1 || tb.l_max != 4 {
        failures.push(format!("K4 with zero VC terms gave {tb:?}"));
    }
    for bad in [-0.1, 1.5, f64::NAN] {
        if bounds_for(1, 1, BoundInputs { eps_vc: bad, ..zero }).is_ok() {
            failures.push(format!("accepted eps_VC = {bad}"));
        }
    }

    let grid = [0.0, 1e-6, 0.01, 0.2, 0.5, 1.0];
    let mut sweeps = 0;
    let set = |mut b: BoundInputs, i: usize, v: f64| {
        match i {
            0 => b.eps_iop = v,
            1 => b.kappa_iop = v,
            2 => b.eps_vc = v,
            3 => b.eps_vc_collapse = v,
            _ => b.epsilon = v,
        }
        b
    };
    for k in 1..=4 {
        for l_max in [1, 3, 16] {
            for base in grid {
                let base_inputs = BoundInputs {
                    eps_iop: base,
                    kappa_iop: base,
                    eps_vc: base / 2.0,
                    eps_vc_collapse: base / 4.0,
                    epsilon: base / 3.0,
                };
                let here = bounds_for(k, l_max, base_inputs).unwrap();
                for i in 0..5 {
                    for pair in grid.windows(2) {
                        let lo = bounds_for(k, l_max, set(base_inputs, i, pair[0])).unwrap();
                        let hi = bounds_for(k, l_max, set(base_inputs, i, pair[1])).unwrap();
                        sweeps += 1;
                        if hi.soundness < lo.soundness || hi.knowledge < lo.knowledge {
                            failures.push(format!("input {i} decreased the bound at k={k} l_max={l_max}"));
                        }
                    }
                }
                let more_rounds = bounds_for(k + 1, l_max, base_inputs).unwrap();
                let longer = bounds_for(k, l_max + 1, base_inputs).unwrap();
                sweeps += 2;
                if more_rounds.soundness < here.soundness || longer.soundness < here.soundness {
                    failures.push(format!("k or l_max decreased the bound at k={k} l_max={l_max}"));
                }
            }
        }
    }
    failures.truncate(3);
    let detail = if failures.is_empty() {
        format!("hand example, zero-VC case, range checks and {sweeps} monotonicity comparisons")
    } else {
        failures.join("; ")
    };
    Verdict::new(failures.is_empty(), detail)
}

// ---------------------------------------------------------------------------
// 11. determinism

fn determinism() -> Verdict {
    let mut failures = Vec::new();
    let reports = [
        experiment(ExperimentKind::Soundness, k4(), "cheat", 0.05, 2_000, 7),
        experiment(ExperimentKind::Soundness, sumcheck_n2d2_false(), "grinder:2:1", 0.05, 2_000, 8),
        experiment(ExperimentKind::Extraction, k3(), "withholder:1:1", 0.5, 300, 9),
        experiment(ExperimentKind::Extraction, Instance::Sumcheck(sumcheck_n2d2()), "honest", 0.5, 200, 10),
    ];
    for r in &reports {
        let json = serde_json::to_string(r).unwrap();
        let back: Report = serde_json::from_str(&json).unwrap();
        let again = run_experiment(&back.config).unwrap();
        if back != *r || serde_json::to_string(&again).unwrap() != json {
            failures.push(format!("{} did not replay identically", r.config.adversary));
        }
    }

    const TCP_SESSIONS: u64 = 8;
    let mut compared = 0;
    for (name, instance) in [("K3", k3()), ("sumcheck n3 d2", random_sumcheck(3, 2))] {
        let pp = setup_for(&instance, LAMBDA).unwrap();
        let iop = instance.iop();
        let w = find_witness(&instance, None).unwrap();
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let served = thread::scope(|s| {
            let server = s.spawn(|| serve(&listener, &pp, iop.as_ref(), MASTER, TCP_SESSIONS));
            for _ in 0..TCP_SESSIONS {
                let mut ch = TcpChannel::connect(addr).unwrap();
                let mut prover = HonestArgProver::from_witness(&pp, iop.clone(), &w).unwrap();
                run_prover(&mut ch, &pp, iop.as_ref(), &mut prover).unwrap();
            }
            server.join().unwrap()
        });
        for (id, remote) in served.into_iter().enumerate() {
            compared += 1;
            let local = honest_session(&pp, &iop, &w, id as u64);
            match (remote, local) {
                (Ok(a), Ok(b)) if a.file_bytes() == b.file_bytes() => {}
                _ => failures.push(format!("{name} session {id}: TCP transcript differs from memory")),
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{} reports replay bit-identically; {compared} TCP transcripts equal their in-memory runs", reports.len())
    } else {
        failures.join("; ")
    };
    Verdict::new(failures.is_empty(), detail)
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("perfect completeness", completeness),
        ("round shape", shape),
        ("communication accounting", accounting),
        ("vector commitment", vector_commitment),
        ("exact oracles", oracles),
        ("soundness", soundness),
        ("missing positions", missing_positions),
        ("hybrid chain", hybrid_chains),
        ("knowledge extraction", knowledge),
        ("bound calculator", bound_calculator),
        ("determinism", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                Verdict::new(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        failed += !verdict.pass as usize;
        println!(
            "criterion {number:>2} {name}: {} ({:.1}s) {}",
            if verdict.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            verdict.detail
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
