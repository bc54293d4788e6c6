//! Reproducible JSON experiment records.
//!
//! A [`Report`] embeds its full configuration (instance, adversary, budget,
//! trial count, master seed) and the crate version, so
//! [`replay`] can re-run it and compare the result bit for bit.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AdversarySpec;
use crate::argument::{arg_setup, run_argument, ArgParams};
use crate::extraction::{
    hybrid_chain, knowledge_experiment, run_events_experiment, Estimate, EventCounters, ExtractionError, HybridPoint,
    KnowledgeReport, Lab, RewindBudget,
};
use crate::iop::{IopError, Witness};
use crate::seed;
use crate::toy::Instance;
use crate::vc::VcError;
use crate::VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Soundness,
    Extraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub instance: Instance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub adversary: String,
    pub lambda: u16,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Whether an exact IOP soundness error is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleStatus {
    Exact,
    /// The instance is in the language.
    NotApplicable,
    /// The exhaustive search is too large.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundnessResult {
    pub acceptance: Estimate,
    pub oracle: OracleStatus,
    /// Exact optimal IOP cheating probability, for false instances.
    pub eps_iop: Option<String>,
    /// `eps_IOP + epsilon`; the VC terms are zero at desk scale.
    pub bound: Option<f64>,
    /// Acceptance is at most `bound + 3 * radius`.
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub budget: RewindBudget,
    pub hybrids: Vec<HybridPoint>,
    /// One entry per round `1..=k`.
    pub events: Vec<EventCounters>,
    pub knowledge: KnowledgeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExperimentResult {
    Soundness(SoundnessResult),
    Extraction(ExtractionResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: ExperimentConfig,
    pub result: ExperimentResult,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Iop(#[from] IopError),
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Instance-size bound handed to setup: the encoded instance length.
pub fn instance_size(instance: &Instance) -> u64 {
    instance.encode().len() as u64
}

pub fn setup_for(instance: &Instance, lambda: u16) -> Result<ArgParams, VcError> {
    arg_setup(lambda, instance_size(instance), instance.iop().spec())
}

/// Exact soundness error of the IOP on a false instance; `None` for true
/// instances or graphs too large for the exhaustive search.
pub fn iop_soundness_error(instance: &Instance) -> Option<Ratio<u128>> {
    soundness_oracle(instance).1
}

pub fn soundness_oracle(instance: &Instance) -> (OracleStatus, Option<Ratio<u128>>) {
    if instance.iop().in_language() {
        return (OracleStatus::NotApplicable, None);
    }
    match instance {
        // One string, one edge query: the best static coloring is optimal.
        Instance::Gc(g) => match g.best_coloring() {
            Ok((_, best)) => (OracleStatus::Exact, Some(Ratio::new(best as u128, g.edges().len() as u128))),
            Err(_) => (OracleStatus::Infeasible, None),
        },
        Instance::Sumcheck(s) => {
            (OracleStatus::Exact, Some(crate::toy::SumcheckIop::new(s.clone()).optimal_cheat_probability()))
        }
    }
}

pub fn ratio_f64(r: &Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, ReportError> {
    if config.trials == 0 {
        return Err(ReportError::Config("trials must be positive".into()));
    }
    if !(config.epsilon > 0.0 && config.epsilon <= 1.0) {
        return Err(ReportError::Config(format!("epsilon = {} is not in (0, 1]", config.epsilon)));
    }
    let adversary: AdversarySpec = config.adversary.parse().map_err(ReportError::Config)?;
    let pp = setup_for(&config.instance, config.lambda)?;
    let prototype = adversary.build(&pp, &config.instance, config.witness.as_ref())?;
    let iop = config.instance.iop();
    let lab = Lab::new(pp.clone(), iop.clone(), prototype, config.epsilon)?;
    let result = match config.kind {
        ExperimentKind::Soundness => {
            let accepted: u64 = (0..config.trials)
                .into_par_iter()
                .map(|n| {
                    let mut adv = lab.fresh_adversary();
                    run_argument(&pp, iop.as_ref(), adv.as_mut(), &mut seed::stream(config.seed, "soundness", n)).accepted
                        as u64
                })
                .sum();
            let acceptance = Estimate::new(accepted, config.trials);
            let (oracle, eps) = soundness_oracle(&config.instance);
            let bound = eps.as_ref().map(|r| ratio_f64(r) + config.epsilon);
            ExperimentResult::Soundness(SoundnessResult {
                acceptance,
                oracle,
                eps_iop: eps.map(|r| r.to_string()),
                bound,
                within_bound: bound.map(|b| acceptance.value <= b + 3.0 * acceptance.radius),
            })
        }
        ExperimentKind::Extraction => {
            let k = iop.spec().rounds();
            ExperimentResult::Extraction(ExtractionResult {
                budget: *lab.budget(),
                hybrids: hybrid_chain(&lab, config.trials, config.seed),
                events: (1..=k).map(|ell| run_events_experiment(&lab, ell, config.trials, config.seed)).collect(),
                knowledge: knowledge_experiment(&lab, config.trials, config.seed),
            })
        }
    };
    Ok(Report { version: VERSION.to_string(), config: config.clone(), result })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub matches: bool,
    pub version_matches: bool,
    pub fresh: Report,
}

/// Re-runs the embedded configuration and compares the results.
pub fn replay(report: &Report) -> Result<ReplayOutcome, ReportError> {
    let fresh = run_experiment(&report.config)?;
    Ok(ReplayOutcome { matches: fresh.result == report.result, version_matches: fresh.version == report.version, fresh })
}
