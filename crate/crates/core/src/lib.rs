//! Interactive BCS (IBCS) compiler and a classical security-reduction lab.
//!
//! The crate turns a public-coin interactive oracle proof (IOP) with a
//! non-adaptive verifier plus a Merkle vector commitment into a succinct
//! `(k + 1)`-round interactive argument, and ships the rewinding machinery
//! (sampler, reductor, hybrid protocols, failure-event counters) used to
//! reason about the argument's soundness and knowledge soundness at desk
//! scale.
//!
//! Layout:
//!
//! * [`vc`]: Merkle vector commitment with deduplicated multi-openings.
//! * [`iop`]: the IOP interface, challenge sampling, the postponed-query
//!   interaction and an exhaustive soundness oracle.
//! * [`toy`]: graph 3-coloring PCP and sumcheck instantiations.
//! * [`argument`]: the compiled argument (setup, prover, verifier,
//!   communication accounting).
//! * [`transport`]: wire framing, channels and the session state machines.
//! * [`adversary`]: scripted, snapshot-rewindable malicious provers.
//! * [`extraction`]: sampler/reductor, hybrids, event counters, bounds.
//! * [`report`]: reproducible JSON experiment records.

pub mod adversary;
pub mod argument;
pub mod extraction;
pub mod iop;
pub mod report;
pub mod seed;
pub mod toy;
pub mod transport;
pub mod vc;

pub use argument::{arg_setup, arg_verify, comm_stats, ArgParams, ArgProver, CommStats, HonestArgProver, ProverError, Transcript};
pub use iop::{Challenge, ChallengeSpace, Iop, IopError, IopProver, IopSpec, ProofString, QueryPlan, Symbol, Witness};
pub use vc::{Commitment, Digest, Opening, VcError, VcParams};

/// Version string embedded in every JSON report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
