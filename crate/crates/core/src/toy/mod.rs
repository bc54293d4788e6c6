//! Concrete IOPs: graph 3-coloring and sumcheck.

pub mod gc;
pub mod sumcheck;
mod text;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use gc::{GcPcp, GraphColoringInstance};
pub use sumcheck::{SumcheckInstance, SumcheckIop};
pub use text::{parse_instance, InstanceKind, LoadedInstance};

use crate::iop::{check_round_input, Challenge, Iop, IopError, IopProver, IopSpec, ProofString, Symbol};
use crate::transport::{DecodeError, Reader};

const GC_TAG: u8 = 0x01;
const SUMCHECK_TAG: u8 = 0x02;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Instance {
    Gc(GraphColoringInstance),
    Sumcheck(SumcheckInstance),
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::Gc(_) => InstanceKind::Gc,
            Instance::Sumcheck(_) => InstanceKind::Sumcheck,
        }
    }

    pub fn iop(&self) -> Arc<dyn Iop> {
        match self {
            Instance::Gc(g) => Arc::new(GcPcp::new(g.clone())),
            Instance::Sumcheck(s) => Arc::new(SumcheckIop::new(s.clone())),
        }
    }

    /// Canonical big-endian encoding.
    ///
    /// Graph: `0x01 | u32 V | u32 E | E x (u32 u, u32 v)`.
    /// Sumcheck: `0x02 | u64 p | u32 n | u32 d | u64 claim | (d+1)^n x u64`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Instance::Gc(g) => {
                out.push(GC_TAG);
                out.extend((g.vertices() as u32).to_be_bytes());
                out.extend((g.edges().len() as u32).to_be_bytes());
                for &(u, v) in g.edges() {
                    out.extend((u as u32).to_be_bytes());
                    out.extend((v as u32).to_be_bytes());
                }
            }
            Instance::Sumcheck(s) => {
                out.push(SUMCHECK_TAG);
                out.extend(s.modulus().to_be_bytes());
                out.extend((s.variables() as u32).to_be_bytes());
                out.extend((s.degree() as u32).to_be_bytes());
                out.extend(s.claim().to_be_bytes());
                for &c in s.coeffs() {
                    out.extend(c.to_be_bytes());
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let inst = Self::read(&mut r)?;
        r.finish()?;
        Ok(inst)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let start = r.offset();
        let invalid = |e: IopError| DecodeError::Malformed { offset: start, reason: e.to_string() };
        match r.u8()? {
            GC_TAG => {
                let v = r.u32()? as usize;
                let e = r.u32()? as usize;
                r.expect_remaining(e.saturating_mul(8))?;
                let mut edges = Vec::with_capacity(e);
                for _ in 0..e {
                    edges.push((r.u32()? as usize, r.u32()? as usize));
                }
                let g = GraphColoringInstance::new(v, edges.iter().copied()).map_err(invalid)?;
                if g.edges() != edges.as_slice() {
                    return Err(DecodeError::Malformed { offset: start, reason: "edges are not in canonical order".into() });
                }
                Ok(Instance::Gc(g))
            }
            SUMCHECK_TAG => {
                let p = r.u64()?;
                let n = r.u32()? as usize;
                let d = r.u32()? as usize;
                let claim = r.u64()?;
                let size = (d + 1).checked_pow(n as u32).filter(|&s| s <= sumcheck::MAX_TABLE).ok_or_else(|| {
                    DecodeError::Malformed { offset: start, reason: "coefficient table too large".into() }
                })?;
                r.expect_remaining(size * 8)?;
                let coeffs = (0..size).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
                Ok(Instance::Sumcheck(SumcheckInstance::new(p, n, d, coeffs, claim).map_err(invalid)?))
            }
            tag => Err(DecodeError::UnknownTag { offset: start, tag }),
        }
    }
}

/// Prover that plays predetermined strings regardless of the challenges.
#[derive(Debug, Clone)]
pub struct StaticProver {
    spec: IopSpec,
    strings: Vec<Vec<Symbol>>,
    done: usize,
}

impl StaticProver {
    pub fn new(spec: IopSpec, strings: Vec<Vec<Symbol>>) -> Self {
        assert_eq!(strings.len(), spec.rounds());
        Self { spec, strings, done: 0 }
    }
}

impl IopProver for StaticProver {
    fn next_string(&mut self, prev: Option<&Challenge>) -> Result<ProofString, IopError> {
        check_round_input(&self.spec, self.done, prev)?;
        self.done += 1;
        Ok(ProofString { round: self.done, symbols: self.strings[self.done - 1].clone() })
    }

    fn rounds_done(&self) -> usize {
        self.done
    }

    fn box_clone(&self) -> Box<dyn IopProver> {
        Box::new(self.clone())
    }

    fn state_bytes(&self) -> Vec<u8> {
        (self.done as u64).to_be_bytes().to_vec()
    }
}
