//! Soundness and knowledge bounds of the compiled argument.
//!
//! ```text
//! eps_ARG   = eps_IOP   + k * (eps_VC + l_max * eps_VCCollapse) + eps
//! kappa_ARG = kappa_IOP + k * (eps_VC + l_max * eps_VCCollapse) + eps
//! ```

use serde::{Deserialize, Serialize};

use super::ExtractionError;
use crate::iop::IopSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub eps_iop: f64,
    pub kappa_iop: f64,
    pub eps_vc: f64,
    pub eps_vc_collapse: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub soundness: f64,
    pub knowledge: f64,
    /// `k * (eps_VC + l_max * eps_VCCollapse)`.
    pub commitment_term: f64,
    pub k: usize,
    pub l_max: usize,
}

pub fn theorem_bounds(spec: &IopSpec, inputs: BoundInputs) -> Result<Bounds, ExtractionError> {
    bounds_for(spec.rounds(), spec.l_max(), inputs)
}

pub fn bounds_for(k: usize, l_max: usize, inputs: BoundInputs) -> Result<Bounds, ExtractionError> {
    let BoundInputs { eps_iop, kappa_iop, eps_vc, eps_vc_collapse, epsilon } = inputs;
    for (name, v) in [
        ("eps_IOP", eps_iop),
        ("kappa_IOP", kappa_iop),
        ("eps_VC", eps_vc),
        ("eps_VCCollapse", eps_vc_collapse),
        ("epsilon", epsilon),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(ExtractionError::OutOfRange(format!("{name} = {v} is not in [0, 1]")));
        }
    }
    let commitment_term = k as f64 * (eps_vc + l_max as f64 * eps_vc_collapse);
    Ok(Bounds {
        soundness: eps_iop + commitment_term + epsilon,
        knowledge: kappa_iop + commitment_term + epsilon,
        commitment_term,
        k,
        l_max,
    })
}
