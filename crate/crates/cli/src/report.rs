//! Serialized run summary. Field order is the output key order.

use pinchlab::pinching::Constant;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub t: f64,
    pub sqrt_f: f64,
    pub phi: f64,
    pub bound_rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinchingSection {
    pub applied: bool,
    pub skipped_reason: Option<String>,
    pub max_f0: Option<f64>,
    /// `max √f / Φ` over the run.
    pub worst_ratio: Option<f64>,
    /// Samples within the maximum-principle band of `Φ`.
    pub flagged: usize,
    pub signature_failures: Vec<f64>,
    pub phi_clamped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorRecord {
    pub t: f64,
    pub k: f64,
    pub normalized_rm: f64,
    pub e_over_wmax: f64,
    pub r_over_wmax: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationSection {
    pub anchors: Vec<AnchorRecord>,
    pub skipped: usize,
    pub trends_to_zero: bool,
}

/// Initial-data PIC check in dimension 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicSection {
    pub point: usize,
    pub isotropic_min: f64,
    pub weitzenbock_min: f64,
    pub samples: usize,
    pub signs_agree: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub name: String,
    pub h: f64,
    pub residual: f64,
    pub residual_half_step: f64,
    /// `log2` of the residual ratio; absent when either residual vanishes.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSection {
    pub gamma: f64,
    pub c1: Constant,
    pub big_c1: Constant,
    pub c2: Constant,
    pub big_c2: Constant,
    pub c3: Constant,
    pub c4: Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub name: String,
    pub seed: u64,
    pub geometry: String,
    pub dim: usize,
    pub status: String,
    pub t_final: f64,
    pub accepted_steps: usize,
    pub stored_states: usize,
    pub max_steps_hit: bool,
    pub t_est: Option<f64>,
    pub singularity: String,
    pub sup_ratio: Option<f64>,
    pub ratio_spread: Option<f64>,
    pub r_blown_up: bool,
    pub w_over_r_blown_up: bool,
    pub pinching: PinchingSection,
    pub violations: usize,
    pub violation_list: Vec<ViolationRecord>,
    pub dilation: Option<DilationSection>,
    pub pic: Option<PicSection>,
    pub identities: Vec<IdentityResidual>,
    pub constants: ConstantsSection,
    pub warnings: Vec<String>,
    pub invariant_failures: Vec<String>,
}

impl RunReport {
    pub fn ok(&self, strict: bool) -> bool {
        self.violations == 0 && self.invariant_failures.is_empty() && !(strict && !self.warnings.is_empty())
    }
}

/// One line of the batch index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub name: String,
    pub config: String,
    pub csv: Option<String>,
    pub summary: Option<String>,
    pub status: Option<String>,
    pub singularity: Option<String>,
    pub violations: Option<usize>,
    pub invariant_failures: Option<usize>,
    pub warnings: Option<usize>,
    pub error: Option<String>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchIndex {
    pub format_version: u32,
    pub strict: bool,
    pub scenarios: Vec<IndexEntry>,
    pub all_ok: bool,
}
