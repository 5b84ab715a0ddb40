//! Ensemble states over setting-labeled branches: stage application,
//! preparation and partial measurements of the setting register, Born-rule
//! readout, reduced states and entropies.

mod bits;
mod ensemble;
mod entropy;
mod layout;
pub mod montecarlo;

use thiserror::Error;

pub use bits::{bits, BitString};
pub use ensemble::{
    apply_stage, measure_register, prepare_setting, project_setting_subset, record_outcome_pairs,
    Branch, BranchEnsemble, OutcomeDistribution, PureState,
};
pub(crate) use entropy::entropy_bits;
pub use entropy::{reduced_density, reduced_entropy, shannon_entropy, von_neumann_entropy};
pub use layout::{Register, RegisterLayout, RegisterSlot, MAX_TOTAL_WIDTH};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QStateError {
    #[error("invalid bit string: {0}")]
    InvalidBitString(String),
    #[error("invalid register layout: {0}")]
    InvalidLayout(String),
    #[error("unknown register {0}")]
    UnknownRegister(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("stage is not unitary: norm drifted by {drift:e}")]
    NonUnitary { drift: f64 },
    #[error("setting {0} is not present in the ensemble")]
    OutcomeNotPresent(BitString),
    #[error("projection has probability zero")]
    EmptyProjection,
    #[error("oracle has no table for setting {0}")]
    UnknownSetting(BitString),
    #[error("stage cannot act on register {register}: {reason}")]
    StageMismatch { register: String, reason: String },
}
