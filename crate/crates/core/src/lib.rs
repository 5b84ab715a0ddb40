//! Extended-representation simulator for quantum oracle algorithms.
//!
//! The problem setter's register `B` is kept as a classical label on each
//! branch of a [`qstate::BranchEnsemble`], so the random-phase preparation of
//! the setting becomes an ordinary weighted mixture. On top of that sit the
//! built-in Grover, Deutsch–Jozsa and single-query Simon circuits, the
//! advanced-knowledge engine (Occam partial-measurement pairs, entropy
//! reductions and decision-tree query counts) and a sum-over-histories
//! enumerator.

pub mod akrule;
pub mod circuits;
pub mod cli;
pub mod histories;
pub mod oracle;
pub mod qstate;

pub use num_complex::Complex64;

/// Absolute tolerance used for amplitude, probability and entropy comparisons.
pub const TOLERANCE: f64 = 1e-9;

/// Amplitudes and eigenvalues below this magnitude are treated as zero.
pub const ZERO_FLOOR: f64 = 1e-12;
