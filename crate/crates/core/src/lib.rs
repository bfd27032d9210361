//! Unitary design of quantum channels from constrained environment resources.
//!
//! The crate synthesizes explicit joint unitaries `W` on environment ⊗ system
//! such that tracing out the environment after `W (ρ_E ⊗ ρ) W†` reproduces a
//! target CPTP map, exactly or within a certified total-variation error. Every
//! construction comes with an independent brute-force verification path.
//!
//! Layout conventions used throughout:
//!
//! - Composite spaces list environment-like factors first and the system last,
//!   so a joint unitary appears as a block matrix whose `d_S × d_S` blocks are
//!   indexed by environment basis states.
//! - Choi matrices use the composite index `i·d + j` for `|i⟩_out ⊗ |j⟩_ref` and
//!   the normalized maximally entangled state, so `Tr C = 1`.
//!
//! Runnable examples for each capability live in `examples/`; the `qdf` binary
//! exposes the same functionality over JSON files.

pub mod average;
pub mod channel;
pub mod cli;
pub mod design;
pub mod dilation;
pub mod distance;
pub mod error;
pub mod io;
pub mod majorization;
pub mod operators;
pub mod protocols;
pub mod random;
pub mod spectral;
pub mod tolerance;
pub mod transfer;

pub use channel::{Channel, ChoiMatrix, ExtremalityVerdict, KrausSet};
pub use dilation::{DilationReport, Initialization, Method, SubsystemDecomposition};
pub use error::{Error, Result};
pub use operators::{
    ComplexMatrix, ComplexVector, CompositeSpace, DensityOperator, Isometry, UnitaryOperator, C64,
};
