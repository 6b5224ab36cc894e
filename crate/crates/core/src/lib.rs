//! Frugal lexicographic maximin fair allocation with fractional demands.
//!
//! Agents with endowments compete for divisible objects with supplies; each
//! agent demands a bounded amount of each object. [`lexicographic_allocation`]
//! computes the weighted leximin frugal allocation exactly through a sequence
//! of parametric max-flow problems, and the remaining modules audit it.
//!
//! Everything is generic over [`Scalar`]; use [`Rational`] for exact results.

pub mod families;
pub mod harness;
pub mod instance;
pub mod leximin;
pub mod maxflow;
pub mod oracle;
pub mod properties;
pub mod scalar;

pub use harness::{
    check_pm, check_rm, check_substructure, search_manipulation, HarnessError, Lmmf,
    ManipulationReport, ManipulationSearch, Mechanism, MmfSi, PerturbationKind, PerturbationSpec,
};
pub use instance::{
    Allocation, Instance, InstanceError, UtilityEntry, UtilityVector, ValidationReport, Violation,
};
pub use leximin::{
    breakpoints, lexicographic_allocation, structure_check, BreakpointProfile,
    LexicographicAllocation, SolveError, StructureViolation,
};
pub use maxflow::{max_flow, min_cut, source_heavy_min_cut, CutResult, Flow, FlowError, FlowNetwork};
pub use oracle::{oracle_breakpoints, oracle_mmf_si, OracleError};
pub use properties::{PropertyError, PropertyReport, Witness};
pub use scalar::Scalar;

pub use num_rational::Rational64;

/// Arbitrary-precision rational, the default exact scalar.
pub type Rational = num_rational::BigRational;
pub type RationalInstance = Instance<Rational>;
pub type RationalAllocation = Allocation<Rational>;
pub type RationalProfile = BreakpointProfile<Rational>;
pub type FloatInstance = Instance<f64>;
pub type FloatAllocation = Allocation<f64>;
