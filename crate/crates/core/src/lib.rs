//! Formal-methods core: LTL, AIGER circuits, an explicit-state LTL model
//! checker, and generation of verified circuit/specification pairs.

pub mod aiger;
pub mod datagen;
pub mod ltl;
pub mod verifier;

pub use aiger::Circuit;
pub use ltl::{AssumeGuaranteeSpec, Lasso, LtlFormula};
pub use verifier::Verdict;
