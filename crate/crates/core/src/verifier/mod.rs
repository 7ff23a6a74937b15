//! Explicit-state LTL model checking of AIGER circuits.
//!
//! `model_check` translates the negated formula into a Büchi automaton,
//! builds the product with the circuit's reachable latch states, and looks
//! for an accepting lasso. Both a nested depth-first search and an SCC-based
//! check are available over the same product graph.

mod buchi;
mod check;
mod graph;

pub use buchi::{ltl_to_buchi, ltl_to_buchi_with, BuchiAutomaton, BuchiState, Guard, TableauLimits};
pub use check::{io_trace, model_check, validate_witness, EmptinessAlgorithm, Limits, Product, Verdict};
pub use graph::{
    check_emptiness_ndfs, check_emptiness_scc, strongly_connected_components, ExplicitGraph, GraphLasso,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("formula closure exceeds {0} subformulas")]
    ClosureLimit(usize),
    #[error("automaton exceeds {0} states")]
    AutomatonLimit(usize),
    #[error("{0} propositions exceed the supported maximum")]
    TooManyPropositions(usize),
    #[error("circuit has too many wires or latches for explicit-state checking")]
    CircuitTooWide,
}
