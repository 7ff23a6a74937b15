//! ASCII AIGER (`aag`) circuits: parsing, rendering, simulation, padding,
//! construction, and a labeled-graph view.

mod build;
mod circuit;
mod graph;
mod sim;

pub use build::{pad_wires, AigBuilder, FALSE, TRUE};
pub use circuit::{
    is_negated, parse_aag, render_aag, var_of, AndGate, Circuit, Latch, Symbol, SymbolKind, VarDef,
};
pub use graph::{to_labeled_graph, Edge, LabeledGraph, NodeLabel, Polarity};
pub use sim::{simulate_step, LatchState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AigerError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("header announces {expected} definition lines but only {found} are present")]
    CountMismatch { expected: usize, found: usize },
    #[error("literal {0} is odd and cannot be defined")]
    OddDefinition(u32),
    #[error("literal {0} is a constant and cannot be defined")]
    ConstantDefinition(u32),
    #[error("variable of literal {0} is defined more than once")]
    Redefinition(u32),
    #[error("literal {0} refers to an undefined variable")]
    Undefined(u32),
    #[error("literal {lit} exceeds the maximum variable index {max_var}")]
    LiteralOutOfRange { lit: u32, max_var: u32 },
    #[error("combinational cycle through gate {0}")]
    CombinationalCycle(u32),
    #[error("bad symbol table entry: {0}")]
    Symbol(String),
    #[error("expected {expected} values, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("padding targets below current widths (inputs {inputs:?}, outputs {outputs:?})")]
    PadBelowCurrent { inputs: (usize, usize), outputs: (usize, usize) },
}
