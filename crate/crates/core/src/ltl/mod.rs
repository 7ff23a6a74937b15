//! Linear temporal logic: syntax, trace semantics, and specification
//! generation.

mod formula;
mod generate;
mod semantics;
mod syntax;

pub use formula::{AssumeGuaranteeSpec, LtlFormula};
pub use generate::{
    generate_pattern_spec, generate_spec, input_name, output_name, random_formula,
    shuffle_assumptions, split_spec, Pattern, PatternInstance, PatternSpec, PatternWeights,
    PropLiteral, SpecGenConfig,
};
pub use semantics::{eval_on_lasso, Lasso, MAX_PROPS};
pub use syntax::{parse_ltl, parse_ltl_in, render_ltl};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LtlError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown proposition `{name}`")]
    UnknownProposition { name: String, position: Option<usize> },
    #[error("proposition `{0}` is not valued by the word")]
    UnvaluedProposition(String),
    #[error("lasso loop must contain at least one letter")]
    EmptyLoop,
    #[error("letter sets bits outside the declared alphabet")]
    InvalidLetter,
    #[error("{0} propositions exceed the supported maximum")]
    TooManyPropositions(usize),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
}
