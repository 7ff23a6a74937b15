use std::collections::BTreeSet;
use std::fmt;

/// Abstract syntax of a linear temporal logic formula over named propositions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LtlFormula {
    True,
    False,
    Atom(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
    Release(Box<LtlFormula>, Box<LtlFormula>),
    Globally(Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
}

use LtlFormula::*;

impl LtlFormula {
    pub fn atom(name: impl Into<String>) -> Self {
        Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: LtlFormula) -> Self {
        Not(Box::new(f))
    }

    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: LtlFormula, b: LtlFormula) -> Self {
        Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: LtlFormula) -> Self {
        Next(Box::new(f))
    }

    pub fn until(a: LtlFormula, b: LtlFormula) -> Self {
        Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: LtlFormula, b: LtlFormula) -> Self {
        Release(Box::new(a), Box::new(b))
    }

    pub fn globally(f: LtlFormula) -> Self {
        Globally(Box::new(f))
    }

    pub fn eventually(f: LtlFormula) -> Self {
        Eventually(Box::new(f))
    }

    /// Left-to-right conjunction of `parts`; `True` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = LtlFormula>) -> Self {
        let mut iter = parts.into_iter();
        match iter.next() {
            None => True,
            Some(first) => iter.fold(first, LtlFormula::and),
        }
    }

    pub fn children(&self) -> Vec<&LtlFormula> {
        match self {
            True | False | Atom(_) => vec![],
            Not(a) | Next(a) | Globally(a) | Eventually(a) => vec![a],
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => vec![a, b],
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().into_iter().map(LtlFormula::depth).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(LtlFormula::size).sum::<usize>()
    }

    /// Proposition names occurring in the formula, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        if let Atom(p) = self {
            out.insert(p.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    /// Rewrites derived operators into the core grammar
    /// {Atom, True, False, Not, And, Next, Until}.
    pub fn desugar(&self) -> LtlFormula {
        match self {
            True => True,
            False => False,
            Atom(p) => Atom(p.clone()),
            Not(a) => LtlFormula::not(a.desugar()),
            And(a, b) => LtlFormula::and(a.desugar(), b.desugar()),
            Or(a, b) => LtlFormula::not(LtlFormula::and(
                LtlFormula::not(a.desugar()),
                LtlFormula::not(b.desugar()),
            )),
            Implies(a, b) => {
                LtlFormula::not(LtlFormula::and(a.desugar(), LtlFormula::not(b.desugar())))
            }
            Next(a) => LtlFormula::next(a.desugar()),
            Until(a, b) => LtlFormula::until(a.desugar(), b.desugar()),
            Release(a, b) => LtlFormula::not(LtlFormula::until(
                LtlFormula::not(a.desugar()),
                LtlFormula::not(b.desugar()),
            )),
            // false R a == !(true U !a)
            Globally(a) => LtlFormula::not(LtlFormula::until(True, LtlFormula::not(a.desugar()))),
            Eventually(a) => LtlFormula::until(True, a.desugar()),
        }
    }

    pub fn is_core(&self) -> bool {
        matches!(self, True | False | Atom(_) | Not(_) | And(..) | Next(_) | Until(..))
            && self.children().into_iter().all(LtlFormula::is_core)
    }
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::render_ltl(self))
    }
}

/// A specification in assume-guarantee form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AssumeGuaranteeSpec {
    pub assumptions: Vec<LtlFormula>,
    pub guarantees: Vec<LtlFormula>,
}

impl AssumeGuaranteeSpec {
    pub fn new(assumptions: Vec<LtlFormula>, guarantees: Vec<LtlFormula>) -> Self {
        debug_assert!(!guarantees.is_empty(), "a specification needs a guarantee");
        AssumeGuaranteeSpec { assumptions, guarantees }
    }

    /// `(a1 & a2 & ...) -> (g1 & g2 & ...)`, or just the guarantee
    /// conjunction when there are no assumptions.
    pub fn flatten(&self) -> LtlFormula {
        let guarantees = LtlFormula::conjunction(self.guarantees.iter().cloned());
        if self.assumptions.is_empty() {
            guarantees
        } else {
            LtlFormula::implies(
                LtlFormula::conjunction(self.assumptions.iter().cloned()),
                guarantees,
            )
        }
    }

    pub fn flatten_text(&self) -> String {
        super::render_ltl(&self.flatten())
    }
}
