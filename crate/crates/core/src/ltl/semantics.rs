//! Evaluation of formulas over ultimately periodic words.

use std::collections::{BTreeSet, HashMap};

use super::formula::LtlFormula;
use super::LtlError;

/// Maximum number of propositions a [`Lasso`] can value.
pub const MAX_PROPS: usize = 64;

/// An ultimately periodic word `prefix · cycle^ω`.
///
/// Each letter is a bitmask over `props`: bit `k` set means `props[k]` holds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lasso {
    pub props: Vec<String>,
    pub prefix: Vec<u64>,
    pub cycle: Vec<u64>,
}

impl Lasso {
    pub fn new(props: Vec<String>, prefix: Vec<u64>, cycle: Vec<u64>) -> Result<Self, LtlError> {
        if cycle.is_empty() {
            return Err(LtlError::EmptyLoop);
        }
        if props.len() > MAX_PROPS {
            return Err(LtlError::TooManyPropositions(props.len()));
        }
        let valid = if props.len() == 64 { u64::MAX } else { (1u64 << props.len()) - 1 };
        if prefix.iter().chain(cycle.iter()).any(|l| l & !valid != 0) {
            return Err(LtlError::InvalidLetter);
        }
        Ok(Lasso { props, prefix, cycle })
    }

    /// Builds a lasso from per-position sets of true proposition names.
    pub fn from_sets(
        props: &[&str],
        prefix: &[&[&str]],
        cycle: &[&[&str]],
    ) -> Result<Self, LtlError> {
        let names: Vec<String> = props.iter().map(|s| s.to_string()).collect();
        let encode = |letter: &&[&str]| -> Result<u64, LtlError> {
            letter.iter().try_fold(0u64, |acc, p| {
                let k = names
                    .iter()
                    .position(|n| n == p)
                    .ok_or_else(|| LtlError::UnvaluedProposition(p.to_string()))?;
                Ok(acc | (1 << k))
            })
        };
        let prefix = prefix.iter().map(encode).collect::<Result<Vec<_>, _>>()?;
        let cycle = cycle.iter().map(encode).collect::<Result<Vec<_>, _>>()?;
        Lasso::new(names, prefix, cycle)
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Letter at absolute (unbounded) position `i`.
    pub fn letter(&self, i: usize) -> u64 {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// Successor of a normalized position.
    pub fn succ(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.prefix.len()
        }
    }

    pub fn holds(&self, i: usize, prop: &str) -> Option<bool> {
        let k = self.props.iter().position(|p| p == prop)?;
        Some(self.letter(i) >> k & 1 == 1)
    }

    /// Names true at normalized position `i`.
    pub fn true_at(&self, i: usize) -> BTreeSet<&str> {
        let l = self.letter(i);
        self.props
            .iter()
            .enumerate()
            .filter(|(k, _)| l >> k & 1 == 1)
            .map(|(_, p)| p.as_str())
            .collect()
    }

    /// The same word with the cycle unrolled once into the prefix.
    pub fn unrolled(&self) -> Lasso {
        let mut prefix = self.prefix.clone();
        prefix.extend_from_slice(&self.cycle);
        Lasso { props: self.props.clone(), prefix, cycle: self.cycle.clone() }
    }
}

/// Decides `w ⊨ f`.
///
/// Every subformula gets a truth vector over the normalized positions of the
/// lasso (positions in the loop are reduced modulo the loop length). Until
/// and its derived forms search for a witness position within
/// `|prefix| + |loop| · |subformulas|` steps.
pub fn eval_on_lasso(f: &LtlFormula, w: &Lasso) -> Result<bool, LtlError> {
    let mut memo: HashMap<&LtlFormula, Vec<bool>> = HashMap::new();
    let horizon = w.prefix.len() + w.cycle.len() * f.size().max(1);
    let v = truth_vector(f, w, horizon, &mut memo)?;
    Ok(v[0])
}

fn truth_vector<'f>(
    f: &'f LtlFormula,
    w: &Lasso,
    horizon: usize,
    memo: &mut HashMap<&'f LtlFormula, Vec<bool>>,
) -> Result<Vec<bool>, LtlError> {
    use LtlFormula::*;
    if let Some(v) = memo.get(f) {
        return Ok(v.clone());
    }
    let n = w.len();
    let v = match f {
        True => vec![true; n],
        False => vec![false; n],
        Atom(p) => {
            let k = w
                .props
                .iter()
                .position(|q| q == p)
                .ok_or_else(|| LtlError::UnvaluedProposition(p.clone()))?;
            (0..n).map(|i| w.letter(i) >> k & 1 == 1).collect()
        }
        Not(a) => truth_vector(a, w, horizon, memo)?.into_iter().map(|x| !x).collect(),
        And(a, b) => {
            let (a, b) = (truth_vector(a, w, horizon, memo)?, truth_vector(b, w, horizon, memo)?);
            a.iter().zip(&b).map(|(x, y)| *x && *y).collect()
        }
        Or(a, b) => {
            let (a, b) = (truth_vector(a, w, horizon, memo)?, truth_vector(b, w, horizon, memo)?);
            a.iter().zip(&b).map(|(x, y)| *x || *y).collect()
        }
        Implies(a, b) => {
            let (a, b) = (truth_vector(a, w, horizon, memo)?, truth_vector(b, w, horizon, memo)?);
            a.iter().zip(&b).map(|(x, y)| !*x || *y).collect()
        }
        Next(a) => {
            let a = truth_vector(a, w, horizon, memo)?;
            (0..n).map(|i| a[w.succ(i)]).collect()
        }
        Until(a, b) => {
            let (a, b) = (truth_vector(a, w, horizon, memo)?, truth_vector(b, w, horizon, memo)?);
            (0..n).map(|i| until_at(w, i, horizon, &a, &b)).collect()
        }
        Release(a, b) => {
            // a R b == !(!a U !b)
            let (a, b) = (truth_vector(a, w, horizon, memo)?, truth_vector(b, w, horizon, memo)?);
            let na: Vec<bool> = a.iter().map(|x| !x).collect();
            let nb: Vec<bool> = b.iter().map(|x| !x).collect();
            (0..n).map(|i| !until_at(w, i, horizon, &na, &nb)).collect()
        }
        Eventually(a) => {
            let a = truth_vector(a, w, horizon, memo)?;
            let t = vec![true; n];
            (0..n).map(|i| until_at(w, i, horizon, &t, &a)).collect()
        }
        Globally(a) => {
            let a = truth_vector(a, w, horizon, memo)?;
            let t = vec![true; n];
            let na: Vec<bool> = a.iter().map(|x| !x).collect();
            (0..n).map(|i| !until_at(w, i, horizon, &t, &na)).collect()
        }
    };
    memo.insert(f, v.clone());
    Ok(v)
}

fn until_at(w: &Lasso, start: usize, horizon: usize, a: &[bool], b: &[bool]) -> bool {
    let mut i = start;
    for _ in 0..=horizon {
        if b[i] {
            return true;
        }
        if !a[i] {
            return false;
        }
        i = w.succ(i);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_ltl;

    fn eval(text: &str, w: &Lasso) -> bool {
        eval_on_lasso(&parse_ltl(text).unwrap(), w).unwrap()
    }

    #[test]
    fn basic_cases() {
        let w = Lasso::from_sets(&["p", "q"], &[&["p"]], &[&["q"]]).unwrap();
        assert!(eval("true", &w));
        assert!(eval("p U q", &w));
        assert!(eval("X q", &w));
        assert!(eval("F G q", &w));
        assert!(!eval("G p", &w));
        assert!(eval("G F q", &w));
        assert!(eval("q R (p | q)", &w));
    }

    #[test]
    fn globally_everywhere() {
        let w = Lasso::from_sets(&["p"], &[&["p"], &["p"]], &[&["p"]]).unwrap();
        assert!(eval("G p", &w));
        let w = Lasso::from_sets(&["p"], &[], &[&["p"], &[]]).unwrap();
        assert!(!eval("G p", &w));
        assert!(eval("G F p", &w));
        assert!(eval("G F !p", &w));
    }

    #[test]
    fn until_never_fulfilled_in_loop() {
        let w = Lasso::from_sets(&["p", "q"], &[], &[&["p"]]).unwrap();
        assert!(!eval("p U q", &w));
        assert!(eval("p R q | G p", &w));
    }

    #[test]
    fn unvalued_proposition_is_an_error() {
        let w = Lasso::from_sets(&["p"], &[], &[&["p"]]).unwrap();
        assert!(matches!(
            eval_on_lasso(&parse_ltl("p & r").unwrap(), &w),
            Err(LtlError::UnvaluedProposition(ref n)) if n == "r"
        ));
    }

    #[test]
    fn loop_must_be_nonempty() {
        assert!(matches!(Lasso::new(vec!["p".into()], vec![1], vec![]), Err(LtlError::EmptyLoop)));
        assert!(matches!(Lasso::new(vec!["p".into()], vec![], vec![2]), Err(LtlError::InvalidLetter)));
    }
}
