//! Pattern-based specification generation and the spec-level augmentations.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::formula::{AssumeGuaranteeSpec, LtlFormula};
use super::LtlError;

/// Entries of the declarative pattern library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    /// `G (t -> F b)`
    Response,
    /// `G (t -> b)`
    Invariance,
    /// `G (t -> X b)`
    NextResponse,
    /// `G !(b1 & b2)`
    MutualExclusion,
    /// `F b`
    Eventuality,
    /// assumption `G c`
    AssumeAlways,
    /// assumption `F c`
    AssumeEventually,
}

impl Pattern {
    pub const ALL: [Pattern; 7] = [
        Pattern::Response,
        Pattern::Invariance,
        Pattern::NextResponse,
        Pattern::MutualExclusion,
        Pattern::Eventuality,
        Pattern::AssumeAlways,
        Pattern::AssumeEventually,
    ];

    pub const GUARANTEES: [Pattern; 5] = [
        Pattern::Response,
        Pattern::Invariance,
        Pattern::NextResponse,
        Pattern::MutualExclusion,
        Pattern::Eventuality,
    ];

    pub const ASSUMPTIONS: [Pattern; 2] = [Pattern::AssumeAlways, Pattern::AssumeEventually];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Response => "response",
            Pattern::Invariance => "invariance",
            Pattern::NextResponse => "next-response",
            Pattern::MutualExclusion => "mutual-exclusion",
            Pattern::Eventuality => "eventuality",
            Pattern::AssumeAlways => "assume-always",
            Pattern::AssumeEventually => "assume-eventually",
        }
    }

    pub fn from_name(name: &str) -> Option<Pattern> {
        Pattern::ALL.into_iter().find(|p| p.name() == name)
    }

    fn uses_trigger(self) -> bool {
        matches!(self, Pattern::Response | Pattern::Invariance | Pattern::NextResponse)
    }

    fn output_count(self) -> usize {
        match self {
            Pattern::MutualExclusion => 2,
            Pattern::AssumeAlways | Pattern::AssumeEventually => 0,
            _ => 1,
        }
    }

    /// Formula depth of the instance with a trigger of the given depth.
    fn depth(self, trigger_depth: usize) -> usize {
        match self {
            Pattern::Response | Pattern::NextResponse => 2 + trigger_depth.max(2),
            Pattern::Invariance => 2 + trigger_depth.max(1),
            Pattern::MutualExclusion => 4,
            Pattern::Eventuality => 2,
            Pattern::AssumeAlways | Pattern::AssumeEventually => 1 + trigger_depth,
        }
    }
}

/// A literal over a named proposition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PropLiteral {
    pub name: String,
    pub positive: bool,
}

impl PropLiteral {
    pub fn formula(&self) -> LtlFormula {
        let a = LtlFormula::atom(self.name.clone());
        if self.positive {
            a
        } else {
            LtlFormula::not(a)
        }
    }

    fn depth(&self) -> usize {
        if self.positive {
            1
        } else {
            2
        }
    }
}

/// One instantiated pattern: the trigger is a conjunction of input literals
/// (for assumptions, the single assumed literal), the targets are outputs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternInstance {
    pub pattern: Pattern,
    pub trigger: Vec<PropLiteral>,
    pub targets: Vec<String>,
}

fn trigger_formula(lits: &[PropLiteral]) -> LtlFormula {
    LtlFormula::conjunction(lits.iter().map(PropLiteral::formula))
}

fn trigger_depth(lits: &[PropLiteral]) -> usize {
    match lits {
        [] => 1,
        [l] => l.depth(),
        ls => 1 + ls.iter().map(PropLiteral::depth).max().unwrap_or(1),
    }
}

impl PatternInstance {
    pub fn formula(&self) -> LtlFormula {
        use LtlFormula as F;
        let b = |k: usize| F::atom(self.targets[k].clone());
        let t = || trigger_formula(&self.trigger);
        match self.pattern {
            Pattern::Response => F::globally(F::implies(t(), F::eventually(b(0)))),
            Pattern::Invariance => F::globally(F::implies(t(), b(0))),
            Pattern::NextResponse => F::globally(F::implies(t(), F::next(b(0)))),
            Pattern::MutualExclusion => F::globally(F::not(F::and(b(0), b(1)))),
            Pattern::Eventuality => F::eventually(b(0)),
            Pattern::AssumeAlways => F::globally(t()),
            Pattern::AssumeEventually => F::eventually(t()),
        }
    }
}

/// A generated specification together with the pattern instances it was
/// assembled from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub assumptions: Vec<PatternInstance>,
    pub guarantees: Vec<PatternInstance>,
}

impl PatternSpec {
    pub fn spec(&self) -> AssumeGuaranteeSpec {
        AssumeGuaranteeSpec::new(
            self.assumptions.iter().map(PatternInstance::formula).collect(),
            self.guarantees.iter().map(PatternInstance::formula).collect(),
        )
    }

    pub fn pattern_names(&self) -> Vec<String> {
        self.assumptions
            .iter()
            .chain(&self.guarantees)
            .map(|p| p.pattern.name().to_string())
            .collect()
    }
}

/// Relative weights of the pattern library entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternWeights {
    pub response: f64,
    pub invariance: f64,
    pub next_response: f64,
    pub mutual_exclusion: f64,
    pub eventuality: f64,
    pub assume_always: f64,
    pub assume_eventually: f64,
}

impl Default for PatternWeights {
    fn default() -> Self {
        PatternWeights {
            response: 1.0,
            invariance: 1.0,
            next_response: 1.0,
            mutual_exclusion: 0.6,
            eventuality: 0.4,
            assume_always: 1.0,
            assume_eventually: 0.5,
        }
    }
}

impl PatternWeights {
    pub fn weight(&self, p: Pattern) -> f64 {
        match p {
            Pattern::Response => self.response,
            Pattern::Invariance => self.invariance,
            Pattern::NextResponse => self.next_response,
            Pattern::MutualExclusion => self.mutual_exclusion,
            Pattern::Eventuality => self.eventuality,
            Pattern::AssumeAlways => self.assume_always,
            Pattern::AssumeEventually => self.assume_eventually,
        }
    }
}

/// Parameters of [`generate_spec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecGenConfig {
    /// Input propositions are named `i0 .. i{inputs-1}`.
    pub inputs: usize,
    /// Output propositions are named `o0 .. o{outputs-1}`.
    pub outputs: usize,
    pub min_assumptions: usize,
    pub max_assumptions: usize,
    pub min_guarantees: usize,
    pub max_guarantees: usize,
    /// Upper bound on the depth of every assumption and guarantee formula.
    pub max_depth: usize,
    /// Probability that a trigger is a conjunction of two literals.
    pub compound_trigger: f64,
    /// Probability that a trigger or assumption literal is negated.
    pub negation: f64,
    pub weights: PatternWeights,
}

impl Default for SpecGenConfig {
    fn default() -> Self {
        SpecGenConfig {
            inputs: 4,
            outputs: 4,
            min_assumptions: 0,
            max_assumptions: 2,
            min_guarantees: 1,
            max_guarantees: 3,
            max_depth: 5,
            compound_trigger: 0.25,
            negation: 0.3,
            weights: PatternWeights::default(),
        }
    }
}

pub fn input_name(k: usize) -> String {
    format!("i{k}")
}

pub fn output_name(k: usize) -> String {
    format!("o{k}")
}

impl SpecGenConfig {
    pub fn input_names(&self) -> Vec<String> {
        (0..self.inputs).map(input_name).collect()
    }

    pub fn output_names(&self) -> Vec<String> {
        (0..self.outputs).map(output_name).collect()
    }

    pub fn validate(&self) -> Result<(), LtlError> {
        let bad = |m: &str| Err(LtlError::InvalidConfig(m.to_string()));
        if self.inputs == 0 || self.outputs == 0 {
            return bad("alphabet needs at least one input and one output");
        }
        if self.max_guarantees == 0 || self.min_guarantees == 0 {
            return bad("at least one guarantee is required");
        }
        if self.min_guarantees > self.max_guarantees || self.min_assumptions > self.max_assumptions
        {
            return bad("minimum count exceeds maximum count");
        }
        if self.max_guarantees > self.outputs {
            return bad("each guarantee needs its own output; raise `outputs`");
        }
        if self.inputs + self.outputs > 64 {
            return bad("at most 64 propositions are supported");
        }
        if !(0.0..=1.0).contains(&self.compound_trigger) || !(0.0..=1.0).contains(&self.negation)
        {
            return bad("probabilities must lie in [0, 1]");
        }
        let usable = |ps: &[Pattern]| {
            ps.iter().any(|&p| self.weights.weight(p) > 0.0 && p.depth(1) <= self.max_depth)
        };
        if !usable(&Pattern::GUARANTEES) {
            return bad("no guarantee pattern has positive weight within the depth bound");
        }
        if self.max_assumptions > 0 && !usable(&Pattern::ASSUMPTIONS) {
            return bad("no assumption pattern has positive weight within the depth bound");
        }
        if Pattern::ALL.iter().any(|&p| self.weights.weight(p) < 0.0) {
            return bad("pattern weights must be non-negative");
        }
        Ok(())
    }
}

fn random_literal<R: Rng + ?Sized>(rng: &mut R, names: &[String], negation: f64) -> PropLiteral {
    PropLiteral {
        name: names.choose(rng).expect("nonempty alphabet").clone(),
        positive: !rng.gen_bool(negation),
    }
}

fn random_trigger<R: Rng + ?Sized>(
    rng: &mut R,
    config: &SpecGenConfig,
    pattern: Pattern,
    inputs: &[String],
) -> Vec<PropLiteral> {
    let first = random_literal(rng, inputs, config.negation);
    if inputs.len() > 1 && rng.gen_bool(config.compound_trigger) {
        let mut second = random_literal(rng, inputs, config.negation);
        while second.name == first.name {
            second.name = inputs.choose(rng).expect("nonempty").clone();
        }
        let pair = vec![first.clone(), second];
        if pattern.depth(trigger_depth(&pair)) <= config.max_depth {
            return pair;
        }
    }
    if pattern.depth(first.depth()) > config.max_depth {
        return vec![PropLiteral { positive: true, ..first }];
    }
    vec![first]
}

/// Draws a specification from the pattern library, keeping the instances.
pub fn generate_pattern_spec<R: Rng + ?Sized>(
    config: &SpecGenConfig,
    rng: &mut R,
) -> Result<PatternSpec, LtlError> {
    config.validate()?;
    let inputs = config.input_names();
    let mut free_outputs = config.output_names();
    free_outputs.shuffle(rng);

    let n_assume = rng.gen_range(config.min_assumptions..=config.max_assumptions);
    let n_guarantee = rng.gen_range(config.min_guarantees..=config.max_guarantees);

    let mut assumptions = Vec::with_capacity(n_assume);
    let assume_pool: Vec<Pattern> = Pattern::ASSUMPTIONS
        .into_iter()
        .filter(|&p| config.weights.weight(p) > 0.0 && p.depth(1) <= config.max_depth)
        .collect();
    for _ in 0..n_assume {
        let w: Vec<f64> = assume_pool.iter().map(|&p| config.weights.weight(p)).collect();
        let pattern = assume_pool[WeightedIndex::new(&w).expect("validated").sample(rng)];
        let mut lit = random_literal(rng, &inputs, config.negation);
        if pattern.depth(lit.depth()) > config.max_depth {
            lit.positive = true;
        }
        assumptions.push(PatternInstance { pattern, trigger: vec![lit], targets: vec![] });
    }

    let mut guarantees = Vec::with_capacity(n_guarantee);
    for g in 0..n_guarantee {
        let remaining_after = n_guarantee - g - 1;
        let budget = free_outputs.len() - remaining_after;
        let pool: Vec<Pattern> = Pattern::GUARANTEES
            .into_iter()
            .filter(|&p| {
                config.weights.weight(p) > 0.0
                    && p.depth(1) <= config.max_depth
                    && p.output_count() <= budget
            })
            .collect();
        let w: Vec<f64> = pool.iter().map(|&p| config.weights.weight(p)).collect();
        let pattern = pool[WeightedIndex::new(&w).expect("validated").sample(rng)];
        let trigger = if pattern.uses_trigger() {
            random_trigger(rng, config, pattern, &inputs)
        } else {
            vec![]
        };
        let targets = free_outputs.split_off(free_outputs.len() - pattern.output_count());
        guarantees.push(PatternInstance { pattern, trigger, targets });
    }
    Ok(PatternSpec { assumptions, guarantees })
}

/// Draws an assume-guarantee specification from the pattern library.
pub fn generate_spec<R: Rng + ?Sized>(
    config: &SpecGenConfig,
    rng: &mut R,
) -> Result<AssumeGuaranteeSpec, LtlError> {
    Ok(generate_pattern_spec(config, rng)?.spec())
}

/// One specification per guarantee, each keeping the full assumption list.
pub fn split_spec(spec: &AssumeGuaranteeSpec) -> Vec<AssumeGuaranteeSpec> {
    spec.guarantees
        .iter()
        .map(|g| AssumeGuaranteeSpec::new(spec.assumptions.clone(), vec![g.clone()]))
        .collect()
}

/// Permutes the assumption list; guarantees are untouched.
pub fn shuffle_assumptions<R: Rng + ?Sized>(
    spec: &AssumeGuaranteeSpec,
    rng: &mut R,
) -> AssumeGuaranteeSpec {
    let mut assumptions = spec.assumptions.clone();
    assumptions.shuffle(rng);
    AssumeGuaranteeSpec::new(assumptions, spec.guarantees.clone())
}

/// Uniformly random formula of depth at most `max_depth` over `props`,
/// using every operator of the surface syntax.
pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, props: &[String], max_depth: usize) -> LtlFormula {
    use LtlFormula as F;
    if max_depth <= 1 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..10) {
            0 => F::True,
            1 => F::False,
            _ => F::atom(props.choose(rng).expect("nonempty alphabet").clone()),
        };
    }
    let d = max_depth - 1;
    match rng.gen_range(0..11) {
        0 => F::not(random_formula(rng, props, d)),
        1 => F::and(random_formula(rng, props, d), random_formula(rng, props, d)),
        2 => F::or(random_formula(rng, props, d), random_formula(rng, props, d)),
        3 => F::implies(random_formula(rng, props, d), random_formula(rng, props, d)),
        4 => F::next(random_formula(rng, props, d)),
        5 | 6 => F::until(random_formula(rng, props, d), random_formula(rng, props, d)),
        7 => F::release(random_formula(rng, props, d), random_formula(rng, props, d)),
        8 => F::globally(random_formula(rng, props, d)),
        _ => F::eventually(random_formula(rng, props, d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{parse_ltl, render_ltl};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    #[test]
    fn shape_contract() {
        let config = SpecGenConfig {
            min_assumptions: 1,
            max_assumptions: 1,
            min_guarantees: 1,
            max_guarantees: 1,
            ..SpecGenConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s = generate_spec(&config, &mut rng).unwrap();
            assert_eq!(s.assumptions.len(), 1);
            assert_eq!(s.guarantees.len(), 1);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let config = SpecGenConfig::default();
        let a = generate_spec(&config, &mut ChaCha8Rng::seed_from_u64(17)).unwrap();
        let b = generate_spec(&config, &mut ChaCha8Rng::seed_from_u64(17)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_pattern_appears_and_depth_is_bounded() {
        let config = SpecGenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut seen = BTreeSet::new();
        for _ in 0..1000 {
            let ps = generate_pattern_spec(&config, &mut rng).unwrap();
            for inst in ps.assumptions.iter().chain(&ps.guarantees) {
                seen.insert(inst.pattern);
                assert!(inst.formula().depth() <= config.max_depth, "{}", render_ltl(&inst.formula()));
            }
            let targets: Vec<_> = ps.guarantees.iter().flat_map(|g| g.targets.clone()).collect();
            let distinct: BTreeSet<_> = targets.iter().collect();
            assert_eq!(distinct.len(), targets.len(), "guarantees share an output");
        }
        assert_eq!(seen.len(), Pattern::ALL.len(), "{seen:?}");
    }

    #[test]
    fn tight_depth_bound_is_respected() {
        let config = SpecGenConfig { max_depth: 4, ..SpecGenConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let s = generate_spec(&config, &mut rng).unwrap();
            for f in s.assumptions.iter().chain(&s.guarantees) {
                assert!(f.depth() <= 4);
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for config in [
            SpecGenConfig { inputs: 0, ..SpecGenConfig::default() },
            SpecGenConfig { min_guarantees: 0, max_guarantees: 0, ..SpecGenConfig::default() },
            SpecGenConfig { outputs: 2, max_guarantees: 3, ..SpecGenConfig::default() },
        ] {
            assert!(matches!(generate_spec(&config, &mut rng), Err(LtlError::InvalidConfig(_))));
        }
    }

    #[test]
    fn split_and_shuffle() {
        let f = |s: &str| parse_ltl(s).unwrap();
        let spec = AssumeGuaranteeSpec::new(vec![f("G a1"), f("F a2")], vec![f("G g1"), f("F g2")]);
        let parts = split_spec(&spec);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0], AssumeGuaranteeSpec::new(spec.assumptions.clone(), vec![f("G g1")]));
        assert_eq!(parts[1], AssumeGuaranteeSpec::new(spec.assumptions.clone(), vec![f("F g2")]));

        let single = AssumeGuaranteeSpec::new(vec![], vec![f("g")]);
        assert_eq!(split_spec(&single), vec![single.clone()]);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut swapped = false;
        for _ in 0..20 {
            let s = shuffle_assumptions(&spec, &mut rng);
            assert_eq!(s.guarantees, spec.guarantees);
            swapped |= s.assumptions == vec![f("F a2"), f("G a1")];
            let mut a = s.assumptions.clone();
            a.sort();
            let mut b = spec.assumptions.clone();
            b.sort();
            assert_eq!(a, b);
        }
        assert!(swapped);
        assert_eq!(shuffle_assumptions(&single, &mut rng), single);
    }
}
