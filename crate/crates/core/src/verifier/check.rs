use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::aiger::{var_of, Circuit};
use crate::ltl::{eval_on_lasso, Lasso, LtlFormula};

use super::buchi::{ltl_to_buchi_with, Guard, TableauLimits};
use super::graph::{check_emptiness_ndfs, check_emptiness_scc, ExplicitGraph, GraphLasso};
use super::VerifyError;

/// Outcome of model checking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Satisfies,
    /// Input lasso (over the circuit's input names) on which the circuit
    /// violates the formula.
    Violates(Lasso),
    /// The budget ran out after exploring this many product states.
    ResourceLimit(usize),
}

impl Verdict {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, Verdict::Satisfies)
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violates(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EmptinessAlgorithm {
    #[default]
    NestedDfs,
    Scc,
}

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_states: usize,
    pub timeout: Duration,
    pub tableau: TableauLimits,
    pub algorithm: EmptinessAlgorithm,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 1_000_000,
            timeout: Duration::from_secs(30),
            tableau: TableauLimits::default(),
            algorithm: EmptinessAlgorithm::NestedDfs,
        }
    }
}

/// Inputs whose value can matter: read by some gate, latch, or output, or
/// named by the formula.
fn relevant_inputs(c: &Circuit, atoms: &[String]) -> Vec<usize> {
    let mut used = vec![false; c.max_var as usize + 1];
    for lit in c
        .outputs
        .iter()
        .copied()
        .chain(c.latches.iter().map(|l| l.next))
        .chain(c.and_gates.iter().flat_map(|g| [g.rhs0, g.rhs1]))
    {
        used[var_of(lit) as usize] = true;
    }
    (0..c.num_inputs())
        .filter(|&k| used[var_of(c.inputs[k]) as usize] || atoms.contains(&c.input_name(k)))
        .collect()
}

/// Explicit product of the circuit's reachable behaviors with a Büchi
/// automaton for `!f`. Nodes are (latch state, input valuation, automaton
/// state); the node's letter is the input valuation together with the
/// outputs it produces in that latch state.
pub struct Product {
    pub graph: ExplicitGraph,
    nodes: Vec<(u64, u64, u32)>,
    num_inputs: usize,
    input_names: Vec<String>,
}

impl Product {
    pub fn build(c: &Circuit, f: &LtlFormula, limits: &Limits) -> Result<Result<Product, usize>, VerifyError> {
        let start = Instant::now();
        let input_names = c.input_names();
        let output_names = c.output_names();
        let mut alphabet = input_names.clone();
        alphabet.extend(output_names.iter().cloned());
        for a in f.atoms() {
            if !alphabet.contains(&a) {
                return Err(VerifyError::UnknownProposition(a));
            }
        }
        if c.num_latches() > 64 || c.num_inputs() > 64 || c.num_outputs() > 64 || alphabet.len() > 64 {
            return Err(VerifyError::CircuitTooWide);
        }
        let negated = LtlFormula::not(f.clone());
        let automaton = match ltl_to_buchi_with(&negated, limits.tableau) {
            Ok(a) => a.degeneralize(),
            Err(VerifyError::ClosureLimit(_)) | Err(VerifyError::AutomatonLimit(_)) => return Ok(Err(0)),
            Err(e) => return Err(e),
        };
        let guards: Vec<Guard> = automaton.guard_masks_over(&alphabet)?;
        let atoms: Vec<String> = f.atoms().into_iter().collect();
        let relevant = relevant_inputs(c, &atoms);
        if relevant.len() > 20 {
            return Err(VerifyError::CircuitTooWide);
        }
        let valuations: Vec<u64> = (0..1u64 << relevant.len())
            .map(|m| relevant.iter().enumerate().fold(0u64, |acc, (j, &k)| acc | ((m >> j & 1) << k)))
            .collect();
        let n_in = c.num_inputs();

        let mut steps: HashMap<(u64, u64), (u64, u64)> = HashMap::new();
        let mut step = |s: u64, v: u64| *steps.entry((s, v)).or_insert_with(|| c.step_bits(s, v));
        let letter = |v: u64, out: u64| v | (out << n_in);

        let mut ids: HashMap<(u64, u64, u32), u32> = HashMap::new();
        let mut nodes: Vec<(u64, u64, u32)> = Vec::new();
        let mut initial = Vec::new();
        for &v in &valuations {
            let (out, _) = step(0, v);
            for &q in &automaton.initial {
                if guards[q].admits(letter(v, out)) {
                    let key = (0, v, q as u32);
                    if let std::collections::hash_map::Entry::Vacant(e) = ids.entry(key) {
                        e.insert(nodes.len() as u32);
                        initial.push(nodes.len() as u32);
                        nodes.push(key);
                    }
                }
            }
        }
        let mut graph = ExplicitGraph::builder(initial);
        let mut cursor = 0;
        let mut succ = Vec::new();
        while cursor < nodes.len() {
            if nodes.len() > limits.max_states {
                return Ok(Err(nodes.len()));
            }
            if cursor % 4096 == 0 && start.elapsed() > limits.timeout {
                return Ok(Err(nodes.len()));
            }
            let (s, v, q) = nodes[cursor];
            let (_, s2) = step(s, v);
            succ.clear();
            for &v2 in &valuations {
                let (out2, _) = step(s2, v2);
                let l = letter(v2, out2);
                for &q2 in &automaton.states[q as usize].successors {
                    if !guards[q2].admits(l) {
                        continue;
                    }
                    let key = (s2, v2, q2 as u32);
                    let id = *ids.entry(key).or_insert_with(|| {
                        nodes.push(key);
                        nodes.len() as u32 - 1
                    });
                    succ.push(id);
                }
            }
            graph.push_node(automaton.states[q as usize].acceptance & 1 == 1, succ.iter().copied());
            cursor += 1;
        }
        Ok(Ok(Product { graph, nodes, num_inputs: n_in, input_names }))
    }

    pub fn state_count(&self) -> usize {
        self.nodes.len()
    }

    /// Input lasso read along a product lasso.
    pub fn input_lasso(&self, l: &GraphLasso) -> Lasso {
        let mask = if self.num_inputs == 64 { u64::MAX } else { (1u64 << self.num_inputs) - 1 };
        let read = |ids: &[u32]| ids.iter().map(|&id| self.nodes[id as usize].1 & mask).collect();
        Lasso::new(self.input_names.clone(), read(&l.prefix), read(&l.cycle)).expect("nonempty cycle")
    }
}

/// Decides whether every input trace of `c` (from the all-FALSE latch
/// state) produces an input/output trace satisfying `f`.
pub fn model_check(c: &Circuit, f: &LtlFormula, limits: &Limits) -> Result<Verdict, VerifyError> {
    let product = match Product::build(c, f, limits)? {
        Ok(p) => p,
        Err(explored) => return Ok(Verdict::ResourceLimit(explored)),
    };
    let lasso = match limits.algorithm {
        EmptinessAlgorithm::NestedDfs => check_emptiness_ndfs(&product.graph),
        EmptinessAlgorithm::Scc => check_emptiness_scc(&product.graph),
    };
    Ok(match lasso {
        None => Verdict::Satisfies,
        Some(l) => Verdict::Violates(product.input_lasso(&l)),
    })
}

/// The full input/output trace produced by running `c` on the input lasso
/// `w`. The loop is unrolled until the latch state at loop entry repeats.
pub fn io_trace(c: &Circuit, w: &Lasso) -> Option<Lasso> {
    let names = c.input_names();
    let index: Vec<usize> = names.iter().map(|n| w.props.iter().position(|p| p == n)).collect::<Option<_>>()?;
    let n_in = c.num_inputs();
    if n_in + c.num_outputs() > 64 || c.num_latches() > 64 {
        return None;
    }
    let to_inputs = |letter: u64| index.iter().enumerate().fold(0u64, |acc, (k, &j)| acc | ((letter >> j & 1) << k));
    let mut state = 0u64;
    let run = |letter: u64, state: &mut u64| {
        let v = to_inputs(letter);
        let (out, next) = c.step_bits(*state, v);
        *state = next;
        v | (out << n_in)
    };
    let mut prefix: Vec<u64> = w.prefix.iter().map(|&l| run(l, &mut state)).collect();
    let mut entry: HashMap<u64, usize> = HashMap::new();
    let mut iterations: Vec<Vec<u64>> = Vec::new();
    let first_repeat = loop {
        if let Some(&j) = entry.get(&state) {
            break j;
        }
        entry.insert(state, iterations.len());
        iterations.push(w.cycle.iter().map(|&l| run(l, &mut state)).collect());
    };
    for it in &iterations[..first_repeat] {
        prefix.extend_from_slice(it);
    }
    let cycle: Vec<u64> = iterations[first_repeat..].concat();
    let mut props = names;
    props.extend(c.output_names());
    Lasso::new(props, prefix, cycle).ok()
}

/// Whether the input lasso `w` drives `c` into a trace violating `f`.
pub fn validate_witness(c: &Circuit, f: &LtlFormula, w: &Lasso) -> bool {
    match io_trace(c, w) {
        Some(trace) => eval_on_lasso(&LtlFormula::not(f.clone()), &trace).unwrap_or(false),
        None => false,
    }
}
