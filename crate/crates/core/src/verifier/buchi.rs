//! Tableau translation from LTL to (generalized) Büchi automata.
//!
//! The formula is brought into negation normal form and expanded on the fly
//! in the style of Gerth, Peled, Vardi and Wolper. Automaton states carry a
//! guard (the literals that must hold on the letter read in that state) and
//! belong to one acceptance set per Until subformula.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::ltl::{Lasso, LtlFormula};

use super::graph::{strongly_connected_components, ExplicitGraph};
use super::VerifyError;

/// Conjunction of proposition literals as two bitmasks over
/// [`BuchiAutomaton::props`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Guard {
    pub pos: u64,
    pub neg: u64,
}

impl Guard {
    pub fn admits(&self, letter: u64) -> bool {
        letter & self.pos == self.pos && letter & self.neg == 0
    }

    pub fn is_satisfiable(&self) -> bool {
        self.pos & self.neg == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuchiState {
    /// Literals the letter read in this state must satisfy.
    pub guard: Guard,
    pub successors: Vec<usize>,
    /// Bit `j` set when the state belongs to acceptance set `j`.
    pub acceptance: u64,
}

/// State-labeled Büchi automaton with generalized acceptance. A run reads
/// letter `w[i]` in state `q_i`; it is accepting when every acceptance set
/// is visited infinitely often (every infinite run when there are none).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuchiAutomaton {
    pub props: Vec<String>,
    pub states: Vec<BuchiState>,
    pub initial: Vec<usize>,
    pub num_sets: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct TableauLimits {
    /// Maximum number of distinct NNF subformulas.
    pub max_closure: usize,
    pub max_states: usize,
}

impl Default for TableauLimits {
    fn default() -> Self {
        TableauLimits { max_closure: 256, max_states: 200_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Nnf {
    True,
    False,
    Lit(u32, bool),
    And(u32, u32),
    Or(u32, u32),
    Next(u32),
    Until(u32, u32),
    Release(u32, u32),
}

struct Arena {
    nodes: Vec<Nnf>,
    index: HashMap<Nnf, u32>,
    props: Vec<String>,
    limit: usize,
}

impl Arena {
    fn intern(&mut self, n: Nnf) -> Result<u32, VerifyError> {
        if let Some(&id) = self.index.get(&n) {
            return Ok(id);
        }
        if self.nodes.len() >= self.limit {
            return Err(VerifyError::ClosureLimit(self.limit));
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(n);
        self.index.insert(n, id);
        Ok(id)
    }

    fn prop(&self, name: &str) -> u32 {
        self.props.iter().position(|p| p == name).expect("collected up front") as u32
    }

    /// NNF of `f` (of `!f` when `negate`).
    fn nnf(&mut self, f: &LtlFormula, negate: bool) -> Result<u32, VerifyError> {
        use LtlFormula as F;
        let node = match (f, negate) {
            (F::True, false) | (F::False, true) => Nnf::True,
            (F::True, true) | (F::False, false) => Nnf::False,
            (F::Atom(p), neg) => Nnf::Lit(self.prop(p), !neg),
            (F::Not(a), neg) => return self.nnf(a, !neg),
            (F::And(a, b), false) | (F::Or(a, b), true) => {
                Nnf::And(self.nnf(a, negate)?, self.nnf(b, negate)?)
            }
            (F::Or(a, b), false) | (F::And(a, b), true) => {
                Nnf::Or(self.nnf(a, negate)?, self.nnf(b, negate)?)
            }
            (F::Implies(a, b), false) => Nnf::Or(self.nnf(a, true)?, self.nnf(b, false)?),
            (F::Implies(a, b), true) => Nnf::And(self.nnf(a, false)?, self.nnf(b, true)?),
            (F::Next(a), neg) => Nnf::Next(self.nnf(a, neg)?),
            (F::Until(a, b), false) | (F::Release(a, b), true) => {
                Nnf::Until(self.nnf(a, negate)?, self.nnf(b, negate)?)
            }
            (F::Release(a, b), false) | (F::Until(a, b), true) => {
                Nnf::Release(self.nnf(a, negate)?, self.nnf(b, negate)?)
            }
            (F::Eventually(a), false) | (F::Globally(a), true) => {
                let t = self.intern(Nnf::True)?;
                Nnf::Until(t, self.nnf(a, negate)?)
            }
            (F::Globally(a), false) | (F::Eventually(a), true) => {
                let ff = self.intern(Nnf::False)?;
                Nnf::Release(ff, self.nnf(a, negate)?)
            }
        };
        self.intern(node)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Cover {
    pos: u64,
    neg: u64,
    next: Vec<u32>,
    acceptance: u64,
}

struct Partial {
    todo: Vec<u32>,
    old: BTreeSet<u32>,
    next: BTreeSet<u32>,
    pos: u64,
    neg: u64,
}

/// All consistent ways of discharging the obligations `start` in one step.
fn expand(arena: &Arena, untils: &[u32], start: &[u32]) -> Vec<Cover> {
    let mut done: Vec<Cover> = Vec::new();
    let mut work = vec![Partial {
        todo: start.to_vec(),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
        pos: 0,
        neg: 0,
    }];
    'outer: while let Some(mut p) = work.pop() {
        while let Some(f) = p.todo.pop() {
            if !p.old.insert(f) {
                continue;
            }
            match arena.nodes[f as usize] {
                Nnf::True => {}
                Nnf::False => continue 'outer,
                Nnf::Lit(k, positive) => {
                    if positive {
                        p.pos |= 1 << k;
                    } else {
                        p.neg |= 1 << k;
                    }
                    if p.pos & p.neg != 0 {
                        continue 'outer;
                    }
                }
                Nnf::And(a, b) => {
                    p.todo.push(a);
                    p.todo.push(b);
                }
                Nnf::Or(a, b) => {
                    let mut alt = Partial {
                        todo: p.todo.clone(),
                        old: p.old.clone(),
                        next: p.next.clone(),
                        pos: p.pos,
                        neg: p.neg,
                    };
                    alt.todo.push(b);
                    work.push(alt);
                    p.todo.push(a);
                }
                Nnf::Next(a) => {
                    p.next.insert(a);
                }
                Nnf::Until(a, b) => {
                    // either b now, or a now and the until again next step
                    let mut alt = Partial {
                        todo: p.todo.clone(),
                        old: p.old.clone(),
                        next: p.next.clone(),
                        pos: p.pos,
                        neg: p.neg,
                    };
                    alt.todo.push(a);
                    alt.next.insert(f);
                    work.push(alt);
                    p.todo.push(b);
                }
                Nnf::Release(a, b) => {
                    // b now and (a now, or the release again next step)
                    let mut alt = Partial {
                        todo: p.todo.clone(),
                        old: p.old.clone(),
                        next: p.next.clone(),
                        pos: p.pos,
                        neg: p.neg,
                    };
                    alt.todo.push(b);
                    alt.next.insert(f);
                    work.push(alt);
                    p.todo.push(a);
                    p.todo.push(b);
                }
            }
        }
        let mut acceptance = 0u64;
        for (j, &u) in untils.iter().enumerate() {
            let Nnf::Until(_, b) = arena.nodes[u as usize] else { unreachable!() };
            if !p.old.contains(&u) || p.old.contains(&b) {
                acceptance |= 1 << j;
            }
        }
        let cover = Cover { pos: p.pos, neg: p.neg, next: p.next.into_iter().collect(), acceptance };
        if !done.contains(&cover) {
            done.push(cover);
        }
    }
    done.sort_by(|x, y| (x.pos, x.neg, &x.next, x.acceptance).cmp(&(y.pos, y.neg, &y.next, y.acceptance)));
    done
}

/// Generalized Büchi automaton accepting exactly the models of `f`.
pub fn ltl_to_buchi(f: &LtlFormula) -> Result<BuchiAutomaton, VerifyError> {
    ltl_to_buchi_with(f, TableauLimits::default())
}

pub fn ltl_to_buchi_with(f: &LtlFormula, limits: TableauLimits) -> Result<BuchiAutomaton, VerifyError> {
    let props: Vec<String> = f.atoms().into_iter().collect();
    if props.len() > 64 {
        return Err(VerifyError::TooManyPropositions(props.len()));
    }
    let mut arena = Arena { nodes: vec![], index: HashMap::new(), props, limit: limits.max_closure };
    let root = arena.nnf(f, false)?;
    let untils: Vec<u32> = (0..arena.nodes.len() as u32)
        .filter(|&id| matches!(arena.nodes[id as usize], Nnf::Until(..)))
        .collect();
    if untils.len() > 64 {
        return Err(VerifyError::ClosureLimit(limits.max_closure));
    }

    let mut ids: HashMap<Cover, usize> = HashMap::new();
    let mut states: Vec<BuchiState> = Vec::new();
    let mut covers: Vec<Cover> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |cover: Cover,
                      states: &mut Vec<BuchiState>,
                      covers: &mut Vec<Cover>,
                      queue: &mut VecDeque<usize>|
     -> Result<usize, VerifyError> {
        if let Some(&id) = ids.get(&cover) {
            return Ok(id);
        }
        if states.len() >= limits.max_states {
            return Err(VerifyError::AutomatonLimit(limits.max_states));
        }
        let id = states.len();
        states.push(BuchiState {
            guard: Guard { pos: cover.pos, neg: cover.neg },
            successors: vec![],
            acceptance: cover.acceptance,
        });
        covers.push(cover.clone());
        ids.insert(cover, id);
        queue.push_back(id);
        Ok(id)
    };

    let mut initial = Vec::new();
    for c in expand(&arena, &untils, &[root]) {
        initial.push(intern(c, &mut states, &mut covers, &mut queue)?);
    }
    let mut expansions: HashMap<Vec<u32>, Vec<Cover>> = HashMap::new();
    while let Some(q) = queue.pop_front() {
        let next = covers[q].next.clone();
        let succ = expansions
            .entry(next.clone())
            .or_insert_with(|| expand(&arena, &untils, &next))
            .clone();
        let mut targets = Vec::with_capacity(succ.len());
        for c in succ {
            targets.push(intern(c, &mut states, &mut covers, &mut queue)?);
        }
        states[q].successors = targets;
    }
    Ok(BuchiAutomaton { props: arena.props, states, initial, num_sets: untils.len() })
}

impl BuchiAutomaton {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn accepting_sets(&self) -> Vec<Vec<usize>> {
        (0..self.num_sets)
            .map(|j| (0..self.states.len()).filter(|&q| self.states[q].acceptance >> j & 1 == 1).collect())
            .collect()
    }

    /// Edges `(from, guard, to)`; the guard is the one of the target state.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, Guard, usize)> + '_ {
        self.states
            .iter()
            .enumerate()
            .flat_map(move |(q, s)| s.successors.iter().map(move |&t| (q, self.states[t].guard, t)))
    }

    /// Counter construction: at most one acceptance set, same language.
    pub fn degeneralize(&self) -> BuchiAutomaton {
        let k = self.num_sets;
        if k <= 1 {
            let mut out = self.clone();
            if k == 0 {
                for s in &mut out.states {
                    s.acceptance = 1;
                }
                out.num_sets = 1;
            }
            return out;
        }
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut queue = VecDeque::new();
        let mut get = |q: usize, i: usize, pairs: &mut Vec<(usize, usize)>, queue: &mut VecDeque<usize>| {
            *ids.entry((q, i)).or_insert_with(|| {
                pairs.push((q, i));
                queue.push_back(pairs.len() - 1);
                pairs.len() - 1
            })
        };
        let initial: Vec<usize> = self.initial.iter().map(|&q| get(q, 0, &mut pairs, &mut queue)).collect();
        let mut succ: Vec<Vec<usize>> = Vec::new();
        while let Some(id) = queue.pop_front() {
            let (q, i) = pairs[id];
            let j = if self.states[q].acceptance >> i & 1 == 1 { (i + 1) % k } else { i };
            let targets: Vec<usize> =
                self.states[q].successors.iter().map(|&t| get(t, j, &mut pairs, &mut queue)).collect();
            if succ.len() <= id {
                succ.resize(id + 1, vec![]);
            }
            succ[id] = targets;
        }
        succ.resize(pairs.len(), vec![]);
        let states = pairs
            .iter()
            .zip(succ)
            .map(|(&(q, i), successors)| BuchiState {
                guard: self.states[q].guard,
                successors,
                acceptance: u64::from(i == 0 && self.states[q].acceptance & 1 == 1),
            })
            .collect();
        BuchiAutomaton { props: self.props.clone(), states, initial, num_sets: 1 }
    }

    /// Guards rewritten over `props`, which must contain every automaton
    /// proposition.
    pub fn guard_masks_over(&self, props: &[String]) -> Result<Vec<Guard>, VerifyError> {
        let map: Vec<usize> = self
            .props
            .iter()
            .map(|p| {
                props.iter().position(|q| q == p).ok_or_else(|| VerifyError::UnknownProposition(p.clone()))
            })
            .collect::<Result<_, _>>()?;
        let remap = |mask: u64| {
            map.iter().enumerate().fold(0u64, |acc, (k, &to)| acc | ((mask >> k & 1) << to))
        };
        Ok(self.states.iter().map(|s| Guard { pos: remap(s.guard.pos), neg: remap(s.guard.neg) }).collect())
    }

    /// Product of the automaton with the positions of a lasso.
    fn lasso_product(&self, w: &Lasso) -> Result<(ExplicitGraph, Vec<u64>), VerifyError> {
        let guards = self.guard_masks_over(&w.props)?;
        let n = w.len();
        let id = |q: usize, i: usize| (q * n + i) as u32;
        let mut adj = vec![Vec::new(); self.states.len() * n];
        for (q, s) in self.states.iter().enumerate() {
            for i in 0..n {
                if !guards[q].admits(w.letter(i)) {
                    continue;
                }
                let j = w.succ(i);
                adj[id(q, i) as usize] = s
                    .successors
                    .iter()
                    .filter(|&&t| guards[t].admits(w.letter(j)))
                    .map(|&t| id(t, j))
                    .collect();
            }
        }
        let initial: Vec<u32> =
            self.initial.iter().filter(|&&q| guards[q].admits(w.letter(0))).map(|&q| id(q, 0)).collect();
        let acceptance: Vec<u64> =
            (0..self.states.len() * n).map(|v| self.states[v / n].acceptance).collect();
        let accepting = acceptance.iter().map(|&a| a & 1 == 1).collect();
        Ok((ExplicitGraph::from_adjacency(initial, adj, accepting), acceptance))
    }

    /// Whether the word `prefix · loop^ω` is accepted, deciding generalized
    /// acceptance directly on the strongly connected components of the
    /// product with the lasso.
    pub fn accepts(&self, w: &Lasso) -> Result<bool, VerifyError> {
        let (graph, acceptance) = self.lasso_product(w)?;
        let all = if self.num_sets == 64 { u64::MAX } else { (1u64 << self.num_sets) - 1 };
        for comp in strongly_connected_components(&graph) {
            let nontrivial = comp.len() > 1 || graph.successors(comp[0]).contains(&comp[0]);
            if !nontrivial {
                continue;
            }
            let covered = comp.iter().fold(0u64, |acc, &v| acc | acceptance[v as usize]);
            if covered & all == all {
                return Ok(true);
            }
        }
        Ok(false)
    }
}
