use std::collections::HashMap;

use super::circuit::{is_negated, var_of, Circuit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeLabel {
    Const,
    Input,
    Latch,
    And,
    Output,
}

impl NodeLabel {
    pub fn name(self) -> &'static str {
        match self {
            NodeLabel::Const => "const",
            NodeLabel::Input => "input",
            NodeLabel::Latch => "latch",
            NodeLabel::And => "and",
            NodeLabel::Output => "output",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Plain,
    Inverted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub polarity: Polarity,
}

/// Node- and edge-labeled directed graph view of a circuit.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LabeledGraph {
    pub labels: Vec<NodeLabel>,
    pub edges: Vec<Edge>,
}

impl LabeledGraph {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    /// Same graph with node `k` moved to position `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> LabeledGraph {
        let mut labels = vec![NodeLabel::Const; self.labels.len()];
        for (k, &l) in self.labels.iter().enumerate() {
            labels[perm[k]] = l;
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { from: perm[e.from], to: perm[e.to], polarity: e.polarity })
            .collect();
        LabeledGraph { labels, edges }
    }
}

/// One node per input, latch, and-gate, and output tap; one constant node
/// when a constant literal is referenced (or when the circuit is empty).
/// Edges run from operand to consumer and carry the literal's polarity.
pub fn to_labeled_graph(c: &Circuit) -> LabeledGraph {
    let mut labels = Vec::new();
    let mut node_of_var: HashMap<u32, usize> = HashMap::new();
    let uses_const = c
        .outputs
        .iter()
        .copied()
        .chain(c.latches.iter().map(|l| l.next))
        .chain(c.and_gates.iter().flat_map(|g| [g.rhs0, g.rhs1]))
        .any(|lit| var_of(lit) == 0);
    let empty = c.inputs.is_empty() && c.latches.is_empty() && c.and_gates.is_empty() && c.outputs.is_empty();
    if uses_const || empty {
        node_of_var.insert(0, labels.len());
        labels.push(NodeLabel::Const);
    }
    for &i in &c.inputs {
        node_of_var.insert(var_of(i), labels.len());
        labels.push(NodeLabel::Input);
    }
    for l in &c.latches {
        node_of_var.insert(var_of(l.lit), labels.len());
        labels.push(NodeLabel::Latch);
    }
    for g in &c.and_gates {
        node_of_var.insert(var_of(g.lhs), labels.len());
        labels.push(NodeLabel::And);
    }
    let polarity = |lit: u32| if is_negated(lit) { Polarity::Inverted } else { Polarity::Plain };
    let mut edges = Vec::new();
    let mut connect = |lit: u32, to: usize| {
        edges.push(Edge { from: node_of_var[&var_of(lit)], to, polarity: polarity(lit) });
    };
    for l in &c.latches {
        connect(l.next, node_of_var[&var_of(l.lit)]);
    }
    for g in &c.and_gates {
        let to = node_of_var[&var_of(g.lhs)];
        connect(g.rhs0, to);
        connect(g.rhs1, to);
    }
    for &o in &c.outputs {
        let to = labels.len();
        labels.push(NodeLabel::Output);
        connect(o, to);
    }
    LabeledGraph { labels, edges }
}
