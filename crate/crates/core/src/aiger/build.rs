use std::collections::HashMap;

use super::circuit::{is_negated, var_of, AndGate, Circuit, Latch, VarDef};
use super::AigerError;

pub const FALSE: u32 = 0;
pub const TRUE: u32 = 1;

#[derive(Clone, Copy, Debug)]
enum Node {
    Latch(usize),
    Gate(u32, u32),
}

/// Incremental construction of a circuit with structural hashing and
/// constant folding. Literals handed out by the builder use a provisional
/// numbering; [`AigBuilder::finish`] renumbers into canonical layout
/// (inputs, then latches, then gates in creation order).
#[derive(Clone, Debug)]
pub struct AigBuilder {
    num_inputs: usize,
    nodes: Vec<Node>,
    latch_next: Vec<Option<u32>>,
    outputs: Vec<u32>,
    strash: HashMap<(u32, u32), u32>,
}

impl AigBuilder {
    pub fn new(num_inputs: usize) -> Self {
        AigBuilder {
            num_inputs,
            nodes: Vec::new(),
            latch_next: Vec::new(),
            outputs: Vec::new(),
            strash: HashMap::new(),
        }
    }

    fn fresh(&mut self, node: Node) -> u32 {
        self.nodes.push(node);
        2 * (self.num_inputs + self.nodes.len()) as u32
    }

    pub fn input(&self, k: usize) -> u32 {
        assert!(k < self.num_inputs, "input {k} out of range");
        2 * (k as u32 + 1)
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    /// A new latch; its next-state literal must be set before `finish`.
    pub fn latch(&mut self) -> (u32, usize) {
        let id = self.latch_next.len();
        self.latch_next.push(None);
        (self.fresh(Node::Latch(id)), id)
    }

    pub fn set_next(&mut self, latch: usize, next: u32) {
        self.latch_next[latch] = Some(next);
    }

    /// Latch whose output is `next` delayed by one step.
    pub fn delay(&mut self, next: u32) -> u32 {
        let (lit, id) = self.latch();
        self.set_next(id, next);
        lit
    }

    pub fn and(&mut self, a: u32, b: u32) -> u32 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == FALSE || a == b ^ 1 {
            return FALSE;
        }
        if a == TRUE || a == b {
            return b;
        }
        if let Some(&lit) = self.strash.get(&(a, b)) {
            return lit;
        }
        let lit = self.fresh(Node::Gate(a, b));
        self.strash.insert((a, b), lit);
        lit
    }

    pub fn or(&mut self, a: u32, b: u32) -> u32 {
        self.and(a ^ 1, b ^ 1) ^ 1
    }

    pub fn output(&mut self, lit: u32) {
        self.outputs.push(lit);
    }

    pub fn finish(self) -> Result<Circuit, AigerError> {
        let n_in = self.num_inputs as u32;
        let n_latch = self.latch_next.len() as u32;
        let mut map = vec![0u32; 1 + self.num_inputs + self.nodes.len()];
        for k in 0..=n_in {
            map[k as usize] = k;
        }
        let mut next_gate = n_in + n_latch + 1;
        for (k, node) in self.nodes.iter().enumerate() {
            let var = self.num_inputs + 1 + k;
            map[var] = match node {
                Node::Latch(id) => n_in + 1 + *id as u32,
                Node::Gate(..) => {
                    next_gate += 1;
                    next_gate - 1
                }
            };
        }
        let tr = |lit: u32| 2 * map[var_of(lit) as usize] + (lit & 1);

        let inputs = (1..=n_in).map(|v| 2 * v).collect();
        let latches = self
            .latch_next
            .iter()
            .enumerate()
            .map(|(id, next)| {
                let next = next.ok_or(AigerError::Undefined(2 * (n_in + 1 + id as u32)))?;
                Ok(Latch { lit: 2 * (n_in + 1 + id as u32), next: tr(next) })
            })
            .collect::<Result<Vec<_>, AigerError>>()?;
        let mut gates = Vec::new();
        for (k, node) in self.nodes.iter().enumerate() {
            if let Node::Gate(a, b) = *node {
                let lhs = 2 * map[self.num_inputs + 1 + k];
                let (x, y) = (tr(a), tr(b));
                let (x, y) = if x <= y { (x, y) } else { (y, x) };
                gates.push(AndGate { lhs, rhs0: x, rhs1: y });
            }
        }
        let outputs = self.outputs.iter().map(|&o| tr(o)).collect();
        Circuit::new(next_gate - 1, inputs, latches, outputs, gates, vec![], None)
    }
}

/// Appends fresh unused inputs and constant-FALSE outputs up to the target
/// widths. The result is renumbered into canonical layout.
pub fn pad_wires(c: &Circuit, target_inputs: usize, target_outputs: usize) -> Result<Circuit, AigerError> {
    if target_inputs < c.num_inputs() || target_outputs < c.num_outputs() {
        return Err(AigerError::PadBelowCurrent {
            inputs: (c.num_inputs(), target_inputs),
            outputs: (c.num_outputs(), target_outputs),
        });
    }
    let defs = c.var_definitions();
    let ti = target_inputs as u32;
    let nl = c.num_latches() as u32;
    let map_var = |v: u32| -> u32 {
        match defs.get(&v) {
            None => 0,
            Some(VarDef::Input(k)) => *k as u32 + 1,
            Some(VarDef::Latch(k)) => ti + 1 + *k as u32,
            Some(VarDef::Gate(k)) => ti + nl + 1 + *k as u32,
        }
    };
    let tr = |lit: u32| 2 * map_var(var_of(lit)) + u32::from(is_negated(lit));
    let inputs = (1..=ti).map(|v| 2 * v).collect();
    let latches = c.latches.iter().map(|l| Latch { lit: tr(l.lit), next: tr(l.next) }).collect();
    let mut outputs: Vec<u32> = c.outputs.iter().map(|&o| tr(o)).collect();
    outputs.resize(target_outputs, FALSE);
    let gates = c
        .and_gates
        .iter()
        .map(|g| AndGate { lhs: tr(g.lhs), rhs0: tr(g.rhs0), rhs1: tr(g.rhs1) })
        .collect();
    let max_var = ti + nl + c.num_gates() as u32;
    Circuit::new(max_var, inputs, latches, outputs, gates, c.symbols.clone(), c.comment.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::{parse_aag, render_aag, simulate_step, LatchState};

    const FIGURE_ONE: &str = "aag 4 2 1 1 1\n2\n4\n6 4\n8\n8 2 7\n";

    #[test]
    fn builder_reproduces_figure_one() {
        let mut b = AigBuilder::new(2);
        let (i0, i1) = (b.input(0), b.input(1));
        let l = b.delay(i1);
        let g = b.and(i0, l ^ 1);
        b.output(g);
        assert_eq!(render_aag(&b.finish().unwrap()), FIGURE_ONE);
    }

    #[test]
    fn folding_and_hashing() {
        let mut b = AigBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        assert_eq!(b.and(x, FALSE), FALSE);
        assert_eq!(b.and(TRUE, x), x);
        assert_eq!(b.and(x, x ^ 1), FALSE);
        let g1 = b.and(x, y);
        let g2 = b.and(y, x);
        assert_eq!(g1, g2);
        b.output(g1);
        assert_eq!(b.finish().unwrap().num_gates(), 1);
    }

    #[test]
    fn latch_created_after_gates_is_renumbered() {
        let mut b = AigBuilder::new(1);
        let x = b.input(0);
        let (l, id) = b.latch();
        let g = b.and(x, l ^ 1);
        let (l2, id2) = b.latch();
        b.set_next(id, g);
        b.set_next(id2, l);
        let o = b.or(g, l2);
        b.output(o);
        let c = b.finish().unwrap();
        assert_eq!(c.latches.iter().map(|l| l.lit).collect::<Vec<_>>(), vec![4, 6]);
        let back = parse_aag(&render_aag(&c)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unset_latch_is_an_error() {
        let mut b = AigBuilder::new(0);
        b.latch();
        assert!(b.finish().is_err());
    }

    #[test]
    fn padding_shape_and_behavior() {
        let c = parse_aag(FIGURE_ONE).unwrap();
        let p = pad_wires(&c, 4, 2).unwrap();
        assert_eq!((p.num_inputs(), p.num_outputs()), (4, 2));
        assert_eq!(render_aag(&p), "aag 6 4 1 2 1\n2\n4\n6\n8\n10 4\n12\n0\n12 2 11\n");
        let mut s = LatchState::initial(&c);
        let mut t = LatchState::initial(&p);
        for step in 0..16u32 {
            let ins = [step & 1 == 1, step & 2 == 2];
            let (o1, s1) = simulate_step(&c, &s, &ins).unwrap();
            let (o2, t1) = simulate_step(&p, &t, &[ins[0], ins[1], step & 4 == 4, true]).unwrap();
            assert_eq!(o1[..], o2[..1]);
            assert!(!o2[1]);
            s = s1;
            t = t1;
        }
        assert_eq!(pad_wires(&c, 2, 1).unwrap(), c);
        assert!(matches!(pad_wires(&c, 1, 1), Err(AigerError::PadBelowCurrent { .. })));
    }
}
