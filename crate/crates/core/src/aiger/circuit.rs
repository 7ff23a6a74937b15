use std::collections::HashMap;
use std::fmt::Write as _;

use super::AigerError;

/// A latch: `lit` holds the value `next` had on the previous step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Latch {
    pub lit: u32,
    pub next: u32,
}

/// `lhs = rhs0 & rhs1`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AndGate {
    pub lhs: u32,
    pub rhs0: u32,
    pub rhs1: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Input,
    Latch,
    Output,
}

impl SymbolKind {
    fn tag(self) -> char {
        match self {
            SymbolKind::Input => 'i',
            SymbolKind::Latch => 'l',
            SymbolKind::Output => 'o',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub kind: SymbolKind,
    pub index: usize,
    pub name: String,
}

/// What defines a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarDef {
    Input(usize),
    Latch(usize),
    Gate(usize),
}

/// A sequential and-inverter graph in ASCII AIGER layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub max_var: u32,
    pub inputs: Vec<u32>,
    pub latches: Vec<Latch>,
    pub outputs: Vec<u32>,
    pub and_gates: Vec<AndGate>,
    pub symbols: Vec<Symbol>,
    pub comment: Option<String>,
    /// Gate indices in dependency order; computed at construction.
    topo: Vec<usize>,
}

pub fn var_of(lit: u32) -> u32 {
    lit >> 1
}

pub fn is_negated(lit: u32) -> bool {
    lit & 1 == 1
}

impl Circuit {
    /// Validates the structural invariants and caches a topological gate
    /// order.
    pub fn new(
        max_var: u32,
        inputs: Vec<u32>,
        latches: Vec<Latch>,
        outputs: Vec<u32>,
        and_gates: Vec<AndGate>,
        symbols: Vec<Symbol>,
        comment: Option<String>,
    ) -> Result<Self, AigerError> {
        let mut c =
            Circuit { max_var, inputs, latches, outputs, and_gates, symbols, comment, topo: vec![] };
        let defs = c.definitions()?;
        let max_lit = 2 * c.max_var + 1;
        let check_ref = |lit: u32| -> Result<(), AigerError> {
            if lit > max_lit {
                return Err(AigerError::LiteralOutOfRange { lit, max_var: c.max_var });
            }
            if var_of(lit) != 0 && !defs.contains_key(&var_of(lit)) {
                return Err(AigerError::Undefined(lit));
            }
            Ok(())
        };
        for l in &c.latches {
            check_ref(l.next)?;
        }
        for &o in &c.outputs {
            check_ref(o)?;
        }
        for g in &c.and_gates {
            check_ref(g.rhs0)?;
            check_ref(g.rhs1)?;
        }
        for s in &c.symbols {
            let bound = match s.kind {
                SymbolKind::Input => c.inputs.len(),
                SymbolKind::Latch => c.latches.len(),
                SymbolKind::Output => c.outputs.len(),
            };
            if s.index >= bound {
                return Err(AigerError::Symbol(format!(
                    "{}{} refers past the end of the section",
                    s.kind.tag(),
                    s.index
                )));
            }
        }
        c.topo = c.topological_order(&defs)?;
        Ok(c)
    }

    fn definitions(&self) -> Result<HashMap<u32, VarDef>, AigerError> {
        let mut defs = HashMap::new();
        let max_lit = 2 * self.max_var + 1;
        let mut define = |lit: u32, def: VarDef| -> Result<(), AigerError> {
            if lit > max_lit {
                return Err(AigerError::LiteralOutOfRange { lit, max_var: self.max_var });
            }
            if is_negated(lit) {
                return Err(AigerError::OddDefinition(lit));
            }
            if lit < 2 {
                return Err(AigerError::ConstantDefinition(lit));
            }
            if defs.insert(var_of(lit), def).is_some() {
                return Err(AigerError::Redefinition(lit));
            }
            Ok(())
        };
        for (k, &i) in self.inputs.iter().enumerate() {
            define(i, VarDef::Input(k))?;
        }
        for (k, l) in self.latches.iter().enumerate() {
            define(l.lit, VarDef::Latch(k))?;
        }
        for (k, g) in self.and_gates.iter().enumerate() {
            define(g.lhs, VarDef::Gate(k))?;
        }
        Ok(defs)
    }

    fn topological_order(&self, defs: &HashMap<u32, VarDef>) -> Result<Vec<usize>, AigerError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; self.and_gates.len()];
        let mut order = Vec::with_capacity(self.and_gates.len());
        let gate_of = |lit: u32| match defs.get(&var_of(lit)) {
            Some(VarDef::Gate(k)) => Some(*k),
            _ => None,
        };
        for root in 0..self.and_gates.len() {
            if mark[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, u8)> = vec![(root, 0)];
            mark[root] = 1;
            while let Some(&mut (g, ref mut child)) = stack.last_mut() {
                let gate = self.and_gates[g];
                let operands = [gate.rhs0, gate.rhs1];
                if (*child as usize) < operands.len() {
                    let lit = operands[*child as usize];
                    *child += 1;
                    if let Some(dep) = gate_of(lit) {
                        match mark[dep] {
                            0 => {
                                mark[dep] = 1;
                                stack.push((dep, 0));
                            }
                            1 => return Err(AigerError::CombinationalCycle(self.and_gates[dep].lhs)),
                            _ => {}
                        }
                    }
                } else {
                    mark[g] = 2;
                    order.push(g);
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_latches(&self) -> usize {
        self.latches.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_gates(&self) -> usize {
        self.and_gates.len()
    }

    /// Gate indices such that every gate follows the gates it reads.
    pub fn gate_order(&self) -> &[usize] {
        &self.topo
    }

    fn symbol(&self, kind: SymbolKind, index: usize) -> Option<&str> {
        self.symbols
            .iter()
            .find(|s| s.kind == kind && s.index == index)
            .map(|s| s.name.as_str())
    }

    /// Proposition name bound to input `k`: its symbol when the symbol
    /// table names it, otherwise `i{k}`.
    pub fn input_name(&self, k: usize) -> String {
        self.symbol(SymbolKind::Input, k).map(str::to_string).unwrap_or_else(|| format!("i{k}"))
    }

    /// Proposition name bound to output `k`: its symbol, otherwise `o{k}`.
    pub fn output_name(&self, k: usize) -> String {
        self.symbol(SymbolKind::Output, k).map(str::to_string).unwrap_or_else(|| format!("o{k}"))
    }

    pub fn input_names(&self) -> Vec<String> {
        (0..self.inputs.len()).map(|k| self.input_name(k)).collect()
    }

    pub fn output_names(&self) -> Vec<String> {
        (0..self.outputs.len()).map(|k| self.output_name(k)).collect()
    }

    /// Which variable defines what.
    pub fn var_definitions(&self) -> HashMap<u32, VarDef> {
        self.definitions().expect("validated at construction")
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "aag {} {} {} {} {}",
            self.max_var,
            self.inputs.len(),
            self.latches.len(),
            self.outputs.len(),
            self.and_gates.len()
        );
        for i in &self.inputs {
            let _ = writeln!(out, "{i}");
        }
        for l in &self.latches {
            let _ = writeln!(out, "{} {}", l.lit, l.next);
        }
        for o in &self.outputs {
            let _ = writeln!(out, "{o}");
        }
        for g in &self.and_gates {
            let _ = writeln!(out, "{} {} {}", g.lhs, g.rhs0, g.rhs1);
        }
        for s in &self.symbols {
            let _ = writeln!(out, "{}{} {}", s.kind.tag(), s.index, s.name);
        }
        if let Some(c) = &self.comment {
            out.push_str("c\n");
            out.push_str(c);
            if !c.is_empty() && !c.ends_with('\n') {
                out.push('\n');
            }
        }
        out
    }
}

fn parse_num(tok: &str, line: usize) -> Result<u32, AigerError> {
    tok.parse::<u32>().map_err(|_| AigerError::Syntax { line, message: format!("`{tok}` is not an unsigned integer") })
}

/// Parses the ASCII `aag` format.
pub fn parse_aag(text: &str) -> Result<Circuit, AigerError> {
    let lines: Vec<&str> = text.lines().collect();
    let header = lines.first().ok_or_else(|| AigerError::Header("empty input".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&"aag") {
        return Err(AigerError::Header("expected `aag` magic".into()));
    }
    if fields.len() != 6 {
        return Err(AigerError::Header(format!(
            "expected `aag M I L O A`, found {} numbers",
            fields.len() - 1
        )));
    }
    let nums = fields[1..]
        .iter()
        .map(|t| parse_num(t, 1).map_err(|_| AigerError::Header(format!("bad number `{t}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let (m, i, l, o, a) = (nums[0], nums[1] as usize, nums[2] as usize, nums[3] as usize, nums[4] as usize);
    if (i + l + a) as u64 > m as u64 {
        return Err(AigerError::Header(format!("M = {m} is smaller than I + L + A = {}", i + l + a)));
    }

    let body = i + l + o + a;
    if lines.len() < 1 + body {
        return Err(AigerError::CountMismatch { expected: body, found: lines.len() - 1 });
    }
    let mut row = 1;
    let take = |row: &mut usize, want: &[usize]| -> Result<Vec<u32>, AigerError> {
        let line = *row + 1;
        let toks: Vec<&str> = lines[*row].split_whitespace().collect();
        *row += 1;
        if !want.contains(&toks.len()) {
            return Err(AigerError::Syntax {
                line,
                message: format!("expected {} literal(s), found {}", want[0], toks.len()),
            });
        }
        toks.iter().map(|t| parse_num(t, line)).collect()
    };

    let mut inputs = Vec::with_capacity(i);
    for _ in 0..i {
        inputs.push(take(&mut row, &[1])?[0]);
    }
    let mut latches = Vec::with_capacity(l);
    for _ in 0..l {
        let line = row + 1;
        let v = take(&mut row, &[2, 3])?;
        // an explicit reset value is accepted only when it is 0
        if v.len() == 3 && v[2] != 0 {
            return Err(AigerError::Syntax { line, message: "only zero-initialized latches are supported".into() });
        }
        latches.push(Latch { lit: v[0], next: v[1] });
    }
    let mut outputs = Vec::with_capacity(o);
    for _ in 0..o {
        outputs.push(take(&mut row, &[1])?[0]);
    }
    let mut and_gates = Vec::with_capacity(a);
    for _ in 0..a {
        let v = take(&mut row, &[3])?;
        and_gates.push(AndGate { lhs: v[0], rhs0: v[1], rhs1: v[2] });
    }

    let mut symbols = Vec::new();
    let mut comment = None;
    while row < lines.len() {
        let line = lines[row];
        let lineno = row + 1;
        row += 1;
        if line == "c" {
            let rest = lines[row..].join("\n");
            comment = Some(if rest.is_empty() { rest } else { rest + "\n" });
            break;
        }
        if line.trim().is_empty() {
            continue;
        }
        let kind = match line.as_bytes()[0] {
            b'i' => SymbolKind::Input,
            b'l' => SymbolKind::Latch,
            b'o' => SymbolKind::Output,
            _ => {
                return Err(AigerError::CountMismatch { expected: body, found: lineno - 1 });
            }
        };
        let (pos, name) = line[1..]
            .split_once(' ')
            .ok_or_else(|| AigerError::Symbol(format!("line {lineno}: missing name")))?;
        let index = pos
            .parse::<usize>()
            .map_err(|_| AigerError::Symbol(format!("line {lineno}: bad position `{pos}`")))?;
        if name.is_empty() {
            return Err(AigerError::Symbol(format!("line {lineno}: empty name")));
        }
        symbols.push(Symbol { kind, index, name: name.to_string() });
    }

    Circuit::new(m, inputs, latches, outputs, and_gates, symbols, comment)
}

/// Canonical `aag` text.
pub fn render_aag(c: &Circuit) -> String {
    c.render()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIGURE_ONE: &str = "aag 4 2 1 1 1\n2\n4\n6 4\n8\n8 2 7\n";

    #[test]
    fn parses_figure_one() {
        let c = parse_aag(FIGURE_ONE).unwrap();
        assert_eq!((c.max_var, c.num_inputs(), c.num_latches(), c.num_outputs(), c.num_gates()), (4, 2, 1, 1, 1));
        assert_eq!(c.inputs, vec![2, 4]);
        assert_eq!(c.latches, vec![Latch { lit: 6, next: 4 }]);
        assert_eq!(c.outputs, vec![8]);
        assert_eq!(c.and_gates, vec![AndGate { lhs: 8, rhs0: 2, rhs1: 7 }]);
        assert_eq!(render_aag(&c), FIGURE_ONE);
    }

    #[test]
    fn empty_circuit() {
        let c = parse_aag("aag 0 0 0 0 0\n").unwrap();
        assert_eq!(c.num_inputs() + c.num_latches() + c.num_outputs() + c.num_gates(), 0);
        assert_eq!(render_aag(&c), "aag 0 0 0 0 0\n");
    }

    #[test]
    fn symbols_and_comments_are_preserved() {
        let text = "aag 4 2 1 1 1\n2\n4\n6 4\n8\n8 2 7\ni0 i0\ni1 i1\no0 o1\nc\nfigure one\n";
        let c = parse_aag(text).unwrap();
        assert_eq!(c.output_name(0), "o1");
        assert_eq!(c.input_name(1), "i1");
        assert_eq!(render_aag(&c), text);
    }

    #[test]
    fn default_names() {
        let c = parse_aag(FIGURE_ONE).unwrap();
        assert_eq!(c.input_names(), vec!["i0", "i1"]);
        assert_eq!(c.output_names(), vec!["o0"]);
    }

    #[test]
    fn topological_order_handles_out_of_order_gates() {
        let c = parse_aag("aag 5 2 0 1 2\n2\n4\n10\n10 8 2\n8 2 4\n").unwrap();
        let order: Vec<u32> = c.gate_order().iter().map(|&g| c.and_gates[g].lhs).collect();
        assert_eq!(order, vec![8, 10]);
    }

    #[test]
    fn rejects_malformed_input() {
        let cases: &[(&str, fn(&AigerError) -> bool)] = &[
            ("aig 1 1 0 0 0\n2\n", |e| matches!(e, AigerError::Header(_))),
            ("aag 1 1 0\n2\n", |e| matches!(e, AigerError::Header(_))),
            ("aag 1 2 0 0 0\n2\n4\n", |e| matches!(e, AigerError::Header(_))),
            ("aag 2 2 0 1 0\n2\n4\n", |e| matches!(e, AigerError::CountMismatch { .. })),
            ("aag 1 1 0 0 0\n3\n", |e| matches!(e, AigerError::OddDefinition(3))),
            ("aag 2 2 0 0 0\n2\n2\n", |e| matches!(e, AigerError::Redefinition(2))),
            ("aag 3 1 0 1 2\n2\n4\n4 6 2\n6 4 2\n", |e| matches!(e, AigerError::CombinationalCycle(_))),
            ("aag 1 1 0 1 0\n2\n9\n", |e| matches!(e, AigerError::LiteralOutOfRange { .. })),
            ("aag 2 1 0 1 0\n2\n4\n", |e| matches!(e, AigerError::Undefined(4))),
            ("aag 1 1 0 0 0\nx\n", |e| matches!(e, AigerError::Syntax { line: 2, .. })),
        ];
        for (text, check) in cases {
            let err = parse_aag(text).expect_err(text);
            assert!(check(&err), "{text:?} gave {err:?}");
        }
    }

    #[test]
    fn self_loop_through_latch_is_fine() {
        let c = parse_aag("aag 1 0 1 1 0\n2 3\n2\n").unwrap();
        assert_eq!(c.num_latches(), 1);
    }
}
