use super::circuit::{var_of, Circuit};
use super::AigerError;

/// One bit per latch, aligned with [`Circuit::latches`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatchState(pub Vec<bool>);

impl LatchState {
    /// All latches FALSE.
    pub fn initial(c: &Circuit) -> Self {
        LatchState(vec![false; c.num_latches()])
    }

    pub fn to_bits(&self) -> u64 {
        self.0.iter().enumerate().fold(0, |acc, (k, &b)| acc | (u64::from(b) << k))
    }

    pub fn from_bits(bits: u64, len: usize) -> Self {
        LatchState((0..len).map(|k| bits >> k & 1 == 1).collect())
    }
}

fn lit_value(values: &[bool], lit: u32) -> bool {
    values[var_of(lit) as usize] ^ (lit & 1 == 1)
}

/// Evaluates one clock step: returns the output values and the latch state
/// after the step.
pub fn simulate_step(
    c: &Circuit,
    state: &LatchState,
    inputs: &[bool],
) -> Result<(Vec<bool>, LatchState), AigerError> {
    if inputs.len() != c.num_inputs() {
        return Err(AigerError::WidthMismatch { expected: c.num_inputs(), found: inputs.len() });
    }
    if state.0.len() != c.num_latches() {
        return Err(AigerError::WidthMismatch { expected: c.num_latches(), found: state.0.len() });
    }
    let values = evaluate(c, |k| inputs[k], |k| state.0[k]);
    let outputs = c.outputs.iter().map(|&o| lit_value(&values, o)).collect();
    let next = c.latches.iter().map(|l| lit_value(&values, l.next)).collect();
    Ok((outputs, LatchState(next)))
}

fn evaluate(c: &Circuit, input: impl Fn(usize) -> bool, latch: impl Fn(usize) -> bool) -> Vec<bool> {
    let mut values = vec![false; c.max_var as usize + 1];
    for (k, &i) in c.inputs.iter().enumerate() {
        values[var_of(i) as usize] = input(k);
    }
    for (k, l) in c.latches.iter().enumerate() {
        values[var_of(l.lit) as usize] = latch(k);
    }
    for &g in c.gate_order() {
        let gate = c.and_gates[g];
        values[var_of(gate.lhs) as usize] = lit_value(&values, gate.rhs0) && lit_value(&values, gate.rhs1);
    }
    values
}

impl Circuit {
    /// Bit-packed variant of [`simulate_step`] for circuits with at most 64
    /// inputs, latches, and outputs. Bit `k` of each word is wire `k`.
    pub fn step_bits(&self, latches: u64, inputs: u64) -> (u64, u64) {
        debug_assert!(self.num_inputs() <= 64 && self.num_latches() <= 64 && self.num_outputs() <= 64);
        let values = evaluate(self, |k| inputs >> k & 1 == 1, |k| latches >> k & 1 == 1);
        let outputs = self
            .outputs
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &o)| acc | (u64::from(lit_value(&values, o)) << k));
        let next = self
            .latches
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, l)| acc | (u64::from(lit_value(&values, l.next)) << k));
        (outputs, next)
    }

    /// Runs the circuit from the initial state over `steps` input vectors and
    /// returns the output vector of every step.
    pub fn run(&self, steps: &[Vec<bool>]) -> Result<Vec<Vec<bool>>, AigerError> {
        let mut state = LatchState::initial(self);
        let mut outs = Vec::with_capacity(steps.len());
        for input in steps {
            let (o, next) = simulate_step(self, &state, input)?;
            outs.push(o);
            state = next;
        }
        Ok(outs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::parse_aag;

    const FIGURE_ONE: &str = "aag 4 2 1 1 1\n2\n4\n6 4\n8\n8 2 7\n";

    #[test]
    fn figure_one_steps() {
        let c = parse_aag(FIGURE_ONE).unwrap();
        // o1 = i0 & !latch, latch' = i1
        let (out, next) = simulate_step(&c, &LatchState(vec![false]), &[true, false]).unwrap();
        assert_eq!(out, vec![true]);
        assert_eq!(next, LatchState(vec![false]));
        let (out, next) = simulate_step(&c, &LatchState(vec![true]), &[true, true]).unwrap();
        assert_eq!(out, vec![false]);
        assert_eq!(next, LatchState(vec![true]));
    }

    #[test]
    fn exhaustive_figure_one_against_equations() {
        let c = parse_aag(FIGURE_ONE).unwrap();
        for l in [false, true] {
            for i0 in [false, true] {
                for i1 in [false, true] {
                    let (out, next) = simulate_step(&c, &LatchState(vec![l]), &[i0, i1]).unwrap();
                    assert_eq!(out, vec![i0 && !l]);
                    assert_eq!(next.0, vec![i1]);
                    let bits = c.step_bits(u64::from(l), u64::from(i0) | u64::from(i1) << 1);
                    assert_eq!(bits, (u64::from(i0 && !l), u64::from(i1)));
                }
            }
        }
    }

    #[test]
    fn constant_outputs() {
        let c = parse_aag("aag 0 0 0 2 0\n1\n0\n").unwrap();
        let (out, _) = simulate_step(&c, &LatchState(vec![]), &[]).unwrap();
        assert_eq!(out, vec![true, false]);
    }

    #[test]
    fn toggling_latch() {
        let c = parse_aag("aag 1 0 1 1 0\n2 3\n2\n").unwrap();
        let outs = c.run(&vec![vec![]; 4]).unwrap();
        assert_eq!(outs, vec![vec![false], vec![true], vec![false], vec![true]]);
    }

    #[test]
    fn width_mismatch() {
        let c = parse_aag(FIGURE_ONE).unwrap();
        assert!(matches!(
            simulate_step(&c, &LatchState(vec![false]), &[true]),
            Err(AigerError::WidthMismatch { expected: 2, found: 1 })
        ));
    }
}
