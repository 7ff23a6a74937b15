//! Constructive circuit templates for pattern-library specifications.
//!
//! Each guarantee instance drives its own output wires; several variants
//! exist per pattern so that one specification admits structurally
//! different satisfying circuits. Variants that rely on an assumption are
//! only offered when the specification carries that assumption.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::aiger::{AigBuilder, Circuit, FALSE, TRUE};
use crate::ltl::{Pattern, PatternInstance, PatternSpec, PropLiteral};

use super::DatagenError;

struct Ctx {
    b: AigBuilder,
    num_inputs: usize,
    always: Vec<u32>,
    eventually: Vec<u32>,
}

fn input_index(name: &str) -> Option<usize> {
    name.strip_prefix('i')?.parse().ok()
}

fn output_index(name: &str) -> Option<usize> {
    name.strip_prefix('o')?.parse().ok()
}

impl Ctx {
    fn literal(&self, l: &PropLiteral) -> Result<u32, DatagenError> {
        let k = input_index(&l.name)
            .filter(|&k| k < self.num_inputs)
            .ok_or_else(|| DatagenError::Template(format!("`{}` is not a circuit input", l.name)))?;
        Ok(self.b.input(k) ^ u32::from(!l.positive))
    }

    fn trigger(&mut self, lits: &[PropLiteral]) -> Result<u32, DatagenError> {
        let mut t = TRUE;
        for l in lits {
            let x = self.literal(l)?;
            t = self.b.and(t, x);
        }
        Ok(t)
    }

    fn random_input<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.b.input(rng.gen_range(0..self.num_inputs)) ^ u32::from(rng.gen_bool(0.3))
    }

    /// Signal equal to `x` one step earlier; a negated signal is delayed as
    /// the negation of a latch on its complement, so it starts out TRUE.
    fn delay(&mut self, x: u32) -> u32 {
        if x > TRUE && x & 1 == 1 {
            self.b.delay(x ^ 1) ^ 1
        } else {
            self.b.delay(x)
        }
    }

    fn toggle(&mut self) -> u32 {
        let (l, id) = self.b.latch();
        self.b.set_next(id, l ^ 1);
        l
    }

    /// Latch that becomes TRUE one step after `x` first holds and stays TRUE.
    fn seen(&mut self, x: u32) -> u32 {
        let (l, id) = self.b.latch();
        let n = self.b.or(x, l);
        self.b.set_next(id, n);
        l
    }
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, xs: &'a [u32]) -> Option<&'a u32> {
    xs.choose(rng)
}

/// Drives the outputs of one guarantee; returns (output index, literal) pairs.
fn realize_guarantee<R: Rng + ?Sized>(
    cx: &mut Ctx,
    g: &PatternInstance,
    rng: &mut R,
) -> Result<Vec<(usize, u32)>, DatagenError> {
    let targets: Vec<usize> = g
        .targets
        .iter()
        .map(|n| output_index(n).ok_or_else(|| DatagenError::Template(format!("`{n}` is not an output"))))
        .collect::<Result<_, _>>()?;
    let cond = pick(rng, &cx.always).copied();
    let eventual = pick(rng, &cx.eventually).copied();
    let drive = match g.pattern {
        Pattern::Invariance => {
            let t = cx.trigger(&g.trigger)?;
            let mut options = vec![0, 1, 2, 3];
            if cond.is_some() {
                options.push(4);
            }
            let lit = match *options.choose(rng).unwrap() {
                0 => t,
                1 => {
                    let x = cx.random_input(rng);
                    cx.b.or(t, x)
                }
                2 => TRUE,
                3 => {
                    let x = cx.random_input(rng);
                    let l = cx.delay(x);
                    cx.b.or(t, l)
                }
                _ => cx.b.and(t, cond.unwrap()),
            };
            vec![lit]
        }
        Pattern::NextResponse => {
            let t = cx.trigger(&g.trigger)?;
            let mut options = vec![0, 1, 2, 3];
            if cond.is_some() {
                options.push(4);
            }
            let lit = match *options.choose(rng).unwrap() {
                0 => cx.delay(t),
                1 => {
                    let d = cx.delay(t);
                    let x = cx.random_input(rng);
                    cx.b.or(d, x)
                }
                2 => {
                    let x = cx.random_input(rng);
                    let tx = cx.b.or(t, x);
                    cx.delay(tx)
                }
                3 => TRUE,
                _ => {
                    let d = cx.delay(t);
                    cx.b.and(cond.unwrap(), d)
                }
            };
            vec![lit]
        }
        Pattern::Response => {
            let t = cx.trigger(&g.trigger)?;
            let mut options = vec![0, 1, 2, 3, 4];
            if cond.is_some() {
                options.push(5);
            }
            let lit = match *options.choose(rng).unwrap() {
                0 => t,
                1 => cx.delay(t),
                2 => cx.toggle(),
                3 => TRUE,
                4 => {
                    let d = cx.delay(t);
                    cx.b.or(t, d)
                }
                _ => cx.b.and(t, cond.unwrap()),
            };
            vec![lit]
        }
        Pattern::MutualExclusion => {
            let (a, c) = match rng.gen_range(0..4) {
                0 => {
                    let x = cx.random_input(rng);
                    let y = cx.random_input(rng);
                    let c = cx.b.and(x ^ 1, y);
                    (x, c)
                }
                1 => {
                    let x = cx.random_input(rng);
                    let y = cx.random_input(rng);
                    (cx.b.and(x, y), x ^ 1)
                }
                2 => {
                    let l = cx.toggle();
                    (l, l ^ 1)
                }
                _ => {
                    let x = cx.random_input(rng);
                    let l = cx.delay(x);
                    let y = cx.random_input(rng);
                    (cx.b.and(l, y), l ^ 1)
                }
            };
            if rng.gen_bool(0.5) {
                vec![a, c]
            } else {
                vec![c, a]
            }
        }
        Pattern::Eventuality => {
            let mut options = vec![0, 1, 2, 3];
            if eventual.is_some() {
                options.push(4);
            }
            if cond.is_some() {
                options.push(5);
            }
            let lit = match *options.choose(rng).unwrap() {
                0 => TRUE,
                1 => cx.delay(TRUE),
                2 => cx.toggle(),
                3 => {
                    let x = cx.random_input(rng);
                    let l = cx.delay(TRUE);
                    cx.b.or(x, l)
                }
                4 => {
                    let c = eventual.unwrap();
                    let s = cx.seen(c);
                    cx.b.or(c, s)
                }
                _ => cond.unwrap(),
            };
            vec![lit]
        }
        Pattern::AssumeAlways | Pattern::AssumeEventually => {
            return Err(DatagenError::Template("assumption pattern used as a guarantee".into()))
        }
    };
    Ok(targets.into_iter().zip(drive).collect())
}

/// Logic for an output no guarantee mentions.
fn noise<R: Rng + ?Sized>(cx: &mut Ctx, rng: &mut R) -> u32 {
    let x = cx.random_input(rng);
    match rng.gen_range(0..4) {
        0 => x,
        1 => {
            let y = cx.random_input(rng);
            cx.b.and(x, y)
        }
        2 => cx.delay(x),
        _ => {
            let y = cx.random_input(rng);
            cx.b.or(x, y)
        }
    }
}

/// Builds a circuit with `num_inputs` inputs and `num_outputs` outputs that
/// satisfies the flattened specification by construction. Outputs not
/// named by any guarantee are tied to FALSE, or with probability `noise`
/// driven by unrelated logic.
pub fn realize<R: Rng + ?Sized>(
    spec: &PatternSpec,
    num_inputs: usize,
    num_outputs: usize,
    noise_rate: f64,
    rng: &mut R,
) -> Result<Circuit, DatagenError> {
    if num_inputs == 0 {
        return Err(DatagenError::Template("templates need at least one input".into()));
    }
    let mut cx = Ctx { b: AigBuilder::new(num_inputs), num_inputs, always: vec![], eventually: vec![] };
    for a in &spec.assumptions {
        let lit = cx.trigger(&a.trigger)?;
        match a.pattern {
            Pattern::AssumeAlways => cx.always.push(lit),
            Pattern::AssumeEventually => cx.eventually.push(lit),
            _ => return Err(DatagenError::Template("guarantee pattern used as an assumption".into())),
        }
    }
    let mut outputs = vec![None; num_outputs];
    for g in &spec.guarantees {
        for (k, lit) in realize_guarantee(&mut cx, g, rng)? {
            let slot = outputs
                .get_mut(k)
                .ok_or_else(|| DatagenError::Template(format!("output o{k} exceeds width {num_outputs}")))?;
            if slot.is_some() {
                return Err(DatagenError::Template(format!("output o{k} driven twice")));
            }
            *slot = Some(lit);
        }
    }
    for slot in outputs.iter_mut().filter(|s| s.is_none()) {
        *slot = Some(if rng.gen_bool(noise_rate) { noise(&mut cx, rng) } else { FALSE });
    }
    for lit in outputs.into_iter().flatten() {
        cx.b.output(lit);
    }
    Ok(cx.b.finish()?)
}

/// Uniformly random small circuit, used for rejection sampling.
pub fn random_circuit<R: Rng + ?Sized>(
    num_inputs: usize,
    num_outputs: usize,
    max_latches: usize,
    max_gates: usize,
    rng: &mut R,
) -> Result<Circuit, DatagenError> {
    let mut b = AigBuilder::new(num_inputs);
    let mut pool: Vec<u32> = (0..num_inputs).map(|k| b.input(k)).collect();
    let n_latch = rng.gen_range(0..=max_latches);
    let latches: Vec<(u32, usize)> = (0..n_latch).map(|_| b.latch()).collect();
    pool.extend(latches.iter().map(|&(l, _)| l));
    pool.push(TRUE);
    let n_gates = rng.gen_range(0..=max_gates);
    for _ in 0..n_gates {
        let x = *pool.choose(rng).unwrap() ^ u32::from(rng.gen_bool(0.5));
        let y = *pool.choose(rng).unwrap() ^ u32::from(rng.gen_bool(0.5));
        let g = b.and(x, y);
        if g > TRUE {
            pool.push(g);
        }
    }
    for &(_, id) in &latches {
        let n = *pool.choose(rng).unwrap() ^ u32::from(rng.gen_bool(0.5));
        b.set_next(id, n);
    }
    for _ in 0..num_outputs {
        let o = *pool.choose(rng).unwrap() ^ u32::from(rng.gen_bool(0.5));
        b.output(o);
    }
    Ok(b.finish()?)
}
