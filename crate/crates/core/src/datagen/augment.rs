use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aiger::pad_wires;
use crate::ltl::{AssumeGuaranteeSpec, PatternSpec};

use super::{DatagenError, OracleBudget, PairRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum PadMode {
    None,
    /// Pad to the largest input and output counts in the dataset.
    #[default]
    Max,
    Fixed {
        inputs: usize,
        outputs: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    pub shuffle: bool,
    pub pad: PadMode,
    /// Replace every record by one record per guarantee.
    pub split: bool,
    pub reverify: bool,
    pub oracle: OracleBudget,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig { shuffle: true, pad: PadMode::Max, split: false, reverify: true, oracle: OracleBudget::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub input_records: usize,
    pub output_records: usize,
    pub reverified: usize,
    pub reverify_failures: usize,
}

fn permute<T: Clone>(xs: &[T], perm: &[usize]) -> Vec<T> {
    perm.iter().map(|&k| xs[k].clone()).collect()
}

/// Applies assumption shuffling, uniform wire padding, and optionally
/// formula splitting. Pattern instances in the provenance are kept in step
/// with the specification.
pub fn augment_dataset<R: Rng + ?Sized>(
    pairs: &[PairRecord],
    config: &AugmentConfig,
    rng: &mut R,
) -> Result<(Vec<PairRecord>, AugmentReport), DatagenError> {
    let mut report = AugmentReport { input_records: pairs.len(), ..AugmentReport::default() };
    let (ti, to) = match config.pad {
        PadMode::None => (0, 0),
        PadMode::Max => (
            pairs.iter().map(|p| p.circuit.num_inputs()).max().unwrap_or(0),
            pairs.iter().map(|p| p.circuit.num_outputs()).max().unwrap_or(0),
        ),
        PadMode::Fixed { inputs, outputs } => (inputs, outputs),
    };
    let mut out = Vec::new();
    for p in pairs {
        let mut spec = p.spec.clone();
        let mut instances = p.provenance.instances.clone();
        let mut tags = p.provenance.augmentations.clone();
        if config.shuffle && spec.assumptions.len() > 1 {
            let mut perm: Vec<usize> = (0..spec.assumptions.len()).collect();
            perm.shuffle(rng);
            spec = AssumeGuaranteeSpec::new(permute(&spec.assumptions, &perm), spec.guarantees.clone());
            if let Some(ps) = instances.as_mut() {
                ps.assumptions = permute(&ps.assumptions, &perm);
            }
            tags.push("shuffle".into());
        }
        let circuit = if config.pad == PadMode::None {
            p.circuit.clone()
        } else {
            let c = pad_wires(&p.circuit, ti.max(p.circuit.num_inputs()), to.max(p.circuit.num_outputs()))?;
            if c != p.circuit {
                tags.push("pad".into());
            }
            c
        };
        let variants: Vec<(AssumeGuaranteeSpec, Option<PatternSpec>)> = if config.split && spec.guarantees.len() > 1 {
            (0..spec.guarantees.len())
                .map(|g| {
                    let s = AssumeGuaranteeSpec::new(spec.assumptions.clone(), vec![spec.guarantees[g].clone()]);
                    let ps = instances.as_ref().map(|ps| PatternSpec {
                        assumptions: ps.assumptions.clone(),
                        guarantees: vec![ps.guarantees[g].clone()],
                    });
                    (s, ps)
                })
                .collect()
        } else {
            vec![(spec, instances)]
        };
        let split = variants.len() > 1;
        for (s, ps) in variants {
            let mut prov = p.provenance.clone();
            prov.patterns = match &ps {
                Some(ps) => ps.pattern_names(),
                None => prov.patterns,
            };
            prov.instances = ps;
            prov.augmentations = tags.clone();
            if split {
                prov.augmentations.push("split".into());
            }
            let mut rec = PairRecord::new(s, circuit.clone(), prov, p.verified);
            if config.reverify {
                report.reverified += 1;
                let ok = config.oracle.satisfies(&rec.circuit, &rec.flattened())? == Some(true);
                if !ok {
                    report.reverify_failures += 1;
                    log::warn!("augmented record failed re-verification: {}", rec.spec_text());
                }
                rec.verified = ok;
            }
            out.push(rec);
        }
    }
    report.output_records = out.len();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_pairs, PairGenConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool() -> Vec<PairRecord> {
        let config = PairGenConfig { count: 30, ..PairGenConfig::default() };
        generate_pairs(&config, &mut ChaCha8Rng::seed_from_u64(2)).unwrap().0
    }

    #[test]
    fn split_produces_one_record_per_guarantee() {
        let pairs = pool();
        let config = AugmentConfig { split: true, shuffle: false, pad: PadMode::None, ..AugmentConfig::default() };
        let (out, report) = augment_dataset(&pairs, &config, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let expected: usize = pairs.iter().map(|p| p.spec.guarantees.len()).sum();
        assert_eq!(out.len(), expected);
        assert_eq!(report.reverify_failures, 0);
        for r in &out {
            assert_eq!(r.spec.guarantees.len(), 1);
            assert!(r.verified);
            assert_eq!(r.provenance.instances.as_ref().unwrap().spec(), r.spec);
        }
    }

    #[test]
    fn pad_only_keeps_count() {
        let pairs = pool();
        let config = AugmentConfig {
            shuffle: false,
            pad: PadMode::Fixed { inputs: 6, outputs: 5 },
            ..AugmentConfig::default()
        };
        let (out, _) = augment_dataset(&pairs, &config, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.len(), pairs.len());
        assert!(out.iter().all(|r| r.verified && r.circuit.num_inputs() == 6 && r.circuit.num_outputs() == 5));
    }

    #[test]
    fn shuffle_keeps_assumption_multiset() {
        let pairs = pool();
        let (out, _) = augment_dataset(&pairs, &AugmentConfig::default(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for (a, b) in pairs.iter().zip(&out) {
            let mut x: Vec<String> = a.spec.assumptions.iter().map(|f| f.to_string()).collect();
            let mut y: Vec<String> = b.spec.assumptions.iter().map(|f| f.to_string()).collect();
            x.sort();
            y.sort();
            assert_eq!(x, y);
            assert_eq!(a.spec.guarantees, b.spec.guarantees);
            assert!(b.verified);
        }
    }
}
