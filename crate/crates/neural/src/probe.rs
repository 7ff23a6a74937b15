//! Satisfaction classification with a logistic probe over the embeddings
//! of a (circuit, specification) pair.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use cnml_core::datagen::{DatagenError, OracleBudget, PairRecord};

use crate::loss::normalize_rows;
use crate::model::{CnmlModel, Modality};
use crate::optim::{AdamW, AdamWConfig};
use crate::tape::Tape;
use crate::tensor::Mat;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub spec_text: String,
    pub aag_text: String,
    /// The circuit satisfies the specification.
    pub label: bool,
}

/// A balanced oracle-labeled set: half satisfied pairings, half violated
/// ones, drawn from cross pairings of `pairs` (plus their own pairings for
/// positives). Pairings the oracle cannot decide are skipped.
pub fn labeled_pairs<R: Rng + ?Sized>(
    pairs: &[PairRecord],
    count: usize,
    oracle: &OracleBudget,
    rng: &mut R,
) -> Result<Vec<LabeledPair>, DatagenError> {
    let want_pos = count / 2;
    let want_neg = count - want_pos;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let n = pairs.len();
    if n < 2 {
        return Err(DatagenError::InsufficientPairs { needed: 2, available: n });
    }
    let mut attempts = 0;
    let max_attempts = 50 * count + 1000;
    while (pos.len() < want_pos || neg.len() < want_neg) && attempts < max_attempts {
        attempts += 1;
        let c = rng.gen_range(0..n);
        // Half the draws use the pair's own specification.
        let s = if rng.gen_bool(0.5) { c } else { rng.gen_range(0..n) };
        let key = (pairs[c].aag_text().to_string(), pairs[s].spec_text().to_string());
        if seen.contains(&key) {
            continue;
        }
        let label = if c == s && pairs[c].verified {
            Some(true)
        } else {
            oracle.satisfies(&pairs[c].circuit, &pairs[s].flattened())?
        };
        let Some(label) = label else { continue };
        let bucket = if label { &mut pos } else { &mut neg };
        if bucket.len() < if label { want_pos } else { want_neg } {
            seen.insert(key.clone());
            bucket.push(LabeledPair { spec_text: key.1, aag_text: key.0, label });
        }
    }
    if pos.len() < want_pos || neg.len() < want_neg {
        return Err(DatagenError::InsufficientPairs { needed: count, available: pos.len().min(neg.len()) * 2 });
    }
    let mut out: Vec<LabeledPair> = pos.into_iter().chain(neg).collect();
    out.shuffle(rng);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    /// Ratios with an empty denominator are reported as 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        ClassMetrics { tp, fp, fn_, tn, accuracy: ratio(tp + tn, tp + fp + fn_ + tn), precision, recall, f1 }
    }

    pub fn from_predictions(pred: &[bool], gold: &[bool]) -> Self {
        let mut c = [0usize; 4];
        for (&p, &g) in pred.iter().zip(gold) {
            c[match (p, g) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            }] += 1;
        }
        Self::from_counts(c[0], c[1], c[2], c[3])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { epochs: 400, lr: 0.02, weight_decay: 1e-4, seed: 0 }
    }
}

/// Linear layer plus logistic output over `(u, v, |u − v|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Probe {
    pub fn logit(&self, features: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn predict(&self, features: &Mat) -> Vec<bool> {
        (0..features.rows).map(|r| self.logit(features.row(r)) > 0.0).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    #[error("the labeled set contains only {0} examples")]
    SingleClass(&'static str),
    #[error("the labeled set is empty")]
    Empty,
}

/// Probe features: normalized circuit embedding, normalized spec embedding,
/// and their absolute difference.
pub fn pair_features(model: &CnmlModel, pairs: &[LabeledPair]) -> Mat {
    let circuits: Vec<&str> = pairs.iter().map(|p| p.aag_text.as_str()).collect();
    let specs: Vec<&str> = pairs.iter().map(|p| p.spec_text.as_str()).collect();
    let u = normalize_rows(&model.embed(Modality::Circuit, &circuits));
    let v = normalize_rows(&model.embed(Modality::Spec, &specs));
    let d = u.cols;
    let mut x = Mat::zeros(pairs.len(), 3 * d);
    for r in 0..pairs.len() {
        let row = x.row_mut(r);
        for k in 0..d {
            let (a, b) = (u.at(r, k), v.at(r, k));
            row[k] = a;
            row[d + k] = b;
            row[2 * d + k] = (a - b).abs();
        }
    }
    x
}

/// Fits a probe on precomputed features with full-batch AdamW on the
/// binary cross-entropy.
pub fn fit_probe(features: &Mat, labels: &[bool], config: &ProbeConfig) -> Result<Probe, ProbeError> {
    if labels.is_empty() {
        return Err(ProbeError::Empty);
    }
    if labels.iter().all(|&l| l) {
        return Err(ProbeError::SingleClass("positive"));
    }
    if labels.iter().all(|&l| !l) {
        return Err(ProbeError::SingleClass("negative"));
    }
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = Mat::uniform(features.cols, 1, 0.01, &mut rng);
    let mut b = Mat::zeros(1, 1);
    let adam = AdamWConfig { weight_decay: config.weight_decay, ..AdamWConfig::default() };
    let mut opt = AdamW::new(adam, [w.shape(), b.shape()]);
    for _ in 0..config.epochs {
        let mut t = Tape::new();
        let x = t.leaf(features.clone());
        let wv = t.leaf(w.clone());
        let bv = t.leaf(b.clone());
        let z = t.matmul(x, wv);
        let z = t.add_row(z, bv);
        let loss = t.bce_with_logits(z, &y);
        let mut g = t.backward(loss);
        let grads = [g.take(wv).expect("weight grad"), g.take(bv).expect("bias grad")];
        opt.step(&mut [&mut w, &mut b], &grads, &[true, false], config.lr);
    }
    Ok(Probe { weights: w.data, bias: b.data[0] })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinetuneReport {
    pub train: ClassMetrics,
    pub test: ClassMetrics,
}

/// Trains a probe on `train` over the (frozen) encoders of `model` and
/// scores it on both splits.
pub fn finetune_classifier(
    model: &CnmlModel,
    train: &[LabeledPair],
    test: &[LabeledPair],
    config: &ProbeConfig,
) -> Result<(Probe, FinetuneReport), ProbeError> {
    let xtr = pair_features(model, train);
    let ytr: Vec<bool> = train.iter().map(|p| p.label).collect();
    let probe = fit_probe(&xtr, &ytr, config)?;
    let xte = pair_features(model, test);
    let yte: Vec<bool> = test.iter().map(|p| p.label).collect();
    let report = FinetuneReport {
        train: ClassMetrics::from_predictions(&probe.predict(&xtr), &ytr),
        test: ClassMetrics::from_predictions(&probe.predict(&xte), &yte),
    };
    Ok((probe, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_matrix_arithmetic() {
        let m = ClassMetrics::from_counts(3, 1, 2, 4);
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 0.6);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.accuracy, 0.7);
    }

    #[test]
    fn predictions_count_correctly() {
        let m = ClassMetrics::from_predictions(&[true, true, false, false, true], &[true, false, true, false, true]);
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (2, 1, 1, 1));
    }

    #[test]
    fn separable_case_is_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let mut x = Mat::uniform(n, 4, 1.0, &mut rng);
        let labels: Vec<bool> = (0..n).map(|r| r % 2 == 0).collect();
        for (r, &l) in labels.iter().enumerate() {
            x.set(r, 2, if l { 1.0 } else { -1.0 });
        }
        let p = fit_probe(&x, &labels, &ProbeConfig::default()).unwrap();
        assert_eq!(ClassMetrics::from_predictions(&p.predict(&x), &labels).accuracy, 1.0);
    }

    #[test]
    fn single_class_is_an_error() {
        let x = Mat::zeros(3, 2);
        assert!(matches!(fit_probe(&x, &[true; 3], &ProbeConfig::default()), Err(ProbeError::SingleClass(_))));
        assert!(matches!(fit_probe(&x, &[false; 3], &ProbeConfig::default()), Err(ProbeError::SingleClass(_))));
        assert!(matches!(fit_probe(&Mat::zeros(0, 2), &[], &ProbeConfig::default()), Err(ProbeError::Empty)));
    }
}
