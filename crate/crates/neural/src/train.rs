//! Gradients of the full objective and the training loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use cnml_core::datagen::{build_batches, DatagenError, FilterMode, OracleBudget, PairRecord, VerdictCache};

use crate::loss::{cosine_matrix, tape_contrastive, tape_regularizer, tape_similarity, InvTau};
use crate::model::{CnmlModel, Modality, ModelConfig};
use crate::optim::{AdamW, AdamWConfig, Schedule};
use crate::tape::Tape;
use crate::tensor::Mat;
use crate::vocab::Vocab;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F64,
    F32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
    pub batch_size: usize,
    pub accumulation: usize,
    pub lambda: f64,
    pub tau: f64,
    pub learnable_tau: bool,
    pub seed: u64,
    pub precision: Precision,
    #[serde(serialize_with = "ser_filter", deserialize_with = "de_filter")]
    pub batch_filter: FilterMode,
    pub oracle: OracleBudget,
    pub log_every: usize,
}

fn ser_filter<S: Serializer>(f: &FilterMode, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_string())
}

fn de_filter<'de, D: Deserializer<'de>>(d: D) -> Result<FilterMode, D::Error> {
    String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    /// Settings sized for a single CPU core.
    pub fn desk() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 0.01,
            warmup_steps: 200,
            total_steps: 2000,
            batch_size: 32,
            accumulation: 1,
            lambda: 0.25,
            tau: 0.07,
            learnable_tau: false,
            seed: 0,
            precision: Precision::F64,
            batch_filter: FilterMode::Oracle,
            oracle: OracleBudget::default(),
            log_every: 50,
        }
    }

    /// The published large-scale hyperparameters.
    pub fn paper_scale() -> Self {
        let mut model = ModelConfig::default();
        model.encoder.d_proj = 1024;
        TrainConfig {
            model,
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 0.01,
            warmup_steps: 12_000,
            total_steps: 162_500,
            batch_size: 128,
            accumulation: 2,
            lambda: 0.25,
            tau: 0.07,
            learnable_tau: false,
            seed: 0,
            precision: Precision::F64,
            batch_filter: FilterMode::Oracle,
            oracle: OracleBudget::default(),
            log_every: 100,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.model.encoder.validate()?;
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err("lr must be finite and non-negative".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err("betas must lie in [0, 1)".into());
        }
        if !(self.tau > 0.0) {
            return Err("tau must be positive".into());
        }
        if self.lambda < 0.0 || self.weight_decay < 0.0 {
            return Err("lambda and weight_decay must be non-negative".into());
        }
        if self.batch_size < 2 {
            return Err("batch_size must be at least 2".into());
        }
        if self.accumulation == 0 {
            return Err("accumulation must be positive".into());
        }
        if self.warmup_steps > self.total_steps {
            return Err("warmup_steps exceeds total_steps".into());
        }
        if self.precision != Precision::F64 {
            return Err("only f64 precision is implemented".into());
        }
        Ok(())
    }

    pub fn schedule(&self) -> Schedule {
        Schedule { lr: self.lr, warmup: self.warmup_steps, total: self.total_steps }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DatagenError),
    #[error("non-finite loss at step {step} ({detail})")]
    Diverged { step: usize, detail: String, last_good: Box<CnmlModel> },
}

/// One batch as token sequences: `(spec, circuit)` per row.
pub type TokenBatch<'a> = [(&'a [usize], &'a [usize])];

/// Frozen cosine matrices of the anchor model on a batch.
pub fn anchor_cosines(anchor: &CnmlModel, batch: &TokenBatch) -> [Mat; 2] {
    let specs: Vec<&[usize]> = batch.iter().map(|b| b.0).collect();
    let circuits: Vec<&[usize]> = batch.iter().map(|b| b.1).collect();
    [
        cosine_matrix(&anchor.encoder(Modality::Spec).encode_many(&specs)),
        cosine_matrix(&anchor.encoder(Modality::Circuit).encode_many(&circuits)),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub l_ce: f64,
    pub l_rr: f64,
    /// Per encoder, per tensor.
    pub params: Vec<Vec<Mat>>,
    pub log_tau: f64,
}

/// Objective value and exact gradients for one batch. `anchor` holds the
/// frozen cosine matrices (spec, circuit) when the regularizer is active.
pub fn gradients(
    model: &CnmlModel,
    batch: &TokenBatch,
    anchor: Option<&[Mat; 2]>,
    lambda: f64,
    learnable_tau: bool,
) -> Gradients {
    let mut tape = Tape::new();
    let bound: Vec<_> = model.encoders.iter().map(|e| e.bind(&mut tape)).collect();
    let specs: Vec<&[usize]> = batch.iter().map(|b| b.0).collect();
    let circuits: Vec<&[usize]> = batch.iter().map(|b| b.1).collect();
    let (si, ci) = (model.encoder_index(Modality::Spec), model.encoder_index(Modality::Circuit));
    let v = model.encoders[si].encode_batch(&mut tape, &bound[si], &specs);
    let u = model.encoders[ci].encode_batch(&mut tape, &bound[ci], &circuits);
    let tau_leaf = learnable_tau.then(|| tape.leaf(Mat::scalar(model.log_tau)));
    let inv_tau = match tau_leaf {
        Some(t) => {
            let neg = tape.scale(t, -1.0);
            InvTau::Var(tape.exp(neg))
        }
        None => InvTau::Fixed(1.0 / model.tau()),
    };
    let s = tape_similarity(&mut tape, u, v, inv_tau);
    let l_ce = tape_contrastive(&mut tape, s);
    let (loss, l_rr) = match anchor {
        Some([spec_cos, circ_cos]) => {
            let rs = tape_regularizer(&mut tape, v, spec_cos);
            let rc = tape_regularizer(&mut tape, u, circ_cos);
            let sum = tape.add(rs, rc);
            let rr = tape.scale(sum, 0.5);
            if lambda == 0.0 {
                (l_ce, tape.scalar(rr))
            } else {
                let weighted = tape.scale(rr, lambda);
                (tape.add(l_ce, weighted), tape.scalar(rr))
            }
        }
        _ => (l_ce, 0.0),
    };
    let mut grads = tape.backward(loss);
    let params = model
        .encoders
        .iter()
        .zip(&bound)
        .map(|(e, b)| {
            b.vars
                .iter()
                .zip(&e.tensors)
                .map(|(&var, t)| grads.take(var).unwrap_or_else(|| Mat::zeros(t.rows, t.cols)))
                .collect()
        })
        .collect();
    let log_tau = tau_leaf.and_then(|t| grads.get(t)).map_or(0.0, |g| g.data[0]);
    Gradients { loss: tape.scalar(loss), l_ce: tape.scalar(l_ce), l_rr, params, log_tau }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub epoch: usize,
    pub loss: f64,
    pub l_ce: f64,
    pub l_rr: f64,
    pub lr: f64,
    pub tau: f64,
    pub batch: usize,
}

pub struct TrainOutcome {
    pub model: CnmlModel,
    pub log: Vec<StepLog>,
    pub epochs: usize,
    pub truncated_texts: usize,
}

/// Builds the shared vocabulary over every text of the dataset.
pub fn build_vocab(pairs: &[PairRecord], max_size: Option<usize>) -> Vocab {
    Vocab::build(pairs.iter().flat_map(|p| [p.spec_text(), p.aag_text()]), max_size)
}

/// Trains from a fresh initialization.
pub fn train(pairs: &[PairRecord], config: &TrainConfig, on_step: impl FnMut(&StepLog)) -> Result<TrainOutcome, TrainError> {
    config.validate().map_err(TrainError::Config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = build_vocab(pairs, config.model.vocab_max);
    let model = CnmlModel::init(&config.model, vocab, config.tau, &mut rng).map_err(TrainError::Config)?;
    train_from(model, pairs, config, &mut rng, on_step)
}

/// Continues training `model`; the regularizer anchors to `model` as given.
pub fn train_from(
    mut model: CnmlModel,
    pairs: &[PairRecord],
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
    mut on_step: impl FnMut(&StepLog),
) -> Result<TrainOutcome, TrainError> {
    config.validate().map_err(TrainError::Config)?;
    let anchor = (config.lambda != 0.0).then(|| model.clone());
    let mut truncated_texts = 0;
    let tokens: Vec<(Vec<usize>, Vec<usize>)> = pairs
        .iter()
        .map(|p| {
            let (s, c) = (model.tokens(p.spec_text()), model.tokens(p.aag_text()));
            truncated_texts += usize::from(s.truncated) + usize::from(c.truncated);
            (s.content().to_vec(), c.content().to_vec())
        })
        .collect();
    if truncated_texts > 0 {
        log::warn!("{truncated_texts} texts exceed max_len {} and were truncated", config.model.encoder.max_len);
    }
    let shapes: Vec<(usize, usize)> =
        model.encoders.iter().flat_map(|e| e.tensors.iter().map(Mat::shape)).collect();
    let decay: Vec<bool> =
        model.encoders.iter().flat_map(|e| (0..e.tensors.len()).map(move |k| e.decays(k))).collect();
    let adam = AdamWConfig { beta1: config.beta1, beta2: config.beta2, eps: 1e-8, weight_decay: config.weight_decay };
    let mut opt = AdamW::new(adam, shapes);
    let mut tau_opt = AdamW::new(AdamWConfig { weight_decay: 0.0, ..adam }, [(1, 1)]);
    let schedule = config.schedule();
    let mut cache = VerdictCache::new();
    let mut log = Vec::new();
    let mut step = 0;
    let mut epoch = 0;
    while step < config.total_steps {
        let batches = build_batches(pairs, config.batch_size, rng, config.batch_filter, &config.oracle, &mut cache)?;
        let usable: Vec<_> = batches.into_iter().filter(|b| b.len() >= 2).collect();
        if usable.is_empty() {
            return Err(TrainError::Config("no batch with at least two distinct pairs".into()));
        }
        for group in usable.chunks(config.accumulation) {
            if step >= config.total_steps {
                break;
            }
            let mut acc: Option<Gradients> = None;
            for b in group {
                let rows: Vec<(&[usize], &[usize])> =
                    b.members.iter().map(|&m| (tokens[m].0.as_slice(), tokens[m].1.as_slice())).collect();
                let anchors = anchor.as_ref().map(|a| anchor_cosines(a, &rows));
                let g = gradients(&model, &rows, anchors.as_ref(), config.lambda, config.learnable_tau);
                if !g.loss.is_finite() {
                    return Err(TrainError::Diverged {
                        step,
                        detail: format!("loss {} (ce {}, rr {})", g.loss, g.l_ce, g.l_rr),
                        last_good: Box::new(model),
                    });
                }
                acc = Some(match acc {
                    None => g,
                    Some(mut a) => {
                        a.loss += g.loss;
                        a.l_ce += g.l_ce;
                        a.l_rr += g.l_rr;
                        a.log_tau += g.log_tau;
                        for (ae, ge) in a.params.iter_mut().zip(&g.params) {
                            for (at, gt) in ae.iter_mut().zip(ge) {
                                at.add_assign(gt);
                            }
                        }
                        a
                    }
                });
            }
            let mut g = acc.expect("nonempty group");
            let k = 1.0 / group.len() as f64;
            let flat: Vec<Mat> = g
                .params
                .drain(..)
                .flatten()
                .map(|mut m| {
                    m.scale_assign(k);
                    m
                })
                .collect();
            if flat.iter().any(|m| !m.is_finite()) {
                return Err(TrainError::Diverged { step, detail: "non-finite gradient".into(), last_good: Box::new(model) });
            }
            let lr = schedule.lr_at(step);
            {
                let mut params: Vec<&mut Mat> = model.encoders.iter_mut().flat_map(|e| e.tensors.iter_mut()).collect();
                opt.step(&mut params, &flat, &decay, lr);
            }
            if config.learnable_tau {
                let mut t = Mat::scalar(model.log_tau);
                tau_opt.step(&mut [&mut t], &[Mat::scalar(g.log_tau * k)], &[false], lr);
                model.log_tau = t.data[0];
            }
            let entry = StepLog {
                step,
                epoch,
                loss: g.loss * k,
                l_ce: g.l_ce * k,
                l_rr: g.l_rr * k,
                lr,
                tau: model.tau(),
                batch: group.iter().map(|b| b.len()).sum(),
            };
            if config.log_every > 0 && step % config.log_every == 0 {
                log::info!("step {step} epoch {epoch} loss {:.4} ce {:.4} rr {:.5} lr {lr:.2e}", entry.loss, entry.l_ce, entry.l_rr);
            }
            on_step(&entry);
            log.push(entry);
            step += 1;
        }
        epoch += 1;
    }
    Ok(TrainOutcome { model, log, epochs: epoch, truncated_texts })
}
