//! The bi-encoder: one encoder per modality, each ending in its own
//! projection into the shared similarity space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tape::{Tape, Var};
use crate::tensor::Mat;
use crate::vocab::{tokenize, Tokens, Vocab};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    Transformer,
    /// Mean of token embeddings followed by a one-layer MLP.
    Bag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub d_proj: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            kind: EncoderKind::Transformer,
            d_model: 64,
            layers: 2,
            heads: 4,
            d_ff: 128,
            max_len: 256,
            d_proj: 128,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.d_model == 0 || self.d_proj == 0 || self.max_len == 0 {
            return Err("d_model, d_proj, and max_len must be positive".into());
        }
        if self.kind == EncoderKind::Transformer && (self.heads == 0 || self.d_model % self.heads != 0) {
            return Err(format!("d_model {} is not divisible by {} heads", self.d_model, self.heads));
        }
        if self.kind == EncoderKind::Transformer && self.d_ff == 0 {
            return Err("d_ff must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    /// One encoder shared by both modalities.
    pub siamese: bool,
    pub vocab_max: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { encoder: EncoderConfig::default(), siamese: false, vocab_max: Some(4096) }
    }
}

/// The weights of one modality encoder, as named tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub vocab_size: usize,
    pub names: Vec<String>,
    pub tensors: Vec<Mat>,
}

/// Parameter leaves of one encoder on a tape.
pub struct Bound {
    pub vars: Vec<Var>,
}

fn xavier<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Mat {
    Mat::uniform(rows, cols, gain * (6.0 / (rows + cols) as f64).sqrt(), rng)
}

impl EncoderParams {
    pub fn init<R: Rng + ?Sized>(config: &EncoderConfig, vocab_size: usize, rng: &mut R) -> Self {
        let d = config.d_model;
        let mut p = EncoderParams { config: config.clone(), vocab_size, names: vec![], tensors: vec![] };
        let mut add = |name: String, m: Mat| {
            p.names.push(name);
            p.tensors.push(m);
        };
        add("embed".into(), Mat::uniform(vocab_size, d, 0.5, rng));
        match config.kind {
            EncoderKind::Transformer => {
                add("pos".into(), Mat::uniform(config.max_len, d, 0.1, rng));
                let residual = 1.0 / (2.0 * config.layers.max(1) as f64).sqrt();
                for l in 0..config.layers {
                    add(format!("l{l}.ln1.g"), Mat::filled(1, d, 1.0));
                    add(format!("l{l}.ln1.b"), Mat::zeros(1, d));
                    add(format!("l{l}.wqkv"), xavier(d, 3 * d, 1.0, rng));
                    add(format!("l{l}.wo"), xavier(d, d, residual, rng));
                    add(format!("l{l}.ln2.g"), Mat::filled(1, d, 1.0));
                    add(format!("l{l}.ln2.b"), Mat::zeros(1, d));
                    add(format!("l{l}.w1"), xavier(d, config.d_ff, 1.0, rng));
                    add(format!("l{l}.b1"), Mat::zeros(1, config.d_ff));
                    add(format!("l{l}.w2"), xavier(config.d_ff, d, residual, rng));
                    add(format!("l{l}.b2"), Mat::zeros(1, d));
                }
                add("lnf.g".into(), Mat::filled(1, d, 1.0));
            }
            EncoderKind::Bag => {
                add("mlp.w".into(), xavier(d, d, 1.0, rng));
                add("mlp.b".into(), Mat::zeros(1, d));
            }
        }
        add("proj".into(), xavier(d, config.d_proj, 1.0, rng));
        p
    }

    pub fn zeros_like(&self) -> Vec<Mat> {
        self.tensors.iter().map(|t| Mat::zeros(t.rows, t.cols)).collect()
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(Mat::len).sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Biases and normalization parameters are exempt from weight decay.
    pub fn decays(&self, k: usize) -> bool {
        let n = &self.names[k];
        !(n.ends_with(".g") || n.ends_with(".b") || n.ends_with(".b1") || n.ends_with(".b2"))
    }

    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound { vars: self.tensors.iter().map(|t| tape.leaf(t.clone())).collect() }
    }

    /// Pooled `n × d_model` summaries of a batch of token sequences; pads are
    /// never part of a sequence, so the mean runs over real tokens only.
    ///
    /// All tokens of the batch are stacked into one matrix so the dense
    /// layers run as single products; attention runs per sequence.
    pub fn pooled(&self, tape: &mut Tape, b: &Bound, seqs: &[&[usize]]) -> Var {
        let c = &self.config;
        let v = |name: &str| b.vars[self.index_of(name).unwrap_or_else(|| panic!("missing parameter {name}"))];
        let seqs: Vec<&[usize]> = seqs.iter().map(|s| &s[..s.len().min(c.max_len)]).collect();
        let mut spans = Vec::with_capacity(seqs.len());
        let mut ids = Vec::new();
        for s in &seqs {
            spans.push((ids.len(), s.len()));
            ids.extend_from_slice(s);
        }
        let x = tape.gather(v("embed"), &ids);
        let pool = |tape: &mut Tape, x: Var| {
            let rows: Vec<Var> = spans
                .iter()
                .map(|&(start, len)| {
                    let part = tape.slice_rows(x, start, len);
                    tape.mean_rows(part)
                })
                .collect();
            tape.stack_rows(&rows)
        };
        match c.kind {
            EncoderKind::Bag => {
                let m = pool(tape, x);
                let h = tape.matmul(m, v("mlp.w"));
                let h = tape.add_row(h, v("mlp.b"));
                tape.tanh(h)
            }
            EncoderKind::Transformer => {
                let d = c.d_model;
                let dh = d / c.heads;
                let positions: Vec<usize> = seqs.iter().flat_map(|s| 0..s.len()).collect();
                let pos = tape.gather(v("pos"), &positions);
                let mut x = tape.add(x, pos);
                for l in 0..c.layers {
                    let p = |s: &str| v(&format!("l{l}.{s}"));
                    let h = tape.layer_norm(x, p("ln1.g"), p("ln1.b"));
                    let qkv = tape.matmul(h, p("wqkv"));
                    let mut heads = Vec::with_capacity(c.heads);
                    for k in 0..c.heads {
                        let q = tape.slice_cols(qkv, k * dh, dh);
                        let kk = tape.slice_cols(qkv, d + k * dh, dh);
                        let vv = tape.slice_cols(qkv, 2 * d + k * dh, dh);
                        let mut outs = Vec::with_capacity(spans.len());
                        for &(start, len) in &spans {
                            let qs = tape.slice_rows(q, start, len);
                            let ks = tape.slice_rows(kk, start, len);
                            let vs = tape.slice_rows(vv, start, len);
                            let s = tape.matmul_t(qs, false, ks, true);
                            let s = tape.scale(s, 1.0 / (dh as f64).sqrt());
                            let a = tape.softmax(s);
                            outs.push(tape.matmul(a, vs));
                        }
                        heads.push(if outs.len() == 1 { outs[0] } else { tape.stack_rows(&outs) });
                    }
                    let o = if heads.len() == 1 { heads[0] } else { tape.concat_cols(&heads) };
                    let o = tape.matmul(o, p("wo"));
                    x = tape.add(x, o);
                    let h = tape.layer_norm(x, p("ln2.g"), p("ln2.b"));
                    let f = tape.matmul(h, p("w1"));
                    let f = tape.add_row(f, p("b1"));
                    let f = tape.gelu(f);
                    let f = tape.matmul(f, p("w2"));
                    let f = tape.add_row(f, p("b2"));
                    x = tape.add(x, f);
                }
                // No shift here: a bias shared by every token only pulls all
                // pooled vectors toward one direction.
                let zero = tape.leaf(Mat::zeros(1, d));
                let x = tape.layer_norm(x, v("lnf.g"), zero);
                pool(tape, x)
            }
        }
    }

    /// Projected `n × d_proj` embeddings of a batch of sequences.
    pub fn encode_batch(&self, tape: &mut Tape, b: &Bound, seqs: &[&[usize]]) -> Var {
        let pooled = self.pooled(tape, b, seqs);
        let proj = b.vars[self.index_of("proj").expect("projection")];
        tape.matmul(pooled, proj)
    }

    /// Projected embedding of one sequence, without recording gradients.
    pub fn encode(&self, ids: &[usize]) -> Vec<f64> {
        self.encode_many(&[ids]).data
    }

    pub fn encode_many(&self, seqs: &[&[usize]]) -> Mat {
        if seqs.is_empty() {
            return Mat::zeros(0, self.config.d_proj);
        }
        let mut tape = Tape::new();
        let b = self.bind(&mut tape);
        let out = self.encode_batch(&mut tape, &b, seqs);
        tape.value(out).clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modality {
    Spec,
    Circuit,
}

/// Two encoders (or one, in the siamese variant) and the temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct CnmlModel {
    pub config: ModelConfig,
    pub vocab: Vocab,
    /// `encoders[0]` embeds specifications; `encoders[1]`, when present,
    /// embeds circuits.
    pub encoders: Vec<EncoderParams>,
    /// Natural log of the temperature.
    pub log_tau: f64,
}

impl CnmlModel {
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, vocab: Vocab, tau: f64, rng: &mut R) -> Result<Self, String> {
        config.encoder.validate()?;
        if !(tau > 0.0) {
            return Err("temperature must be positive".into());
        }
        let n = if config.siamese { 1 } else { 2 };
        let encoders = (0..n).map(|_| EncoderParams::init(&config.encoder, vocab.len(), rng)).collect();
        Ok(CnmlModel { config: config.clone(), vocab, encoders, log_tau: tau.ln() })
    }

    pub fn tau(&self) -> f64 {
        self.log_tau.exp()
    }

    pub fn encoder_index(&self, m: Modality) -> usize {
        match m {
            Modality::Spec => 0,
            Modality::Circuit => self.encoders.len() - 1,
        }
    }

    pub fn encoder(&self, m: Modality) -> &EncoderParams {
        &self.encoders[self.encoder_index(m)]
    }

    pub fn tokens(&self, text: &str) -> Tokens {
        tokenize(text, &self.vocab, self.config.encoder.max_len)
    }

    /// Projected (unnormalized) embeddings, one row per text.
    pub fn embed(&self, m: Modality, texts: &[&str]) -> Mat {
        let toks: Vec<Tokens> = texts.iter().map(|t| self.tokens(t)).collect();
        let seqs: Vec<&[usize]> = toks.iter().map(Tokens::content).collect();
        let enc = self.encoder(m);
        let mut out = Mat::zeros(0, enc.config.d_proj);
        for chunk in seqs.chunks(64) {
            let part = enc.encode_many(chunk);
            out.rows += part.rows;
            out.data.extend_from_slice(&part.data);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.encoders.iter().map(EncoderParams::param_count).sum()
    }
}
