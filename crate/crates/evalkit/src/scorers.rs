//! Scoring functions for retrieval sets.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cnml_core::aiger::{parse_aag, to_labeled_graph, LabeledGraph};
use cnml_core::datagen::{RetrievalMode, RetrievalSet};
use cnml_neural::loss::normalize_rows;
use cnml_neural::{CnmlModel, Modality, Vocab};

use crate::metrics::{rank_of_positive, RankingResult};
use crate::similarity::{bag_of_keywords_similarity, levenshtein_similarity, wl_kernel_similarity};

/// Higher scores mean more similar to the set's query.
pub trait Scorer {
    fn name(&self) -> String;
    fn scores(&self, set: &RetrievalSet) -> Vec<f64>;
}

/// The specification in cross mode, the query circuit in intra mode.
pub fn query_text(set: &RetrievalSet) -> &str {
    match (set.mode, &set.query_circuit) {
        (RetrievalMode::Intra, Some(c)) => c,
        _ => &set.spec_text,
    }
}

pub fn evaluate_retrieval(scorer: &dyn Scorer, sets: &[RetrievalSet]) -> RankingResult {
    let ranks = sets
        .iter()
        .map(|s| {
            let scores = scorer.scores(s);
            assert_eq!(scores.len(), s.candidates.len(), "{} returned the wrong number of scores", scorer.name());
            (rank_of_positive(&scores, s.positive), s.candidates.len())
        })
        .collect();
    RankingResult::from_ranks(ranks)
}

/// Cosine of projected embeddings.
pub struct ModelScorer<'a> {
    pub name: String,
    pub model: &'a CnmlModel,
}

impl Scorer for ModelScorer<'_> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn scores(&self, set: &RetrievalSet) -> Vec<f64> {
        let query_modality = match set.mode {
            RetrievalMode::Cross => Modality::Spec,
            RetrievalMode::Intra => Modality::Circuit,
        };
        let q = normalize_rows(&self.model.embed(query_modality, &[query_text(set)]));
        let cands: Vec<&str> = set.candidates.iter().map(String::as_str).collect();
        let c = normalize_rows(&self.model.embed(Modality::Circuit, &cands));
        (0..c.rows).map(|r| c.row(r).iter().zip(q.row(0)).map(|(a, b)| a * b).sum()).collect()
    }
}

pub struct LevenshteinScorer;

impl Scorer for LevenshteinScorer {
    fn name(&self) -> String {
        "inverted-levenshtein".into()
    }

    fn scores(&self, set: &RetrievalSet) -> Vec<f64> {
        set.candidates.iter().map(|c| levenshtein_similarity(query_text(set), c)).collect()
    }
}

pub struct BagOfKeywordsScorer<'a> {
    pub vocab: &'a Vocab,
}

impl Scorer for BagOfKeywordsScorer<'_> {
    fn name(&self) -> String {
        "bag-of-keywords".into()
    }

    fn scores(&self, set: &RetrievalSet) -> Vec<f64> {
        set.candidates.iter().map(|c| bag_of_keywords_similarity(query_text(set), c, self.vocab)).collect()
    }
}

/// Weisfeiler–Lehman kernel over circuit graphs; texts that do not parse as
/// circuits score 0.
pub struct WlScorer {
    pub h: usize,
}

fn graph_of(text: &str) -> Option<LabeledGraph> {
    parse_aag(text).ok().map(|c| to_labeled_graph(&c))
}

impl Scorer for WlScorer {
    fn name(&self) -> String {
        "weisfeiler-lehman".into()
    }

    fn scores(&self, set: &RetrievalSet) -> Vec<f64> {
        let Some(q) = graph_of(query_text(set)) else { return vec![0.0; set.candidates.len()] };
        set.candidates
            .iter()
            .map(|c| graph_of(c).map_or(0.0, |g| wl_kernel_similarity(&q, &g, self.h)))
            .collect()
    }
}

/// Independent uniform scores; deterministic for a given seed and call order.
pub struct RandomScorer {
    rng: RefCell<ChaCha8Rng>,
}

impl RandomScorer {
    pub fn new(seed: u64) -> Self {
        RandomScorer { rng: RefCell::new(ChaCha8Rng::seed_from_u64(seed)) }
    }
}

impl Scorer for RandomScorer {
    fn name(&self) -> String {
        "random".into()
    }

    fn scores(&self, set: &RetrievalSet) -> Vec<f64> {
        let mut rng = self.rng.borrow_mut();
        set.candidates.iter().map(|_| rng.gen::<f64>()).collect()
    }
}
