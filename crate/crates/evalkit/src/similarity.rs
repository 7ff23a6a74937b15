//! Non-neural similarity measures.

use std::collections::HashMap;

use cnml_core::aiger::{LabeledGraph, Polarity};
use cnml_neural::vocab::{token_ids, Vocab};

/// `1 − dist(a, b) / max(|a|, |b|)` over characters, with unit-cost edits.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let n = a.chars().count().max(b.chars().count());
    if n == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(a, b) as f64 / n as f64
}

fn cosine<K: std::hash::Hash + Eq>(a: &HashMap<K, usize>, b: &HashMap<K, usize>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, &x)| b.get(k).map(|&y| (x * y) as f64)).sum();
    let na = a.values().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
    let nb = b.values().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn counts(ids: impl IntoIterator<Item = usize>) -> HashMap<usize, usize> {
    let mut m = HashMap::new();
    for id in ids {
        *m.entry(id).or_default() += 1;
    }
    m
}

/// Cosine of token-frequency vectors under the shared vocabulary.
pub fn bag_of_keywords_similarity(a: &str, b: &str, vocab: &Vocab) -> f64 {
    cosine(&counts(token_ids(a, vocab)), &counts(token_ids(b, vocab)))
}

/// Label counts over rounds `0..=h` of Weisfeiler–Lehman refinement, with
/// one label dictionary shared by all `graphs`. A refined label is the
/// node's previous label with the sorted multisets of its operand and
/// consumer labels (edge polarity included).
pub fn wl_feature_counts(graphs: &[&LabeledGraph], h: usize) -> Vec<HashMap<usize, usize>> {
    let mut dict: HashMap<String, usize> = HashMap::new();
    let mut intern = |key: String| {
        let next = dict.len();
        *dict.entry(key).or_insert(next)
    };
    let mut features = vec![HashMap::new(); graphs.len()];
    let mut labels: Vec<Vec<usize>> = graphs
        .iter()
        .map(|g| g.labels.iter().map(|l| intern(format!("0|{}", l.name()))).collect())
        .collect();
    for round in 0..=h {
        if round > 0 {
            labels = graphs
                .iter()
                .zip(&labels)
                .map(|(g, prev)| {
                    let mut ins: Vec<Vec<(bool, usize)>> = vec![Vec::new(); g.node_count()];
                    let mut outs: Vec<Vec<(bool, usize)>> = vec![Vec::new(); g.node_count()];
                    for e in &g.edges {
                        let inv = e.polarity == Polarity::Inverted;
                        ins[e.to].push((inv, prev[e.from]));
                        outs[e.from].push((inv, prev[e.to]));
                    }
                    (0..g.node_count())
                        .map(|v| {
                            ins[v].sort_unstable();
                            outs[v].sort_unstable();
                            intern(format!("{round}|{}|{:?}|{:?}", prev[v], ins[v], outs[v]))
                        })
                        .collect()
                })
                .collect();
        }
        for (f, ls) in features.iter_mut().zip(&labels) {
            for &l in ls {
                *f.entry(l).or_default() += 1;
            }
        }
    }
    features
}

/// Cosine of the WL label-count vectors of two graphs.
pub fn wl_kernel_similarity(g1: &LabeledGraph, g2: &LabeledGraph, h: usize) -> f64 {
    let f = wl_feature_counts(&[g1, g2], h);
    cosine(&f[0], &f[1])
}
