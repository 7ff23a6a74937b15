//! Embedding-space distribution reports and metric tables.

use serde::{Deserialize, Serialize};

use cnml_neural::loss::normalize_rows;
use cnml_neural::probe::LabeledPair;
use cnml_neural::{CnmlModel, Modality};

use crate::metrics::RankingResult;

/// Density histogram over [-1, 1]: `densities[k]` times the bin width is the
/// fraction of values in bin `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub count: usize,
    pub mean: f64,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let width = 2.0 / bins as f64;
        let edges = (0..=bins).map(|k| -1.0 + k as f64 * width).collect();
        let mut counts = vec![0usize; bins];
        for &v in values {
            let k = (((v.clamp(-1.0, 1.0) + 1.0) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let n = values.len();
        let densities = counts.iter().map(|&c| if n == 0 { 0.0 } else { c as f64 / (n as f64 * width) }).collect();
        let mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
        Histogram { edges, densities, count: n, mean }
    }

    pub fn integral(&self) -> f64 {
        self.densities.iter().zip(self.edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub positive: Histogram,
    pub negative: Histogram,
    /// Cosine of circuit `i` (row) against specification `j` (column) for
    /// one batch of positive pairs.
    pub heatmap: Vec<Vec<f64>>,
}

fn cosines(model: &CnmlModel, circuits: &[&str], specs: &[&str]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let u = normalize_rows(&model.embed(Modality::Circuit, circuits));
    let v = normalize_rows(&model.embed(Modality::Spec, specs));
    let full = (0..u.rows)
        .map(|i| (0..v.rows).map(|j| u.row(i).iter().zip(v.row(j)).map(|(a, b)| a * b).sum()).collect())
        .collect::<Vec<Vec<f64>>>();
    let diag = (0..u.rows.min(v.rows)).map(|i| full[i][i]).collect();
    (full, diag)
}

/// Cosine similarity distributions of satisfied and violated pairs, plus
/// the full similarity matrix of the first `batch` positive pairs.
pub fn embedding_space_report(model: &CnmlModel, pairs: &[LabeledPair], bins: usize, batch: usize) -> EmbeddingReport {
    let sims: Vec<f64> = pairs
        .chunks(64)
        .flat_map(|chunk| {
            let c: Vec<&str> = chunk.iter().map(|p| p.aag_text.as_str()).collect();
            let s: Vec<&str> = chunk.iter().map(|p| p.spec_text.as_str()).collect();
            let u = normalize_rows(&model.embed(Modality::Circuit, &c));
            let v = normalize_rows(&model.embed(Modality::Spec, &s));
            (0..u.rows).map(move |i| u.row(i).iter().zip(v.row(i)).map(|(a, b)| a * b).sum::<f64>()).collect::<Vec<_>>()
        })
        .collect();
    let split = |label: bool| -> Vec<f64> {
        pairs.iter().zip(&sims).filter(|(p, _)| p.label == label).map(|(_, &s)| s).collect()
    };
    let positives: Vec<&LabeledPair> = pairs.iter().filter(|p| p.label).take(batch).collect();
    let c: Vec<&str> = positives.iter().map(|p| p.aag_text.as_str()).collect();
    let s: Vec<&str> = positives.iter().map(|p| p.spec_text.as_str()).collect();
    let (heatmap, _) = cosines(model, &c, &s);
    EmbeddingReport { positive: Histogram::new(&split(true), bins), negative: Histogram::new(&split(false), bins), heatmap }
}

/// Method × {MRR, MR, R@1%, R@10%}.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<(String, RankingResult)>,
}

impl MetricsTable {
    pub fn push(&mut self, method: impl Into<String>, r: RankingResult) {
        self.rows.push((method.into(), r));
    }

    pub fn get(&self, method: &str) -> Option<&RankingResult> {
        self.rows.iter().find(|(m, _)| m == method).map(|(_, r)| r)
    }

    /// Tab-separated text, one line per method.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("method\tMRR\tMR\tR@1%\tR@10%\n");
        for (m, r) in &self.rows {
            out.push_str(&format!(
                "{m}\t{:.4}\t{:.2}\t{:.1}\t{:.1}\n",
                r.mrr,
                r.mr,
                100.0 * r.r_at_1,
                100.0 * r.r_at_10
            ));
        }
        out
    }
}
