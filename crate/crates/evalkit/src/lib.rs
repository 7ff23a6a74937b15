//! Retrieval evaluation, similarity baselines, and embedding-space reports.

pub mod metrics;
pub mod report;
pub mod scorers;
pub mod similarity;

pub use metrics::{rank_of_positive, RankingResult};
pub use report::{embedding_space_report, EmbeddingReport, Histogram, MetricsTable};
pub use scorers::{
    evaluate_retrieval, BagOfKeywordsScorer, LevenshteinScorer, ModelScorer, RandomScorer, Scorer, WlScorer,
};
pub use similarity::{bag_of_keywords_similarity, levenshtein_similarity, wl_feature_counts, wl_kernel_similarity};
