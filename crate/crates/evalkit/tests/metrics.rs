use cnml_core::aiger::{parse_aag, render_aag, to_labeled_graph};
use cnml_core::datagen::{random_circuit, RetrievalMode, RetrievalSet};
use cnml_evalkit::{
    evaluate_retrieval, levenshtein_similarity, rank_of_positive, wl_kernel_similarity, LevenshteinScorer,
    RandomScorer, RankingResult, Scorer,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dummy_set(n: usize, positive: usize) -> RetrievalSet {
    RetrievalSet {
        mode: RetrievalMode::Cross,
        spec_text: "G o0".into(),
        query_circuit: None,
        candidates: (0..n).map(|k| format!("c{k}")).collect(),
        positive,
        source: 0,
    }
}

/// Expected MRR of a uniformly random rank among `n` is H_n / n; the
/// expected rank is (n + 1) / 2.
#[test]
fn random_scorer_matches_closed_form() {
    let n = 100;
    let h_n: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    let mrr_mean = h_n / n as f64;
    let inv_sq: f64 = (1..=n).map(|k| 1.0 / (k * k) as f64).sum::<f64>() / n as f64;
    let mrr_sd = (inv_sq - mrr_mean * mrr_mean).sqrt();
    let mr_mean = (n as f64 + 1.0) / 2.0;
    let mr_sd = ((n * n - 1) as f64 / 12.0).sqrt();
    assert!((mrr_mean - 0.0519).abs() < 1e-4);
    let trials = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let sets: Vec<RetrievalSet> = (0..trials).map(|_| dummy_set(n, rng.gen_range(0..n))).collect();
    let r = evaluate_retrieval(&RandomScorer::new(5), &sets);
    let se = |sd: f64| sd / (trials as f64).sqrt();
    assert!((r.mrr - mrr_mean).abs() <= 3.0 * se(mrr_sd), "MRR {} vs {mrr_mean}", r.mrr);
    assert!((r.mr - mr_mean).abs() <= 3.0 * se(mr_sd), "MR {} vs {mr_mean}", r.mr);
}

fn dp_levenshtein(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 0..=a.len() {
        d[i][0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

#[test]
fn levenshtein_agrees_with_reference_dp() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let alphabet: Vec<char> = "ab01 (G)&".chars().collect();
    for _ in 0..1000 {
        let s = |rng: &mut ChaCha8Rng| -> String {
            let n = rng.gen_range(0..15);
            (0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
        };
        let (a, b) = (s(&mut rng), s(&mut rng));
        let n = a.chars().count().max(b.chars().count());
        let want = if n == 0 { 1.0 } else { 1.0 - dp_levenshtein(&a, &b) as f64 / n as f64 };
        assert_eq!(levenshtein_similarity(&a, &b), want, "{a:?} {b:?}");
    }
}

#[test]
fn levenshtein_scorer_ranks_exact_copy_first() {
    let mut set = dummy_set(4, 2);
    set.candidates = vec!["G o1".into(), "F o0".into(), "G o0".into(), "X o0".into()];
    assert_eq!(rank_of_positive(&LevenshteinScorer.scores(&set), 2), 1);
}

proptest! {
    #[test]
    fn metric_identities(ranks in prop::collection::vec((1usize..=100, Just(100usize)), 1..50)) {
        let r = RankingResult::from_ranks(ranks);
        prop_assert!(r.mrr > 0.0 && r.mrr <= 1.0);
        prop_assert!(r.mr >= 1.0 && r.mr <= 100.0);
        prop_assert!(r.r_at_1 <= r.r_at_10);
    }

    #[test]
    fn rank_is_invariant_under_candidate_permutation(
        scores in prop::collection::vec(0u8..20, 2..30),
        pos_seed in any::<usize>(),
        perm_seed in any::<u64>(),
    ) {
        // Distinct scores keep the tie rule out of the comparison.
        let scores: Vec<f64> = scores.iter().enumerate().map(|(k, &s)| s as f64 + k as f64 * 1e-3).collect();
        let positive = pos_seed % scores.len();
        let mut perm: Vec<usize> = (0..scores.len()).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let mut permuted = vec![0.0; scores.len()];
        for (k, &p) in perm.iter().enumerate() {
            permuted[p] = scores[k];
        }
        prop_assert_eq!(rank_of_positive(&scores, positive), rank_of_positive(&permuted, perm[positive]));
    }

    #[test]
    fn wl_is_symmetric_and_permutation_invariant(seed in any::<u64>(), h in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_circuit(3, 2, 2, 5, &mut rng).unwrap();
        let b = random_circuit(3, 2, 2, 5, &mut rng).unwrap();
        let (ga, gb) = (to_labeled_graph(&a), to_labeled_graph(&b));
        let s1 = wl_kernel_similarity(&ga, &gb, h);
        prop_assert!((s1 - wl_kernel_similarity(&gb, &ga, h)).abs() < 1e-12);
        let mut perm: Vec<usize> = (0..ga.node_count()).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut rng);
        let pa = ga.permuted(&perm);
        prop_assert!((wl_kernel_similarity(&pa, &gb, h) - s1).abs() < 1e-12);
        prop_assert!((wl_kernel_similarity(&pa, &ga, h) - 1.0).abs() < 1e-12);
        let ta = render_aag(&a);
        prop_assert_eq!(parse_aag(&ta).unwrap(), a);
        prop_assert!((levenshtein_similarity(&ta, &render_aag(&b)) - levenshtein_similarity(&render_aag(&b), &ta)).abs() < 1e-15);
    }
}
