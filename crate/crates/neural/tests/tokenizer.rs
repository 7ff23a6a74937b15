use std::collections::HashMap;

use cnml_core::datagen::{generate_pairs, PairGenConfig};
use cnml_neural::train::build_vocab;
use cnml_neural::tokenize;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn spec_tokenization_has_no_collisions() {
    let config = PairGenConfig { count: 600, ..PairGenConfig::default() };
    let (pairs, _) = generate_pairs(&config, &mut ChaCha8Rng::seed_from_u64(17)).unwrap();
    let vocab = build_vocab(&pairs, None);
    let mut seen: HashMap<Vec<usize>, &str> = HashMap::new();
    let mut checked = 0;
    for p in &pairs {
        let t = tokenize(p.spec_text(), &vocab, 256);
        if t.truncated {
            continue;
        }
        checked += 1;
        if let Some(other) = seen.insert(t.ids, p.spec_text()) {
            assert_eq!(other, p.spec_text(), "two specifications share a token sequence");
        }
    }
    assert!(checked > 500, "only {checked} untruncated specs");
}
