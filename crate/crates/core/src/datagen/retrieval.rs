use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aiger::{parse_aag, render_aag};
use crate::ltl::parse_ltl;

use super::templates::realize;
use super::{DatagenError, OracleBudget, PairRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetrievalMode {
    /// Specification query, circuit candidates.
    Cross,
    /// Circuit query; the positive is another circuit satisfying the
    /// query circuit's specification.
    Intra,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalSet {
    pub mode: RetrievalMode,
    /// The specification that decides positives (the query in cross mode).
    pub spec_text: String,
    /// The query circuit in intra mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_circuit: Option<String>,
    pub candidates: Vec<String>,
    pub positive: usize,
    /// Index of the source pair in the mined dataset.
    pub source: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MineConfig {
    pub set_size: usize,
    pub mode: RetrievalMode,
    pub count: usize,
    /// Only pairs whose specification has at least this many guarantees
    /// become queries.
    pub min_guarantees: usize,
    pub alternate_attempts: usize,
    pub noise: f64,
    pub oracle: OracleBudget,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            set_size: 100,
            mode: RetrievalMode::Cross,
            count: 99,
            min_guarantees: 1,
            alternate_attempts: 50,
            noise: 0.5,
            oracle: OracleBudget::default(),
        }
    }
}

/// A different circuit realizing the same pattern instances.
fn alternate<R: Rng + ?Sized>(
    p: &PairRecord,
    config: &MineConfig,
    rng: &mut R,
) -> Result<Option<String>, DatagenError> {
    let Some(ps) = &p.provenance.instances else { return Ok(None) };
    let f = p.flattened();
    for _ in 0..config.alternate_attempts {
        let c = realize(ps, p.circuit.num_inputs(), p.circuit.num_outputs(), config.noise, rng)?;
        let text = render_aag(&c);
        if text != p.aag_text() && config.oracle.satisfies(&c, &f)? == Some(true) {
            return Ok(Some(text));
        }
    }
    Ok(None)
}

/// Mines `config.count` retrieval sets of `config.set_size` candidates in
/// which exactly one candidate satisfies the deciding specification; every
/// distractor is oracle-verified to violate it.
pub fn mine_retrieval_sets<R: Rng + ?Sized>(
    pairs: &[PairRecord],
    config: &MineConfig,
    rng: &mut R,
) -> Result<Vec<RetrievalSet>, DatagenError> {
    if config.set_size < 2 {
        return Err(DatagenError::Config("retrieval sets need at least two candidates".into()));
    }
    if pairs.len() < config.set_size {
        return Err(DatagenError::InsufficientPairs { needed: config.set_size, available: pairs.len() });
    }
    let mut queries: Vec<usize> =
        (0..pairs.len()).filter(|&k| pairs[k].spec.guarantees.len() >= config.min_guarantees).collect();
    queries.shuffle(rng);
    let mut sets = Vec::with_capacity(config.count);
    for &q in &queries {
        if sets.len() == config.count {
            break;
        }
        let p = &pairs[q];
        let f = p.flattened();
        let (query_circuit, positive_text) = match config.mode {
            RetrievalMode::Cross => (None, p.aag_text().to_string()),
            RetrievalMode::Intra => match alternate(p, config, rng)? {
                Some(alt) => (Some(p.aag_text().to_string()), alt),
                None => continue,
            },
        };
        let mut others: Vec<usize> = (0..pairs.len()).filter(|&k| k != q).collect();
        others.shuffle(rng);
        let mut distractors: Vec<String> = Vec::with_capacity(config.set_size - 1);
        for k in others {
            if distractors.len() + 1 == config.set_size {
                break;
            }
            let text = pairs[k].aag_text();
            if text == positive_text || text == p.aag_text() || distractors.iter().any(|d| d == text) {
                continue;
            }
            if config.oracle.satisfies(&pairs[k].circuit, &f)? == Some(false) {
                distractors.push(text.to_string());
            }
        }
        if distractors.len() + 1 < config.set_size {
            log::debug!("query {q}: only {} verified distractors", distractors.len());
            continue;
        }
        let positive = rng.gen_range(0..config.set_size);
        distractors.insert(positive, positive_text);
        sets.push(RetrievalSet {
            mode: config.mode,
            spec_text: p.spec_text().to_string(),
            query_circuit,
            candidates: distractors,
            positive,
            source: q,
        });
    }
    if sets.len() < config.count {
        return Err(DatagenError::InsufficientDistractors { wanted: config.count, found: sets.len() });
    }
    Ok(sets)
}

/// Re-checks that exactly the recorded positive satisfies the set's
/// specification.
pub fn validate_retrieval_set(set: &RetrievalSet, oracle: &OracleBudget) -> Result<bool, DatagenError> {
    let f = parse_ltl(&set.spec_text)?;
    for (k, text) in set.candidates.iter().enumerate() {
        let sat = oracle.satisfies(&parse_aag(text)?, &f)?;
        if sat != Some(k == set.positive) {
            return Ok(false);
        }
    }
    if let Some(q) = &set.query_circuit {
        if oracle.satisfies(&parse_aag(q)?, &f)? != Some(true) || set.candidates.contains(q) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_pairs, PairGenConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool(n: usize) -> Vec<PairRecord> {
        let config = PairGenConfig { count: n, ..PairGenConfig::default() };
        generate_pairs(&config, &mut ChaCha8Rng::seed_from_u64(21)).unwrap().0
    }

    #[test]
    fn cross_sets_have_one_positive() {
        let pairs = pool(30);
        let config = MineConfig { set_size: 5, count: 6, ..MineConfig::default() };
        let sets = mine_retrieval_sets(&pairs, &config, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(sets.len(), 6);
        for s in &sets {
            assert_eq!(s.candidates.len(), 5);
            assert_eq!(s.candidates[s.positive], pairs[s.source].aag_text());
            assert!(validate_retrieval_set(s, &config.oracle).unwrap());
        }
    }

    #[test]
    fn intra_sets_use_alternate_circuits() {
        let pairs = pool(30);
        let config = MineConfig { set_size: 5, count: 4, mode: RetrievalMode::Intra, ..MineConfig::default() };
        let sets = mine_retrieval_sets(&pairs, &config, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        for s in &sets {
            let q = s.query_circuit.as_deref().unwrap();
            assert_eq!(q, pairs[s.source].aag_text());
            assert_ne!(s.candidates[s.positive], q);
            assert!(validate_retrieval_set(s, &config.oracle).unwrap());
        }
    }

    #[test]
    fn too_many_sets_requested() {
        let pairs = pool(6);
        let config = MineConfig { set_size: 5, count: 50, ..MineConfig::default() };
        assert!(matches!(
            mine_retrieval_sets(&pairs, &config, &mut ChaCha8Rng::seed_from_u64(1)),
            Err(DatagenError::InsufficientDistractors { wanted: 50, .. })
        ));
    }

    #[test]
    fn tampered_set_fails_validation() {
        let pairs = pool(20);
        let config = MineConfig { set_size: 4, count: 1, ..MineConfig::default() };
        let mut set = mine_retrieval_sets(&pairs, &config, &mut ChaCha8Rng::seed_from_u64(7)).unwrap().remove(0);
        set.positive = (set.positive + 1) % 4;
        assert!(!validate_retrieval_set(&set, &config.oracle).unwrap());
    }
}
