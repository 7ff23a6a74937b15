use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DatagenError, OracleBudget, PairRecord};

/// How off-diagonal cells of a batch are screened for false negatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterMode {
    /// Textual deduplication only.
    None,
    /// Reject a candidate if it satisfies, or is satisfied by, a member.
    Oracle,
    /// Textual deduplication, then this many random off-diagonal cells of
    /// each finished batch are checked to estimate the false-negative rate.
    Sampled(usize),
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterMode::None => write!(f, "none"),
            FilterMode::Oracle => write!(f, "oracle"),
            FilterMode::Sampled(k) => write!(f, "sampled:{k}"),
        }
    }
}

impl FromStr for FilterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(FilterMode::None),
            "oracle" => Ok(FilterMode::Oracle),
            _ => s
                .strip_prefix("sampled:")
                .and_then(|k| k.parse().ok())
                .map(FilterMode::Sampled)
                .ok_or_else(|| format!("unknown filter mode `{s}` (none, oracle, sampled:<cells>)")),
        }
    }
}

/// A mini-batch, as indices into the pair list it was built from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub members: Vec<usize>,
    /// The pool ran out before the batch was full.
    pub short: bool,
    pub checked_cells: usize,
    pub false_negatives: usize,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Fraction of checked off-diagonal cells that turned out positive.
    pub fn false_negative_rate(&self) -> Option<f64> {
        (self.checked_cells > 0).then(|| self.false_negatives as f64 / self.checked_cells as f64)
    }

    pub fn records<'a>(&self, pairs: &'a [PairRecord]) -> Vec<&'a PairRecord> {
        self.members.iter().map(|&k| &pairs[k]).collect()
    }
}

/// Memoized verdicts of "circuit of pair a satisfies spec of pair b",
/// where `None` means the budget ran out.
#[derive(Clone, Debug, Default)]
pub struct VerdictCache {
    verdicts: HashMap<(usize, usize), Option<bool>>,
    pub checks: usize,
}

impl VerdictCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn satisfies(
        &mut self,
        pairs: &[PairRecord],
        circuit_of: usize,
        spec_of: usize,
        oracle: &OracleBudget,
    ) -> Result<Option<bool>, DatagenError> {
        if let Some(&v) = self.verdicts.get(&(circuit_of, spec_of)) {
            return Ok(v);
        }
        self.checks += 1;
        let v = oracle.satisfies(&pairs[circuit_of].circuit, &pairs[spec_of].flattened())?;
        self.verdicts.insert((circuit_of, spec_of), v);
        Ok(v)
    }
}

/// Greedy batch construction over a shuffled pool. A candidate joins the
/// open batch only if its circuit and specification texts are new to the
/// batch (and, in oracle mode, no cross pairing is positive); rejected
/// candidates stay in the pool for later batches.
pub fn build_batches<R: Rng + ?Sized>(
    pairs: &[PairRecord],
    batch_size: usize,
    rng: &mut R,
    filter: FilterMode,
    oracle: &OracleBudget,
    cache: &mut VerdictCache,
) -> Result<Vec<Batch>, DatagenError> {
    if batch_size == 0 {
        return Err(DatagenError::Config("batch size must be positive".into()));
    }
    if pairs.len() < batch_size {
        return Err(DatagenError::InsufficientPairs { needed: batch_size, available: pairs.len() });
    }
    let mut pool: Vec<usize> = (0..pairs.len()).collect();
    pool.shuffle(rng);
    let mut batches = Vec::new();
    while !pool.is_empty() {
        let mut members: Vec<usize> = Vec::with_capacity(batch_size);
        let mut circuits = HashSet::new();
        let mut specs = HashSet::new();
        let mut rest = Vec::with_capacity(pool.len());
        for &cand in &pool {
            if members.len() == batch_size {
                rest.push(cand);
                continue;
            }
            let p = &pairs[cand];
            if circuits.contains(p.aag_text()) || specs.contains(p.spec_text()) {
                rest.push(cand);
                continue;
            }
            if filter == FilterMode::Oracle {
                let mut clash = false;
                for &m in &members {
                    if cache.satisfies(pairs, cand, m, oracle)? != Some(false)
                        || cache.satisfies(pairs, m, cand, oracle)? != Some(false)
                    {
                        clash = true;
                        break;
                    }
                }
                if clash {
                    rest.push(cand);
                    continue;
                }
            }
            circuits.insert(p.aag_text());
            specs.insert(p.spec_text());
            members.push(cand);
        }
        if members.is_empty() {
            break;
        }
        let n = members.len();
        let mut batch = Batch { members, short: n < batch_size, checked_cells: 0, false_negatives: 0 };
        match filter {
            FilterMode::None => {}
            FilterMode::Oracle => batch.checked_cells = n * (n - 1),
            FilterMode::Sampled(cells) => {
                let off: Vec<(usize, usize)> =
                    (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
                for &(i, j) in off.choose_multiple(rng, cells.min(off.len())) {
                    batch.checked_cells += 1;
                    if cache.satisfies(pairs, batch.members[i], batch.members[j], oracle)? != Some(false) {
                        batch.false_negatives += 1;
                    }
                }
            }
        }
        if batch.short {
            log::info!("final batch holds {n} of {batch_size} pairs");
        }
        batches.push(batch);
        pool = rest;
    }
    Ok(batches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_pairs, PairGenConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool(n: usize, seed: u64) -> Vec<PairRecord> {
        let config = PairGenConfig { count: n, ..PairGenConfig::default() };
        generate_pairs(&config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().0
    }

    #[test]
    fn filter_mode_parsing() {
        for m in [FilterMode::None, FilterMode::Oracle, FilterMode::Sampled(12)] {
            assert_eq!(m.to_string().parse::<FilterMode>().unwrap(), m);
        }
        assert!("sampled:x".parse::<FilterMode>().is_err());
    }

    #[test]
    fn duplicate_circuits_never_share_a_batch() {
        let mut pairs = pool(12, 1);
        let twin = PairRecord::new(pairs[1].spec.clone(), pairs[0].circuit.clone(), pairs[1].provenance.clone(), false);
        pairs.push(twin);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let batches =
                build_batches(&pairs, 4, &mut rng, FilterMode::None, &OracleBudget::default(), &mut VerdictCache::new())
                    .unwrap();
            let total: usize = batches.iter().map(Batch::len).sum();
            assert_eq!(total, pairs.len());
            for b in &batches {
                let recs = b.records(&pairs);
                let c: HashSet<&str> = recs.iter().map(|r| r.aag_text()).collect();
                let s: HashSet<&str> = recs.iter().map(|r| r.spec_text()).collect();
                assert_eq!(c.len(), b.len());
                assert_eq!(s.len(), b.len());
            }
        }
    }

    #[test]
    fn oracle_mode_has_no_off_diagonal_positives() {
        let pairs = pool(40, 3);
        let oracle = OracleBudget::default();
        let mut cache = VerdictCache::new();
        let batches =
            build_batches(&pairs, 8, &mut ChaCha8Rng::seed_from_u64(5), FilterMode::Oracle, &oracle, &mut cache).unwrap();
        for b in &batches {
            for &i in &b.members {
                for &j in &b.members {
                    if i != j {
                        assert_eq!(oracle.satisfies(&pairs[i].circuit, &pairs[j].flattened()).unwrap(), Some(false));
                    }
                }
            }
            assert_eq!(b.false_negative_rate(), if b.len() > 1 { Some(0.0) } else { None });
        }
    }

    #[test]
    fn single_full_batch() {
        let pairs = pool(6, 8);
        let batches = build_batches(
            &pairs,
            6,
            &mut ChaCha8Rng::seed_from_u64(1),
            FilterMode::Sampled(100),
            &OracleBudget::default(),
            &mut VerdictCache::new(),
        )
        .unwrap();
        assert!(!batches[0].short);
        assert_eq!(batches[0].checked_cells, 30);
    }

    #[test]
    fn pool_smaller_than_batch() {
        let pairs = pool(3, 8);
        let r = build_batches(&pairs, 4, &mut ChaCha8Rng::seed_from_u64(1), FilterMode::None, &OracleBudget::default(), &mut VerdictCache::new());
        assert!(matches!(r, Err(DatagenError::InsufficientPairs { needed: 4, available: 3 })));
    }
}
