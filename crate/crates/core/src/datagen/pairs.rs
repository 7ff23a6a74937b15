use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ltl::{generate_pattern_spec, SpecGenConfig};

use super::external::{synthesize_external, ExternalSynth};
use super::templates::{random_circuit, realize};
use super::{DatagenError, OracleBudget, PairRecord, Provenance, Source};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairGenConfig {
    pub count: usize,
    pub spec: SpecGenConfig,
    /// Probability that an output no guarantee names is driven by
    /// unrelated logic instead of FALSE.
    pub noise: f64,
    /// Fraction of records for which rejection sampling is tried before
    /// the templates.
    pub sampled_fraction: f64,
    pub sample_attempts: usize,
    pub sample_max_latches: usize,
    pub sample_max_gates: usize,
    pub template_attempts: usize,
    /// Keep at most one record per flattened specification.
    pub unique_specs: bool,
    pub workers: usize,
    pub oracle: OracleBudget,
    pub external: Option<ExternalSynth>,
}

impl Default for PairGenConfig {
    fn default() -> Self {
        PairGenConfig {
            count: 1000,
            spec: SpecGenConfig::default(),
            noise: 0.5,
            sampled_fraction: 0.0,
            sample_attempts: 200,
            sample_max_latches: 2,
            sample_max_gates: 6,
            template_attempts: 4,
            unique_specs: true,
            workers: 1,
            oracle: OracleBudget::default(),
            external: None,
        }
    }
}

impl PairGenConfig {
    pub fn validate(&self) -> Result<(), DatagenError> {
        self.spec.validate()?;
        if self.count == 0 {
            return Err(DatagenError::Config("`count` must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) || !(0.0..=1.0).contains(&self.sampled_fraction) {
            return Err(DatagenError::Config("probabilities must lie in [0, 1]".into()));
        }
        if self.template_attempts == 0 && self.sampled_fraction < 1.0 && self.external.is_none() {
            return Err(DatagenError::Config("`template_attempts` must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenReport {
    pub emitted: usize,
    pub attempts: usize,
    pub discarded_unrealized: usize,
    pub discarded_duplicate: usize,
    pub template: usize,
    pub sampled: usize,
    pub external: usize,
}

enum Attempt {
    Pair(PairRecord),
    Unrealized,
}

fn attempt(config: &PairGenConfig, seed: u64) -> Result<Attempt, DatagenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ps = generate_pattern_spec(&config.spec, &mut rng)?;
    let spec = ps.spec();
    let f = spec.flatten();
    let provenance = |source| Provenance {
        patterns: ps.pattern_names(),
        instances: Some(ps.clone()),
        seed,
        source,
        augmentations: vec![],
    };
    if let Some(ext) = &config.external {
        match synthesize_external(&spec, ext, &config.oracle) {
            Ok(c) => return Ok(Attempt::Pair(PairRecord::new(spec, c, provenance(Source::External), true))),
            Err(e) => log::debug!("external synthesis failed for seed {seed}: {e}"),
        }
    }
    let (inputs, outputs) = (config.spec.inputs, config.spec.outputs);
    let sample_first = rng.gen_bool(config.sampled_fraction);
    let sample = |rng: &mut ChaCha8Rng| -> Result<Option<PairRecord>, DatagenError> {
        for _ in 0..config.sample_attempts {
            let c = random_circuit(inputs, outputs, config.sample_max_latches, config.sample_max_gates, rng)?;
            if config.oracle.satisfies(&c, &f)? == Some(true) {
                return Ok(Some(PairRecord::new(spec.clone(), c, provenance(Source::Sampled), true)));
            }
        }
        Ok(None)
    };
    if sample_first {
        if let Some(r) = sample(&mut rng)? {
            return Ok(Attempt::Pair(r));
        }
    }
    for _ in 0..config.template_attempts {
        let c = realize(&ps, inputs, outputs, config.noise, &mut rng)?;
        if config.oracle.satisfies(&c, &f)? == Some(true) {
            return Ok(Attempt::Pair(PairRecord::new(spec, c, provenance(Source::Template), true)));
        }
    }
    if !sample_first {
        if let Some(r) = sample(&mut rng)? {
            return Ok(Attempt::Pair(r));
        }
    }
    Ok(Attempt::Unrealized)
}

fn run_block(config: &PairGenConfig, seeds: &[u64]) -> Result<Vec<Attempt>, DatagenError> {
    let workers = config.workers.max(1).min(seeds.len().max(1));
    if workers == 1 {
        return seeds.iter().map(|&s| attempt(config, s)).collect();
    }
    let chunk = seeds.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&s| attempt(config, s)).collect::<Result<Vec<_>, _>>()))
            .collect();
        let mut out = Vec::with_capacity(seeds.len());
        for h in handles {
            out.extend(h.join().expect("generation worker panicked")?);
        }
        Ok(out)
    })
}

/// Generates `config.count` verified pairs. Every record's own seed is
/// stored in its provenance, so any single record can be replayed.
pub fn generate_pairs<R: Rng + ?Sized>(
    config: &PairGenConfig,
    rng: &mut R,
) -> Result<(Vec<PairRecord>, GenReport), DatagenError> {
    config.validate()?;
    let mut report = GenReport::default();
    let mut out = Vec::with_capacity(config.count);
    let mut seen = HashSet::new();
    let max_attempts = 20 * config.count + 100;
    while out.len() < config.count && report.attempts < max_attempts {
        let block = (config.count - out.len()).max(config.workers.max(1)) + 8;
        let seeds: Vec<u64> = (0..block).map(|_| rng.gen()).collect();
        for a in run_block(config, &seeds)? {
            report.attempts += 1;
            if out.len() == config.count {
                break;
            }
            match a {
                Attempt::Unrealized => report.discarded_unrealized += 1,
                Attempt::Pair(r) => {
                    if config.unique_specs && !seen.insert(r.spec_text().to_string()) {
                        report.discarded_duplicate += 1;
                        continue;
                    }
                    match r.provenance.source {
                        Source::Template => report.template += 1,
                        Source::Sampled => report.sampled += 1,
                        Source::External => report.external += 1,
                    }
                    out.push(r);
                }
            }
        }
    }
    report.emitted = out.len();
    if report.discarded_unrealized > 0 {
        log::info!("discarded {} specifications without a verified circuit", report.discarded_unrealized);
    }
    if out.len() < config.count {
        log::warn!("generated {} of {} requested pairs", out.len(), config.count);
    }
    Ok((out, report))
}
