//! Verified circuit/specification pairs: generation, augmentation,
//! contrastive batch construction, and retrieval benchmark mining.

mod augment;
mod batches;
mod external;
mod pairs;
mod retrieval;
mod templates;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::aiger::{parse_aag, render_aag, AigerError, Circuit};
use crate::ltl::{parse_ltl, AssumeGuaranteeSpec, LtlError, LtlFormula, PatternSpec};
use crate::verifier::{model_check, Limits, Verdict, VerifyError};

pub use augment::{augment_dataset, AugmentConfig, AugmentReport, PadMode};
pub use batches::{build_batches, Batch, FilterMode, VerdictCache};
pub use external::{synthesize_external, ExternalError, ExternalSynth};
pub use pairs::{generate_pairs, GenReport, PairGenConfig};
pub use retrieval::{mine_retrieval_sets, validate_retrieval_set, MineConfig, RetrievalMode, RetrievalSet};
pub use templates::{random_circuit, realize};

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error(transparent)]
    Aiger(#[from] AigerError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    External(#[from] ExternalError),
    #[error("template: {0}")]
    Template(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("need at least {needed} pairs, have {available}")]
    InsufficientPairs { needed: usize, available: usize },
    #[error("only {found} of {wanted} retrieval sets could be filled with verified distractors")]
    InsufficientDistractors { wanted: usize, found: usize },
    #[error("{path}:{line}: {message}")]
    Record { path: String, line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Model-checking budget used when the verifier acts as an oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleBudget {
    pub max_states: usize,
    pub timeout_ms: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        let l = Limits::default();
        OracleBudget { max_states: l.max_states, timeout_ms: l.timeout.as_millis() as u64 }
    }
}

impl OracleBudget {
    pub fn limits(&self) -> Limits {
        Limits { max_states: self.max_states, timeout: Duration::from_millis(self.timeout_ms), ..Limits::default() }
    }

    pub fn check(&self, c: &Circuit, f: &LtlFormula) -> Result<Verdict, VerifyError> {
        model_check(c, f, &self.limits())
    }

    /// `Some(true)` for Satisfies, `Some(false)` for Violates, `None` when
    /// the budget ran out.
    pub fn satisfies(&self, c: &Circuit, f: &LtlFormula) -> Result<Option<bool>, VerifyError> {
        Ok(match self.check(c, f)? {
            Verdict::Satisfies => Some(true),
            Verdict::Violates(_) => Some(false),
            Verdict::ResourceLimit(_) => None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Template,
    Sampled,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub patterns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<PatternSpec>,
    pub seed: u64,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub augmentations: Vec<String>,
}

/// A circuit together with a specification it satisfies.
#[derive(Clone, Debug, PartialEq)]
pub struct PairRecord {
    pub spec: AssumeGuaranteeSpec,
    pub circuit: Circuit,
    pub provenance: Provenance,
    pub verified: bool,
    spec_text: String,
    aag_text: String,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    spec_text: String,
    assumptions: Vec<String>,
    guarantees: Vec<String>,
    aag_text: String,
    provenance: Provenance,
    verified: bool,
}

impl PairRecord {
    pub fn new(spec: AssumeGuaranteeSpec, circuit: Circuit, provenance: Provenance, verified: bool) -> Self {
        let spec_text = spec.flatten_text();
        let aag_text = render_aag(&circuit);
        PairRecord { spec, circuit, provenance, verified, spec_text, aag_text }
    }

    /// The flattened specification in canonical syntax.
    pub fn spec_text(&self) -> &str {
        &self.spec_text
    }

    pub fn aag_text(&self) -> &str {
        &self.aag_text
    }

    pub fn flattened(&self) -> LtlFormula {
        self.spec.flatten()
    }

    pub fn to_json(&self) -> String {
        let line = RecordLine {
            spec_text: self.spec_text.clone(),
            assumptions: self.spec.assumptions.iter().map(|f| f.to_string()).collect(),
            guarantees: self.spec.guarantees.iter().map(|f| f.to_string()).collect(),
            aag_text: self.aag_text.clone(),
            provenance: self.provenance.clone(),
            verified: self.verified,
        };
        serde_json::to_string(&line).expect("record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let line: RecordLine = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let parse = |xs: &[String]| xs.iter().map(|s| parse_ltl(s)).collect::<Result<Vec<_>, _>>();
        let spec = AssumeGuaranteeSpec::new(
            parse(&line.assumptions).map_err(|e| e.to_string())?,
            parse(&line.guarantees).map_err(|e| e.to_string())?,
        );
        let circuit = parse_aag(&line.aag_text).map_err(|e| e.to_string())?;
        let rec = PairRecord::new(spec, circuit, line.provenance, line.verified);
        if rec.spec_text != line.spec_text {
            return Err(format!("spec_text does not match assumptions/guarantees: `{}`", line.spec_text));
        }
        Ok(rec)
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DatagenError> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatagenError> {
    read_lines(path, |s| serde_json::from_str(s).map_err(|e| e.to_string()))
}

fn read_lines<T>(path: &Path, parse: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, DatagenError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse(&line).map_err(|message| DatagenError::Record {
            path: path.display().to_string(),
            line: k + 1,
            message,
        })?);
    }
    Ok(out)
}

pub fn write_records(path: &Path, records: &[PairRecord]) -> Result<(), DatagenError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        writeln!(w, "{}", r.to_json())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<PairRecord>, DatagenError> {
    read_lines(path, PairRecord::from_json)
}
