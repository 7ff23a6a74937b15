//! Adapter for an external LTL synthesis tool run as a child process.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::aiger::{parse_aag, AigerError, Circuit};
use crate::ltl::AssumeGuaranteeSpec;
use crate::verifier::{Verdict, VerifyError};

use super::OracleBudget;

/// Placeholder in `args` replaced by the flattened specification. Without
/// it, the specification is written to the tool's standard input.
pub const SPEC_PLACEHOLDER: &str = "{spec}";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSynth {
    pub program: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn default_timeout() -> u64 {
    60_000
}

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("could not run `{program}`: {source}")]
    Spawn { program: String, source: std::io::Error },
    #[error("synthesis timed out after {0} ms")]
    Timeout(u64),
    #[error("synthesizer exited with {status}: {stderr}")]
    Failed { status: String, stderr: String },
    #[error("synthesizer output is not a valid aag circuit: {0}")]
    Parse(AigerError),
    #[error("synthesized circuit does not satisfy the specification ({0})")]
    Verification(String),
    #[error(transparent)]
    Oracle(#[from] VerifyError),
}

/// Runs the synthesizer on the flattened specification, parses the aag
/// circuit it prints, and accepts it only if the model checker confirms it.
pub fn synthesize_external(
    spec: &AssumeGuaranteeSpec,
    adapter: &ExternalSynth,
    oracle: &OracleBudget,
) -> Result<Circuit, ExternalError> {
    let text = spec.flatten_text();
    let mut use_stdin = true;
    let args: Vec<String> = adapter
        .args
        .iter()
        .map(|a| {
            if a.contains(SPEC_PLACEHOLDER) {
                use_stdin = false;
            }
            a.replace(SPEC_PLACEHOLDER, &text)
        })
        .collect();
    let program = adapter.program.display().to_string();
    let mut child = Command::new(&adapter.program)
        .args(&args)
        .stdin(if use_stdin { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| ExternalError::Spawn { program: program.clone(), source })?;
    if use_stdin {
        let mut stdin = child.stdin.take().expect("piped stdin");
        // A tool that exits without reading its input is not an error here.
        let _ = stdin.write_all(text.as_bytes()).and_then(|_| stdin.write_all(b"\n"));
    }
    let mut out_pipe = child.stdout.take().expect("piped stdout");
    let mut err_pipe = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = out_pipe.read_to_string(&mut s);
        s
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = err_pipe.read_to_string(&mut s);
        s
    });
    let status = child
        .wait_timeout(Duration::from_millis(adapter.timeout_ms))
        .map_err(|source| ExternalError::Spawn { program: program.clone(), source })?;
    let Some(status) = status else {
        let _ = child.kill();
        let _ = child.wait();
        return Err(ExternalError::Timeout(adapter.timeout_ms));
    };
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    if !status.success() {
        return Err(ExternalError::Failed { status: status.to_string(), stderr: stderr.trim().to_string() });
    }
    // Tools commonly print a realizability verdict line before the circuit.
    let start = stdout.find("aag ").unwrap_or(0);
    let circuit = parse_aag(&stdout[start..]).map_err(ExternalError::Parse)?;
    match oracle.check(&circuit, &spec.flatten())? {
        Verdict::Satisfies => Ok(circuit),
        Verdict::Violates(_) => Err(ExternalError::Verification("counterexample found".into())),
        Verdict::ResourceLimit(n) => Err(ExternalError::Verification(format!("budget exhausted after {n} states"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_ltl;
    use std::os::unix::fs::PermissionsExt;

    const FIGURE_ONE: &str = "aag 4 2 1 1 1\n2\n4\n6 4\n8\n8 2 7\n";

    fn fig1_spec() -> AssumeGuaranteeSpec {
        AssumeGuaranteeSpec::new(vec![parse_ltl("G i0").unwrap()], vec![parse_ltl("G (!i1 -> X o0)").unwrap()])
    }

    fn script(dir: &std::path::Path, body: &str) -> PathBuf {
        let path = dir.join("synth.sh");
        std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    fn adapter(program: PathBuf, args: &[&str]) -> ExternalSynth {
        ExternalSynth { program, args: args.iter().map(|s| s.to_string()).collect(), timeout_ms: 5_000 }
    }

    #[test]
    fn stub_tool_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = script(dir.path(), &format!("cat > /dev/null\necho REALIZABLE\nprintf '{}'", FIGURE_ONE.replace('\n', "\\n")));
        let c = synthesize_external(&fig1_spec(), &adapter(p, &[]), &OracleBudget::default()).unwrap();
        assert_eq!(c, parse_aag(FIGURE_ONE).unwrap());
    }

    #[test]
    fn spec_on_argv() {
        let dir = tempfile::tempdir().unwrap();
        let p = script(
            dir.path(),
            &format!("[ \"$1\" = '((G i0) -> (G ((! i1) -> (X o0))))' ] || exit 9\nprintf '{}'", FIGURE_ONE.replace('\n', "\\n")),
        );
        assert!(synthesize_external(&fig1_spec(), &adapter(p, &["{spec}"]), &OracleBudget::default()).is_ok());
    }

    #[test]
    fn violating_circuit_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = script(dir.path(), "printf 'aag 2 2 0 1 0\\n2\\n4\\n0\\n'");
        let r = synthesize_external(&fig1_spec(), &adapter(p, &[]), &OracleBudget::default());
        assert!(matches!(r, Err(ExternalError::Verification(_))), "{r:?}");
    }

    #[test]
    fn distinct_failures() {
        let dir = tempfile::tempdir().unwrap();
        let missing = adapter(dir.path().join("nope"), &[]);
        assert!(matches!(synthesize_external(&fig1_spec(), &missing, &OracleBudget::default()), Err(ExternalError::Spawn { .. })));
        let p = script(dir.path(), "echo boom >&2\nexit 3");
        assert!(matches!(synthesize_external(&fig1_spec(), &adapter(p, &[]), &OracleBudget::default()), Err(ExternalError::Failed { .. })));
        let p = script(dir.path(), "echo UNREALIZABLE");
        assert!(matches!(synthesize_external(&fig1_spec(), &adapter(p, &[]), &OracleBudget::default()), Err(ExternalError::Parse(_))));
        let p = script(dir.path(), "sleep 5");
        let slow = ExternalSynth { timeout_ms: 100, ..adapter(p, &[]) };
        assert!(matches!(synthesize_external(&fig1_spec(), &slow, &OracleBudget::default()), Err(ExternalError::Timeout(100))));
    }
}
