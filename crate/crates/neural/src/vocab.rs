//! Shared vocabulary and tokenization for specification and circuit text.
//!
//! Specifications are split into operators, parentheses, and identifiers.
//! Circuit text that parses as aag is tokenized line by line: every line
//! starts with a section keyword and output lines carry the proposition name
//! they bind. Literals become a variable token with an optional `!` for
//! negation; input variables are written as the input's name instead, so
//! input declarations themselves are dropped.

use std::collections::HashMap;

use cnml_core::aiger::{is_negated, parse_aag, var_of, Circuit};
use serde::{Deserialize, Serialize};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
const RESERVED: [&str; 2] = ["<pad>", "<unk>"];
const ALWAYS: [&str; 13] = ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "v", "i", "o"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(k, t)| (t.clone(), k)).collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    /// Reserved entries, digits, and identifier prefixes first; then every
    /// scanned token by descending frequency, ties broken lexicographically.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, max_size: Option<usize>) -> Vocab {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for t in texts {
            for tok in lex(t) {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut tokens: Vec<String> = RESERVED.iter().chain(ALWAYS.iter()).map(|s| s.to_string()).collect();
        let mut scanned: Vec<(String, usize)> =
            counts.into_iter().filter(|(t, _)| !tokens.contains(t)).collect();
        scanned.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        tokens.extend(scanned.into_iter().map(|(t, _)| t));
        if let Some(m) = max_size {
            tokens.truncate(m.max(RESERVED.len() + ALWAYS.len()));
        }
        Vocab::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Ids for one lexed token; unknown numbers and `prefix<digits>` words
    /// fall back to digit tokens.
    fn ids_for(&self, tok: &str, out: &mut Vec<usize>) {
        if let Some(id) = self.id(tok) {
            out.push(id);
            return;
        }
        let split = tok.find(|c: char| c.is_ascii_digit()).unwrap_or(tok.len());
        let (prefix, digits) = tok.split_at(split);
        if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
            if !prefix.is_empty() {
                out.push(self.id(prefix).unwrap_or(UNK));
            }
            out.extend(digits.chars().map(|c| self.id(&c.to_string()).unwrap_or(UNK)));
            return;
        }
        out.push(UNK);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tokens {
    /// Token ids padded with [`PAD`] to `max_len`.
    pub ids: Vec<usize>,
    /// Number of non-pad positions.
    pub len: usize,
    pub truncated: bool,
}

impl Tokens {
    pub fn content(&self) -> &[usize] {
        &self.ids[..self.len]
    }
}

/// Unpadded, untruncated token ids.
pub fn token_ids(text: &str, vocab: &Vocab) -> Vec<usize> {
    let mut ids = Vec::new();
    for tok in lex(text) {
        vocab.ids_for(&tok, &mut ids);
    }
    ids
}

pub fn tokenize(text: &str, vocab: &Vocab, max_len: usize) -> Tokens {
    let mut ids = token_ids(text, vocab);
    let truncated = ids.len() > max_len;
    ids.truncate(max_len);
    let len = ids.len();
    ids.resize(max_len, PAD);
    Tokens { ids, len, truncated }
}

/// Literal tokens; input variables are written as their proposition name so
/// the wiring to named inputs is visible without resolving variable numbers.
fn literal_tokens(lit: u32, inputs: &HashMap<u32, String>, out: &mut Vec<String>) {
    match lit {
        0 => out.push("false".into()),
        1 => out.push("true".into()),
        _ => {
            if is_negated(lit) {
                out.push("!".into());
            }
            let v = var_of(lit);
            out.push(inputs.get(&v).cloned().unwrap_or_else(|| format!("v{v}")));
        }
    }
}

fn circuit_tokens(c: &Circuit) -> Vec<String> {
    let mut out = vec!["aag".to_string()];
    for n in [c.max_var as usize, c.num_inputs(), c.num_latches(), c.num_outputs(), c.num_gates()] {
        out.push(n.to_string());
    }
    let mut inputs = HashMap::new();
    for (k, &lit) in c.inputs.iter().enumerate() {
        inputs.insert(var_of(lit), c.input_name(k));
    }
    for l in &c.latches {
        out.push("latch".into());
        literal_tokens(l.lit, &inputs, &mut out);
        literal_tokens(l.next, &inputs, &mut out);
    }
    for (k, &lit) in c.outputs.iter().enumerate() {
        out.push("output".into());
        out.push(c.output_name(k));
        literal_tokens(lit, &inputs, &mut out);
    }
    for g in &c.and_gates {
        out.push("and".into());
        for lit in [g.lhs, g.rhs0, g.rhs1] {
            literal_tokens(lit, &inputs, &mut out);
        }
    }
    out
}

/// Splits text into vocabulary tokens.
pub fn lex(text: &str) -> Vec<String> {
    if text.starts_with("aag ") {
        if let Ok(c) = parse_aag(text) {
            return circuit_tokens(&c);
        }
    }
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            out.push("<nl>".into());
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            let op = ["<->", "->", "&&", "||"].into_iter().find(|op| rest.starts_with(op));
            let tok = op.map_or_else(|| c.to_string(), str::to_string);
            i += tok.chars().count();
            out.push(tok);
        }
    }
    out
}
