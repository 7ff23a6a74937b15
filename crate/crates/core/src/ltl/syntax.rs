//! Concrete ASCII syntax for LTL.
//!
//! Precedence, tightest first: unary `! G F X`, binary temporal `U R`
//! (right-associative), `&`, `|`, and finally `->` / `<->`
//! (right-associative). `<->` has no AST node of its own and is read as a
//! conjunction of two implications.

use super::formula::LtlFormula;
use super::LtlError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Globally,
    Eventually,
    Next,
    Until,
    Release,
    True,
    False,
    Ident(String),
    End,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::End => "end of input".to_string(),
        other => format!("{other:?}"),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, LtlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b'!' | b'~' => out.push((Tok::Not, start)),
            b'&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    i += 1;
                }
                out.push((Tok::And, start));
            }
            b'|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    i += 1;
                }
                out.push((Tok::Or, start));
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                out.push((Tok::Implies, start));
            }
            b'<' if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') => {
                i += 2;
                out.push((Tok::Iff, start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                match word {
                    "true" => out.push((Tok::True, start)),
                    "false" => out.push((Tok::False, start)),
                    "U" => out.push((Tok::Until, start)),
                    "R" => out.push((Tok::Release, start)),
                    // stacked unary operators such as `GF` or `XX`
                    w if w.bytes().all(|b| matches!(b, b'G' | b'F' | b'X')) => {
                        for (k, b) in w.bytes().enumerate() {
                            let tok = match b {
                                b'G' => Tok::Globally,
                                b'F' => Tok::Eventually,
                                _ => Tok::Next,
                            };
                            out.push((tok, start + k));
                        }
                    }
                    w => out.push((Tok::Ident(w.to_string()), start)),
                }
                continue;
            }
            _ => {
                return Err(LtlError::Syntax {
                    position: start,
                    message: format!("unexpected character `{}`", c as char),
                })
            }
        }
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    alphabet: Option<&'a [String]>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: String) -> Result<T, LtlError> {
        Err(LtlError::Syntax { position: self.offset(), message })
    }

    fn implication(&mut self) -> Result<LtlFormula, LtlError> {
        let lhs = self.disjunction()?;
        match self.peek() {
            Tok::Implies => {
                self.bump();
                let rhs = self.implication()?;
                Ok(LtlFormula::implies(lhs, rhs))
            }
            Tok::Iff => {
                self.bump();
                let rhs = self.implication()?;
                Ok(LtlFormula::and(
                    LtlFormula::implies(lhs.clone(), rhs.clone()),
                    LtlFormula::implies(rhs, lhs),
                ))
            }
            _ => Ok(lhs),
        }
    }

    fn disjunction(&mut self) -> Result<LtlFormula, LtlError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = LtlFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<LtlFormula, LtlError> {
        let mut lhs = self.temporal()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.temporal()?;
            lhs = LtlFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn temporal(&mut self) -> Result<LtlFormula, LtlError> {
        let lhs = self.unary()?;
        match self.peek() {
            Tok::Until => {
                self.bump();
                let rhs = self.temporal()?;
                Ok(LtlFormula::until(lhs, rhs))
            }
            Tok::Release => {
                self.bump();
                let rhs = self.temporal()?;
                Ok(LtlFormula::release(lhs, rhs))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<LtlFormula, LtlError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(LtlFormula::not(self.unary()?))
            }
            Tok::Globally => {
                self.bump();
                Ok(LtlFormula::globally(self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                Ok(LtlFormula::eventually(self.unary()?))
            }
            Tok::Next => {
                self.bump();
                Ok(LtlFormula::next(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<LtlFormula, LtlError> {
        let at = self.offset();
        match self.bump() {
            Tok::True => Ok(LtlFormula::True),
            Tok::False => Ok(LtlFormula::False),
            Tok::Ident(name) => {
                if let Some(alphabet) = self.alphabet {
                    if !alphabet.iter().any(|a| *a == name) {
                        return Err(LtlError::UnknownProposition { name, position: Some(at) });
                    }
                }
                Ok(LtlFormula::Atom(name))
            }
            Tok::LParen => {
                let inner = self.implication()?;
                if *self.peek() != Tok::RParen {
                    return self.error(format!("expected `)`, found {}", describe(self.peek())));
                }
                self.bump();
                Ok(inner)
            }
            other => Err(LtlError::Syntax {
                position: at,
                message: format!("expected a formula, found {}", describe(&other)),
            }),
        }
    }
}

fn parse_with(text: &str, alphabet: Option<&[String]>) -> Result<LtlFormula, LtlError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0, alphabet };
    let f = parser.implication()?;
    if *parser.peek() != Tok::End {
        return parser.error(format!("trailing input: {}", describe(parser.peek())));
    }
    Ok(f)
}

/// Parses the ASCII concrete syntax.
pub fn parse_ltl(text: &str) -> Result<LtlFormula, LtlError> {
    parse_with(text, None)
}

/// Parses and rejects any proposition not in `alphabet`.
pub fn parse_ltl_in(text: &str, alphabet: &[String]) -> Result<LtlFormula, LtlError> {
    parse_with(text, Some(alphabet))
}

/// Canonical, fully parenthesized rendering. Atoms and constants are bare.
pub fn render_ltl(f: &LtlFormula) -> String {
    let mut out = String::new();
    render_into(f, &mut out);
    out
}

fn render_into(f: &LtlFormula, out: &mut String) {
    use LtlFormula::*;
    let unary = |op: &str, a: &LtlFormula, out: &mut String| {
        out.push('(');
        out.push_str(op);
        out.push(' ');
        render_into(a, out);
        out.push(')');
    };
    let binary = |op: &str, a: &LtlFormula, b: &LtlFormula, out: &mut String| {
        out.push('(');
        render_into(a, out);
        out.push(' ');
        out.push_str(op);
        out.push(' ');
        render_into(b, out);
        out.push(')');
    };
    match f {
        True => out.push_str("true"),
        False => out.push_str("false"),
        Atom(p) => out.push_str(p),
        Not(a) => unary("!", a, out),
        Next(a) => unary("X", a, out),
        Globally(a) => unary("G", a, out),
        Eventually(a) => unary("F", a, out),
        And(a, b) => binary("&", a, b, out),
        Or(a, b) => binary("|", a, b, out),
        Implies(a, b) => binary("->", a, b, out),
        Until(a, b) => binary("U", a, b, out),
        Release(a, b) => binary("R", a, b, out),
    }
}
