//! Linear temporal logic over finite traces.
//!
//! Text form is prefix notation. Unary operators are `not`, `X`, `F` and
//! `G`; binary operators are `and`, `or`, `implies` and `U`. Compound
//! operands are parenthesized:
//!
//! ```text
//! G (not collision)
//! G (implies p (X q))
//! U (not braking) stopped
//! ```
//!
//! `X` is strong: it is false at the last position of a trace.

mod learn;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::Letter;

pub use learn::{
    decode, encode, learn_minimal, DecodeError, Encoding, LearnError, LearnedFormula,
    TraceSample,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    True,
    False,
    Atom(usize),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Next(Box<Formula>),
    Finally(Box<Formula>),
    Globally(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(p: usize) -> Self {
        Formula::Atom(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(parts: Vec<Formula>) -> Self {
        Formula::And(parts)
    }

    pub fn or(parts: Vec<Formula>) -> Self {
        Formula::Or(parts)
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Or(vec![Formula::not(a), b])
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn finally(f: Formula) -> Self {
        Formula::Finally(Box::new(f))
    }

    pub fn globally(f: Formula) -> Self {
        Formula::Globally(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => Vec::new(),
            Formula::Not(a) | Formula::Next(a) | Formula::Finally(a) | Formula::Globally(a) => {
                vec![a]
            }
            Formula::And(xs) | Formula::Or(xs) => xs.iter().collect(),
            Formula::Until(a, b) => vec![a, b],
        }
    }

    /// Number of distinct subformulas, i.e. nodes of the syntax DAG.
    pub fn size(&self) -> usize {
        fn walk<'a>(f: &'a Formula, seen: &mut BTreeSet<&'a Formula>) {
            if seen.insert(f) {
                for c in f.children() {
                    walk(c, seen);
                }
            }
        }
        let mut seen = BTreeSet::new();
        walk(self, &mut seen);
        seen.len()
    }

    /// Largest atom index plus one.
    pub fn atom_bound(&self) -> usize {
        match self {
            Formula::Atom(p) => p + 1,
            _ => self
                .children()
                .into_iter()
                .map(Formula::atom_bound)
                .max()
                .unwrap_or(0),
        }
    }

    pub fn to_text<S: AsRef<str>>(&self, names: &[S]) -> String {
        let mut out = String::new();
        self.write_text(names, &mut out);
        out
    }

    fn write_text<S: AsRef<str>>(&self, names: &[S], out: &mut String) {
        let operand = |f: &Formula, out: &mut String| {
            if matches!(f, Formula::True | Formula::False | Formula::Atom(_)) {
                f.write_text(names, out);
            } else {
                out.push('(');
                f.write_text(names, out);
                out.push(')');
            }
        };
        let nary = |op: &str, unit: &str, xs: &[Formula], out: &mut String| match xs {
            [] => out.push_str(unit),
            [one] => one.write_text(names, out),
            [first, rest @ ..] => {
                out.push_str(op);
                out.push(' ');
                operand(first, out);
                out.push(' ');
                if rest.len() == 1 {
                    operand(&rest[0], out);
                } else {
                    out.push('(');
                    Formula::write_nary(op, rest, names, out);
                    out.push(')');
                }
            }
        };
        match self {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Atom(p) => match names.get(*p) {
                Some(n) => out.push_str(n.as_ref()),
                None => out.push_str(&format!("p{p}")),
            },
            Formula::Not(a) => {
                out.push_str("not ");
                operand(a, out);
            }
            Formula::Next(a) => {
                out.push_str("X ");
                operand(a, out);
            }
            Formula::Finally(a) => {
                out.push_str("F ");
                operand(a, out);
            }
            Formula::Globally(a) => {
                out.push_str("G ");
                operand(a, out);
            }
            Formula::Until(a, b) => {
                out.push_str("U ");
                operand(a, out);
                out.push(' ');
                operand(b, out);
            }
            Formula::And(xs) => nary("and", "true", xs, out),
            Formula::Or(xs) => nary("or", "false", xs, out),
        }
    }

    fn write_nary<S: AsRef<str>>(op: &str, xs: &[Formula], names: &[S], out: &mut String) {
        let f = if op == "and" {
            Formula::And(xs.to_vec())
        } else {
            Formula::Or(xs.to_vec())
        };
        f.write_text(names, out);
    }

    /// Parses prefix text; atom names resolve to their index in `names`.
    pub fn parse<S: AsRef<str>>(text: &str, names: &[S]) -> Result<Formula, FormulaParseError> {
        let toks = lex_formula(text)?;
        let mut pos = 0;
        let f = parse_expr(&toks, &mut pos, names)?;
        if pos != toks.len() {
            return Err(FormulaParseError::Trailing(toks[pos].clone()));
        }
        Ok(f)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: [&str; 0] = [];
        f.write_str(&self.to_text(&names))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaParseError {
    #[error("unexpected end of formula")]
    UnexpectedEnd,
    #[error("unexpected `{0}`")]
    Unexpected(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("trailing input at `{0}`")]
    Trailing(String),
}

fn lex_formula(text: &str) -> Result<Vec<String>, FormulaParseError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' | '!' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c if c.is_ascii_alphanumeric() || c == '_' => cur.push(c),
            c => return Err(FormulaParseError::Unexpected(c.to_string())),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

fn parse_expr<S: AsRef<str>>(
    toks: &[String],
    pos: &mut usize,
    names: &[S],
) -> Result<Formula, FormulaParseError> {
    let tok = toks.get(*pos).ok_or(FormulaParseError::UnexpectedEnd)?.clone();
    *pos += 1;
    let operand = |pos: &mut usize| parse_expr(toks, pos, names);
    Ok(match tok.as_str() {
        "(" => {
            let f = operand(pos)?;
            match toks.get(*pos).map(String::as_str) {
                Some(")") => *pos += 1,
                Some(t) => return Err(FormulaParseError::Unexpected(t.to_string())),
                None => return Err(FormulaParseError::UnexpectedEnd),
            }
            f
        }
        ")" => return Err(FormulaParseError::Unexpected(tok)),
        "true" => Formula::True,
        "false" => Formula::False,
        "not" | "!" => Formula::not(operand(pos)?),
        "X" => Formula::next(operand(pos)?),
        "F" => Formula::finally(operand(pos)?),
        "G" => Formula::globally(operand(pos)?),
        "U" => {
            let a = operand(pos)?;
            Formula::until(a, operand(pos)?)
        }
        "and" => {
            let a = operand(pos)?;
            Formula::and(vec![a, operand(pos)?])
        }
        "or" => {
            let a = operand(pos)?;
            Formula::or(vec![a, operand(pos)?])
        }
        "implies" => {
            let a = operand(pos)?;
            Formula::implies(a, operand(pos)?)
        }
        name => {
            if let Some(i) = names.iter().position(|n| n.as_ref() == name) {
                Formula::Atom(i)
            } else if let Some(i) = name.strip_prefix('p').and_then(|d| d.parse().ok()) {
                Formula::Atom(i)
            } else {
                return Err(FormulaParseError::UnknownAtom(name.to_string()));
            }
        }
    })
}

/// Truth of `f` at position `i` of `w` (direct recursion on the semantics).
pub fn eval(f: &Formula, w: &[Letter], i: usize) -> bool {
    let n = w.len();
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(p) => w[i] >> p & 1 == 1,
        Formula::Not(a) => !eval(a, w, i),
        Formula::And(xs) => xs.iter().all(|x| eval(x, w, i)),
        Formula::Or(xs) => xs.iter().any(|x| eval(x, w, i)),
        Formula::Next(a) => i + 1 < n && eval(a, w, i + 1),
        Formula::Finally(a) => (i..n).any(|j| eval(a, w, j)),
        Formula::Globally(a) => (i..n).all(|j| eval(a, w, j)),
        Formula::Until(a, b) => (i..n).any(|j| eval(b, w, j) && (i..j).all(|k| eval(a, w, k))),
    }
}

/// Truth of `f` at every position of `w`, computed backwards.
pub fn eval_all(f: &Formula, w: &[Letter]) -> Vec<bool> {
    let n = w.len();
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Atom(p) => w.iter().map(|l| l >> p & 1 == 1).collect(),
        Formula::Not(a) => eval_all(a, w).into_iter().map(|b| !b).collect(),
        Formula::And(xs) => xs.iter().fold(vec![true; n], |acc, x| {
            acc.iter().zip(eval_all(x, w)).map(|(a, b)| *a && b).collect()
        }),
        Formula::Or(xs) => xs.iter().fold(vec![false; n], |acc, x| {
            acc.iter().zip(eval_all(x, w)).map(|(a, b)| *a || b).collect()
        }),
        Formula::Next(a) => {
            let v = eval_all(a, w);
            (0..n).map(|i| i + 1 < n && v[i + 1]).collect()
        }
        Formula::Finally(a) => {
            let v = eval_all(a, w);
            let mut out = vec![false; n];
            for i in (0..n).rev() {
                out[i] = v[i] || (i + 1 < n && out[i + 1]);
            }
            out
        }
        Formula::Globally(a) => {
            let v = eval_all(a, w);
            let mut out = vec![true; n];
            for i in (0..n).rev() {
                out[i] = v[i] && (i + 1 >= n || out[i + 1]);
            }
            out
        }
        Formula::Until(a, b) => {
            let va = eval_all(a, w);
            let vb = eval_all(b, w);
            let mut out = vec![false; n];
            for i in (0..n).rev() {
                out[i] = vb[i] || (va[i] && i + 1 < n && out[i + 1]);
            }
            out
        }
    }
}

/// Truth at position 0; the empty trace satisfies nothing but `true`-like
/// formulas and is treated as failing.
pub fn holds(f: &Formula, w: &[Letter]) -> bool {
    !w.is_empty() && eval_all(f, w)[0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaArtifact {
    pub predicates: Vec<String>,
    pub text: String,
    pub size: usize,
    pub ast: Formula,
}

impl FormulaArtifact {
    pub fn new(f: &Formula, predicates: Vec<String>) -> Self {
        FormulaArtifact {
            text: f.to_text(&predicates),
            size: f.size(),
            ast: f.clone(),
            predicates,
        }
    }
}
