use std::collections::BTreeSet;

use thiserror::Error;

use super::{eval_all, holds, Formula};
use crate::abstraction::{LabeledTrace, Letter};
use crate::sat::{self, Assignment, Cnf, SatResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceSample {
    pub positives: Vec<LabeledTrace>,
    pub negatives: Vec<LabeledTrace>,
}

impl TraceSample {
    pub fn from_letters(atoms: &[&str], pos: &[Vec<Letter>], neg: &[Vec<Letter>]) -> Self {
        use crate::abstraction::Label;
        TraceSample {
            positives: pos
                .iter()
                .map(|w| LabeledTrace::new(atoms, w.clone(), Label::Positive))
                .collect(),
            negatives: neg
                .iter()
                .map(|w| LabeledTrace::new(atoms, w.clone(), Label::Negative))
                .collect(),
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.positives
            .iter()
            .chain(&self.negatives)
            .map(|t| t.predicates.len())
            .max()
            .unwrap_or(0)
    }

    /// Whether `f` holds on every positive and fails on every negative.
    pub fn consistent(&self, f: &Formula) -> bool {
        self.positives.iter().all(|t| holds(f, &t.letters))
            && self.negatives.iter().all(|t| !holds(f, &t.letters))
    }

    fn check(&self) -> Result<(), LearnError> {
        if self
            .positives
            .iter()
            .chain(&self.negatives)
            .any(|t| t.letters.is_empty())
        {
            return Err(LearnError::InvalidSample("empty trace".into()));
        }
        let pos: BTreeSet<&[Letter]> = self.positives.iter().map(|t| &t.letters[..]).collect();
        if self.negatives.iter().any(|t| pos.contains(&t.letters[..])) {
            return Err(LearnError::InvalidSample(
                "a trace is both positive and negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("no separating formula up to size {max_size}")]
    NoSeparator { max_size: usize },
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("node {0} has no unique operator")]
    Operator(usize),
    #[error("node {0} has no unique child")]
    Child(usize),
    #[error("decoded formula `{0}` is inconsistent with the sample")]
    PostCheck(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Atom(usize),
    Not,
    And,
    Or,
    Next,
    Finally,
    Globally,
    Until,
}

impl Op {
    fn arity(self) -> usize {
        match self {
            Op::Atom(_) => 0,
            Op::Not | Op::Next | Op::Finally | Op::Globally => 1,
            Op::And | Op::Or | Op::Until => 2,
        }
    }
}

/// The CNF for one candidate size together with its variable layout.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub cnf: Cnf,
    pub size: usize,
    ops: Vec<Op>,
    // x[i][o]: node i carries ops[o]
    x: Vec<Vec<i32>>,
    // l[i][j], r[i][j]: left/right child of node i is node j < i
    l: Vec<Vec<i32>>,
    r: Vec<Vec<i32>>,
}

fn ops_for(num_atoms: usize) -> Vec<Op> {
    let mut ops: Vec<Op> = (0..num_atoms).map(Op::Atom).collect();
    ops.extend([
        Op::Not,
        Op::And,
        Op::Or,
        Op::Next,
        Op::Finally,
        Op::Globally,
        Op::Until,
    ]);
    ops
}

/// Builds the CNF whose models are syntax DAGs with `n` nodes (root
/// `n - 1`) that hold on every positive and fail on every negative trace.
pub fn encode(n: usize, sample: &TraceSample) -> Encoding {
    assert!(n >= 1, "size must be at least 1");
    let ops = ops_for(sample.num_atoms());
    let mut cnf = Cnf::new();
    let x: Vec<Vec<i32>> = (0..n)
        .map(|_| ops.iter().map(|_| cnf.new_var()).collect())
        .collect();
    let l: Vec<Vec<i32>> = (0..n).map(|i| (0..i).map(|_| cnf.new_var()).collect()).collect();
    let r: Vec<Vec<i32>> = (0..n).map(|i| (0..i).map(|_| cnf.new_var()).collect()).collect();

    for i in 0..n {
        cnf.exactly_one(&x[i]);
        for (o, op) in ops.iter().enumerate() {
            if op.arity() > 0 && i == 0 {
                cnf.add(vec![-x[0][o]]);
            }
        }
        if i > 0 {
            cnf.exactly_one(&l[i]);
            cnf.exactly_one(&r[i]);
        }
    }

    let op_var = |i: usize, want: Op| -> i32 {
        x[i][ops.iter().position(|o| *o == want).expect("op present")]
    };

    let traces = sample
        .positives
        .iter()
        .map(|t| (t, true))
        .chain(sample.negatives.iter().map(|t| (t, false)));
    for (t, positive) in traces {
        let w = &t.letters;
        let len = w.len();
        // y[i][k]: node i holds at position k
        let y: Vec<Vec<i32>> = (0..n).map(|_| (0..len).map(|_| cnf.new_var()).collect()).collect();
        for i in 0..n {
            for (o, op) in ops.iter().enumerate() {
                if let Op::Atom(p) = op {
                    for k in 0..len {
                        let bit = w[k] >> p & 1 == 1;
                        cnf.add(vec![-x[i][o], if bit { y[i][k] } else { -y[i][k] }]);
                    }
                }
            }
            if i == 0 {
                continue;
            }
            // lv/rv: value of the chosen left/right child
            let lv: Vec<i32> = (0..len).map(|_| cnf.new_var()).collect();
            let rv: Vec<i32> = (0..len).map(|_| cnf.new_var()).collect();
            for j in 0..i {
                for k in 0..len {
                    cnf.add(vec![-l[i][j], -lv[k], y[j][k]]);
                    cnf.add(vec![-l[i][j], lv[k], -y[j][k]]);
                    cnf.add(vec![-r[i][j], -rv[k], y[j][k]]);
                    cnf.add(vec![-r[i][j], rv[k], -y[j][k]]);
                }
            }
            let xn = op_var(i, Op::Not);
            let xa = op_var(i, Op::And);
            let xo = op_var(i, Op::Or);
            let xx = op_var(i, Op::Next);
            let xf = op_var(i, Op::Finally);
            let xg = op_var(i, Op::Globally);
            let xu = op_var(i, Op::Until);
            for k in 0..len {
                let yk = y[i][k];
                let last = k + 1 == len;
                cnf.add(vec![-xn, -yk, -lv[k]]);
                cnf.add(vec![-xn, yk, lv[k]]);

                cnf.add(vec![-xa, -yk, lv[k]]);
                cnf.add(vec![-xa, -yk, rv[k]]);
                cnf.add(vec![-xa, yk, -lv[k], -rv[k]]);

                cnf.add(vec![-xo, yk, -lv[k]]);
                cnf.add(vec![-xo, yk, -rv[k]]);
                cnf.add(vec![-xo, -yk, lv[k], rv[k]]);

                if last {
                    cnf.add(vec![-xx, -yk]);
                    for (xop, v) in [(xf, lv[k]), (xg, lv[k]), (xu, rv[k])] {
                        cnf.add(vec![-xop, -yk, v]);
                        cnf.add(vec![-xop, yk, -v]);
                    }
                } else {
                    let next = y[i][k + 1];
                    cnf.add(vec![-xx, -yk, lv[k + 1]]);
                    cnf.add(vec![-xx, yk, -lv[k + 1]]);
                    // F: y_k = lv_k or y_{k+1}
                    cnf.add(vec![-xf, yk, -lv[k]]);
                    cnf.add(vec![-xf, yk, -next]);
                    cnf.add(vec![-xf, -yk, lv[k], next]);
                    // G: y_k = lv_k and y_{k+1}
                    cnf.add(vec![-xg, -yk, lv[k]]);
                    cnf.add(vec![-xg, -yk, next]);
                    cnf.add(vec![-xg, yk, -lv[k], -next]);
                    // U: y_k = rv_k or (lv_k and y_{k+1})
                    cnf.add(vec![-xu, yk, -rv[k]]);
                    cnf.add(vec![-xu, yk, -lv[k], -next]);
                    cnf.add(vec![-xu, -yk, rv[k], lv[k]]);
                    cnf.add(vec![-xu, -yk, rv[k], next]);
                }
            }
        }
        let root = y[n - 1][0];
        cnf.add(vec![if positive { root } else { -root }]);
    }

    Encoding {
        cnf,
        size: n,
        ops,
        x,
        l,
        r,
    }
}

/// Reads the DAG out of a model of `enc` and checks it against `sample`.
pub fn decode(enc: &Encoding, a: &Assignment, sample: &TraceSample) -> Result<Formula, DecodeError> {
    let n = enc.size;
    let unique = |vars: &[i32]| -> Option<usize> {
        let on: Vec<usize> = (0..vars.len()).filter(|&j| a.value(vars[j])).collect();
        (on.len() == 1).then(|| on[0])
    };
    let mut built: Vec<Formula> = Vec::with_capacity(n);
    for i in 0..n {
        let op = enc.ops[unique(&enc.x[i]).ok_or(DecodeError::Operator(i))?];
        let child = |vars: &[i32]| -> Result<Formula, DecodeError> {
            Ok(built[unique(vars).ok_or(DecodeError::Child(i))?].clone())
        };
        let f = match op {
            Op::Atom(p) => Formula::Atom(p),
            Op::Not => Formula::not(child(&enc.l[i])?),
            Op::Next => Formula::next(child(&enc.l[i])?),
            Op::Finally => Formula::finally(child(&enc.l[i])?),
            Op::Globally => Formula::globally(child(&enc.l[i])?),
            Op::And => Formula::and(vec![child(&enc.l[i])?, child(&enc.r[i])?]),
            Op::Or => Formula::or(vec![child(&enc.l[i])?, child(&enc.r[i])?]),
            Op::Until => Formula::until(child(&enc.l[i])?, child(&enc.r[i])?),
        };
        built.push(f);
    }
    let f = built.pop().expect("n >= 1");
    if !sample.consistent(&f) {
        return Err(DecodeError::PostCheck(f.to_string()));
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedFormula {
    pub formula: Formula,
    /// Number of DAG nodes of the smallest satisfiable encoding.
    pub size: usize,
}

/// Shortens every run of identical letters to at most `cap` letters and
/// drops duplicate traces.
fn compress(sample: &TraceSample, cap: usize) -> TraceSample {
    let squeeze = |ts: &[LabeledTrace]| -> Vec<LabeledTrace> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for t in ts {
            let mut letters: Vec<Letter> = Vec::with_capacity(t.letters.len());
            let mut run = 0;
            for (k, l) in t.letters.iter().enumerate() {
                run = if k > 0 && t.letters[k - 1] == *l { run + 1 } else { 1 };
                if run <= cap {
                    letters.push(*l);
                }
            }
            if seen.insert(letters.clone()) {
                out.push(LabeledTrace {
                    letters,
                    ..t.clone()
                });
            }
        }
        out
    };
    TraceSample {
        positives: squeeze(&sample.positives),
        negatives: squeeze(&sample.negatives),
    }
}

fn try_size(n: usize, sample: &TraceSample) -> Result<Option<Formula>, DecodeError> {
    let enc = encode(n, sample);
    match sat::solve(&enc.cnf) {
        SatResult::Unsat => Ok(None),
        SatResult::Sat(a) => {
            debug_assert!(sat::verify(&enc.cnf, &a));
            decode(&enc, &a, sample).map(Some)
        }
    }
}

/// Smallest formula (by DAG node count) consistent with `sample`, trying
/// sizes `1..=max_size` in order.
///
/// Long runs of a repeated letter are shortened before encoding; the
/// result is always checked on the original traces, and a size whose
/// shortened sample is inconclusive is retried on the full traces.
pub fn learn_minimal(sample: &TraceSample, max_size: usize) -> Result<LearnedFormula, LearnError> {
    sample.check()?;
    if sample.positives.is_empty() || sample.negatives.is_empty() {
        return Err(LearnError::NoSeparator { max_size: 0 });
    }
    for n in 1..=max_size {
        let small = compress(sample, n + 1);
        let overlap = small
            .positives
            .iter()
            .any(|p| small.negatives.iter().any(|q| q.letters == p.letters));
        let found = if overlap {
            try_size(n, sample)?
        } else {
            match try_size(n, &small)? {
                Some(f) if sample.consistent(&f) => Some(f),
                Some(_) => try_size(n, sample)?,
                None => None,
            }
        };
        if let Some(formula) = found {
            debug_assert!(sample
                .positives
                .iter()
                .all(|t| eval_all(&formula, &t.letters)[0]));
            return Ok(LearnedFormula { formula, size: n });
        }
    }
    Err(LearnError::NoSeparator { max_size })
}
