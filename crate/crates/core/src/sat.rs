//! Small CDCL SAT solver: two watched literals, first-UIP clause learning,
//! VSIDS branching with phase saving, Luby restarts.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

/// CNF over variables `1..=num_vars`; literal `-v` is the negation of `v`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl Cnf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self) -> i32 {
        self.num_vars += 1;
        self.num_vars as i32
    }

    pub fn add(&mut self, clause: impl Into<Vec<i32>>) {
        self.clauses.push(clause.into());
    }

    /// Exactly one of `lits` is true (pairwise encoding).
    pub fn exactly_one(&mut self, lits: &[i32]) {
        self.add(lits.to_vec());
        for (i, a) in lits.iter().enumerate() {
            for b in &lits[i + 1..] {
                self.add(vec![-a, -b]);
            }
        }
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&l.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Satisfying assignment; index 0 is unused, `values[v]` is variable `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub values: Vec<bool>,
}

impl Assignment {
    pub fn value(&self, lit: i32) -> bool {
        let v = self.values[lit.unsigned_abs() as usize];
        if lit > 0 {
            v
        } else {
            !v
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// Independent check that `a` satisfies every clause of `cnf`.
pub fn verify(cnf: &Cnf, a: &Assignment) -> bool {
    a.values.len() > cnf.num_vars
        && cnf
            .clauses
            .iter()
            .all(|c| c.iter().any(|l| a.value(*l)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts: u64,
}

pub fn solve(cnf: &Cnf) -> SatResult {
    Solver::new(cnf).run()
}

pub fn solve_with_stats(cnf: &Cnf) -> (SatResult, Stats) {
    let mut s = Solver::new(cnf);
    let r = s.run();
    (r, s.stats)
}

const RESTART_BASE: u64 = 64;
const VAR_DECAY: f64 = 0.95;

/// i-th element (1-based) of the Luby sequence 1 1 2 1 1 2 4 ...
pub fn luby(mut i: u64) -> u64 {
    loop {
        let mut k = 1;
        while (1u64 << k) - 1 < i {
            k += 1;
        }
        if (1u64 << k) - 1 == i {
            return 1u64 << (k - 1);
        }
        i -= (1u64 << (k - 1)) - 1;
    }
}

// internal literal: 2*var + (1 if negative), var 0-based
type Lit = usize;

fn lit_of(l: i32) -> Lit {
    ((l.unsigned_abs() as usize - 1) << 1) | usize::from(l < 0)
}

fn var(l: Lit) -> usize {
    l >> 1
}

fn neg(l: Lit) -> Lit {
    l ^ 1
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Val {
    Undef,
    True,
    False,
}

#[derive(PartialEq)]
struct Prio(f64, usize);

impl Eq for Prio {}

impl PartialOrd for Prio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Prio {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

struct Solver {
    n: usize,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<Val>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: BinaryHeap<Prio>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    unsat: bool,
    stats: Stats,
}

impl Solver {
    fn new(cnf: &Cnf) -> Self {
        let n = cnf.num_vars;
        let mut s = Solver {
            n,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![Val::Undef; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            heap: (0..n).map(|v| Prio(0.0, v)).collect(),
            phase: vec![false; n],
            seen: vec![false; n],
            unsat: false,
            stats: Stats::default(),
        };
        for c in &cnf.clauses {
            let mut lits: Vec<Lit> = c.iter().map(|l| lit_of(*l)).collect();
            lits.sort_unstable();
            lits.dedup();
            if lits.windows(2).any(|w| w[0] == neg(w[1])) {
                continue;
            }
            s.add_clause(lits);
            if s.unsat {
                break;
            }
        }
        s
    }

    fn value(&self, l: Lit) -> Val {
        match self.assigns[var(l)] {
            Val::Undef => Val::Undef,
            Val::True if l & 1 == 0 => Val::True,
            Val::False if l & 1 == 1 => Val::True,
            _ => Val::False,
        }
    }

    /// Adds an input clause at level 0, simplified against the units
    /// already assigned so that both watches start on unassigned literals.
    fn add_clause(&mut self, mut lits: Vec<Lit>) {
        if lits.iter().any(|l| self.value(*l) == Val::True) {
            return;
        }
        lits.retain(|l| self.value(*l) == Val::Undef);
        match lits.len() {
            0 => self.unsat = true,
            1 => match self.value(lits[0]) {
                Val::False => self.unsat = true,
                Val::Undef => {
                    self.enqueue(lits[0], None);
                    if self.propagate().is_some() {
                        self.unsat = true;
                    }
                }
                Val::True => {}
            },
            _ => {
                let idx = self.clauses.len();
                self.watches[lits[0]].push(idx);
                self.watches[lits[1]].push(idx);
                self.clauses.push(lits);
            }
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = var(l);
        self.assigns[v] = if l & 1 == 0 { Val::True } else { Val::False };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Returns the index of a conflicting clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = neg(p);
            let mut ws = std::mem::take(&mut self.watches[false_lit]);
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if self.value(first) == Val::True {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..self.clauses[ci].len() {
                    let l = self.clauses[ci][k];
                    if self.value(l) != Val::False {
                        self.clauses[ci].swap(1, k);
                        self.watches[l].push(ci);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if self.value(first) == Val::False {
                    self.watches[false_lit] = ws;
                    self.qhead = self.trail.len();
                    return Some(ci);
                }
                self.enqueue(first, Some(ci));
                i += 1;
            }
            self.watches[false_lit] = ws;
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
            self.heap = (0..self.n)
                .filter(|v| self.assigns[*v] == Val::Undef)
                .map(|v| Prio(self.activity[v], v))
                .collect();
        }
        self.heap.push(Prio(self.activity[v], v));
    }

    /// First-UIP analysis; returns the learnt clause (asserting literal
    /// first) and the backjump level.
    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, usize) {
        let mut learnt: Vec<Lit> = vec![0];
        let mut counter = 0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        loop {
            let start = usize::from(p.is_some());
            let lits = self.clauses[confl].clone();
            for &q in &lits[start..] {
                let v = var(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] >= self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[var(self.trail[idx])] {
                    break;
                }
            }
            let pl = self.trail[idx];
            p = Some(pl);
            self.seen[var(pl)] = false;
            counter -= 1;
            if counter == 0 {
                break;
            }
            confl = self.reason[var(pl)].expect("implied literal has a reason");
        }
        learnt[0] = neg(p.expect("uip"));
        for l in &learnt[1..] {
            self.seen[var(*l)] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[var(learnt[i])] > self.level[var(learnt[max_i])] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[var(learnt[1])];
        }
        (learnt, bt)
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() > lvl {
            let lim = self.trail_lim[lvl];
            for i in (lim..self.trail.len()).rev() {
                let l = self.trail[i];
                let v = var(l);
                self.phase[v] = l & 1 == 0;
                self.assigns[v] = Val::Undef;
                self.reason[v] = None;
                self.heap.push(Prio(self.activity[v], v));
            }
            self.trail.truncate(lim);
            self.trail_lim.truncate(lvl);
            self.qhead = lim;
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(Prio(act, v)) = self.heap.pop() {
            if self.assigns[v] == Val::Undef && act == self.activity[v] {
                return Some((v << 1) | usize::from(!self.phase[v]));
            }
        }
        None
    }

    fn run(&mut self) -> SatResult {
        if self.unsat {
            return SatResult::Unsat;
        }
        if self.propagate().is_some() {
            return SatResult::Unsat;
        }
        let mut restart_no = 1;
        let mut budget = luby(restart_no) * RESTART_BASE;
        let mut conflicts_here = 0;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts_here += 1;
                if self.decision_level() == 0 {
                    return SatResult::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let ci = self.clauses.len();
                    self.watches[learnt[0]].push(ci);
                    self.watches[learnt[1]].push(ci);
                    let asserting = learnt[0];
                    self.clauses.push(learnt);
                    self.enqueue(asserting, Some(ci));
                }
                self.var_inc /= VAR_DECAY;
            } else {
                if conflicts_here >= budget {
                    self.stats.restarts += 1;
                    restart_no += 1;
                    budget = luby(restart_no) * RESTART_BASE;
                    conflicts_here = 0;
                    self.cancel_until(0);
                    continue;
                }
                match self.pick_branch() {
                    None => {
                        let mut values = vec![false; self.n + 1];
                        for v in 0..self.n {
                            values[v + 1] = self.assigns[v] == Val::True;
                        }
                        return SatResult::Sat(Assignment { values });
                    }
                    Some(l) => {
                        self.stats.decisions += 1;
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(l, None);
                    }
                }
            }
        }
    }
}
