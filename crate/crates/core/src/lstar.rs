//! Angluin's L* over a finite alphabet of letter indices.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::Scenario;
use crate::sim::{self, Event, SimConfig};

/// A word as a sequence of letter indices into the alphabet.
pub type Word = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TeacherError {
    #[error("membership query failed for word {word:?}: {reason}")]
    Membership { word: Word, reason: String },
    #[error("cache: {0}")]
    Cache(String),
}

pub trait Teacher {
    fn member(&mut self, w: &[usize]) -> Result<bool, TeacherError>;

    /// Answers in the order given; implementations may work in parallel.
    fn member_batch(&mut self, ws: &[Word]) -> Result<Vec<bool>, TeacherError> {
        ws.iter().map(|w| self.member(w)).collect()
    }

    /// A word the hypothesis misclassifies, if one is found within `budget`.
    fn equivalent(&mut self, hyp: &Dfa, budget: usize) -> Result<Option<Word>, TeacherError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dfa {
    pub states: usize,
    pub initial: usize,
    pub accepting: Vec<usize>,
    /// `transitions[q][a]`.
    pub transitions: Vec<Vec<usize>>,
    #[serde(default)]
    pub alphabet: Vec<String>,
}

impl Dfa {
    pub fn num_letters(&self) -> usize {
        self.transitions.first().map_or(self.alphabet.len(), Vec::len)
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting.binary_search(&q).is_ok()
    }

    pub fn run(&self, w: &[usize]) -> usize {
        w.iter().fold(self.initial, |q, a| self.transitions[q][*a])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dfa serializes")
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dfa {\n  rankdir=LR;\n  init [shape=point];\n");
        for q in 0..self.states {
            let shape = if self.is_accepting(q) {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(out, "  q{q} [shape={shape}];");
        }
        let _ = writeln!(out, "  init -> q{};", self.initial);
        for (q, row) in self.transitions.iter().enumerate() {
            for (a, to) in row.iter().enumerate() {
                let label = self
                    .alphabet
                    .get(a)
                    .cloned()
                    .unwrap_or_else(|| a.to_string());
                let _ = writeln!(out, "  q{q} -> q{to} [label=\"{label}\"];");
            }
        }
        out.push_str("}\n");
        out
    }
}

pub fn dfa_accepts(d: &Dfa, w: &[usize]) -> bool {
    d.is_accepting(d.run(w))
}

/// Reachable part of `d`, states renumbered in BFS order.
fn trim(d: &Dfa) -> Dfa {
    let k = d.num_letters();
    let mut id = vec![usize::MAX; d.states];
    let mut order = vec![d.initial];
    id[d.initial] = 0;
    let mut i = 0;
    while i < order.len() {
        let q = order[i];
        for a in 0..k {
            let t = d.transitions[q][a];
            if id[t] == usize::MAX {
                id[t] = order.len();
                order.push(t);
            }
        }
        i += 1;
    }
    Dfa {
        states: order.len(),
        initial: 0,
        accepting: order
            .iter()
            .enumerate()
            .filter(|(_, q)| d.is_accepting(**q))
            .map(|(i, _)| i)
            .collect(),
        transitions: order
            .iter()
            .map(|q| d.transitions[*q].iter().map(|t| id[*t]).collect())
            .collect(),
        alphabet: d.alphabet.clone(),
    }
}

/// Moore partition refinement on the reachable part.
pub fn minimize(d: &Dfa) -> Dfa {
    let d = trim(d);
    let k = d.num_letters();
    let mut class: Vec<usize> = (0..d.states).map(|q| usize::from(d.is_accepting(q))).collect();
    loop {
        let mut sig_ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut next = vec![0; d.states];
        for q in 0..d.states {
            let mut sig = vec![class[q]];
            sig.extend((0..k).map(|a| class[d.transitions[q][a]]));
            let n = sig_ids.len();
            next[q] = *sig_ids.entry(sig).or_insert(n);
        }
        let before = class.iter().collect::<std::collections::BTreeSet<_>>().len();
        let stable = sig_ids.len() == before;
        class = next;
        if stable {
            break;
        }
    }
    let n = class.iter().max().map_or(0, |m| m + 1);
    let mut transitions = vec![vec![0; k]; n];
    let mut accepting = Vec::new();
    for q in 0..d.states {
        transitions[class[q]] = (0..k).map(|a| class[d.transitions[q][a]]).collect();
        if d.is_accepting(q) && !accepting.contains(&class[q]) {
            accepting.push(class[q]);
        }
    }
    accepting.sort_unstable();
    trim(&Dfa {
        states: n,
        initial: class[d.initial],
        accepting,
        transitions,
        alphabet: d.alphabet.clone(),
    })
}

/// Isomorphism of the minimized automata.
pub fn dfa_isomorphic(a: &Dfa, b: &Dfa) -> bool {
    let (a, b) = (minimize(a), minimize(b));
    if a.states != b.states || a.num_letters() != b.num_letters() {
        return false;
    }
    let mut map = vec![usize::MAX; a.states];
    map[a.initial] = b.initial;
    let mut queue = VecDeque::from([a.initial]);
    while let Some(q) = queue.pop_front() {
        let p = map[q];
        if a.is_accepting(q) != b.is_accepting(p) {
            return false;
        }
        for x in 0..a.num_letters() {
            let (qt, pt) = (a.transitions[q][x], b.transitions[p][x]);
            if map[qt] == usize::MAX {
                map[qt] = pt;
                queue.push_back(qt);
            } else if map[qt] != pt {
                return false;
            }
        }
    }
    true
}

/// Shortest word of length ≤ `max_len` on which `a` and `b` disagree.
pub fn distinguishing_word(a: &Dfa, b: &Dfa, max_len: usize) -> Option<Word> {
    let k = a.num_letters();
    let mut parent: HashMap<(usize, usize), Option<((usize, usize), usize)>> = HashMap::new();
    let start = (a.initial, b.initial);
    parent.insert(start, None);
    let mut frontier = vec![start];
    for depth in 0..=max_len {
        let mut next = Vec::new();
        for &(p, q) in &frontier {
            if a.is_accepting(p) != b.is_accepting(q) {
                let mut w = Vec::new();
                let mut cur = (p, q);
                while let Some(Some((prev, x))) = parent.get(&cur) {
                    w.push(*x);
                    cur = *prev;
                }
                w.reverse();
                return Some(w);
            }
            if depth == max_len {
                continue;
            }
            for x in 0..k {
                let t = (a.transitions[p][x], b.transitions[q][x]);
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(t) {
                    e.insert(Some(((p, q), x)));
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    None
}

/// Samples up to `budget` words with geometric lengths (mean about
/// `max_len / 2`, capped at `max_len`) and uniform letters; returns the
/// first one where `hyp` and `member` disagree.
pub fn random_word_equivalence(
    hyp: &Dfa,
    member: &mut dyn FnMut(&[usize]) -> Result<bool, TeacherError>,
    budget: usize,
    max_len: usize,
    rng_seed: u64,
) -> Result<Option<Word>, TeacherError> {
    let k = hyp.num_letters();
    let q = 1.0 - 1.0 / (1.0 + max_len as f64 / 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..budget {
        let mut w = Vec::new();
        while w.len() < max_len && rng.gen_bool(q) {
            w.push(rng.gen_range(0..k));
        }
        if member(&w)? != dfa_accepts(hyp, &w) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("observation table is not closed")]
    NotClosed,
    #[error("observation table is not consistent")]
    NotConsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationTable {
    pub letters: usize,
    pub s: Vec<Word>,
    pub e: Vec<Word>,
    pub t: BTreeMap<Word, bool>,
}

fn concat(a: &[usize], b: &[usize]) -> Word {
    let mut w = a.to_vec();
    w.extend_from_slice(b);
    w
}

impl ObservationTable {
    pub fn new(letters: usize) -> Self {
        ObservationTable {
            letters,
            s: vec![Vec::new()],
            e: vec![Vec::new()],
            t: BTreeMap::new(),
        }
    }

    pub fn row(&self, w: &[usize]) -> Vec<bool> {
        self.e.iter().map(|e| self.t[&concat(w, e)]).collect()
    }

    fn extensions(&self) -> impl Iterator<Item = Word> + '_ {
        self.s
            .iter()
            .flat_map(move |s| (0..self.letters).map(move |a| concat(s, &[a])))
    }

    /// Queries every missing entry of (S ∪ S·Σ) × E in length-lexicographic order.
    pub fn fill(&mut self, teacher: &mut dyn Teacher) -> Result<(), TeacherError> {
        let mut missing: Vec<Word> = self
            .s
            .iter()
            .cloned()
            .chain(self.extensions())
            .flat_map(|u| self.e.iter().map(move |e| concat(&u, e)))
            .filter(|w| !self.t.contains_key(w))
            .collect();
        missing.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        missing.dedup();
        if missing.is_empty() {
            return Ok(());
        }
        let answers = teacher.member_batch(&missing)?;
        for (w, b) in missing.into_iter().zip(answers) {
            self.t.insert(w, b);
        }
        Ok(())
    }

    fn find_unclosed(&self) -> Option<Word> {
        let rows: std::collections::HashSet<Vec<bool>> = self.s.iter().map(|s| self.row(s)).collect();
        self.extensions().find(|u| !rows.contains(&self.row(u)))
    }

    /// A suffix `a·e` separating two equal rows of S, if any.
    fn find_inconsistency(&self) -> Option<Word> {
        for (i, s1) in self.s.iter().enumerate() {
            for s2 in &self.s[i + 1..] {
                if self.row(s1) != self.row(s2) {
                    continue;
                }
                for a in 0..self.letters {
                    for e in &self.e {
                        let x = self.t[&concat(&concat(s1, &[a]), e)];
                        let y = self.t[&concat(&concat(s2, &[a]), e)];
                        if x != y {
                            return Some(concat(&[a], e));
                        }
                    }
                }
            }
        }
        None
    }

    pub fn is_closed(&self) -> bool {
        self.find_unclosed().is_none()
    }

    pub fn is_consistent(&self) -> bool {
        self.find_inconsistency().is_none()
    }

    pub fn add_prefixes(&mut self, w: &[usize]) {
        for i in 0..=w.len() {
            let p = w[..i].to_vec();
            if !self.s.contains(&p) {
                self.s.push(p);
            }
        }
    }
}

/// Fills, then repeatedly repairs inconsistency (new suffix) and
/// non-closedness (new prefix) until neither remains.
pub fn close_and_consistify(
    mut tbl: ObservationTable,
    teacher: &mut dyn Teacher,
) -> Result<ObservationTable, TeacherError> {
    loop {
        tbl.fill(teacher)?;
        if let Some(suffix) = tbl.find_inconsistency() {
            tbl.e.push(suffix);
            continue;
        }
        if let Some(u) = tbl.find_unclosed() {
            tbl.s.push(u);
            continue;
        }
        return Ok(tbl);
    }
}

pub fn hypothesis_of(tbl: &ObservationTable) -> Result<Dfa, TableError> {
    if !tbl.is_closed() {
        return Err(TableError::NotClosed);
    }
    if !tbl.is_consistent() {
        return Err(TableError::NotConsistent);
    }
    let mut ids: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut reps: Vec<&Word> = Vec::new();
    for s in &tbl.s {
        let n = ids.len();
        if let std::collections::hash_map::Entry::Vacant(e) = ids.entry(tbl.row(s)) {
            e.insert(n);
            reps.push(s);
        }
    }
    let eps_col = tbl.e.iter().position(|e| e.is_empty()).expect("ε ∈ E");
    let transitions = reps
        .iter()
        .map(|s| {
            (0..tbl.letters)
                .map(|a| ids[&tbl.row(&concat(s, &[a]))])
                .collect()
        })
        .collect();
    let accepting = reps
        .iter()
        .enumerate()
        .filter(|(_, s)| tbl.row(s)[eps_col])
        .map(|(i, _)| i)
        .collect();
    Ok(Dfa {
        states: reps.len(),
        initial: ids[&tbl.row(&[])],
        accepting,
        transitions,
        alphabet: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnOutcome {
    pub dfa: Dfa,
    pub rounds: usize,
    pub counterexamples: Vec<Word>,
    /// State counts of successive hypotheses.
    pub hypothesis_sizes: Vec<usize>,
    pub table: ObservationTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LstarError {
    #[error("equivalence still failing after {rounds} rounds")]
    BudgetExhausted { rounds: usize, hypothesis: Box<Dfa> },
    #[error("empty alphabet")]
    EmptyAlphabet,
    #[error(transparent)]
    Teacher(#[from] TeacherError),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Runs L* until the teacher finds no counterexample within `eq_budget`,
/// for at most `max_rounds` equivalence rounds.
pub fn learn(
    teacher: &mut dyn Teacher,
    alphabet: &[String],
    eq_budget: usize,
    max_rounds: usize,
) -> Result<LearnOutcome, LstarError> {
    if alphabet.is_empty() {
        return Err(LstarError::EmptyAlphabet);
    }
    let mut tbl = ObservationTable::new(alphabet.len());
    let mut counterexamples = Vec::new();
    let mut sizes = Vec::new();
    let mut last = None;
    for round in 1..=max_rounds.max(1) {
        tbl = close_and_consistify(tbl, teacher)?;
        let mut hyp = hypothesis_of(&tbl)?;
        hyp.alphabet = alphabet.to_vec();
        sizes.push(hyp.states);
        match teacher.equivalent(&hyp, eq_budget)? {
            None => {
                return Ok(LearnOutcome {
                    dfa: hyp,
                    rounds: round,
                    counterexamples,
                    hypothesis_sizes: sizes,
                    table: tbl,
                })
            }
            Some(cex) => {
                tbl.add_prefixes(&cex);
                counterexamples.push(cex);
                last = Some(hyp);
            }
        }
    }
    Err(LstarError::BudgetExhausted {
        rounds: max_rounds,
        hypothesis: Box::new(last.expect("at least one round")),
    })
}

/// Teacher for a known target automaton; equivalence searches all words
/// up to `max_len` through the product automaton.
#[derive(Debug, Clone)]
pub struct DfaTeacher {
    pub target: Dfa,
    pub max_len: usize,
}

impl Teacher for DfaTeacher {
    fn member(&mut self, w: &[usize]) -> Result<bool, TeacherError> {
        Ok(dfa_accepts(&self.target, w))
    }

    fn equivalent(&mut self, hyp: &Dfa, _budget: usize) -> Result<Option<Word>, TeacherError> {
        Ok(distinguishing_word(hyp, &self.target, self.max_len))
    }
}

/// Memoizes membership answers; the memo can be saved and reloaded.
pub struct CachedTeacher<T> {
    pub inner: T,
    pub cache: BTreeMap<Word, bool>,
    pub hits: usize,
}

impl<T: Teacher> CachedTeacher<T> {
    pub fn new(inner: T) -> Self {
        CachedTeacher {
            inner,
            cache: BTreeMap::new(),
            hits: 0,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), TeacherError> {
        let entries: Vec<(&Word, &bool)> = self.cache.iter().collect();
        let json = serde_json::to_string(&entries).map_err(|e| TeacherError::Cache(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| TeacherError::Cache(e.to_string()))
    }

    pub fn load(&mut self, path: &Path) -> Result<(), TeacherError> {
        let text = std::fs::read_to_string(path).map_err(|e| TeacherError::Cache(e.to_string()))?;
        let entries: Vec<(Word, bool)> =
            serde_json::from_str(&text).map_err(|e| TeacherError::Cache(e.to_string()))?;
        self.cache.extend(entries);
        Ok(())
    }
}

impl<T: Teacher> Teacher for CachedTeacher<T> {
    fn member(&mut self, w: &[usize]) -> Result<bool, TeacherError> {
        if let Some(b) = self.cache.get(w) {
            self.hits += 1;
            return Ok(*b);
        }
        let b = self.inner.member(w)?;
        self.cache.insert(w.to_vec(), b);
        Ok(b)
    }

    fn member_batch(&mut self, ws: &[Word]) -> Result<Vec<bool>, TeacherError> {
        let missing: Vec<Word> = ws
            .iter()
            .filter(|w| !self.cache.contains_key(*w))
            .cloned()
            .collect();
        self.hits += ws.len() - missing.len();
        let answers = self.inner.member_batch(&missing)?;
        self.cache.extend(missing.into_iter().zip(answers));
        Ok(ws.iter().map(|w| self.cache[w]).collect())
    }

    fn equivalent(&mut self, hyp: &Dfa, budget: usize) -> Result<Option<Word>, TeacherError> {
        let cex = self.inner.equivalent(hyp, budget)?;
        if let Some(w) = &cex {
            let b = !dfa_accepts(hyp, w);
            self.cache.insert(w.clone(), b);
        }
        Ok(cex)
    }
}

/// Membership: the event word yields a passing verdict on the scenario.
/// Equivalence: random falsification.
#[derive(Debug, Clone)]
pub struct SimulatorTeacher {
    pub scenario: Scenario,
    pub alphabet: Vec<Event>,
    pub sim: SimConfig,
    pub max_len: usize,
    pub rng_seed: u64,
    rounds: u64,
}

impl SimulatorTeacher {
    pub fn new(scenario: Scenario, alphabet: Vec<Event>, sim: SimConfig, max_len: usize, rng_seed: u64) -> Self {
        SimulatorTeacher {
            scenario,
            alphabet,
            sim,
            max_len,
            rng_seed,
            rounds: 0,
        }
    }

    pub fn alphabet_names(&self) -> Vec<String> {
        self.alphabet.iter().map(Event::to_string).collect()
    }

    fn query(&self, w: &[usize]) -> Result<bool, TeacherError> {
        let word: Vec<Event> = w.iter().map(|i| self.alphabet[*i].clone()).collect();
        sim::run(&self.scenario, &word, &self.sim)
            .map(|(_, v)| v.passed())
            .map_err(|e| TeacherError::Membership {
                word: w.to_vec(),
                reason: e.to_string(),
            })
    }
}

impl Teacher for SimulatorTeacher {
    fn member(&mut self, w: &[usize]) -> Result<bool, TeacherError> {
        self.query(w)
    }

    fn member_batch(&mut self, ws: &[Word]) -> Result<Vec<bool>, TeacherError> {
        let this = &*self;
        ws.par_iter().map(|w| this.query(w)).collect()
    }

    fn equivalent(&mut self, hyp: &Dfa, budget: usize) -> Result<Option<Word>, TeacherError> {
        self.rounds += 1;
        let seed = self.rng_seed.wrapping_add(self.rounds);
        let this = &*self;
        random_word_equivalence(hyp, &mut |w| this.query(w), budget, self.max_len, seed)
    }
}
