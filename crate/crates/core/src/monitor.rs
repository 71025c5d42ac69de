//! Progression-based monitor for LTLf formulas.
//!
//! States are canonical residues: what remains to be shown of the formula
//! after the letters read so far. A residue no nonempty continuation can
//! satisfy is collapsed to `false`, a residue every nonempty continuation
//! satisfies to `true`. Transitions are built lazily and keyed on the
//! letter projected onto the atoms the formula mentions.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::Letter;
use crate::ltl::{eval, Formula};

/// Rewrites `f` into canonical form: constants folded, nested `and`/`or`
/// flattened, operands sorted and deduplicated, complementary operands and
/// absorbed operands removed, double negation dropped.
pub fn canonical(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(a) => negate(canonical(a)),
        Formula::And(xs) => junction(xs.iter().map(canonical).collect(), true),
        Formula::Or(xs) => junction(xs.iter().map(canonical).collect(), false),
        Formula::Next(a) => match canonical(a) {
            Formula::False => Formula::False,
            a => Formula::next(a),
        },
        Formula::Finally(a) => match canonical(a) {
            c @ (Formula::True | Formula::False) => c,
            c @ Formula::Finally(_) => c,
            c => Formula::finally(c),
        },
        Formula::Globally(a) => match canonical(a) {
            c @ (Formula::True | Formula::False) => c,
            c @ Formula::Globally(_) => c,
            c => Formula::globally(c),
        },
        Formula::Until(a, b) => match (canonical(a), canonical(b)) {
            (_, b @ (Formula::True | Formula::False)) => b,
            (Formula::False, b) => b,
            (Formula::True, b) => canonical(&Formula::finally(b)),
            (a, b) if a == b => a,
            (a, b) => Formula::until(a, b),
        },
    }
}

fn negate(c: Formula) -> Formula {
    match c {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(inner) => *inner,
        c => Formula::not(c),
    }
}

/// Canonical conjunction (`is_and`) or disjunction of canonical operands.
fn junction(parts: Vec<Formula>, is_and: bool) -> Formula {
    let (unit, zero) = if is_and {
        (Formula::True, Formula::False)
    } else {
        (Formula::False, Formula::True)
    };
    let mut flat: Vec<Formula> = Vec::new();
    for p in parts {
        match p {
            Formula::And(xs) if is_and => flat.extend(xs),
            Formula::Or(xs) if !is_and => flat.extend(xs),
            p if p == unit => {}
            p if p == zero => return zero,
            p => flat.push(p),
        }
    }
    flat.sort();
    flat.dedup();
    let set: BTreeSet<&Formula> = flat.iter().collect();
    if flat.iter().any(|x| match x {
        Formula::Not(inner) => set.contains(&**inner),
        _ => false,
    }) {
        return zero;
    }
    // absorption: a ∧ (a ∨ b) = a, a ∨ (a ∧ b) = a
    let absorbed = |x: &Formula| -> bool {
        let inner = match (x, is_and) {
            (Formula::Or(ys), true) | (Formula::And(ys), false) => ys,
            _ => return false,
        };
        inner.iter().any(|y| set.contains(y))
    };
    let kept: Vec<Formula> = flat.iter().filter(|x| !absorbed(x)).cloned().collect();
    match kept.len() {
        0 => unit,
        1 => kept.into_iter().next().expect("one"),
        _ => {
            if is_and {
                Formula::And(kept)
            } else {
                Formula::Or(kept)
            }
        }
    }
}

/// One progression step, canonicalized.
pub fn progress(f: &Formula, letter: Letter) -> Formula {
    canonical(&prog(f, letter))
}

fn prog(f: &Formula, a: Letter) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(p) => {
            if a >> p & 1 == 1 {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Not(x) => Formula::not(prog(x, a)),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| prog(x, a)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| prog(x, a)).collect()),
        Formula::Next(x) => (**x).clone(),
        Formula::Globally(x) => Formula::and(vec![prog(x, a), f.clone()]),
        Formula::Finally(x) => Formula::or(vec![prog(x, a), f.clone()]),
        Formula::Until(x, y) => Formula::or(vec![
            prog(y, a),
            Formula::and(vec![prog(x, a), f.clone()]),
        ]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Violated,
    Satisfied,
    Pending,
}

pub fn classify(r: &Formula) -> Classification {
    match r {
        Formula::False => Classification::Violated,
        Formula::True => Classification::Satisfied,
        _ => Classification::Pending,
    }
}

/// Atoms mentioned by `f`, ascending.
pub fn atoms_of(f: &Formula) -> Vec<usize> {
    fn walk(f: &Formula, out: &mut BTreeSet<usize>) {
        if let Formula::Atom(p) = f {
            out.insert(*p);
        }
        for c in f.children() {
            walk(c, out);
        }
    }
    let mut out = BTreeSet::new();
    walk(f, &mut out);
    out.into_iter().collect()
}

fn projection_mask(atoms: &[usize]) -> Letter {
    atoms.iter().fold(0, |m, p| m | 1 << p)
}

/// Every letter over `atoms` (other bits zero), in ascending binary order
/// of the atom assignment.
pub fn letters_over(atoms: &[usize]) -> Vec<Letter> {
    (0u32..1 << atoms.len())
        .map(|m| {
            atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .fold(0, |l, (_, p)| l | 1 << p)
        })
        .collect()
}

pub const DEFAULT_STATE_CAP: usize = 10_000;

/// Semantic residue simplification with a memo table.
#[derive(Debug, Default)]
struct Collapser {
    sat: HashMap<Formula, bool>,
}

impl Collapser {
    /// Whether some nonempty trace satisfies `r`.
    fn satisfiable(&mut self, r: &Formula, letters: &[Letter]) -> bool {
        if let Some(b) = self.sat.get(r) {
            return *b;
        }
        let mut seen: BTreeSet<Formula> = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(r.clone());
        queue.push_back(r.clone());
        let mut answer = false;
        'search: while let Some(q) = queue.pop_front() {
            if seen.len() > DEFAULT_STATE_CAP {
                answer = true;
                break;
            }
            for &a in letters {
                if eval(&q, &[a], 0) {
                    answer = true;
                    break 'search;
                }
                let n = progress(&q, a);
                if n != Formula::False && seen.insert(n.clone()) {
                    queue.push_back(n);
                }
            }
        }
        self.sat.insert(r.clone(), answer);
        answer
    }

    fn collapse(&mut self, r: Formula, letters: &[Letter]) -> Formula {
        if matches!(r, Formula::True | Formula::False) {
            return r;
        }
        if !self.satisfiable(&r, letters) {
            Formula::False
        } else if !self.satisfiable(&canonical(&Formula::not(r.clone())), letters) {
            Formula::True
        } else {
            r
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorRun {
    pub final_residue: Formula,
    pub verdict: Classification,
    /// State ids along the run, starting with the initial state.
    pub path: Vec<usize>,
    /// `(from, projected letter, to)` per consumed letter.
    pub transitions: Vec<(usize, Letter, usize)>,
    /// Index of the letter at which the verdict was reached.
    pub decided_at: Option<usize>,
}

impl MonitorRun {
    pub fn visited_states(&self) -> BTreeSet<usize> {
        self.path.iter().copied().collect()
    }
}

/// A run computed without touching the automaton: residues instead of ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResiduePath {
    pub residues: Vec<Formula>,
    pub letters: Vec<Letter>,
    pub verdict: Classification,
    pub decided_at: Option<usize>,
}

#[derive(Debug)]
pub struct MonitorAutomaton {
    pub formula: Formula,
    pub names: Vec<String>,
    atoms: Vec<usize>,
    mask: Letter,
    letters: Vec<Letter>,
    states: Vec<Formula>,
    ids: HashMap<Formula, usize>,
    transitions: BTreeMap<(usize, Letter), usize>,
    collapser: Mutex<Collapser>,
}

impl Clone for MonitorAutomaton {
    fn clone(&self) -> Self {
        MonitorAutomaton {
            formula: self.formula.clone(),
            names: self.names.clone(),
            atoms: self.atoms.clone(),
            mask: self.mask,
            letters: self.letters.clone(),
            states: self.states.clone(),
            ids: self.ids.clone(),
            transitions: self.transitions.clone(),
            collapser: Mutex::new(Collapser::default()),
        }
    }
}

impl MonitorAutomaton {
    pub fn new(formula: &Formula, names: Vec<String>) -> Self {
        let atoms = atoms_of(formula);
        let mut m = MonitorAutomaton {
            formula: formula.clone(),
            names,
            mask: projection_mask(&atoms),
            letters: letters_over(&atoms),
            atoms,
            states: Vec::new(),
            ids: HashMap::new(),
            transitions: BTreeMap::new(),
            collapser: Mutex::new(Collapser::default()),
        };
        let init = m.collapse(canonical(formula));
        m.intern(init);
        m
    }

    fn collapse(&self, r: Formula) -> Formula {
        self.collapser
            .lock()
            .expect("collapser lock")
            .collapse(r, &self.letters)
    }

    fn intern(&mut self, r: Formula) -> usize {
        if let Some(id) = self.ids.get(&r) {
            return *id;
        }
        let id = self.states.len();
        self.ids.insert(r.clone(), id);
        self.states.push(r);
        id
    }

    pub fn initial(&self) -> &Formula {
        &self.states[0]
    }

    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    /// The projected alphabet: one letter per assignment to the formula's atoms.
    pub fn alphabet(&self) -> &[Letter] {
        &self.letters
    }

    pub fn project(&self, l: Letter) -> Letter {
        l & self.mask
    }

    pub fn states(&self) -> &[Formula] {
        &self.states
    }

    pub fn state_id(&self, r: &Formula) -> Option<usize> {
        self.ids.get(r).copied()
    }

    pub fn transitions(&self) -> &BTreeMap<(usize, Letter), usize> {
        &self.transitions
    }

    pub fn classification(&self, id: usize) -> Classification {
        classify(&self.states[id])
    }

    /// Successor residue, without recording anything.
    pub fn successor(&self, r: &Formula, letter: Letter) -> Formula {
        if let Some(id) = self.ids.get(r) {
            if let Some(to) = self.transitions.get(&(*id, self.project(letter))) {
                return self.states[*to].clone();
            }
        }
        self.collapse(progress(r, self.project(letter)))
    }

    /// Folds the letters from the initial residue, stopping at a verdict.
    /// Pure with respect to the automaton.
    pub fn trace_path(&self, letters: &[Letter]) -> ResiduePath {
        let mut residues = vec![self.initial().clone()];
        let mut used = Vec::new();
        let mut verdict = Classification::Pending;
        let mut decided_at = None;
        for (k, &l) in letters.iter().enumerate() {
            let l = self.project(l);
            let cur = residues.last().expect("nonempty");
            let prefix_holds = eval(cur, &[l], 0);
            let next = self.successor(cur, l);
            used.push(l);
            residues.push(next.clone());
            match next {
                Formula::False if !prefix_holds => {
                    verdict = Classification::Violated;
                    decided_at = Some(k);
                    break;
                }
                Formula::True if prefix_holds => {
                    verdict = Classification::Satisfied;
                    decided_at = Some(k);
                    break;
                }
                _ => {}
            }
        }
        ResiduePath {
            residues,
            letters: used,
            verdict,
            decided_at,
        }
    }

    /// Inserts the states and transitions of a computed path.
    pub fn record(&mut self, p: &ResiduePath) -> MonitorRun {
        let mut path = Vec::with_capacity(p.residues.len());
        let mut transitions = Vec::new();
        for r in &p.residues {
            path.push(self.intern(r.clone()));
        }
        for (k, l) in p.letters.iter().enumerate() {
            let t = (path[k], *l, path[k + 1]);
            self.transitions.entry((t.0, t.1)).or_insert(t.2);
            transitions.push(t);
        }
        MonitorRun {
            final_residue: p.residues.last().expect("nonempty").clone(),
            verdict: p.verdict,
            path,
            transitions,
            decided_at: p.decided_at,
        }
    }

    pub fn run(&mut self, letters: &[Letter]) -> MonitorRun {
        let p = self.trace_path(letters);
        self.record(&p)
    }

    /// Records every transition reachable within `depth` letters; verdict
    /// residues are not expanded.
    pub fn explore(&mut self, depth: usize) {
        let mut seen = BTreeSet::from([0usize]);
        let mut queue = VecDeque::from([(0usize, 0usize)]);
        while let Some((id, d)) = queue.pop_front() {
            let r = self.states[id].clone();
            if d >= depth || matches!(r, Formula::True | Formula::False) {
                continue;
            }
            for l in self.letters.clone() {
                let next = self.successor(&r, l);
                let to = self.intern(next);
                self.transitions.entry((id, l)).or_insert(to);
                if seen.insert(to) {
                    queue.push_back((to, d + 1));
                }
            }
        }
    }

    /// BFS distance of every known state from the initial state over the
    /// recorded transitions.
    pub fn depths(&self) -> Vec<Option<usize>> {
        let mut depth = vec![None; self.states.len()];
        depth[0] = Some(0);
        let mut queue = VecDeque::from([0usize]);
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); self.states.len()];
        for ((from, _), to) in &self.transitions {
            succ[*from].push(*to);
        }
        while let Some(s) = queue.pop_front() {
            let d = depth[s].expect("queued states have depth");
            for &t in &succ[s] {
                if depth[t].is_none() {
                    depth[t] = Some(d + 1);
                    queue.push_back(t);
                }
            }
        }
        depth
    }

    /// Letters of the projected alphabet with no recorded transition out of `id`.
    pub fn unexplored_letters(&self, id: usize) -> usize {
        self.letters
            .iter()
            .filter(|l| !self.transitions.contains_key(&(id, **l)))
            .count()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph monitor {\n  rankdir=LR;\n");
        for (id, r) in self.states.iter().enumerate() {
            let shape = match classify(r) {
                Classification::Violated => "doublecircle",
                _ => "circle",
            };
            let _ = writeln!(
                out,
                "  s{id} [label=\"{}\", shape={shape}];",
                r.to_text(&self.names).replace('"', "\\\"")
            );
        }
        for ((from, l), to) in &self.transitions {
            let _ = writeln!(out, "  s{from} -> s{to} [label=\"{}\"];", self.letter_label(*l));
        }
        out.push_str("}\n");
        out
    }

    fn letter_label(&self, l: Letter) -> String {
        let on: Vec<String> = self
            .atoms
            .iter()
            .filter(|p| l >> **p & 1 == 1)
            .map(|p| self.names.get(*p).cloned().unwrap_or_else(|| format!("p{p}")))
            .collect();
        if on.is_empty() {
            "{}".into()
        } else {
            on.join(",")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Traversal {
    Dfs,
    Bfs,
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("state bound exceeded the cap of {cap} residues")]
pub struct StateExplosion {
    pub cap: usize,
    pub partial: Vec<Formula>,
}

/// Residues reachable from `f` within `max_depth` letters over the
/// formula's projected alphabet, in discovery order of `order`.
pub fn reachable_state_bound(
    f: &Formula,
    max_depth: usize,
    cap: usize,
    order: Traversal,
    rng_seed: u64,
) -> Result<Vec<Formula>, StateExplosion> {
    let m = MonitorAutomaton::new(f, Vec::new());
    let init = m.initial().clone();
    let mut found: Vec<Formula> = vec![init.clone()];
    let mut best: HashMap<Formula, usize> = HashMap::from([(init.clone(), 0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut frontier: VecDeque<(Formula, usize)> = VecDeque::from([(init, 0)]);
    let explode = |found: &Vec<Formula>| StateExplosion {
        cap,
        partial: found[..cap.min(found.len())].to_vec(),
    };
    if found.len() > cap {
        return Err(explode(&found));
    }
    while let Some((r, d)) = match order {
        Traversal::Bfs => frontier.pop_front(),
        Traversal::Dfs => frontier.pop_back(),
        Traversal::RandomWalk => {
            let len = frontier.len();
            if len == 0 {
                None
            } else {
                frontier.swap(0, rand::Rng::gen_range(&mut rng, 0..len));
                frontier.pop_front()
            }
        }
    } {
        if d >= max_depth || matches!(r, Formula::True | Formula::False) {
            continue;
        }
        let mut letters = m.alphabet().to_vec();
        if order == Traversal::RandomWalk {
            letters.shuffle(&mut rng);
        }
        for l in letters {
            let n = m.successor(&r, l);
            match best.get(&n) {
                Some(&old) if old <= d + 1 => continue,
                Some(_) => {}
                None => {
                    found.push(n.clone());
                    if found.len() > cap {
                        return Err(explode(&found));
                    }
                }
            }
            best.insert(n.clone(), d + 1);
            frontier.push_back((n, d + 1));
        }
    }
    Ok(found)
}
