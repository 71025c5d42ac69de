//! Coverage-guided fuzzing of scenario parameters and event words, with
//! monitor states and transitions as the coverage signal.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::abstraction::{abstract_trace, Letter, PredicateSet};
use crate::dsl::{
    parse_scenario, serialize_scenario, validate_scenario_with, NpcSpec, Scenario, TimeOfDay,
    Weather, MAX_SPEED, ROAD_LENGTH,
};
use crate::ltl::Formula;
use crate::monitor::{
    reachable_state_bound, Classification, MonitorAutomaton, ResiduePath, Traversal,
    DEFAULT_STATE_CAP,
};
use crate::sim::{self, Event, SimConfig, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzInput {
    pub scenario: Scenario,
    pub word: Vec<Event>,
}

impl FuzzInput {
    pub fn new(scenario: Scenario, word: Vec<Event>) -> Self {
        FuzzInput { scenario, word }
    }

    /// Hex prefix of SHA-256 over the canonical scenario text and the word.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serialize_scenario(&self.scenario));
        h.update(b"\n");
        let word: Vec<String> = self.word.iter().map(Event::to_string).collect();
        h.update(word.join(","));
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationOp {
    PerturbNumeric,
    FlipEnum,
    InsertEvent,
    DeleteEvent,
    ReplaceEvent,
    SwapEvents,
}

impl MutationOp {
    pub const ALL: [MutationOp; 6] = [
        MutationOp::PerturbNumeric,
        MutationOp::FlipEnum,
        MutationOp::InsertEvent,
        MutationOp::DeleteEvent,
        MutationOp::ReplaceEvent,
        MutationOp::SwapEvents,
    ];
}

const MUTATION_RETRIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzConfig {
    pub budget: usize,
    pub rng_seed: u64,
    pub traversal: Traversal,
    pub weights: BTreeMap<MutationOp, f64>,
    pub stop_on_first: bool,
    /// Event kinds the word mutations may use (`NONE`, `NPC_BRAKE`, ...);
    /// empty means all.
    pub event_kinds: Vec<String>,
    pub max_word_len: usize,
    pub batch: usize,
    pub coverage_depth: usize,
    /// Worker threads; never part of the report.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            budget: 10_000,
            rng_seed: 0,
            traversal: Traversal::Bfs,
            weights: MutationOp::ALL.iter().map(|op| (*op, 1.0)).collect(),
            stop_on_first: false,
            event_kinds: Vec::new(),
            max_word_len: 40,
            batch: 64,
            coverage_depth: 10,
            workers: None,
        }
    }
}

impl FuzzConfig {
    pub fn check(&self) -> Result<(), FuzzError> {
        let bad = |m: &str| Err(FuzzError::InvalidConfig(m.to_string()));
        if self.budget == 0 {
            return bad("budget must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if self.weights.values().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return bad("mutation weights must be finite and non-negative");
        }
        if self.weights.values().all(|w| *w == 0.0) {
            return bad("mutation weights are all zero");
        }
        for k in &self.event_kinds {
            if !EVENT_KINDS.contains(&k.as_str()) {
                return bad(&format!("unknown event kind {k}"));
            }
        }
        Ok(())
    }
}

const EVENT_KINDS: [&str; 5] = ["NONE", "NPC_BRAKE", "PED_CROSS", "RAIN_ON", "RAIN_OFF"];

fn event_kind(e: &Event) -> &'static str {
    match e {
        Event::None => "NONE",
        Event::NpcBrake(_) => "NPC_BRAKE",
        Event::PedCross(_) => "PED_CROSS",
        Event::RainOn => "RAIN_ON",
        Event::RainOff => "RAIN_OFF",
    }
}

/// The scenario's event alphabet restricted to `kinds` (all when empty).
pub fn fuzz_alphabet(s: &Scenario, kinds: &[String]) -> Vec<Event> {
    sim::scenario_alphabet(s)
        .into_iter()
        .filter(|e| kinds.is_empty() || kinds.iter().any(|k| k == event_kind(e)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzError {
    #[error("invalid fuzz config: {0}")]
    InvalidConfig(String),
    #[error("empty seed corpus")]
    NoSeeds,
    #[error("seed {index} is invalid: {reason}")]
    InvalidSeed { index: usize, reason: String },
    #[error(transparent)]
    Replay(#[from] ReplayMismatch),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("replay of counterexample {hash} diverged at residue {index}")]
pub struct ReplayMismatch {
    pub hash: String,
    pub index: usize,
}

fn numeric_fields(s: &mut Scenario) -> Vec<(&mut f64, f64)> {
    let ego = &mut s.actors.ego;
    let mut out: Vec<(&mut f64, f64)> = vec![
        (&mut ego.start_position, ROAD_LENGTH),
        (&mut ego.start_speed, MAX_SPEED),
    ];
    for n in s.actors.npcs.iter_mut() {
        match n {
            NpcSpec::Vehicle {
                start_position,
                start_speed,
                ..
            } => {
                out.push((start_position, ROAD_LENGTH));
                out.push((start_speed, MAX_SPEED));
            }
            NpcSpec::Pedestrian {
                crossing_position,
                trigger_distance,
                ..
            } => {
                out.push((crossing_position, ROAD_LENGTH));
                out.push((trigger_distance, ROAD_LENGTH));
            }
        }
    }
    for sign in s.road.signs.iter_mut() {
        out.push((&mut sign.position, ROAD_LENGTH));
    }
    out
}

/// ±10%, clamped to [0, max] and rounded to millimeters so the DSL text stays short.
pub fn perturb(v: f64, up: bool, max: f64) -> f64 {
    let x = if up { v * 1.1 } else { v * 0.9 };
    (x.clamp(0.0, max) * 1000.0).round() / 1000.0
}

fn apply(
    op: MutationOp,
    input: &FuzzInput,
    alphabet: &[Event],
    cfg: &FuzzConfig,
    rng: &mut ChaCha8Rng,
) -> Option<FuzzInput> {
    let mut out = input.clone();
    let w = &mut out.word;
    match op {
        MutationOp::PerturbNumeric => {
            let up = rng.gen_bool(0.5);
            let mut fields = numeric_fields(&mut out.scenario);
            let i = rng.gen_range(0..fields.len());
            let (v, max) = &mut fields[i];
            **v = perturb(**v, up, *max);
        }
        MutationOp::FlipEnum => {
            let env = &mut out.scenario.environment;
            if rng.gen_bool(0.5) {
                env.weather = match env.weather {
                    Weather::Clear => Weather::Rain,
                    Weather::Rain => Weather::Fog,
                    Weather::Fog => Weather::Clear,
                };
            } else {
                env.time_of_day = match env.time_of_day {
                    TimeOfDay::Day => TimeOfDay::Night,
                    TimeOfDay::Night => TimeOfDay::Day,
                };
            }
        }
        MutationOp::InsertEvent => {
            if w.len() >= cfg.max_word_len || alphabet.is_empty() {
                return None;
            }
            let at = rng.gen_range(0..=w.len());
            w.insert(at, alphabet[rng.gen_range(0..alphabet.len())].clone());
        }
        MutationOp::DeleteEvent => {
            if w.is_empty() {
                return None;
            }
            let at = rng.gen_range(0..w.len());
            w.remove(at);
        }
        MutationOp::ReplaceEvent => {
            if w.is_empty() || alphabet.is_empty() {
                return None;
            }
            let at = rng.gen_range(0..w.len());
            w[at] = alphabet[rng.gen_range(0..alphabet.len())].clone();
        }
        MutationOp::SwapEvents => {
            if w.len() < 2 {
                return None;
            }
            let a = rng.gen_range(0..w.len());
            let mut b = rng.gen_range(0..w.len() - 1);
            if b >= a {
                b += 1;
            }
            w.swap(a, b);
        }
    }
    Some(out)
}

/// One weighted-random operator; invalid results are retried, and after
/// [`MUTATION_RETRIES`] failures the input comes back unchanged.
pub fn mutate(
    input: &FuzzInput,
    cfg: &FuzzConfig,
    sim: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> FuzzInput {
    let weights: Vec<f64> = MutationOp::ALL
        .iter()
        .map(|op| cfg.weights.get(op).copied().unwrap_or(0.0))
        .collect();
    let Ok(dist) = WeightedIndex::new(&weights) else {
        return input.clone();
    };
    let alphabet = fuzz_alphabet(&input.scenario, &cfg.event_kinds);
    for _ in 0..MUTATION_RETRIES {
        let op = MutationOp::ALL[dist.sample(rng)];
        let Some(out) = apply(op, input, &alphabet, cfg, rng) else {
            continue;
        };
        let scenario_changed = matches!(op, MutationOp::PerturbNumeric | MutationOp::FlipEnum);
        if !scenario_changed || validate_scenario_with(&out.scenario, false, sim).is_valid() {
            return out;
        }
    }
    input.clone()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub input: FuzzInput,
    pub hash: String,
    pub novelty: usize,
    pub discovered: usize,
    pub final_residue: Formula,
    /// Times chosen as a parent so far.
    pub selected: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    hashes: HashSet<String>,
}

impl Corpus {
    /// False when an entry with the same input hash is already present.
    pub fn push(&mut self, e: CorpusEntry) -> bool {
        if !self.hashes.insert(e.hash.clone()) {
            return false;
        }
        self.entries.push(e);
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Index of the corpus entry to mutate next.
pub fn select_next(
    corpus: &Corpus,
    monitor: &MonitorAutomaton,
    traversal: Traversal,
    rng: &mut ChaCha8Rng,
) -> usize {
    assert!(!corpus.is_empty(), "select_next on an empty corpus");
    if traversal == Traversal::RandomWalk {
        return rng.gen_range(0..corpus.len());
    }
    let depths = monitor.depths();
    let info: Vec<(usize, usize)> = corpus
        .entries
        .iter()
        .map(|e| {
            let id = monitor.state_id(&e.final_residue);
            let depth = id.and_then(|i| depths[i]).unwrap_or(usize::MAX);
            let open = id.map_or(0, |i| monitor.unexplored_letters(i));
            (depth, open)
        })
        .collect();
    // among equally ranked entries the least used one goes first
    let key = |i: usize| {
        let e = &corpus.entries[i];
        (e.selected, e.discovered, &e.hash)
    };
    let idx = 0..corpus.len();
    match traversal {
        Traversal::Dfs => idx
            .min_by(|a, b| {
                let da = info[*a].0.wrapping_add(1);
                let db = info[*b].0.wrapping_add(1);
                db.cmp(&da).then_with(|| key(*a).cmp(&key(*b)))
            })
            .expect("nonempty"),
        _ => {
            let any_open = info.iter().any(|(_, open)| *open > 0);
            idx.filter(|i| !any_open || info[*i].1 > 0)
                .min_by(|a, b| info[*a].0.cmp(&info[*b].0).then_with(|| key(*a).cmp(&key(*b))))
                .expect("nonempty")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub states_pct: f64,
    pub transitions_pct: f64,
    pub states_hit: usize,
    pub states_total: usize,
    pub transitions_hit: usize,
    pub transitions_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub iteration: usize,
    pub hash: String,
    /// Scenario in DSL form.
    pub scenario: String,
    pub word: Vec<Event>,
    /// Residues from the initial one to the violated one.
    pub path: Vec<String>,
}

impl Counterexample {
    pub fn input(&self) -> Result<FuzzInput, String> {
        let s = parse_scenario(&self.scenario).map_err(|e| e.to_string())?;
        Ok(FuzzInput::new(s, self.word.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub version: String,
    pub formula: String,
    pub config: FuzzConfig,
    pub simulator: SimConfig,
    pub rng_seed: u64,
    pub coverage: Coverage,
    pub counterexamples: Vec<Counterexample>,
    pub executions: usize,
    pub skipped: usize,
    pub violating_executions: usize,
    pub corpus_size: usize,
}

impl FuzzReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Simulates, abstracts and monitors one input without touching the monitor.
pub fn execute(
    input: &FuzzInput,
    monitor: &MonitorAutomaton,
    sim: &SimConfig,
) -> Result<(Trace, ResiduePath), sim::SimError> {
    let (trace, verdict) = sim::run(&input.scenario, &input.word, sim)?;
    let preds = PredicateSet::for_scenario(&input.scenario, sim);
    let letters = abstract_trace(&trace, &preds, &verdict).letters;
    let path = monitor.trace_path(&letters);
    Ok((trace, path))
}

fn residue_texts(residues: &[Formula]) -> Vec<String> {
    let names = PredicateSet::names();
    residues.iter().map(|r| r.to_text(&names)).collect()
}

fn collapsed(residues: &[Formula]) -> Vec<Formula> {
    let mut out: Vec<Formula> = residues.to_vec();
    out.dedup();
    out
}

/// Re-executes a reported counterexample; its residue path must match.
pub fn replay(
    cex: &Counterexample,
    formula: &Formula,
    sim: &SimConfig,
) -> Result<(Trace, Vec<Formula>), ReplayMismatch> {
    let mismatch = |index| ReplayMismatch {
        hash: cex.hash.clone(),
        index,
    };
    let input = cex.input().map_err(|_| mismatch(0))?;
    let monitor = MonitorAutomaton::new(formula, PredicateSet::names());
    let (trace, path) = execute(&input, &monitor, sim).map_err(|_| mismatch(0))?;
    let texts = residue_texts(&path.residues);
    if let Some(i) = (0..texts.len().max(cex.path.len())).find(|i| texts.get(*i) != cex.path.get(*i)) {
        return Err(mismatch(i));
    }
    if path.verdict != Classification::Violated {
        return Err(mismatch(texts.len().saturating_sub(1)));
    }
    Ok((trace, path.residues))
}

type Edge = (Formula, Letter, Formula);

/// Transitions out of residues at depth < `depth`, over the projected alphabet.
fn reachable_transitions(monitor: &MonitorAutomaton, depth: usize) -> BTreeSet<Edge> {
    let mut edges = BTreeSet::new();
    let mut seen = HashSet::from([monitor.initial().clone()]);
    let mut queue = VecDeque::from([(monitor.initial().clone(), 0)]);
    while let Some((r, d)) = queue.pop_front() {
        if d >= depth || matches!(r, Formula::True | Formula::False) {
            continue;
        }
        for &l in monitor.alphabet() {
            let next = monitor.successor(&r, l);
            edges.insert((r.clone(), l, next.clone()));
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    edges
}

struct Job {
    iteration: usize,
    parent: Option<usize>,
    input: FuzzInput,
}

pub fn fuzz(
    seeds: &[FuzzInput],
    formula: &Formula,
    cfg: &FuzzConfig,
    sim: &SimConfig,
) -> Result<FuzzReport, FuzzError> {
    cfg.check()?;
    sim.check()
        .map_err(|e| FuzzError::InvalidConfig(e.to_string()))?;
    if seeds.is_empty() {
        return Err(FuzzError::NoSeeds);
    }
    for (index, s) in seeds.iter().enumerate() {
        let report = validate_scenario_with(&s.scenario, false, sim);
        if !report.is_valid() {
            let reason = report.errors().next().map(|d| d.message.clone()).unwrap_or_default();
            return Err(FuzzError::InvalidSeed { index, reason });
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| FuzzError::InvalidConfig(e.to_string()))?;

    let mut monitor = MonitorAutomaton::new(formula, PredicateSet::names());
    let state_bound: Vec<Formula> = match reachable_state_bound(
        formula,
        cfg.coverage_depth,
        DEFAULT_STATE_CAP,
        Traversal::Bfs,
        cfg.rng_seed,
    ) {
        Ok(v) => v,
        Err(e) => e.partial,
    };
    let edge_bound = reachable_transitions(&monitor, cfg.coverage_depth);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut corpus = Corpus::default();
    let mut states_hit: BTreeSet<Formula> = BTreeSet::new();
    let mut edges_hit: BTreeSet<Edge> = BTreeSet::new();
    let mut found: Vec<Counterexample> = Vec::new();
    let mut cex_paths: HashSet<Vec<Formula>> = HashSet::new();
    let (mut executions, mut skipped, mut violating) = (0usize, 0usize, 0usize);
    let mut iteration = 0usize;
    let mut pending: VecDeque<FuzzInput> = seeds.iter().cloned().collect();

    'outer: while executions + skipped < cfg.budget {
        let room = cfg.batch.min(cfg.budget - executions - skipped);
        let mut jobs: Vec<Job> = Vec::with_capacity(room);
        while jobs.len() < room {
            if let Some(seed) = pending.pop_front() {
                jobs.push(Job {
                    iteration,
                    parent: None,
                    input: seed,
                });
                iteration += 1;
                continue;
            }
            if corpus.is_empty() {
                break;
            }
            let parent = select_next(&corpus, &monitor, cfg.traversal, &mut rng);
            corpus.entries[parent].selected += 1;
            let energy = corpus.entries[parent].novelty.max(1);
            for _ in 0..energy.min(room - jobs.len()) {
                let child = mutate(&corpus.entries[parent].input, cfg, sim, &mut rng);
                jobs.push(Job {
                    iteration,
                    parent: Some(parent),
                    input: child,
                });
                iteration += 1;
            }
        }
        if jobs.is_empty() {
            // every seed failed to execute
            break;
        }

        let results: Vec<Option<ResiduePath>> = pool.install(|| {
            jobs.par_iter()
                .map(|j| execute(&j.input, &monitor, sim).ok().map(|(_, p)| p))
                .collect()
        });

        for (job, result) in jobs.into_iter().zip(results) {
            let Some(path) = result else {
                skipped += 1;
                continue;
            };
            executions += 1;
            let mut novelty = 0;
            for r in &path.residues {
                novelty += usize::from(states_hit.insert(r.clone()));
            }
            for (k, l) in path.letters.iter().enumerate() {
                let e = (path.residues[k].clone(), *l, path.residues[k + 1].clone());
                novelty += usize::from(edges_hit.insert(e));
            }
            monitor.record(&path);
            let hash = job.input.hash();
            if job.parent.is_none() || novelty > 0 {
                corpus.push(CorpusEntry {
                    input: job.input.clone(),
                    hash: hash.clone(),
                    novelty,
                    discovered: job.iteration,
                    final_residue: path.residues.last().expect("nonempty").clone(),
                    selected: 0,
                });
            }
            if path.verdict == Classification::Violated {
                violating += 1;
                if cex_paths.insert(collapsed(&path.residues)) {
                    found.push(Counterexample {
                        iteration: job.iteration,
                        hash,
                        scenario: serialize_scenario(&job.input.scenario),
                        word: job.input.word.clone(),
                        path: residue_texts(&path.residues),
                    });
                }
                if cfg.stop_on_first {
                    break 'outer;
                }
            }
        }
    }

    found.sort_by(|a, b| (a.iteration, &a.hash).cmp(&(b.iteration, &b.hash)));
    for cex in &found {
        replay(cex, formula, sim)?;
    }

    let hit_states = state_bound.iter().filter(|r| states_hit.contains(*r)).count();
    let hit_edges = edge_bound.iter().filter(|e| edges_hit.contains(*e)).count();
    let pct = |a: usize, b: usize| if b == 0 { 100.0 } else { 100.0 * a as f64 / b as f64 };
    Ok(FuzzReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        formula: formula.to_text(&PredicateSet::names()),
        config: cfg.clone(),
        simulator: sim.clone(),
        rng_seed: cfg.rng_seed,
        coverage: Coverage {
            states_pct: pct(hit_states, state_bound.len()),
            transitions_pct: pct(hit_edges, edge_bound.len()),
            states_hit: hit_states,
            states_total: state_bound.len(),
            transitions_hit: hit_edges,
            transitions_total: edge_bound.len(),
        },
        counterexamples: found,
        executions,
        skipped,
        violating_executions: violating,
        corpus_size: corpus.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::COLLISION;
    use crate::dsl::parse_scenario;

    const LEAD: &str = "scenario lead {
  environment { weather: clear; time: day; }
  road { type: straight; markers: []; signs: []; }
  actors {
    ego { position: 0.0; speed: 20.0; controller: rule_follower; }
    vehicle lead { position: 60.0; speed: 20.0; behavior: cruise; }
  }
  oracle { longitudinal: [no_collision]; lateral: []; }
}";

    fn lead_input() -> FuzzInput {
        FuzzInput::new(parse_scenario(LEAD).unwrap(), Vec::new())
    }

    fn only(op: MutationOp) -> FuzzConfig {
        FuzzConfig {
            weights: BTreeMap::from([(op, 1.0)]),
            ..FuzzConfig::default()
        }
    }

    fn no_collision() -> Formula {
        Formula::globally(Formula::not(Formula::Atom(COLLISION)))
    }

    #[test]
    fn insert_grows_word_by_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = only(MutationOp::InsertEvent);
        let out = mutate(&lead_input(), &cfg, &SimConfig::default(), &mut rng);
        assert_eq!(out.word.len(), 1);
    }

    #[test]
    fn delete_on_empty_word_returns_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let input = lead_input();
        let out = mutate(&input, &only(MutationOp::DeleteEvent), &SimConfig::default(), &mut rng);
        assert_eq!(out, input);
    }

    #[test]
    fn perturb_arithmetic() {
        assert_eq!(perturb(30.0, true, ROAD_LENGTH), 33.0);
        assert_eq!(perturb(30.0, false, ROAD_LENGTH), 27.0);
        assert_eq!(perturb(39.0, true, MAX_SPEED), 40.0);
    }

    #[test]
    fn mutations_stay_valid() {
        let sim = SimConfig::default();
        let cfg = FuzzConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut cur = lead_input();
        for _ in 0..2000 {
            cur = mutate(&cur, &cfg, &sim, &mut rng);
            assert!(validate_scenario_with(&cur.scenario, false, &sim).is_valid());
            assert!(cur.word.len() <= cfg.max_word_len);
        }
    }

    #[test]
    fn zero_budget_rejected() {
        let cfg = FuzzConfig {
            budget: 0,
            ..FuzzConfig::default()
        };
        assert!(matches!(
            fuzz(&[lead_input()], &no_collision(), &cfg, &SimConfig::default()),
            Err(FuzzError::InvalidConfig(_))
        ));
    }

    #[test]
    fn dfs_prefers_deeper_entry() {
        let mut m = MonitorAutomaton::new(&no_collision(), PredicateSet::names());
        let run = m.run(&[0, 1 << COLLISION]);
        let mut c = Corpus::default();
        for (i, r) in [m.initial().clone(), m.states()[*run.path.last().unwrap()].clone()]
            .into_iter()
            .enumerate()
        {
            let mut input = lead_input();
            input.word = vec![Event::None; i];
            c.push(CorpusEntry {
                hash: input.hash(),
                input,
                novelty: 1,
                discovered: i,
                final_residue: r,
                selected: 0,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_next(&c, &m, Traversal::Dfs, &mut rng), 1);
        c.entries.truncate(1);
        for t in [Traversal::Dfs, Traversal::Bfs, Traversal::RandomWalk] {
            assert_eq!(select_next(&c, &m, t, &mut rng), 0);
        }
    }

    #[test]
    fn violating_seed_found_with_stop_on_first() {
        let mut seed = lead_input();
        seed.scenario.actors.ego.controller = crate::dsl::Controller::Faulted(crate::dsl::FaultSpec {
            kind: crate::dsl::FaultKind::IgnoreLeadVehicle,
            guard: None,
        });
        seed.word = vec![Event::NpcBrake("lead".into())];
        let cfg = FuzzConfig {
            budget: 50,
            stop_on_first: true,
            ..FuzzConfig::default()
        };
        let seeds = vec![lead_input(), seed];
        let report = fuzz(&seeds, &no_collision(), &cfg, &SimConfig::default()).unwrap();
        assert_eq!(report.counterexamples.len(), 1);
        assert!(report.executions <= seeds.len());
        replay(&report.counterexamples[0], &no_collision(), &SimConfig::default()).unwrap();
    }

    #[test]
    fn clean_family_finds_nothing_and_is_reproducible() {
        let cfg = FuzzConfig {
            budget: 300,
            rng_seed: 5,
            event_kinds: vec!["NONE".into(), "NPC_BRAKE".into()],
            ..FuzzConfig::default()
        };
        let sim = SimConfig::default();
        let a = fuzz(&[lead_input()], &no_collision(), &cfg, &sim).unwrap();
        assert!(a.counterexamples.is_empty());
        let b = fuzz(
            &[lead_input()],
            &no_collision(),
            &FuzzConfig {
                workers: Some(1),
                ..cfg
            },
            &sim,
        )
        .unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
