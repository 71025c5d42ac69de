//! One line per acceptance criterion; every check compares against an
//! independent brute-force answer where the expected value is derived.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use common::*;
use cpstest::abstraction::{clause_formula, simulate_labeled, Letter};
use cpstest::dsl::*;
use cpstest::fuzz::{fuzz, fuzz_alphabet, replay, FuzzConfig, FuzzInput, FuzzReport};
use cpstest::llm::{generate_scenarios, GenerationJob, MockProvider};
use cpstest::lstar::*;
use cpstest::ltl::{learn_minimal, TraceSample};
use cpstest::ltl::Formula;
use cpstest::monitor::{Classification, MonitorAutomaton};
use cpstest::sat::{self, Cnf, SatResult};
use cpstest::sim::{self, Event, SimConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1: canonical print then parse is the identity.
fn round_trip() -> Check {
    let mut r = rng(1);
    let mut scenarios: Vec<Scenario> = (0..50).map(|i| random_scenario(&mut r, i)).collect();
    for (name, text) in corpus() {
        scenarios.push(parse_scenario(&text).map_err(|e| format!("{name}: {e}"))?);
    }
    let start = Instant::now();
    for s in &scenarios {
        let text = serialize_scenario(s);
        let back = parse_scenario(&text).map_err(|e| format!("{}: {e}\n{text}", s.name))?;
        ensure(&back == s, || format!("{} changed on round trip", s.name))?;
        ensure(serialize_scenario(&back) == text, || format!("{} printed twice differs", s.name))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!("{} scenarios in {took:?}", scenarios.len()))
}

// 2: collision against a stopped obstacle matches braking kinematics.
fn braking_physics() -> Check {
    let cfg = SimConfig::default();
    let mut checked = 0;
    let mut borderline = 0;
    for weather in [Weather::Clear, Weather::Rain] {
        let a = if weather == Weather::Rain { 2.0 } else { 4.0 };
        for v in (1..=7).map(|i| 5.0 * i as f64) {
            for gap in (1..=30).map(|i| 5.0 * i as f64) {
                let mut s = obstacle_scenario(v, gap);
                s.environment.weather = weather;
                let (_, verdict) = sim::run(&s, &[], &cfg).map_err(|e| e.to_string())?;
                let threshold = v * v / (2.0 * a) + cfg.collision_gap;
                if (gap - threshold).abs() < v * cfg.dt {
                    borderline += 1;
                    continue;
                }
                let expect_safe = gap > threshold;
                ensure(verdict.passed() == expect_safe, || {
                    format!("{weather:?} v={v} gap={gap}: passed={} expected {expect_safe}", verdict.passed())
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} grid points agree, {borderline} within one step of the threshold"))
}

fn learn_cached<T: Teacher>(teacher: T, alphabet: &[String], budget: usize) -> Result<(Dfa, CachedTeacher<T>), String> {
    let mut cached = CachedTeacher::new(teacher);
    let out = learn(&mut cached, alphabet, budget, 60).map_err(|e| e.to_string())?;
    Ok((out.dfa, cached))
}

fn dfa_consistent_minimal(dfa: &Dfa, cache: &std::collections::BTreeMap<Word, bool>) -> Result<(), String> {
    ensure(minimize(dfa).states == dfa.states, || {
        format!("hypothesis with {} states is not minimal", dfa.states)
    })?;
    for (w, ans) in cache {
        ensure(dfa_accepts(dfa, w) == *ans, || format!("disagrees with teacher on {w:?}"))?;
    }
    Ok(())
}

// 3 and 4 share the random targets.
fn random_targets() -> Vec<Dfa> {
    let mut r = rng(3);
    (0..100).map(|_| random_dfa(&mut r, 6, 4)).collect()
}

// 3: L* recovers the minimal target up to isomorphism.
fn lstar_exact() -> Check {
    let mut total = 0;
    for (i, target) in random_targets().into_iter().enumerate() {
        let teacher = DfaTeacher {
            target: target.clone(),
            max_len: 40,
        };
        let (dfa, _) = learn_cached(teacher, &target.alphabet, 0).map_err(|e| format!("target {i}: {e}"))?;
        let want = minimize(&target);
        ensure(dfa_isomorphic(&dfa, &want), || {
            format!("target {i}: learned {} states, minimal target has {}", dfa.states, want.states)
        })?;
        // the oracle: agreement on every word up to length 8
        for w in words(target.num_letters(), 8.min(24 / target.num_letters())) {
            ensure(dfa_accepts(&dfa, &w) == dfa_accepts(&target, &w), || format!("target {i} differs on {w:?}"))?;
        }
        total += dfa.states;
    }
    Ok(format!("100 random targets, {total} states in total"))
}

// 4: every hypothesis is minimal and agrees with every answer it was given.
fn lstar_consistent() -> Check {
    let mut runs = 0;
    for target in random_targets() {
        let teacher = DfaTeacher {
            target: target.clone(),
            max_len: 40,
        };
        let (dfa, cached) = learn_cached(teacher, &target.alphabet, 0)?;
        dfa_consistent_minimal(&dfa, &cached.cache)?;
        runs += 1;
    }
    let cfg = SimConfig::default();
    for (name, kinds) in [
        ("pedestrian_faulted", vec!["NONE", "PED_CROSS"]),
        ("lead_cruise_faulted", vec!["NONE", "NPC_BRAKE"]),
        ("stop_sign_rain_guard", vec!["NONE", "RAIN_ON", "RAIN_OFF"]),
    ] {
        let s = load(name);
        let kinds: Vec<String> = kinds.into_iter().map(String::from).collect();
        let teacher = SimulatorTeacher::new(s.clone(), fuzz_alphabet(&s, &kinds), cfg.clone(), 20, 7);
        let names = teacher.alphabet_names();
        let (dfa, cached) = learn_cached(teacher, &names, 500).map_err(|e| format!("{name}: {e}"))?;
        dfa_consistent_minimal(&dfa, &cached.cache).map_err(|e| format!("{name}: {e}"))?;
        runs += 1;
    }
    Ok(format!("{runs} runs, all hypotheses minimal and consistent"))
}

fn random_trace(r: &mut ChaCha8Rng, atoms: usize) -> Vec<Letter> {
    (0..r.gen_range(1..=8)).map(|_| r.gen_range(0..1u32 << atoms)).collect()
}

// 5: the SAT learner returns a consistent formula of the brute-force minimum size.
fn ltl_minimal() -> Check {
    let mut r = rng(5);
    let names = ["p", "q", "r"];
    let mut cases = Vec::new();
    while cases.len() < 50 {
        let atoms = r.gen_range(1..=3);
        let planted = random_formula(&mut r, atoms, 5);
        if planted.size() > 5 {
            continue;
        }
        let mut pos = BTreeSet::new();
        let mut neg = BTreeSet::new();
        for _ in 0..400 {
            let w = random_trace(&mut r, atoms);
            if sem(&planted, &w, 0) {
                if pos.len() < 10 {
                    pos.insert(w);
                }
            } else if neg.len() < 10 {
                neg.insert(w);
            }
        }
        if pos.len() < 10 || neg.len() < 10 {
            continue; // degenerate: (almost) valid or unsatisfiable
        }
        cases.push((atoms, planted, pos.into_iter().collect::<Vec<_>>(), neg.into_iter().collect::<Vec<_>>()));
    }
    let results: Vec<Result<usize, String>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, (atoms, planted, pos, neg))| {
            let sample = TraceSample::from_letters(&names[..*atoms], pos, neg);
            let learned = learn_minimal(&sample, 6).map_err(|e| format!("case {i}: {e}"))?;
            let consistent = pos.iter().all(|w| sem(&learned.formula, w, 0))
                && neg.iter().all(|w| !sem(&learned.formula, w, 0));
            ensure(consistent, || format!("case {i}: learned formula is inconsistent"))?;
            let best = min_dag_size(*atoms, pos, neg, planted.size()).ok_or(format!("case {i}: oracle found nothing"))?;
            ensure(learned.size == best, || {
                format!("case {i}: learned size {} but the minimum is {best}", learned.size)
            })?;
            ensure(learned.formula.size() <= learned.size, || format!("case {i}: formula larger than reported"))?;
            Ok(best)
        })
        .collect();
    let sizes: Vec<usize> = results.into_iter().collect::<Result<_, _>>()?;
    Ok(format!("50 planted samples, minimal sizes {}..={}", sizes.iter().min().unwrap(), sizes.iter().max().unwrap()))
}

// 6: SAT answers agree with exhaustive enumeration.
fn sat_sound() -> Check {
    let mut r = rng(6);
    let instances: Vec<Cnf> = (0..500)
        .map(|_| {
            let n = r.gen_range(1..=20usize);
            let m = r.gen_range(1..=80usize.min(6 * n));
            let mut cnf = Cnf::new();
            for _ in 0..n {
                cnf.new_var();
            }
            for _ in 0..m {
                let len = r.gen_range(1..=4);
                let clause: Vec<i32> = (0..len)
                    .map(|_| {
                        let v = r.gen_range(1..=n as i32);
                        if r.gen_bool(0.5) {
                            v
                        } else {
                            -v
                        }
                    })
                    .collect();
                cnf.add(clause);
            }
            cnf
        })
        .collect();
    let outcomes: Vec<Result<bool, String>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, cnf)| {
            let masks: Vec<(u32, u32)> = cnf
                .clauses
                .iter()
                .map(|c| {
                    c.iter().fold((0, 0), |(p, n), &l| {
                        let bit = 1u32 << (l.unsigned_abs() - 1);
                        if l > 0 {
                            (p | bit, n)
                        } else {
                            (p, n | bit)
                        }
                    })
                })
                .collect();
            let brute = (0u32..1 << cnf.num_vars).any(|x| masks.iter().all(|(p, n)| x & p != 0 || !x & n != 0));
            match sat::solve(cnf) {
                SatResult::Sat(a) => {
                    ensure(brute, || format!("instance {i}: solver says sat, enumeration says unsat"))?;
                    ensure(sat::verify(cnf, &a), || format!("instance {i}: model does not satisfy"))?;
                    Ok(true)
                }
                SatResult::Unsat => {
                    ensure(!brute, || format!("instance {i}: solver says unsat, enumeration found a model"))?;
                    Ok(false)
                }
            }
        })
        .collect();
    let sat: Vec<bool> = outcomes.into_iter().collect::<Result<_, _>>()?;
    let n_sat = sat.iter().filter(|b| **b).count();
    Ok(format!("500 instances, {n_sat} sat and {} unsat", 500 - n_sat))
}

/// Subformulas in post order, children before parents.
fn postorder(f: &Formula, out: &mut Vec<Formula>) {
    for c in f.children() {
        postorder(c, out);
    }
    if !out.contains(f) {
        out.push(f.clone());
    }
}

/// Values of every subformula at a position holding `letter`, given the
/// values at the next position (`None` at the end of the trace).
fn step_values(subs: &[Formula], letter: Letter, next: Option<&[bool]>) -> Vec<bool> {
    let mut v: Vec<bool> = Vec::with_capacity(subs.len());
    let idx = |f: &Formula| subs.iter().position(|s| s == f).expect("subformula");
    for f in subs {
        let at = |g: &Formula, v: &Vec<bool>| v[idx(g)];
        let later = |g: &Formula| next.map(|n| n[idx(g)]);
        let b = match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(p) => letter >> p & 1 == 1,
            Formula::Not(a) => !at(a, &v),
            Formula::And(xs) => xs.iter().all(|x| at(x, &v)),
            Formula::Or(xs) => xs.iter().any(|x| at(x, &v)),
            Formula::Next(a) => later(a).unwrap_or(false),
            Formula::Finally(a) => at(a, &v) || later(f).unwrap_or(false),
            Formula::Globally(a) => at(a, &v) && later(f).unwrap_or(true),
            Formula::Until(a, b) => at(b, &v) || (at(a, &v) && later(f).unwrap_or(false)),
        };
        v.push(b);
    }
    v
}

fn holds_with_tail(subs: &[Formula], u: &[Letter], tail: Option<&[bool]>) -> bool {
    let mut next: Option<Vec<bool>> = tail.map(<[bool]>::to_vec);
    for &l in u.iter().rev() {
        next = Some(step_values(subs, l, next.as_deref()));
    }
    *next.expect("nonempty prefix").last().expect("root")
}

// 7: the monitor reports exactly the minimal bad (and good) prefixes.
fn monitor_exact() -> Check {
    let formulas: Vec<Formula> = (1..=4).flat_map(|n| trees(n, 2)).collect();
    let all_words: Vec<Vec<Letter>> = words(4, 6)
        .into_iter()
        .filter(|w| !w.is_empty())
        .map(|w| w.into_iter().map(|l| l as Letter).collect())
        .collect();
    let checked: Vec<Result<usize, String>> = formulas
        .par_iter()
        .map(|f| {
            let mut subs = Vec::new();
            postorder(f, &mut subs);
            // boundary vectors of every nonempty continuation, as a fixed point
            let mut tails: BTreeSet<Vec<bool>> = (0..4).map(|l| step_values(&subs, l, None)).collect();
            loop {
                let more: BTreeSet<Vec<bool>> = tails
                    .iter()
                    .flat_map(|t| (0..4).map(|l| step_values(&subs, l, Some(t))).collect::<Vec<_>>())
                    .collect();
                if more.is_subset(&tails) {
                    break;
                }
                tails.extend(more);
            }
            let mut status: HashMap<&[Letter], Classification> = HashMap::new();
            for u in &all_words {
                let now = holds_with_tail(&subs, u, None);
                let ext: Vec<bool> = tails.iter().map(|t| holds_with_tail(&subs, u, Some(t))).collect();
                let c = if !now && ext.iter().all(|b| !b) {
                    Classification::Violated
                } else if now && ext.iter().all(|b| *b) {
                    Classification::Satisfied
                } else {
                    Classification::Pending
                };
                status.insert(u, c);
            }
            let monitor = MonitorAutomaton::new(f, vec!["a".into(), "b".into()]);
            for w in &all_words {
                let expect = (0..w.len())
                    .map(|k| (k, status[&w[..=k]]))
                    .find(|(_, c)| *c != Classification::Pending);
                let got = monitor.trace_path(w);
                let got = got.decided_at.map(|k| (k, got.verdict));
                ensure(got == expect, || format!("{f:?} on {w:?}: monitor {got:?}, oracle {expect:?}"))?;
            }
            Ok(all_words.len())
        })
        .collect();
    let n: usize = checked.into_iter().collect::<Result<Vec<_>, _>>()?.iter().sum();
    Ok(format!("{} formulas, {n} (formula, word) pairs", formulas.len()))
}

struct Family {
    name: &'static str,
    clean: &'static str,
    faulted: &'static str,
    kinds: &'static [&'static str],
}

const FAMILIES: [Family; 3] = [
    Family {
        name: "stop sign",
        clean: "stop_sign_basic",
        faulted: "stop_sign_faulted",
        kinds: &["NONE"],
    },
    Family {
        name: "lead vehicle",
        clean: "lead_cruise",
        faulted: "lead_cruise_faulted",
        kinds: &["NONE", "NPC_BRAKE"],
    },
    Family {
        name: "pedestrian",
        clean: "pedestrian_crossing",
        faulted: "pedestrian_faulted",
        kinds: &["NONE", "PED_CROSS"],
    },
];

fn family_formula(s: &Scenario) -> Formula {
    clause_formula(&s.oracle.longitudinal[0])
}

fn family_config(f: &Family, budget: usize) -> FuzzConfig {
    FuzzConfig {
        budget,
        rng_seed: 8,
        event_kinds: f.kinds.iter().map(|k| k.to_string()).collect(),
        ..FuzzConfig::default()
    }
}

/// Does some valid grid variant of `base` violate its formula? Ego speed
/// and start are varied; words over the family alphabet hold each event
/// for five steps.
fn grid_violation(base: &Scenario, kinds: &[&str]) -> bool {
    let cfg = SimConfig::default();
    let kinds: Vec<String> = kinds.iter().map(|k| k.to_string()).collect();
    let alphabet = fuzz_alphabet(base, &kinds);
    let f = family_formula(base);
    let monitor = MonitorAutomaton::new(&f, cpstest::abstraction::PredicateSet::names());
    let ws: Vec<Vec<Event>> = words(alphabet.len(), 5)
        .into_iter()
        .map(|w| w.into_iter().flat_map(|i| std::iter::repeat_n(alphabet[i].clone(), 5)).collect())
        .collect();
    for speed in [10.0, 20.0, 30.0] {
        for start in [0.0, 20.0, 40.0] {
            let mut s = base.clone();
            s.actors.ego.start_speed = speed;
            s.actors.ego.start_position = start;
            if !validate_scenario_with(&s, false, &cfg).is_valid() {
                continue;
            }
            for w in &ws {
                let Ok((_, verdict, lt)) = simulate_labeled(&s, w, &cfg) else {
                    continue;
                };
                if monitor.trace_path(&lt.letters).verdict == Classification::Violated {
                    assert!(!verdict.passed(), "formula violated but oracle passed");
                    return true;
                }
            }
        }
    }
    false
}

struct FamilyRun {
    family: &'static str,
    faulted: bool,
    report: FuzzReport,
    took: Duration,
    replayed: usize,
    grid: bool,
}

fn run_families() -> Result<Vec<FamilyRun>, String> {
    let cfg = SimConfig::default();
    let mut out = Vec::new();
    for fam in &FAMILIES {
        for (faulted, name) in [(false, fam.clean), (true, fam.faulted)] {
            let s = load(name);
            let f = family_formula(&s);
            let grid = grid_violation(&s, fam.kinds);
            let seeds = vec![FuzzInput::new(s, Vec::new())];
            let start = Instant::now();
            let report = fuzz(&seeds, &f, &family_config(fam, 10_000), &cfg).map_err(|e| format!("{name}: {e}"))?;
            let took = start.elapsed();
            let mut replayed = 0;
            for cex in &report.counterexamples {
                replay(cex, &f, &cfg).map_err(|e| format!("{name}: {e}"))?;
                let input = cex.input()?;
                let (_, verdict) = sim::run(&input.scenario, &input.word, &cfg).map_err(|e| e.to_string())?;
                ensure(!verdict.passed(), || format!("{name}: counterexample {} passes the oracle", cex.hash))?;
                replayed += 1;
            }
            out.push(FamilyRun {
                family: fam.name,
                faulted,
                report,
                took,
                replayed,
                grid,
            });
        }
    }
    Ok(out)
}

// 8: faulted controllers yield replayable counterexamples, correct ones none.
fn fuzz_finds_faults(runs: &[FamilyRun]) -> Check {
    let mut parts = Vec::new();
    for r in runs {
        let n = r.report.counterexamples.len();
        let label = format!("{} {}", r.family, if r.faulted { "faulted" } else { "clean" });
        ensure(r.grid == r.faulted, || {
            format!("{label}: grid oracle says violation reachable = {}", r.grid)
        })?;
        if r.faulted {
            ensure(n >= 1 && r.replayed == n, || format!("{label}: {n} counterexamples, {} replayed", r.replayed))?;
        } else {
            ensure(n == 0, || format!("{label}: {n} spurious counterexamples"))?;
        }
        ensure(r.took < Duration::from_secs(120), || format!("{label}: took {:?}", r.took))?;
        parts.push(format!("{label} {n} in {:.1}s", r.took.as_secs_f64()));
    }
    Ok(parts.join(", "))
}

// 9: the report does not depend on the number of workers.
fn fuzz_deterministic() -> Check {
    let cfg = SimConfig::default();
    let fam = &FAMILIES[1];
    let s = load(fam.faulted);
    let f = family_formula(&s);
    let seeds = vec![FuzzInput::new(s, Vec::new())];
    let run = |workers| {
        let mut c = family_config(fam, 2000);
        c.workers = Some(workers);
        fuzz(&seeds, &f, &c, &cfg).map(|r| r.to_json()).map_err(|e| e.to_string())
    };
    let one = run(1)?;
    let four = run(4)?;
    ensure(one == four, || "reports differ between 1 and 4 workers".into())?;
    Ok(format!("identical {}-byte reports with 1 and 4 workers", one.len()))
}

// 10: full state coverage of the safety monitors on the faulted families.
fn fuzz_coverage(runs: &[FamilyRun]) -> Check {
    for r in runs.iter().filter(|r| r.faulted) {
        let c = &r.report.coverage;
        // G not(p) has exactly two residues: itself and false
        ensure(c.states_total == 2 && c.states_hit == 2 && c.states_pct == 100.0, || {
            format!("{}: coverage {c:?}", r.family)
        })?;
    }
    Ok("3 faulted families at 100% state coverage (2/2 residues)".into())
}

const VALID: &str = "scenario rule_stop {
  environment { weather: clear; time: day; }
  road { type: straight; markers: []; signs: [stop @ 80.0]; }
  actors { ego { position: 0.0; speed: 10.0; controller: rule_follower; } }
  oracle { longitudinal: [stop_at_sign(0.5)]; lateral: []; }
}";

const NO_SIGN: &str = "scenario rule_nosign {
  environment { weather: clear; time: day; }
  road { type: straight; markers: []; signs: []; }
  actors { ego { position: 0.0; speed: 10.0; controller: rule_follower; } }
  oracle { longitudinal: [stop_at_sign(0.5)]; lateral: []; }
}";

const GARBAGE: &str = "scenario broken { environment { weather: sunny; } }";

// 11: accepted scenarios validate cleanly, rejected ones carry stage-tagged diagnostics.
fn llm_repair() -> Check {
    let draft = [VALID, GARBAGE, NO_SIGN, NO_SIGN].join("\n---\n");
    let fixed = VALID.replace("rule_stop", "rule_fixed");
    let script = vec![
        draft,
        GARBAGE.to_string(),
        GARBAGE.to_string(),
        GARBAGE.to_string(),
        fixed,
        NO_SIGN.to_string(),
        NO_SIGN.to_string(),
        NO_SIGN.to_string(),
    ];
    let provider = MockProvider::new(script);
    let mut job = GenerationJob::new("Vehicles must stop completely at stop signs.", 4);
    job.config.retry.base_delay_ms = 0;
    let result = generate_scenarios(&job, &provider, &SimConfig::default()).map_err(|e| e.to_string())?;
    ensure(provider.remaining() == 0, || "script not fully consumed".into())?;
    ensure(result.accepted.len() == 2 && result.rejected.len() == 2, || {
        format!("{} accepted, {} rejected", result.accepted.len(), result.rejected.len())
    })?;
    for a in &result.accepted {
        let report = validate_scenario(&a.scenario, true);
        ensure(report.is_valid() && report.diagnostics.iter().all(|d| d.severity != Severity::Error), || {
            format!("accepted {} does not validate", a.scenario.name)
        })?;
    }
    let stages: Vec<Stage> = result
        .rejected
        .iter()
        .map(|r| {
            ensure(!r.report.is_valid() && r.report.errors().next().is_some(), || "rejection without diagnostics".into())?;
            Ok(r.report.errors().next().expect("error").stage)
        })
        .collect::<Result<_, String>>()?;
    ensure(stages == [Stage::Syntax, Stage::Semantic], || format!("stages {stages:?}"))?;
    ensure(
        result.rejected[1].report.errors().any(|d| d.kind == DiagnosticKind::MissingSign),
        || "missing sign not diagnosed".into(),
    )?;
    Ok("2 accepted (1 after repair), 2 rejected with syntax and semantic diagnostics".into())
}

fn guarded(f: impl FnOnce() -> Check + std::panic::UnwindSafe) -> Check {
    std::panic::catch_unwind(f).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    })
}

/// Written straight to stderr so the lines show up even when output is captured.
fn report(line: String) {
    use std::io::Write;
    let _ = writeln!(std::io::stderr(), "{line}");
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Check)> = vec![
        (1, "scenario round trip", guarded(round_trip)),
        (2, "braking physics", guarded(braking_physics)),
        (3, "L* exact identification", guarded(lstar_exact)),
        (4, "L* minimal and consistent hypotheses", guarded(lstar_consistent)),
        (5, "minimal LTL learning", guarded(ltl_minimal)),
        (6, "SAT soundness and completeness", guarded(sat_sound)),
        (7, "monitor prefix verdicts", guarded(monitor_exact)),
    ];
    let runs = std::panic::catch_unwind(run_families).unwrap_or_else(|_| Err("panicked".into()));
    match runs {
        Ok(runs) => {
            results.push((8, "fuzzer finds planted faults", guarded(|| fuzz_finds_faults(&runs))));
            results.push((9, "fuzzer determinism", guarded(fuzz_deterministic)));
            results.push((10, "fuzzer monitor coverage", guarded(|| fuzz_coverage(&runs))));
        }
        Err(e) => {
            results.push((8, "fuzzer finds planted faults", Err(e.clone())));
            results.push((9, "fuzzer determinism", guarded(fuzz_deterministic)));
            results.push((10, "fuzzer monitor coverage", Err(e)));
        }
    }
    results.push((11, "LLM generation with repair", guarded(llm_repair)));
    results.sort_by_key(|r| r.0);
    let mut failed = Vec::new();
    for (n, title, r) in &results {
        match r {
            Ok(detail) => report(format!("criterion {n} PASS: {title} ({detail})")),
            Err(why) => {
                report(format!("criterion {n} FAIL: {title} ({why})"));
                failed.push(*n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
