//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use cpstest::abstraction::Letter;
use cpstest::dsl::*;
use cpstest::lstar::Dfa;
use cpstest::ltl::Formula;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

pub fn load(name: &str) -> Scenario {
    let text = std::fs::read_to_string(corpus_dir().join(format!("{name}.scn"))).unwrap();
    parse_scenario(&text).unwrap()
}

fn num(r: &mut ChaCha8Rng, max: f64) -> f64 {
    match r.gen_range(0..3) {
        0 => r.gen_range(0..=max as u32) as f64,
        1 => (r.gen_range(0.0..max) * 10.0).round() / 10.0,
        _ => r.gen_range(0.0..max),
    }
}

/// Structurally arbitrary scenario; not necessarily semantically valid.
pub fn random_scenario(r: &mut ChaCha8Rng, idx: usize) -> Scenario {
    let weathers = [Weather::Clear, Weather::Rain, Weather::Fog];
    let times = [TimeOfDay::Day, TimeOfDay::Night];
    let mut s = Scenario::minimal(format!("gen_{idx}"));
    s.environment.weather = *weathers.choose(r).unwrap();
    s.environment.time_of_day = *times.choose(r).unwrap();
    if r.gen_bool(0.3) {
        s.road.road_type = RoadType::Intersection;
    }
    for _ in 0..r.gen_range(0..3) {
        s.road.markers.push(match r.gen_range(0..3) {
            0 => Marker::SolidCenter,
            1 => Marker::DashedCenter,
            _ => Marker::Crosswalk {
                position: num(r, ROAD_LENGTH),
            },
        });
    }
    for _ in 0..r.gen_range(0..3) {
        let kind = if r.gen_bool(0.5) {
            SignKind::Stop
        } else {
            SignKind::SpeedLimit(num(r, MAX_SPEED))
        };
        s.road.signs.push(Sign {
            kind,
            position: num(r, ROAD_LENGTH),
        });
    }
    s.actors.ego.start_position = num(r, 50.0);
    s.actors.ego.start_speed = num(r, MAX_SPEED);
    if r.gen_bool(0.5) {
        let kind = *FaultKind::ALL.choose(r).unwrap();
        let guard = match r.gen_range(0..3) {
            0 => None,
            1 => Some(Guard::Weather(*weathers.choose(r).unwrap())),
            _ => Some(Guard::Time(*times.choose(r).unwrap())),
        };
        s.actors.ego.controller = Controller::Faulted(FaultSpec { kind, guard });
    }
    let mut peds = Vec::new();
    for i in 0..r.gen_range(0..4) {
        if r.gen_bool(0.5) {
            s.actors.npcs.push(NpcSpec::Vehicle {
                id: format!("v{i}"),
                start_position: num(r, ROAD_LENGTH),
                start_speed: num(r, MAX_SPEED),
                behavior: match r.gen_range(0..3) {
                    0 => NpcBehavior::Cruise,
                    1 => NpcBehavior::BrakeAt(r.gen_range(0..300)),
                    _ => NpcBehavior::CutInAt(r.gen_range(0..300)),
                },
            });
        } else {
            peds.push(format!("p{i}"));
            s.actors.npcs.push(NpcSpec::Pedestrian {
                id: format!("p{i}"),
                crossing_position: num(r, ROAD_LENGTH),
                trigger_distance: num(r, ROAD_LENGTH),
            });
        }
    }
    let clause = |r: &mut ChaCha8Rng| match r.gen_range(0..4) {
        0 => OracleClause::NoCollision,
        1 => OracleClause::StopAtSign {
            max_overshoot: num(r, 2.0),
        },
        2 => OracleClause::YieldToPedestrian {
            target: if peds.is_empty() || r.gen_bool(0.5) {
                None
            } else {
                Some(peds.choose(r).unwrap().clone())
            },
        },
        _ => OracleClause::SpeedBelow {
            limit: num(r, MAX_SPEED),
        },
    };
    s.oracle.longitudinal = (0..r.gen_range(0..3)).map(|_| clause(r)).collect();
    s.oracle.lateral = (0..r.gen_range(0..2)).map(|_| clause(r)).collect();
    s
}

/// Ego at 0 m with speed `v`, a stopped vehicle `gap` meters ahead.
pub fn obstacle_scenario(v: f64, gap: f64) -> Scenario {
    let mut s = Scenario::minimal("obstacle");
    s.actors.ego.start_speed = v;
    s.actors.npcs.push(NpcSpec::Vehicle {
        id: "obstacle".into(),
        start_position: gap,
        start_speed: 0.0,
        behavior: NpcBehavior::Cruise,
    });
    s.oracle.longitudinal.push(OracleClause::NoCollision);
    s
}

pub fn random_dfa(r: &mut ChaCha8Rng, max_states: usize, max_letters: usize) -> Dfa {
    let n = r.gen_range(1..=max_states);
    let k = r.gen_range(1..=max_letters);
    Dfa {
        states: n,
        initial: 0,
        accepting: (0..n).filter(|_| r.gen_bool(0.5)).collect(),
        transitions: (0..n)
            .map(|_| (0..k).map(|_| r.gen_range(0..n)).collect())
            .collect(),
        alphabet: (0..k).map(|a| format!("a{a}")).collect(),
    }
}

/// Every word over `k` letters of length at most `max_len`, shortest first.
pub fn words(k: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                (0..k).map(move |a| {
                    let mut v = w.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

// Independent finite-trace semantics (strong next), straight from the definition.
pub fn sem(f: &Formula, w: &[Letter], i: usize) -> bool {
    use Formula::*;
    if i >= w.len() {
        return false;
    }
    match f {
        True => true,
        False => false,
        Atom(p) => w[i] >> p & 1 == 1,
        Not(a) => !sem(a, w, i),
        And(xs) => xs.iter().all(|x| sem(x, w, i)),
        Or(xs) => xs.iter().any(|x| sem(x, w, i)),
        Next(a) => i + 1 < w.len() && sem(a, w, i + 1),
        Finally(a) => (i..w.len()).any(|j| sem(a, w, j)),
        Globally(a) => (i..w.len()).all(|j| sem(a, w, j)),
        Until(a, b) => (i..w.len()).any(|j| sem(b, w, j) && (i..j).all(|m| sem(a, w, m))),
    }
}

/// Random formula tree over `atoms` atoms with at most `max_nodes` nodes.
pub fn random_formula(r: &mut ChaCha8Rng, atoms: usize, max_nodes: usize) -> Formula {
    if max_nodes <= 1 || r.gen_bool(0.25) {
        return Formula::Atom(r.gen_range(0..atoms));
    }
    if max_nodes >= 3 && r.gen_bool(0.4) {
        let left = r.gen_range(1..=max_nodes - 2);
        let a = random_formula(r, atoms, left);
        let b = random_formula(r, atoms, max_nodes - 1 - left);
        return match r.gen_range(0..3) {
            0 => Formula::and(vec![a, b]),
            1 => Formula::or(vec![a, b]),
            _ => Formula::until(a, b),
        };
    }
    let a = random_formula(r, atoms, max_nodes - 1);
    match r.gen_range(0..4) {
        0 => Formula::not(a),
        1 => Formula::next(a),
        2 => Formula::finally(a),
        _ => Formula::globally(a),
    }
}

/// Every formula tree with exactly `n` nodes over `atoms` atoms, using the
/// operators not, X, F, G, and, or, U.
pub fn trees(n: usize, atoms: usize) -> Vec<Formula> {
    let mut by_size: Vec<Vec<Formula>> = vec![Vec::new(); n + 1];
    for size in 1..=n {
        let mut out = Vec::new();
        if size == 1 {
            out.extend((0..atoms).map(Formula::Atom));
        } else {
            for a in by_size[size - 1].clone() {
                out.push(Formula::not(a.clone()));
                out.push(Formula::next(a.clone()));
                out.push(Formula::finally(a.clone()));
                out.push(Formula::globally(a));
            }
            for left in 1..size - 1 {
                let right = size - 1 - left;
                for a in &by_size[left] {
                    for b in &by_size[right] {
                        out.push(Formula::and(vec![a.clone(), b.clone()]));
                        out.push(Formula::or(vec![a.clone(), b.clone()]));
                        out.push(Formula::until(a.clone(), b.clone()));
                    }
                }
            }
        }
        by_size[size] = out;
    }
    std::mem::take(&mut by_size[n])
}

/// Positions of one trace as a bitmask (bit i = position i), traces ≤ 8 letters.
type Row = u8;

#[derive(Clone)]
struct TraceSet {
    lens: Vec<usize>,
}

impl TraceSet {
    fn mask(&self, t: usize) -> Row {
        ((1u16 << self.lens[t]) - 1) as Row
    }
}

fn unary(op: usize, v: &[Row], ts: &TraceSet) -> Vec<Row> {
    v.iter()
        .enumerate()
        .map(|(t, &x)| {
            let m = ts.mask(t);
            match op {
                0 => !x & m,
                1 => x >> 1,
                2 => {
                    // F: positions at or before the last set bit
                    if x == 0 {
                        0
                    } else {
                        let hi = 7 - x.leading_zeros() as usize;
                        ((1u16 << (hi + 1)) - 1) as Row
                    }
                }
                _ => {
                    // G: positions after the last clear bit
                    let z = !x & m;
                    if z == 0 {
                        m
                    } else {
                        let hz = 7 - z.leading_zeros() as usize;
                        m & !(((1u16 << (hz + 1)) - 1) as Row)
                    }
                }
            }
        })
        .collect()
}

fn binary(op: usize, a: &[Row], b: &[Row], ts: &TraceSet) -> Vec<Row> {
    (0..a.len())
        .map(|t| match op {
            0 => a[t] & b[t],
            1 => a[t] | b[t],
            _ => {
                let mut r: Row = 0;
                for i in (0..ts.lens[t]).rev() {
                    let next = i + 1 < ts.lens[t] && r >> (i + 1) & 1 == 1;
                    let bi = b[t] >> i & 1 == 1;
                    let ai = a[t] >> i & 1 == 1;
                    if bi || (ai && next) {
                        r |= 1 << i;
                    }
                }
                r
            }
        })
        .collect()
}

/// Smallest syntax DAG (node count) over not/X/F/G/and/or/U and the atoms
/// that holds at position 0 of every positive and no negative trace.
/// Exhaustive over node sequences; nodes with equal value vectors are
/// skipped since a minimal DAG never contains two.
pub fn min_dag_size(
    atoms: usize,
    pos: &[Vec<Letter>],
    neg: &[Vec<Letter>],
    max_n: usize,
) -> Option<usize> {
    let all: Vec<Vec<Letter>> = pos.iter().chain(neg).cloned().collect();
    let ts = TraceSet {
        lens: all.iter().map(Vec::len).collect(),
    };
    let target: Vec<bool> = (0..all.len()).map(|t| t < pos.len()).collect();
    let atom_vals: Vec<Vec<Row>> = (0..atoms)
        .map(|p| {
            all.iter()
                .map(|w| {
                    w.iter()
                        .enumerate()
                        .fold(0 as Row, |acc, (i, l)| acc | (((l >> p & 1) as Row) << i))
                })
                .collect()
        })
        .collect();
    (1..=max_n).find(|&n| {
        let mut nodes: Vec<Vec<Row>> = Vec::new();
        search(n, &mut nodes, &atom_vals, &ts, &target)
    })
}

fn search(n: usize, nodes: &mut Vec<Vec<Row>>, atoms: &[Vec<Row>], ts: &TraceSet, target: &[bool]) -> bool {
    let i = nodes.len();
    let mut candidates: Vec<Vec<Row>> = Vec::new();
    candidates.extend(atoms.iter().cloned());
    if i > 0 {
        for c in 0..i {
            for op in 0..4 {
                candidates.push(unary(op, &nodes[c], ts));
            }
        }
        for a in 0..i {
            for b in 0..i {
                if a != b {
                    if a < b {
                        candidates.push(binary(0, &nodes[a], &nodes[b], ts));
                        candidates.push(binary(1, &nodes[a], &nodes[b], ts));
                    }
                    candidates.push(binary(2, &nodes[a], &nodes[b], ts));
                }
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    for v in candidates {
        if nodes.contains(&v) || !seen.insert(v.clone()) {
            continue;
        }
        if i + 1 == n {
            if v.iter().zip(target).all(|(row, want)| (row & 1 == 1) == *want) {
                return true;
            }
        } else {
            nodes.push(v);
            if search(n, nodes, atoms, ts, target) {
                return true;
            }
            nodes.pop();
        }
    }
    false
}
