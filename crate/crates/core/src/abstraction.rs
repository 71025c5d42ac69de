//! Boolean abstraction of simulator traces.
//!
//! Every state maps to a letter, a bit vector over a fixed, ordered set of
//! predicates. Bit `i` always means predicate `i`:
//!
//! | bit | predicate      | holds when                                        |
//! |-----|----------------|---------------------------------------------------|
//! | 0   | `collision`    | the state is a collision state                    |
//! | 1   | `ego_stopped`  | ego speed ≤ 0.1 m/s                               |
//! | 2   | `in_stop_zone` | ego within `stop_zone` meters of a stop sign      |
//! | 3   | `ped_on_road`  | some pedestrian is on the road                    |
//! | 4   | `speeding`     | ego speed above the limit                         |
//! | 5   | `braking`      | the ego braked during the step into this state    |

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dsl::{OracleClause, Scenario};
use crate::ltl::Formula;
use crate::sim::{self, Event, SimConfig, Trace, Verdict, STOP_SPEED};

/// One abstract observation; bit `i` is predicate `i`.
pub type Letter = u32;

pub const COLLISION: usize = 0;
pub const EGO_STOPPED: usize = 1;
pub const IN_STOP_ZONE: usize = 2;
pub const PED_ON_ROAD: usize = 3;
pub const SPEEDING: usize = 4;
pub const BRAKING: usize = 5;

pub const PREDICATE_NAMES: [&str; 6] = [
    "collision",
    "ego_stopped",
    "in_stop_zone",
    "ped_on_road",
    "speeding",
    "braking",
];

pub const DEFAULT_SPEED_LIMIT: f64 = 20.0;

/// The predicate vocabulary instantiated for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateSet {
    pub speed_limit: f64,
    pub stop_signs: Vec<f64>,
    pub sim: SimConfig,
}

impl PredicateSet {
    pub fn for_scenario(s: &Scenario, cfg: &SimConfig) -> Self {
        PredicateSet {
            speed_limit: s.oracle.speed_limit().unwrap_or(DEFAULT_SPEED_LIMIT),
            stop_signs: s.road.stop_signs().collect(),
            sim: cfg.clone(),
        }
    }

    pub fn names() -> Vec<String> {
        PREDICATE_NAMES.iter().map(|s| s.to_string()).collect()
    }

    pub fn len(&self) -> usize {
        PREDICATE_NAMES.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Letter of `t.states[k]`.
    pub fn letter(&self, t: &Trace, k: usize) -> Letter {
        let st = &t.states[k];
        let x = st.ego_position();
        let v = st.ego_speed();
        let mut l = 0;
        let mut set = |bit: usize, on: bool| {
            if on {
                l |= 1 << bit;
            }
        };
        set(COLLISION, sim::collision_at(&t.states, k, &self.sim));
        set(EGO_STOPPED, v <= STOP_SPEED);
        set(
            IN_STOP_ZONE,
            self.stop_signs
                .iter()
                .any(|s| (x - s).abs() <= self.sim.stop_zone),
        );
        set(PED_ON_ROAD, st.pedestrian_on_road.values().any(|b| *b));
        set(SPEEDING, v > self.speed_limit);
        set(BRAKING, st.ego_braking);
        l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive,
    Negative,
    Unlabeled,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledTrace {
    pub predicates: Vec<String>,
    #[serde(serialize_with = "letters_hex", deserialize_with = "letters_from_hex")]
    pub letters: Vec<Letter>,
    pub label: Label,
}

fn letters_hex<S: Serializer>(letters: &[Letter], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(letters.iter().map(|l| format!("{l:02x}")))
}

fn letters_from_hex<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Letter>, D::Error> {
    let raw = Vec::<String>::deserialize(d)?;
    raw.iter()
        .map(|h| {
            let h = h.trim_start_matches("0x");
            Letter::from_str_radix(h, 16).map_err(serde::de::Error::custom)
        })
        .collect()
}

impl LabeledTrace {
    /// A trace over ad-hoc atom names, mostly for tests and tooling.
    pub fn new(predicates: &[&str], letters: Vec<Letter>, label: Label) -> Self {
        LabeledTrace {
            predicates: predicates.iter().map(|s| s.to_string()).collect(),
            letters,
            label,
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("labeled trace serializes")
    }
}

pub fn abstract_trace(t: &Trace, p: &PredicateSet, verdict: &Verdict) -> LabeledTrace {
    LabeledTrace {
        predicates: PredicateSet::names(),
        letters: (0..t.states.len()).map(|k| p.letter(t, k)).collect(),
        label: if verdict.passed() {
            Label::Positive
        } else {
            Label::Negative
        },
    }
}

pub fn word_of_trace(t: &Trace) -> Vec<Event> {
    t.events_applied.clone()
}

/// Runs `word` on `s` and abstracts the result.
pub fn simulate_labeled(
    s: &Scenario,
    word: &[Event],
    cfg: &SimConfig,
) -> Result<(Trace, Verdict, LabeledTrace), sim::SimError> {
    let (trace, verdict) = sim::run(s, word, cfg)?;
    let lt = abstract_trace(&trace, &PredicateSet::for_scenario(s, cfg), &verdict);
    Ok((trace, verdict, lt))
}

/// Safety formula over the standard predicates that is violated exactly
/// when the clause's failure becomes visible in the letters.
pub fn clause_formula(c: &OracleClause) -> Formula {
    use Formula as F;
    let never = |f: Formula| F::globally(F::not(f));
    match c {
        OracleClause::NoCollision | OracleClause::YieldToPedestrian { .. } => {
            never(F::Atom(COLLISION))
        }
        OracleClause::StopAtSign { .. } => never(F::and(vec![
            F::Atom(IN_STOP_ZONE),
            F::not(F::Atom(BRAKING)),
            F::not(F::Atom(EGO_STOPPED)),
        ])),
        OracleClause::SpeedBelow { .. } => never(F::Atom(SPEEDING)),
    }
}

/// Conjunction of the clause formulas of the scenario's oracle.
pub fn oracle_formula(s: &Scenario) -> Formula {
    let mut parts: Vec<Formula> = s.oracle.clauses().map(clause_formula).collect();
    parts.dedup();
    if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        Formula::and(parts)
    }
}
