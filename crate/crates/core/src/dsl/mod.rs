//! Scenario description language.
//!
//! A scenario is four blocks in fixed order: `environment`, `road`, `actors`
//! and `oracle`. Positions are longitudinal meters along a single straight
//! lane of [`ROAD_LENGTH`] meters, speeds are m/s.
//!
//! ```text
//! scenario stop_sign_basic {
//!   environment {
//!     weather: clear;
//!     time: day;
//!   }
//!   road {
//!     type: straight;
//!     markers: [solid_center, crosswalk @ 120.0];
//!     signs: [stop @ 80.0];
//!   }
//!   actors {
//!     ego {
//!       position: 0.0;
//!       speed: 10.0;
//!       controller: rule_follower;
//!     }
//!     vehicle lead {
//!       position: 150.0;
//!       speed: 5.0;
//!       behavior: brake_at(40);
//!     }
//!     pedestrian p1 {
//!       crossing: 120.0;
//!       trigger: 40.0;
//!     }
//!   }
//!   oracle {
//!     longitudinal: [no_collision, stop_at_sign(0.5)];
//!     lateral: [speed_below(30.0)];
//!   }
//! }
//! ```
//!
//! Empty block bodies take defaults: clear weather, day, straight road with
//! no markers or signs, ego at 0 m and 0 m/s following the rules, and a
//! single `no_collision` oracle. `#` starts a comment running to end of line.

mod lexer;
mod parser;
mod printer;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use parser::{parse_scenario, ParseError};
pub use printer::{format_number, serialize_scenario};
pub use validate::{
    validate_scenario, validate_scenario_with, Diagnostic, DiagnosticKind, Severity, Stage,
    ValidationReport, Verdict as ValidationVerdict,
};

/// Fixed length of the simulated road, meters.
pub const ROAD_LENGTH: f64 = 200.0;
/// Upper bound on any initial speed, m/s.
pub const MAX_SPEED: f64 = 40.0;
/// Identifier reserved for the ego vehicle.
pub const EGO_ID: &str = "ego";

/// Grammar summary, embedded in generation prompts.
pub const GRAMMAR_REFERENCE: &str = r##"scenario   := "scenario" IDENT "{" environment road actors oracle "}"
environment:= "environment" "{" ["weather:" ("clear"|"rain"|"fog") ";"] ["time:" ("day"|"night") ";"] "}"
road       := "road" "{" ["type:" ("straight"|"intersection") ";"] ["markers:" "[" marker,* "]" ";"] ["signs:" "[" sign,* "]" ";"] "}"
marker     := "solid_center" | "dashed_center" | "crosswalk" "@" NUM
sign       := ("stop" | "speed_limit(" NUM ")") "@" NUM        signs in increasing position
actors     := "actors" "{" ego npc* "}"
ego        := "ego" "{" ["position:" NUM ";"] ["speed:" NUM ";"] ["controller:" controller ";"] "}"
controller := "rule_follower" | "faulted(" fault [" if " ("weather" | "time") " = " VALUE] ")"
fault      := "ignore_stop_sign" | "ignore_lead_vehicle" | "ignore_pedestrian"
npc        := "vehicle" IDENT "{" "position:" NUM ";" ["speed:" NUM ";"] ["behavior:" behavior ";"] "}"
            | "pedestrian" IDENT "{" "crossing:" NUM ";" "trigger:" NUM ";" "}"
behavior   := "cruise" | "brake_at(" INT ")" | "cut_in_at(" INT ")"
oracle     := "oracle" "{" ["longitudinal:" "[" clause,* "]" ";"] ["lateral:" "[" clause,* "]" ";"] "}"
clause     := "no_collision" | "stop_at_sign(" NUM ")" | "yield_to_pedestrian" ["(" IDENT ")"] | "speed_below(" NUM ")"
Positions are meters in [0, 200] on one straight lane, speeds m/s in [0, 40].
Fields inside a block may come in any order. Vehicles start ahead of the ego; ids are unique; "ego" is reserved; "#" starts a comment.
"##;

/// Byte range plus 1-based line/column of its start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end.max(self.start),
            line: self.line,
            column: self.column,
        }
    }
}

/// Source locations of the parsed AST, keyed by node path
/// (`road.signs[0]`, `actors.lead`, `oracle.longitudinal[1]`, ...).
///
/// Spans never take part in structural equality of a [`Scenario`].
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    spans: BTreeMap<String, Span>,
}

impl SourceMap {
    pub fn insert(&mut self, path: impl Into<String>, span: Span) {
        self.spans.insert(path.into(), span);
    }

    pub fn get(&self, path: &str) -> Option<Span> {
        self.spans.get(path).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Span)> {
        self.spans.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl PartialEq for SourceMap {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weather {
    Clear,
    Rain,
    Fog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeOfDay {
    Day,
    Night,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub weather: Weather,
    pub time_of_day: TimeOfDay,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            weather: Weather::Clear,
            time_of_day: TimeOfDay::Day,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadType {
    Straight,
    Intersection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    SolidCenter,
    DashedCenter,
    Crosswalk { position: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignKind {
    Stop,
    SpeedLimit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sign {
    pub kind: SignKind,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub road_type: RoadType,
    pub markers: Vec<Marker>,
    pub signs: Vec<Sign>,
}

impl Default for RoadNetwork {
    fn default() -> Self {
        RoadNetwork {
            road_type: RoadType::Straight,
            markers: Vec::new(),
            signs: Vec::new(),
        }
    }
}

impl RoadNetwork {
    pub fn stop_signs(&self) -> impl Iterator<Item = f64> + '_ {
        self.signs
            .iter()
            .filter(|s| s.kind == SignKind::Stop)
            .map(|s| s.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    IgnoreStopSign,
    IgnoreLeadVehicle,
    IgnorePedestrian,
}

impl FaultKind {
    pub const ALL: [FaultKind; 3] = [
        FaultKind::IgnoreStopSign,
        FaultKind::IgnoreLeadVehicle,
        FaultKind::IgnorePedestrian,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            FaultKind::IgnoreStopSign => "ignore_stop_sign",
            FaultKind::IgnoreLeadVehicle => "ignore_lead_vehicle",
            FaultKind::IgnorePedestrian => "ignore_pedestrian",
        }
    }
}

/// Condition on the environment under which a fault is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guard {
    Weather(Weather),
    Time(TimeOfDay),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub guard: Option<Guard>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    RuleFollower,
    Faulted(FaultSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoSpec {
    pub start_position: f64,
    pub start_speed: f64,
    pub controller: Controller,
}

impl Default for EgoSpec {
    fn default() -> Self {
        EgoSpec {
            start_position: 0.0,
            start_speed: 0.0,
            controller: Controller::RuleFollower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NpcBehavior {
    Cruise,
    BrakeAt(u32),
    CutInAt(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NpcSpec {
    Vehicle {
        id: String,
        start_position: f64,
        start_speed: f64,
        behavior: NpcBehavior,
    },
    Pedestrian {
        id: String,
        crossing_position: f64,
        trigger_distance: f64,
    },
}

impl NpcSpec {
    pub fn id(&self) -> &str {
        match self {
            NpcSpec::Vehicle { id, .. } | NpcSpec::Pedestrian { id, .. } => id,
        }
    }

    pub fn is_vehicle(&self) -> bool {
        matches!(self, NpcSpec::Vehicle { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActorSet {
    pub ego: EgoSpec,
    pub npcs: Vec<NpcSpec>,
}

impl ActorSet {
    pub fn npc(&self, id: &str) -> Option<&NpcSpec> {
        self.npcs.iter().find(|n| n.id() == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleClause {
    NoCollision,
    StopAtSign { max_overshoot: f64 },
    /// Without a target the clause covers every pedestrian.
    YieldToPedestrian { target: Option<String> },
    SpeedBelow { limit: f64 },
}

impl fmt::Display for OracleClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleClause::NoCollision => f.write_str("no_collision"),
            OracleClause::StopAtSign { max_overshoot } => {
                write!(f, "stop_at_sign({})", format_number(*max_overshoot))
            }
            OracleClause::YieldToPedestrian { target: None } => f.write_str("yield_to_pedestrian"),
            OracleClause::YieldToPedestrian { target: Some(t) } => {
                write!(f, "yield_to_pedestrian({t})")
            }
            OracleClause::SpeedBelow { limit } => {
                write!(f, "speed_below({})", format_number(*limit))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub longitudinal: Vec<OracleClause>,
    pub lateral: Vec<OracleClause>,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            longitudinal: vec![OracleClause::NoCollision],
            lateral: Vec::new(),
        }
    }
}

impl OracleSpec {
    pub fn clauses(&self) -> impl Iterator<Item = &OracleClause> {
        self.longitudinal.iter().chain(self.lateral.iter())
    }

    /// Limit of the first `speed_below` clause, if any.
    pub fn speed_limit(&self) -> Option<f64> {
        self.clauses().find_map(|c| match c {
            OracleClause::SpeedBelow { limit } => Some(*limit),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub environment: Environment,
    pub road: RoadNetwork,
    pub actors: ActorSet,
    pub oracle: OracleSpec,
    #[serde(skip)]
    pub spans: SourceMap,
}

impl Scenario {
    /// The default scenario: every block empty.
    pub fn minimal(name: impl Into<String>) -> Self {
        Scenario {
            name: name.into(),
            environment: Environment::default(),
            road: RoadNetwork::default(),
            actors: ActorSet::default(),
            oracle: OracleSpec::default(),
            spans: SourceMap::default(),
        }
    }

    pub fn span_of(&self, path: &str) -> Span {
        self.spans.get(path).unwrap_or_default()
    }
}
