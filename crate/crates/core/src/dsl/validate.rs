use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::*;
use crate::sim::{self, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Syntax,
    Semantic,
    DryRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    SyntaxError,
    DuplicateId,
    UnknownReference,
    MissingSign,
    InvalidParameter,
    OutOfBounds,
    SignOrder,
    NpcBehindEgo,
    EmptyOracle,
    InitialStateInfeasible,
    DryRunFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub stage: Stage,
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    fn from_diagnostics(diagnostics: Vec<Diagnostic>) -> Self {
        let verdict = if diagnostics.iter().any(|d| d.severity == Severity::Error) {
            Verdict::Invalid
        } else {
            Verdict::Valid
        };
        ValidationReport {
            verdict,
            diagnostics,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.verdict == Verdict::Valid
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }

    /// Report for text that failed to parse.
    pub fn syntax(err: &ParseError) -> Self {
        let found = if err.found.is_empty() {
            String::new()
        } else {
            format!(", found {}", err.found)
        };
        let expected = if err.expected.is_empty() {
            String::new()
        } else {
            format!(" (expected {})", err.expected.join(" or "))
        };
        Self::from_diagnostics(vec![Diagnostic {
            stage: Stage::Syntax,
            severity: Severity::Error,
            kind: DiagnosticKind::SyntaxError,
            message: format!("{}{expected}{found}", err.message),
            line: err.line,
            column: err.column,
        }])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Checker<'a> {
    s: &'a Scenario,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn push(&mut self, severity: Severity, kind: DiagnosticKind, path: &str, message: String) {
        let span = self.s.span_of(path);
        self.out.push(Diagnostic {
            stage: Stage::Semantic,
            severity,
            kind,
            message,
            line: span.line,
            column: span.column,
        });
    }

    fn error(&mut self, kind: DiagnosticKind, path: &str, message: String) {
        self.push(Severity::Error, kind, path, message);
    }

    fn position(&mut self, path: &str, what: &str, v: f64) {
        if !v.is_finite() {
            self.error(
                DiagnosticKind::InvalidParameter,
                path,
                format!("{what} is not a finite number"),
            );
        } else if !(0.0..=ROAD_LENGTH).contains(&v) {
            self.error(
                DiagnosticKind::OutOfBounds,
                path,
                format!("{what} {} is outside the road [0, {}]", format_number(v), format_number(ROAD_LENGTH)),
            );
        }
    }

    fn speed(&mut self, path: &str, what: &str, v: f64) {
        if !v.is_finite() {
            self.error(
                DiagnosticKind::InvalidParameter,
                path,
                format!("{what} is not a finite number"),
            );
        } else if !(0.0..=MAX_SPEED).contains(&v) {
            self.error(
                DiagnosticKind::OutOfBounds,
                path,
                format!("{what} {} is outside [0, {}]", format_number(v), format_number(MAX_SPEED)),
            );
        }
    }

    fn positive(&mut self, path: &str, what: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.error(
                DiagnosticKind::InvalidParameter,
                path,
                format!("{what} must be a positive number, got {}", format_number(v)),
            );
        }
    }
}

fn semantic(s: &Scenario, cfg: &SimConfig) -> Vec<Diagnostic> {
    let mut c = Checker { s, out: Vec::new() };

    let mut seen = BTreeSet::new();
    seen.insert(EGO_ID);
    for (i, npc) in s.actors.npcs.iter().enumerate() {
        if !seen.insert(npc.id()) {
            c.error(
                DiagnosticKind::DuplicateId,
                &format!("actors.npcs[{i}]"),
                format!("duplicate actor id `{}`", npc.id()),
            );
        }
    }

    let ego = &s.actors.ego;
    c.position("actors.ego", "ego position", ego.start_position);
    c.speed("actors.ego", "ego speed", ego.start_speed);

    for (i, npc) in s.actors.npcs.iter().enumerate() {
        let path = format!("actors.npcs[{i}]");
        match npc {
            NpcSpec::Vehicle {
                id,
                start_position,
                start_speed,
                ..
            } => {
                c.position(&path, &format!("position of `{id}`"), *start_position);
                c.speed(&path, &format!("speed of `{id}`"), *start_speed);
                if start_position.is_finite() && *start_position <= ego.start_position {
                    c.error(
                        DiagnosticKind::NpcBehindEgo,
                        &path,
                        format!("vehicle `{id}` must start ahead of the ego"),
                    );
                }
            }
            NpcSpec::Pedestrian {
                id,
                crossing_position,
                trigger_distance,
            } => {
                c.position(&path, &format!("crossing of `{id}`"), *crossing_position);
                c.positive(&path, &format!("trigger distance of `{id}`"), *trigger_distance);
                if crossing_position.is_finite() && *crossing_position <= ego.start_position {
                    c.push(
                        Severity::Warning,
                        DiagnosticKind::NpcBehindEgo,
                        &path,
                        format!("pedestrian `{id}` crosses behind the ego and never interacts"),
                    );
                }
            }
        }
    }

    for (i, m) in s.road.markers.iter().enumerate() {
        if let Marker::Crosswalk { position } = m {
            c.position(&format!("road.markers[{i}]"), "crosswalk position", *position);
        }
    }
    for (i, sign) in s.road.signs.iter().enumerate() {
        let path = format!("road.signs[{i}]");
        c.position(&path, "sign position", sign.position);
        if let SignKind::SpeedLimit(v) = sign.kind {
            c.positive(&path, "speed limit", v);
        }
        if i > 0 && !(s.road.signs[i - 1].position < sign.position) {
            c.error(
                DiagnosticKind::SignOrder,
                &path,
                "signs must be listed in strictly increasing position".into(),
            );
        }
    }

    if s.oracle.clauses().next().is_none() {
        c.error(
            DiagnosticKind::EmptyOracle,
            "oracle",
            "oracle has no clauses".into(),
        );
    }
    for (list, clauses) in [("longitudinal", &s.oracle.longitudinal), ("lateral", &s.oracle.lateral)] {
        for (i, clause) in clauses.iter().enumerate() {
            let path = format!("oracle.{list}[{i}]");
            match clause {
                OracleClause::NoCollision => {}
                OracleClause::StopAtSign { max_overshoot } => {
                    if !(max_overshoot.is_finite() && *max_overshoot >= 0.0) {
                        c.error(
                            DiagnosticKind::InvalidParameter,
                            &path,
                            "overshoot must be a non-negative number".into(),
                        );
                    }
                    if s.road.stop_signs().next().is_none() {
                        c.error(
                            DiagnosticKind::MissingSign,
                            &path,
                            "oracle references missing sign: no stop sign on the road".into(),
                        );
                    }
                }
                OracleClause::YieldToPedestrian { target } => match target {
                    Some(t) => match s.actors.npc(t) {
                        Some(NpcSpec::Pedestrian { .. }) => {}
                        Some(_) => c.error(
                            DiagnosticKind::UnknownReference,
                            &path,
                            format!("`{t}` is not a pedestrian"),
                        ),
                        None => c.error(
                            DiagnosticKind::UnknownReference,
                            &path,
                            format!("unknown pedestrian `{t}`"),
                        ),
                    },
                    None => {
                        if !s.actors.npcs.iter().any(|n| !n.is_vehicle()) {
                            c.error(
                                DiagnosticKind::UnknownReference,
                                &path,
                                "yield_to_pedestrian without any pedestrian".into(),
                            );
                        }
                    }
                },
                OracleClause::SpeedBelow { limit } => c.positive(&path, "speed bound", *limit),
            }
        }
    }

    if c.out.iter().all(|d| d.severity != Severity::Error) {
        feasibility(&mut c, cfg);
    }
    c.out
}

/// Every obstacle ahead of a vehicle must start outside that vehicle's
/// braking trigger distance, otherwise no controller could satisfy the
/// oracle.
fn feasibility(c: &mut Checker<'_>, cfg: &SimConfig) {
    let s = c.s;
    let decel = cfg.decel(s.environment.weather);
    let ego = &s.actors.ego;
    let trigger = cfg.brake_trigger(ego.start_speed, decel);
    for (i, sign) in s.road.signs.iter().enumerate() {
        if sign.kind != SignKind::Stop {
            continue;
        }
        let d = sign.position - ego.start_position;
        if d >= 0.0 && d <= trigger {
            c.error(
                DiagnosticKind::InitialStateInfeasible,
                &format!("road.signs[{i}]"),
                format!(
                    "stop sign {} m ahead is within the ego's braking distance {} m",
                    format_number(round2(d)),
                    format_number(round2(trigger))
                ),
            );
        }
    }
    let mut lane: Vec<(usize, &str, f64, f64)> = s
        .actors
        .npcs
        .iter()
        .enumerate()
        .filter_map(|(i, n)| match n {
            NpcSpec::Vehicle {
                id,
                start_position,
                start_speed,
                behavior,
            } if !matches!(behavior, NpcBehavior::CutInAt(_)) => {
                Some((i, id.as_str(), *start_position, *start_speed))
            }
            _ => None,
        })
        .collect();
    lane.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut follower = (EGO_ID, ego.start_position, ego.start_speed);
    for (i, id, x, v) in lane {
        let gap = x - follower.1;
        let trig = cfg.brake_trigger(follower.2, decel);
        if gap <= trig {
            c.error(
                DiagnosticKind::InitialStateInfeasible,
                &format!("actors.npcs[{i}]"),
                format!(
                    "vehicle `{id}` starts {} m ahead of `{}`, inside its braking distance {} m",
                    format_number(round2(gap)),
                    follower.0,
                    format_number(round2(trig))
                ),
            );
        }
        follower = (id, x, v);
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

const DRY_RUN_STEPS: usize = 10;

fn dry_run(s: &Scenario, cfg: &SimConfig) -> Vec<Diagnostic> {
    let cfg = SimConfig {
        max_steps: DRY_RUN_STEPS,
        ..cfg.clone()
    };
    let span = s.span_of("scenario");
    let fail = |message: String| Diagnostic {
        stage: Stage::DryRun,
        severity: Severity::Error,
        kind: DiagnosticKind::DryRunFailure,
        message,
        line: span.line,
        column: span.column,
    };
    match sim::run(s, &[], &cfg) {
        Err(e) => vec![fail(format!("dry run failed: {e}"))],
        Ok((trace, _)) => {
            let finite = trace.states.iter().all(|st| {
                st.positions
                    .values()
                    .chain(st.speeds.values())
                    .all(|v| v.is_finite())
            });
            if finite {
                Vec::new()
            } else {
                vec![fail("dry run produced a non-finite state".into())]
            }
        }
    }
}

/// Semantic checks, then (when `run_dry` is set and no error was found) a
/// short simulation with the empty event word.
pub fn validate_scenario(s: &Scenario, run_dry: bool) -> ValidationReport {
    validate_scenario_with(s, run_dry, &SimConfig::default())
}

pub fn validate_scenario_with(s: &Scenario, run_dry: bool, cfg: &SimConfig) -> ValidationReport {
    let mut diags = semantic(s, cfg);
    if run_dry && diags.iter().all(|d| d.severity != Severity::Error) {
        diags.extend(dry_run(s, cfg));
    }
    ValidationReport::from_diagnostics(diags)
}
