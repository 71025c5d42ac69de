//! Deterministic 1-D longitudinal traffic simulator.
//!
//! Every actor lives on one lane. Each step applies the event for that step,
//! lets the controllers choose an acceleration from the current state, and
//! integrates with forward Euler: `x' = x + v·dt`, `v' = max(0, v + a·dt)`.
//! The ego never accelerates; it either holds speed or brakes at the
//! comfortable deceleration (halved in rain).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::dsl::{FaultKind, FaultSpec};
use crate::dsl::{
    Controller, Guard, NpcBehavior, NpcSpec, OracleClause, Scenario, Weather, EGO_ID,
};

/// Speed at or below which a vehicle counts as stopped, m/s.
pub const STOP_SPEED: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub max_steps: usize,
    pub comfortable_decel: f64,
    pub collision_gap: f64,
    pub stop_zone: f64,
    /// Deceleration of an NPC vehicle after `NPC_BRAKE` or `brake_at`.
    pub npc_brake_decel: f64,
    /// Multiplier on `comfortable_decel` while it rains.
    pub rain_decel_factor: f64,
    /// Once braking, the ego keeps braking until the obstacle is farther
    /// than its trigger distance plus this band, meters.
    pub brake_release: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            max_steps: 300,
            comfortable_decel: 4.0,
            collision_gap: 0.5,
            stop_zone: 2.0,
            npc_brake_decel: 8.0,
            rain_decel_factor: 0.5,
            brake_release: 10.0,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<(), SimError> {
        let positive = [
            ("dt", self.dt),
            ("comfortable_decel", self.comfortable_decel),
            ("collision_gap", self.collision_gap),
            ("stop_zone", self.stop_zone),
            ("npc_brake_decel", self.npc_brake_decel),
            ("rain_decel_factor", self.rain_decel_factor),
            ("brake_release", self.brake_release),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.max_steps == 0 {
            return Err(SimError::InvalidConfig("max_steps must be >= 1".into()));
        }
        Ok(())
    }

    /// Comfortable braking deceleration under the given weather.
    pub fn decel(&self, weather: Weather) -> f64 {
        match weather {
            Weather::Rain => self.comfortable_decel * self.rain_decel_factor,
            _ => self.comfortable_decel,
        }
    }

    /// `v²/(2a) + stop_zone`.
    pub fn braking_envelope(&self, speed: f64, decel: f64) -> f64 {
        speed * speed / (2.0 * decel) + self.stop_zone
    }

    /// Distance at which a controller starts braking: the envelope checked
    /// one and a half Euler steps ahead, so that the discrete stop still
    /// ends at least `stop_zone` short of the obstacle.
    pub fn brake_trigger(&self, speed: f64, decel: f64) -> f64 {
        self.braking_envelope(speed, decel) + 1.5 * speed * self.dt
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Event {
    None,
    NpcBrake(String),
    PedCross(String),
    RainOn,
    RainOff,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::None => f.write_str("NONE"),
            Event::NpcBrake(id) => write!(f, "NPC_BRAKE({id})"),
            Event::PedCross(id) => write!(f, "PED_CROSS({id})"),
            Event::RainOn => f.write_str("RAIN_ON"),
            Event::RainOff => f.write_str("RAIN_OFF"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid event `{0}`")]
pub struct EventParseError(pub String);

impl FromStr for Event {
    type Err = EventParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let arg = |prefix: &str| -> Option<String> {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .map(|r| r.trim().to_string())
                .filter(|r| !r.is_empty())
        };
        match s {
            "NONE" => Ok(Event::None),
            "RAIN_ON" => Ok(Event::RainOn),
            "RAIN_OFF" => Ok(Event::RainOff),
            _ => {
                if let Some(id) = arg("NPC_BRAKE") {
                    Ok(Event::NpcBrake(id))
                } else if let Some(id) = arg("PED_CROSS") {
                    Ok(Event::PedCross(id))
                } else {
                    Err(EventParseError(s.to_string()))
                }
            }
        }
    }
}

impl Serialize for Event {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Event {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated event list (`NONE,NPC_BRAKE(lead),RAIN_ON`).
pub fn parse_word(text: &str) -> Result<Vec<Event>, EventParseError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(str::parse).collect()
}

/// Every event that is meaningful for `s`, NONE first.
pub fn scenario_alphabet(s: &Scenario) -> Vec<Event> {
    let mut out = vec![Event::None];
    for npc in &s.actors.npcs {
        out.push(match npc {
            NpcSpec::Vehicle { id, .. } => Event::NpcBrake(id.clone()),
            NpcSpec::Pedestrian { id, .. } => Event::PedCross(id.clone()),
        });
    }
    out.push(Event::RainOn);
    out.push(Event::RainOff);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub step: usize,
    pub positions: BTreeMap<String, f64>,
    pub speeds: BTreeMap<String, f64>,
    pub weather: Weather,
    pub pedestrian_on_road: BTreeMap<String, bool>,
    pub ego_braking: bool,
    /// NPC vehicles whose hard braking has been triggered.
    pub npc_braking: BTreeMap<String, bool>,
    /// Whether each NPC vehicle currently occupies the lane.
    pub in_lane: BTreeMap<String, bool>,
}

impl SimState {
    pub fn ego_position(&self) -> f64 {
        self.positions[EGO_ID]
    }

    pub fn ego_speed(&self) -> f64 {
        self.speeds[EGO_ID]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub scenario: String,
    pub dt: f64,
    pub states: Vec<SimState>,
    #[serde(rename = "events")]
    pub events_applied: Vec<Event>,
}

impl Trace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub clause: OracleClause,
    pub first_violation_step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub violated_clauses: Vec<Violation>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("event {index} `{event}`: {reason}")]
    InvalidEvent {
        index: usize,
        event: Event,
        reason: String,
    },
    #[error("word has {len} events but max_steps is {max}")]
    WordTooLong { len: usize, max: usize },
    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),
    #[error("scenario rejected by simulator: {0}")]
    InvalidScenario(String),
}

pub fn initial_state(s: &Scenario) -> SimState {
    let mut st = SimState {
        step: 0,
        positions: BTreeMap::new(),
        speeds: BTreeMap::new(),
        weather: s.environment.weather,
        pedestrian_on_road: BTreeMap::new(),
        ego_braking: false,
        npc_braking: BTreeMap::new(),
        in_lane: BTreeMap::new(),
    };
    st.positions.insert(EGO_ID.into(), s.actors.ego.start_position);
    st.speeds.insert(EGO_ID.into(), s.actors.ego.start_speed);
    for npc in &s.actors.npcs {
        match npc {
            NpcSpec::Vehicle {
                id,
                start_position,
                start_speed,
                behavior,
            } => {
                st.positions.insert(id.clone(), *start_position);
                st.speeds.insert(id.clone(), *start_speed);
                st.npc_braking.insert(id.clone(), false);
                st.in_lane
                    .insert(id.clone(), !matches!(behavior, NpcBehavior::CutInAt(_)));
            }
            NpcSpec::Pedestrian {
                id,
                crossing_position,
                ..
            } => {
                st.positions.insert(id.clone(), *crossing_position);
                st.speeds.insert(id.clone(), 0.0);
                st.pedestrian_on_road.insert(id.clone(), false);
            }
        }
    }
    st
}

fn check_event(s: &Scenario, index: usize, e: &Event) -> Result<(), SimError> {
    let bad = |reason: &str| SimError::InvalidEvent {
        index,
        event: e.clone(),
        reason: reason.to_string(),
    };
    match e {
        Event::NpcBrake(id) => match s.actors.npc(id) {
            Some(n) if n.is_vehicle() => Ok(()),
            Some(_) => Err(bad("actor is not a vehicle")),
            None => Err(bad("unknown actor id")),
        },
        Event::PedCross(id) => match s.actors.npc(id) {
            Some(NpcSpec::Pedestrian { .. }) => Ok(()),
            Some(_) => Err(bad("actor is not a pedestrian")),
            None => Err(bad("unknown actor id")),
        },
        _ => Ok(()),
    }
}

fn fault_active(s: &Scenario, state: &SimState, kind: FaultKind) -> bool {
    match &s.actors.ego.controller {
        Controller::RuleFollower => false,
        Controller::Faulted(f) => {
            f.kind == kind
                && match f.guard {
                    None => true,
                    Some(Guard::Weather(w)) => state.weather == w,
                    Some(Guard::Time(t)) => s.environment.time_of_day == t,
                }
        }
    }
}

/// Distance from the ego to the nearest obstacle its controller reacts to.
fn ego_obstacle_distance(state: &SimState, s: &Scenario) -> Option<f64> {
    let x = state.ego_position();
    let mut nearest: Option<f64> = None;
    let mut consider = |d: f64| {
        if d >= 0.0 {
            nearest = Some(nearest.map_or(d, |n: f64| n.min(d)));
        }
    };
    if !fault_active(s, state, FaultKind::IgnoreStopSign) {
        for sign in s.road.stop_signs() {
            consider(sign - x);
        }
    }
    if !fault_active(s, state, FaultKind::IgnoreLeadVehicle) {
        for (id, lane) in &state.in_lane {
            if *lane {
                consider(state.positions[id] - x);
            }
        }
    }
    if !fault_active(s, state, FaultKind::IgnorePedestrian) {
        for (id, on) in &state.pedestrian_on_road {
            if *on {
                consider(state.positions[id] - x);
            }
        }
    }
    nearest
}

fn ego_brakes(state: &SimState, s: &Scenario, cfg: &SimConfig) -> bool {
    let trigger = cfg.brake_trigger(state.ego_speed(), cfg.decel(state.weather));
    match ego_obstacle_distance(state, s) {
        None => false,
        Some(d) => d <= trigger || (state.ego_braking && d <= trigger + cfg.brake_release),
    }
}

/// In-lane vehicles (ego included) sorted by position.
fn lane_order(state: &SimState) -> Vec<&str> {
    let mut ids: Vec<&str> = std::iter::once(EGO_ID)
        .chain(
            state
                .in_lane
                .iter()
                .filter(|(_, l)| **l)
                .map(|(id, _)| id.as_str()),
        )
        .collect();
    ids.sort_by(|a, b| {
        state.positions[*a]
            .total_cmp(&state.positions[*b])
            .then_with(|| a.cmp(b))
    });
    ids
}

fn accept_cut_in(state: &SimState, id: &str, cfg: &SimConfig) -> bool {
    let x = state.positions[id];
    let decel = cfg.decel(state.weather);
    let order = lane_order(state);
    let follower = order
        .iter().rfind(|o| state.positions[**o] <= x)
        .copied();
    let leader = order.iter().find(|o| state.positions[**o] > x).copied();
    let follower_ok = follower.is_none_or(|f| {
        x - state.positions[f] > cfg.brake_trigger(state.speeds[f], decel)
    });
    let leader_ok = leader.is_none_or(|l| {
        state.positions[l] - x > cfg.brake_trigger(state.speeds[id], decel)
    });
    follower_ok && leader_ok
}

/// Advances the world by one step under `event`.
///
/// Events naming unknown actors are ignored here; [`run`] rejects them
/// before simulating.
pub fn step(state: &SimState, event: &Event, s: &Scenario, cfg: &SimConfig) -> SimState {
    let mut next = state.clone();
    next.step = state.step + 1;

    match event {
        Event::None => {}
        Event::RainOn => next.weather = Weather::Rain,
        Event::RainOff => {
            next.weather = match s.environment.weather {
                Weather::Rain => Weather::Clear,
                w => w,
            }
        }
        Event::NpcBrake(id) => {
            if let Some(b) = next.npc_braking.get_mut(id) {
                *b = true;
            }
        }
        Event::PedCross(id) => {
            if let Some(NpcSpec::Pedestrian {
                crossing_position,
                trigger_distance,
                ..
            }) = s.actors.npc(id)
            {
                let d = crossing_position - state.ego_position();
                let v = state.ego_speed();
                let trigger = cfg.brake_trigger(v, cfg.decel(state.weather));
                // the pedestrian only steps out when an approaching driver can still stop
                if d <= *trigger_distance && d > trigger {
                    next.pedestrian_on_road.insert(id.clone(), true);
                }
            }
        }
    }

    for npc in &s.actors.npcs {
        if let NpcSpec::Vehicle { id, behavior, .. } = npc {
            match behavior {
                NpcBehavior::BrakeAt(k) if state.step >= *k as usize => {
                    next.npc_braking.insert(id.clone(), true);
                }
                NpcBehavior::CutInAt(k)
                    if state.step >= *k as usize
                        && !next.in_lane[id]
                        && accept_cut_in(&next, id, cfg) =>
                {
                    next.in_lane.insert(id.clone(), true);
                }
                _ => {}
            }
        }
    }

    // Decisions read the post-event state before any motion.
    let decel = cfg.decel(next.weather);
    let ego_brake = ego_brakes(&next, s, cfg);
    let mut accel: BTreeMap<String, f64> = BTreeMap::new();
    accel.insert(EGO_ID.into(), if ego_brake { -decel } else { 0.0 });

    let order = lane_order(&next);
    for npc in &s.actors.npcs {
        if let NpcSpec::Vehicle { id, .. } = npc {
            let a = if next.npc_braking[id] {
                -cfg.npc_brake_decel
            } else if next.in_lane[id] {
                let x = next.positions[id];
                let v = next.speeds[id];
                let gap = order
                    .iter()
                    .filter(|o| **o != id.as_str() && **o != EGO_ID)
                    .map(|o| next.positions[*o] - x)
                    .filter(|d| *d >= 0.0)
                    .fold(f64::INFINITY, f64::min);
                if gap <= cfg.brake_trigger(v, decel) {
                    -decel
                } else {
                    0.0
                }
            } else {
                0.0
            };
            accel.insert(id.clone(), a);
        }
    }

    for (id, a) in accel {
        let x = next.positions[&id];
        let v = next.speeds[&id];
        next.positions.insert(id.clone(), x + v * cfg.dt);
        next.speeds.insert(id, (v + a * cfg.dt).max(0.0));
    }
    next.ego_braking = ego_brake;
    next
}

/// Whether state `k` of `states` is a collision state: two in-lane
/// vehicles closer than `collision_gap` (or having passed through each
/// other since the previous state), or the ego within `collision_gap` of,
/// or driving across, the crossing of a pedestrian on the road.
pub fn collision_at(states: &[SimState], k: usize, cfg: &SimConfig) -> bool {
    let cur = &states[k];
    let prev = k.checked_sub(1).map(|j| &states[j]);
    let lane: Vec<&str> = std::iter::once(EGO_ID)
        .chain(
            cur.in_lane
                .iter()
                .filter(|(_, l)| **l)
                .map(|(id, _)| id.as_str()),
        )
        .collect();
    let in_lane_before = |p: &SimState, id: &str| id == EGO_ID || p.in_lane.get(id) == Some(&true);
    for (i, a) in lane.iter().enumerate() {
        for b in &lane[i + 1..] {
            let gap = cur.positions[*b] - cur.positions[*a];
            if gap.abs() < cfg.collision_gap {
                return true;
            }
            if let Some(p) = prev {
                if in_lane_before(p, a) && in_lane_before(p, b) {
                    let before = p.positions[*b] - p.positions[*a];
                    if before.signum() != gap.signum() {
                        return true;
                    }
                }
            }
        }
    }
    let x = cur.ego_position();
    for (id, on) in &cur.pedestrian_on_road {
        if !*on {
            continue;
        }
        let c = cur.positions[id];
        if (c - x).abs() < cfg.collision_gap {
            return true;
        }
        if let Some(p) = prev {
            if p.ego_position() < c && x >= c {
                return true;
            }
        }
    }
    false
}

/// Executes `s` under `word`, padded with NONE up to `max_steps`, halting
/// after the first collision state.
pub fn run(s: &Scenario, word: &[Event], cfg: &SimConfig) -> Result<(Trace, Verdict), SimError> {
    cfg.check()?;
    if word.len() > cfg.max_steps {
        return Err(SimError::WordTooLong {
            len: word.len(),
            max: cfg.max_steps,
        });
    }
    for (i, e) in word.iter().enumerate() {
        check_event(s, i, e)?;
    }
    let first = initial_state(s);
    let finite = |st: &SimState| {
        st.positions.values().chain(st.speeds.values()).all(|v| v.is_finite())
    };
    if !finite(&first) {
        return Err(SimError::InvalidScenario("non-finite initial state".into()));
    }
    if first.speeds.values().any(|v| *v < 0.0) {
        return Err(SimError::InvalidScenario("negative initial speed".into()));
    }
    let mut states = vec![first];
    let mut events = Vec::new();
    if !collision_at(&states, 0, cfg) {
        for k in 0..cfg.max_steps {
            let e = word.get(k).cloned().unwrap_or(Event::None);
            let next = step(states.last().expect("nonempty"), &e, s, cfg);
            states.push(next);
            events.push(e);
            if collision_at(&states, states.len() - 1, cfg) {
                break;
            }
        }
    }
    let trace = Trace {
        scenario: s.name.clone(),
        dt: cfg.dt,
        states,
        events_applied: events,
    };
    let verdict = evaluate_oracles(&trace, s, cfg);
    Ok((trace, verdict))
}

fn first_violation(t: &Trace, s: &Scenario, clause: &OracleClause, cfg: &SimConfig) -> Option<usize> {
    let states = &t.states;
    match clause {
        OracleClause::NoCollision => (0..states.len()).find(|&k| collision_at(states, k, cfg)),
        OracleClause::SpeedBelow { limit } => states.iter().position(|st| st.ego_speed() > *limit),
        OracleClause::StopAtSign { max_overshoot } => s
            .road
            .stop_signs()
            .filter_map(|sign| {
                let line = sign + max_overshoot;
                let mut stopped = false;
                for k in 0..states.len() {
                    let x = states[k].ego_position();
                    let v = states[k].ego_speed();
                    if k > 0 {
                        let px = states[k - 1].ego_position();
                        if !stopped && px <= line && x > line && v > STOP_SPEED {
                            return Some(k);
                        }
                    }
                    if (x - sign).abs() <= cfg.stop_zone && v <= STOP_SPEED {
                        stopped = true;
                    }
                }
                None
            })
            .min(),
        OracleClause::YieldToPedestrian { target } => s
            .actors
            .npcs
            .iter()
            .filter_map(|n| match n {
                NpcSpec::Pedestrian {
                    id,
                    crossing_position,
                    ..
                } if target.as_ref().is_none_or(|t| t == id) => Some((id, *crossing_position)),
                _ => None,
            })
            .filter_map(|(id, c)| {
                (1..states.len()).find(|&k| {
                    states[k].pedestrian_on_road.get(id) == Some(&true)
                        && states[k - 1].ego_position() < c
                        && states[k].ego_position() >= c
                })
            })
            .min(),
    }
}

/// Judges a complete trace against the scenario's oracle clauses.
pub fn evaluate_oracles(t: &Trace, s: &Scenario, cfg: &SimConfig) -> Verdict {
    let violated_clauses: Vec<Violation> = s
        .oracle
        .clauses()
        .filter_map(|c| {
            first_violation(t, s, c, cfg).map(|k| Violation {
                clause: c.clone(),
                first_violation_step: k,
            })
        })
        .collect();
    Verdict {
        outcome: if violated_clauses.is_empty() {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        violated_clauses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_scenario, Environment, OracleSpec, Sign, SignKind};

    fn scenario(text: &str) -> Scenario {
        parse_scenario(text).unwrap()
    }

    fn stop_sign_scenario() -> Scenario {
        scenario(
            "scenario stop { environment {} road { signs: [stop @ 80.0]; } \
             actors { ego { position: 0.0; speed: 10.0; } } \
             oracle { longitudinal: [stop_at_sign(0.5)]; } }",
        )
    }

    #[test]
    fn event_text_round_trips() {
        for e in [
            Event::None,
            Event::NpcBrake("lead".into()),
            Event::PedCross("p1".into()),
            Event::RainOn,
            Event::RainOff,
        ] {
            assert_eq!(e.to_string().parse::<Event>().unwrap(), e);
        }
        assert!("NPC_BRAKE()".parse::<Event>().is_err());
        assert_eq!(
            parse_word("NONE, RAIN_ON").unwrap(),
            vec![Event::None, Event::RainOn]
        );
    }

    #[test]
    fn stop_sign_closed_form() {
        let s = stop_sign_scenario();
        let cfg = SimConfig::default();
        let (trace, verdict) = run(&s, &[], &cfg).unwrap();
        assert!(verdict.passed(), "{verdict:?}");
        // envelope v²/(2a) + stop_zone = 14.5 m at 10 m/s
        assert_eq!(cfg.braking_envelope(10.0, 4.0), 14.5);
        for w in trace.states.windows(2) {
            let d = 80.0 - w[0].ego_position();
            if d <= 14.5 && w[0].ego_speed() > 0.0 {
                assert!(w[1].ego_braking, "not braking at distance {d}");
            }
        }
        let last = trace.states.last().unwrap();
        assert_eq!(last.ego_speed(), 0.0);
        assert!(last.ego_position() < 80.0);
        // independent step-by-step replay of the same arithmetic
        let (mut x, mut v, mut first_brake) = (0.0f64, 10.0f64, None);
        for k in 0..300 {
            let brake = 80.0 - x <= 14.5 + 1.5 || (first_brake.is_some() && v > 0.0);
            if brake && first_brake.is_none() {
                first_brake = Some(k);
            }
            let a = if brake { -4.0 } else { 0.0 };
            x += v * 0.1;
            v = (v + a * 0.1).max(0.0);
        }
        assert!((last.ego_position() - x).abs() < 1e-9);
        assert_eq!(first_brake, Some(64));
        assert!(trace.states[65].ego_braking && !trace.states[64].ego_braking);
    }

    #[test]
    fn lone_ego_passes() {
        let mut s = Scenario::minimal("lone");
        s.actors.ego.start_speed = 12.0;
        let (trace, verdict) = run(&s, &[], &SimConfig::default()).unwrap();
        assert!(verdict.passed());
        assert_eq!(trace.states.len(), 301);
        assert_eq!(trace.events_applied.len(), 300);
    }

    #[test]
    fn fast_ego_hits_stopped_lead() {
        let s = scenario(
            "scenario crash { environment {} road {} \
             actors { ego { speed: 30.0; } vehicle lead { position: 20.0; speed: 0.0; } } \
             oracle {} }",
        );
        let cfg = SimConfig::default();
        let (trace, verdict) = run(&s, &[], &cfg).unwrap();
        assert!(!verdict.passed());
        let k = verdict.violated_clauses[0].first_violation_step;
        assert_eq!(verdict.violated_clauses[0].clause, OracleClause::NoCollision);
        // brute-force: Euler integration at full braking from step 0
        let (mut x, mut v) = (0.0f64, 30.0f64);
        let mut expect = None;
        for j in 1..=300 {
            x += v * 0.1;
            v = (v - 0.4f64).max(0.0);
            if 20.0 - x < 0.5 {
                expect = Some(j);
                break;
            }
        }
        assert_eq!(Some(k), expect);
        // early halt: nothing after the collision state
        assert_eq!(trace.states.len(), k + 1);
        assert!(30.0f64.powi(2) / 8.0 > 20.0);
    }

    #[test]
    fn resting_ego_is_a_fixpoint() {
        let s = Scenario::minimal("rest");
        let cfg = SimConfig::default();
        let st = initial_state(&s);
        let next = step(&st, &Event::None, &s, &cfg);
        let mut expect = st.clone();
        expect.step = 1;
        assert_eq!(next, expect);
    }

    fn pedestrian_scenario(controller: &str) -> Scenario {
        scenario(&format!(
            "scenario ped {{ environment {{}} road {{}} \
             actors {{ ego {{ position: 0.0; speed: 10.0; controller: {controller}; }} \
             pedestrian p1 {{ crossing: 100.0; trigger: 50.0; }} }} \
             oracle {{ longitudinal: [no_collision, yield_to_pedestrian]; }} }}"
        ))
    }

    #[test]
    fn ped_cross_needs_ego_within_trigger() {
        let s = pedestrian_scenario("rule_follower");
        let cfg = SimConfig::default();
        let st = initial_state(&s);
        let next = step(&st, &Event::PedCross("p1".into()), &s, &cfg);
        assert!(!next.pedestrian_on_road["p1"]);
        let mut near = st.clone();
        near.positions.insert(EGO_ID.into(), 60.0);
        let next = step(&near, &Event::PedCross("p1".into()), &s, &cfg);
        assert!(next.pedestrian_on_road["p1"]);
    }

    #[test]
    fn ignore_pedestrian_fault_skips_braking() {
        let cfg = SimConfig::default();
        for (controller, brakes) in [("rule_follower", true), ("faulted(ignore_pedestrian)", false)] {
            let s = pedestrian_scenario(controller);
            let mut st = initial_state(&s);
            st.positions.insert(EGO_ID.into(), 95.0);
            st.pedestrian_on_road.insert("p1".into(), true);
            let next = step(&st, &Event::None, &s, &cfg);
            assert_eq!(next.ego_braking, brakes, "{controller}");
        }
    }

    #[test]
    fn unknown_event_ids_rejected() {
        let s = pedestrian_scenario("rule_follower");
        let err = run(&s, &[Event::NpcBrake("ghost".into())], &SimConfig::default()).unwrap_err();
        assert!(matches!(err, SimError::InvalidEvent { index: 0, .. }));
        let err = run(&s, &[Event::NpcBrake("p1".into())], &SimConfig::default()).unwrap_err();
        assert!(matches!(err, SimError::InvalidEvent { .. }));
    }

    #[test]
    fn word_longer_than_max_steps_rejected() {
        let s = Scenario::minimal("s");
        let cfg = SimConfig {
            max_steps: 2,
            ..SimConfig::default()
        };
        assert!(matches!(
            run(&s, &vec![Event::None; 3], &cfg),
            Err(SimError::WordTooLong { .. })
        ));
    }

    fn hand_trace(ego: &[(f64, f64)], lead: Option<&[f64]>) -> (Trace, Scenario) {
        let mut s = Scenario::minimal("hand");
        if lead.is_some() {
            s.actors.npcs.push(NpcSpec::Vehicle {
                id: "lead".into(),
                start_position: 10.0,
                start_speed: 0.0,
                behavior: NpcBehavior::Cruise,
            });
        }
        let base = initial_state(&s);
        let states = ego
            .iter()
            .enumerate()
            .map(|(k, (x, v))| {
                let mut st = base.clone();
                st.step = k;
                st.positions.insert(EGO_ID.into(), *x);
                st.speeds.insert(EGO_ID.into(), *v);
                if let Some(l) = lead {
                    st.positions.insert("lead".into(), l[k]);
                }
                st
            })
            .collect::<Vec<_>>();
        let events = vec![Event::None; states.len() - 1];
        (
            Trace {
                scenario: "hand".into(),
                dt: 0.1,
                states,
                events_applied: events,
            },
            s,
        )
    }

    #[test]
    fn halting_before_sign_passes() {
        let (t, mut s) = hand_trace(&[(70.0, 4.0), (75.0, 2.0), (79.0, 0.0)], None);
        s.road.signs.push(Sign {
            kind: SignKind::Stop,
            position: 80.0,
        });
        s.oracle = OracleSpec {
            longitudinal: vec![OracleClause::StopAtSign { max_overshoot: 0.5 }],
            lateral: vec![],
        };
        assert!(evaluate_oracles(&t, &s, &SimConfig::default()).passed());
    }

    #[test]
    fn running_the_sign_fails() {
        let (t, mut s) = hand_trace(&[(78.0, 10.0), (79.0, 10.0), (81.0, 10.0)], None);
        s.road.signs.push(Sign {
            kind: SignKind::Stop,
            position: 80.0,
        });
        s.oracle.longitudinal = vec![OracleClause::StopAtSign { max_overshoot: 0.5 }];
        let v = evaluate_oracles(&t, &s, &SimConfig::default());
        assert_eq!(v.violated_clauses[0].first_violation_step, 2);
    }

    #[test]
    fn gap_threshold_crossing() {
        // gaps 3.0, 1.0, 0.3
        let (t, s) = hand_trace(&[(7.0, 1.0), (9.0, 1.0), (9.7, 1.0)], Some(&[10.0, 10.0, 10.0]));
        let v = evaluate_oracles(&t, &s, &SimConfig::default());
        assert_eq!(v.outcome, Outcome::Fail);
        assert_eq!(v.violated_clauses[0].first_violation_step, 2);
    }

    #[test]
    fn speed_below_flags_first_fast_step() {
        let (t, mut s) = hand_trace(&[(0.0, 5.0), (0.5, 12.0), (1.7, 12.0)], None);
        s.oracle.lateral = vec![OracleClause::SpeedBelow { limit: 10.0 }];
        let v = evaluate_oracles(&t, &s, &SimConfig::default());
        assert_eq!(v.violated_clauses.len(), 1);
        assert_eq!(v.violated_clauses[0].first_violation_step, 1);
    }

    #[test]
    fn rain_halves_deceleration() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.decel(Weather::Rain), 2.0);
        assert_eq!(cfg.decel(Weather::Fog), 4.0);
        let mut s = stop_sign_scenario();
        s.environment = Environment {
            weather: Weather::Rain,
            ..Environment::default()
        };
        s.actors.ego.start_speed = 8.0;
        let (t, v) = run(&s, &[], &cfg).unwrap();
        assert!(v.passed());
        assert!(t.states.last().unwrap().ego_position() < 80.0);
    }

    #[test]
    fn run_is_deterministic() {
        let s = pedestrian_scenario("faulted(ignore_pedestrian)");
        let word = vec![Event::None, Event::RainOn, Event::PedCross("p1".into())];
        let a = run(&s, &word, &SimConfig::default()).unwrap();
        let b = run(&s, &word, &SimConfig::default()).unwrap();
        assert_eq!(a.0.to_json(), b.0.to_json());
        assert_eq!(a.1, b.1);
    }
}
