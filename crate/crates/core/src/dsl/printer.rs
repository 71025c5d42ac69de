use std::fmt::Write;

use super::*;

/// Formats a number the way the canonical printer does: shortest decimal
/// representation that round-trips, never an exponent, always at least one
/// fractional digit (`80.0`, `0.25`, `-3.5`).
pub fn format_number(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && v.is_finite() {
        s.push_str(".0");
    }
    s
}

fn weather_kw(w: Weather) -> &'static str {
    match w {
        Weather::Clear => "clear",
        Weather::Rain => "rain",
        Weather::Fog => "fog",
    }
}

fn time_kw(t: TimeOfDay) -> &'static str {
    match t {
        TimeOfDay::Day => "day",
        TimeOfDay::Night => "night",
    }
}

fn list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    let parts: Vec<String> = items.iter().map(f).collect();
    format!("[{}]", parts.join(", "))
}

/// Canonical text form: one field per line, two-space indentation, every
/// field spelled out. Structurally equal scenarios print identically.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "scenario {} {{", s.name);

    let _ = writeln!(w, "  environment {{");
    let _ = writeln!(w, "    weather: {};", weather_kw(s.environment.weather));
    let _ = writeln!(w, "    time: {};", time_kw(s.environment.time_of_day));
    let _ = writeln!(w, "  }}");

    let _ = writeln!(w, "  road {{");
    let road_type = match s.road.road_type {
        RoadType::Straight => "straight",
        RoadType::Intersection => "intersection",
    };
    let _ = writeln!(w, "    type: {road_type};");
    let markers = list(&s.road.markers, |m| match m {
        Marker::SolidCenter => "solid_center".to_string(),
        Marker::DashedCenter => "dashed_center".to_string(),
        Marker::Crosswalk { position } => format!("crosswalk @ {}", format_number(*position)),
    });
    let _ = writeln!(w, "    markers: {markers};");
    let signs = list(&s.road.signs, |sg| {
        let kind = match sg.kind {
            SignKind::Stop => "stop".to_string(),
            SignKind::SpeedLimit(v) => format!("speed_limit({})", format_number(v)),
        };
        format!("{kind} @ {}", format_number(sg.position))
    });
    let _ = writeln!(w, "    signs: {signs};");
    let _ = writeln!(w, "  }}");

    let _ = writeln!(w, "  actors {{");
    let ego = &s.actors.ego;
    let _ = writeln!(w, "    ego {{");
    let _ = writeln!(w, "      position: {};", format_number(ego.start_position));
    let _ = writeln!(w, "      speed: {};", format_number(ego.start_speed));
    let controller = match &ego.controller {
        Controller::RuleFollower => "rule_follower".to_string(),
        Controller::Faulted(f) => {
            let guard = match f.guard {
                None => String::new(),
                Some(Guard::Weather(wt)) => format!(" if weather = {}", weather_kw(wt)),
                Some(Guard::Time(t)) => format!(" if time = {}", time_kw(t)),
            };
            format!("faulted({}{guard})", f.kind.keyword())
        }
    };
    let _ = writeln!(w, "      controller: {controller};");
    let _ = writeln!(w, "    }}");
    for npc in &s.actors.npcs {
        match npc {
            NpcSpec::Vehicle {
                id,
                start_position,
                start_speed,
                behavior,
            } => {
                let _ = writeln!(w, "    vehicle {id} {{");
                let _ = writeln!(w, "      position: {};", format_number(*start_position));
                let _ = writeln!(w, "      speed: {};", format_number(*start_speed));
                let b = match behavior {
                    NpcBehavior::Cruise => "cruise".to_string(),
                    NpcBehavior::BrakeAt(k) => format!("brake_at({k})"),
                    NpcBehavior::CutInAt(k) => format!("cut_in_at({k})"),
                };
                let _ = writeln!(w, "      behavior: {b};");
                let _ = writeln!(w, "    }}");
            }
            NpcSpec::Pedestrian {
                id,
                crossing_position,
                trigger_distance,
            } => {
                let _ = writeln!(w, "    pedestrian {id} {{");
                let _ = writeln!(w, "      crossing: {};", format_number(*crossing_position));
                let _ = writeln!(w, "      trigger: {};", format_number(*trigger_distance));
                let _ = writeln!(w, "    }}");
            }
        }
    }
    let _ = writeln!(w, "  }}");

    let _ = writeln!(w, "  oracle {{");
    let _ = writeln!(
        w,
        "    longitudinal: {};",
        list(&s.oracle.longitudinal, |c| c.to_string())
    );
    let _ = writeln!(w, "    lateral: {};", list(&s.oracle.lateral, |c| c.to_string()));
    let _ = writeln!(w, "  }}");
    let _ = writeln!(w, "}}");
    out
}
