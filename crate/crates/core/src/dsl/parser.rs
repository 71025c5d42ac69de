use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::lexer::{tokenize, Tok, Token};
use super::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub span: Span,
    /// Tokens or keywords that would have been accepted here.
    pub expected: Vec<String>,
    pub found: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

type PResult<T> = Result<T, ParseError>;

/// Parses `.scn` text into a [`Scenario`].
///
/// Blocks must appear exactly once and in the order environment, road,
/// actors, oracle. Unknown keywords and enum values are errors.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let toks = tokenize(text).map_err(|e| ParseError {
        line: e.span.line,
        column: e.span.column,
        span: e.span,
        expected: Vec::new(),
        found: text.get(e.span.start..e.span.end).unwrap_or("").to_string(),
        message: e.message,
    })?;
    let mut p = Parser {
        toks,
        pos: 0,
        spans: SourceMap::default(),
    };
    p.scenario()
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    spans: SourceMap,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, tok: &Token, expected: &[&str], message: impl Into<String>) -> ParseError {
        ParseError {
            line: tok.span.line,
            column: tok.span.column,
            span: tok.span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.tok.describe(),
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let tok = self.peek().clone();
        let message = format!("unexpected {}", tok.tok.describe());
        self.error_at(&tok, expected, message)
    }

    fn expect(&mut self, want: Tok) -> PResult<Span> {
        if self.peek().tok == want {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&want.describe()]))
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if &self.peek().tok == want {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump().span))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<Span> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => Ok(self.bump().span),
            _ => {
                let tok = self.peek().clone();
                let msg = format!("expected `{kw}`, found {}", tok.tok.describe());
                Err(self.error_at(&tok, &[kw], msg))
            }
        }
    }

    /// Reads an identifier that must be one of `choices`.
    fn choice(&mut self, what: &str, choices: &[&str]) -> PResult<(String, Span)> {
        match &self.peek().tok {
            Tok::Ident(s) if choices.contains(&s.as_str()) => {
                let s = s.clone();
                Ok((s, self.bump().span))
            }
            _ => {
                let tok = self.peek().clone();
                let msg = format!("unknown {what} {}", tok.tok.describe());
                Err(self.error_at(&tok, choices, msg))
            }
        }
    }

    fn number(&mut self) -> PResult<f64> {
        match &self.peek().tok {
            Tok::Number(n) => {
                let v: f64 = n.parse().expect("lexer only emits well-formed numbers");
                self.bump();
                Ok(v)
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    fn step_index(&mut self) -> PResult<u32> {
        let tok = self.peek().clone();
        match &tok.tok {
            Tok::Number(n) => match n.parse::<u32>() {
                Ok(v) => {
                    self.bump();
                    Ok(v)
                }
                Err(_) => Err(self.error_at(&tok, &["step index"], "expected a non-negative integer step")),
            },
            _ => Err(self.unexpected(&["step index"])),
        }
    }

    fn paren_number(&mut self) -> PResult<f64> {
        self.expect(Tok::LParen)?;
        let v = self.number()?;
        self.expect(Tok::RParen)?;
        Ok(v)
    }

    /// `[ item, item, ... ]`
    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<(T, Span)>> {
        self.expect(Tok::LBracket)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBracket) {
            return Ok(out);
        }
        loop {
            let start = self.peek().span;
            let v = item(self)?;
            let end = self.toks[self.pos.saturating_sub(1)].span;
            out.push((v, start.to(end)));
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(Tok::RBracket)?;
            return Ok(out);
        }
    }

    /// `{ key: value; ... }` with each key at most once.
    fn fields(
        &mut self,
        allowed: &[&str],
        mut value: impl FnMut(&mut Self, &str, Span) -> PResult<()>,
    ) -> PResult<Span> {
        let open = self.expect(Tok::LBrace)?;
        let mut seen = BTreeSet::new();
        loop {
            if self.peek().tok == Tok::RBrace {
                let close = self.bump().span;
                return Ok(open.to(close));
            }
            let tok = self.peek().clone();
            let (key, span) = match &tok.tok {
                Tok::Ident(k) if allowed.contains(&k.as_str()) => {
                    let k = k.clone();
                    (k, self.bump().span)
                }
                _ => {
                    let mut exp: Vec<&str> = allowed.to_vec();
                    exp.push("`}`");
                    let msg = format!("unknown field {}", tok.tok.describe());
                    return Err(self.error_at(&tok, &exp, msg));
                }
            };
            if !seen.insert(key.clone()) {
                return Err(self.error_at(&tok, &[], format!("duplicate field `{key}`")));
            }
            self.expect(Tok::Colon)?;
            value(self, &key, span)?;
            self.expect(Tok::Semi)?;
        }
    }

    fn scenario(&mut self) -> PResult<Scenario> {
        let start = self.keyword("scenario")?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LBrace)?;

        let env_kw = self.keyword("environment")?;
        let (environment, env_span) = self.environment()?;
        self.spans.insert("environment", env_kw.to(env_span));

        let road_kw = self.keyword("road")?;
        let (road, road_span) = self.road()?;
        self.spans.insert("road", road_kw.to(road_span));

        let actors_kw = self.keyword("actors")?;
        let (actors, actors_span) = self.actors()?;
        self.spans.insert("actors", actors_kw.to(actors_span));

        let oracle_kw = self.keyword("oracle")?;
        let (oracle, oracle_span) = self.oracle()?;
        self.spans.insert("oracle", oracle_kw.to(oracle_span));

        let end = self.expect(Tok::RBrace)?;
        self.expect(Tok::Eof)?;
        self.spans.insert("scenario", start.to(end));

        Ok(Scenario {
            name,
            environment,
            road,
            actors,
            oracle,
            spans: std::mem::take(&mut self.spans),
        })
    }

    fn environment(&mut self) -> PResult<(Environment, Span)> {
        let mut env = Environment::default();
        let span = self.fields(&["weather", "time"], |p, key, kspan| {
            match key {
                "weather" => {
                    let (w, _) = p.choice("weather", &["clear", "rain", "fog"])?;
                    env.weather = weather_of(&w);
                }
                _ => {
                    let (t, _) = p.choice("time of day", &["day", "night"])?;
                    env.time_of_day = time_of(&t);
                }
            }
            p.spans.insert(format!("environment.{key}"), kspan);
            Ok(())
        })?;
        Ok((env, span))
    }

    fn road(&mut self) -> PResult<(RoadNetwork, Span)> {
        let mut road = RoadNetwork::default();
        let span = self.fields(&["type", "markers", "signs"], |p, key, kspan| {
            p.spans.insert(format!("road.{key}"), kspan);
            match key {
                "type" => {
                    let (t, _) = p.choice("road type", &["straight", "intersection"])?;
                    road.road_type = if t == "straight" {
                        RoadType::Straight
                    } else {
                        RoadType::Intersection
                    };
                }
                "markers" => {
                    let items = p.list(|p| {
                        let (m, _) =
                            p.choice("road marker", &["solid_center", "dashed_center", "crosswalk"])?;
                        Ok(match m.as_str() {
                            "solid_center" => Marker::SolidCenter,
                            "dashed_center" => Marker::DashedCenter,
                            _ => {
                                p.expect(Tok::At)?;
                                Marker::Crosswalk {
                                    position: p.number()?,
                                }
                            }
                        })
                    })?;
                    for (i, (m, s)) in items.into_iter().enumerate() {
                        p.spans.insert(format!("road.markers[{i}]"), s);
                        road.markers.push(m);
                    }
                }
                _ => {
                    let items = p.list(|p| {
                        let (k, _) = p.choice("sign kind", &["stop", "speed_limit"])?;
                        let kind = if k == "stop" {
                            SignKind::Stop
                        } else {
                            SignKind::SpeedLimit(p.paren_number()?)
                        };
                        p.expect(Tok::At)?;
                        Ok(Sign {
                            kind,
                            position: p.number()?,
                        })
                    })?;
                    for (i, (s, span)) in items.into_iter().enumerate() {
                        p.spans.insert(format!("road.signs[{i}]"), span);
                        road.signs.push(s);
                    }
                }
            }
            Ok(())
        })?;
        Ok((road, span))
    }

    fn actors(&mut self) -> PResult<(ActorSet, Span)> {
        let open = self.expect(Tok::LBrace)?;
        let mut actors = ActorSet::default();
        let mut saw_ego = false;
        loop {
            let tok = self.peek().clone();
            match &tok.tok {
                Tok::RBrace => {
                    let close = self.bump().span;
                    return Ok((actors, open.to(close)));
                }
                Tok::Ident(kw) if kw == "ego" => {
                    if saw_ego {
                        return Err(self.error_at(&tok, &[], "duplicate `ego` block"));
                    }
                    saw_ego = true;
                    self.bump();
                    let (ego, span) = self.ego()?;
                    self.spans.insert("actors.ego", tok.span.to(span));
                    actors.ego = ego;
                }
                Tok::Ident(kw) if kw == "vehicle" || kw == "pedestrian" => {
                    let vehicle = kw == "vehicle";
                    self.bump();
                    let (id, _) = self.ident()?;
                    let (npc, span) = if vehicle {
                        self.vehicle(id)?
                    } else {
                        self.pedestrian(id)?
                    };
                    let idx = actors.npcs.len();
                    self.spans.insert(format!("actors.npcs[{idx}]"), tok.span.to(span));
                    actors.npcs.push(npc);
                }
                _ => {
                    let msg = format!("unexpected {} in actors block", tok.tok.describe());
                    return Err(self.error_at(&tok, &["ego", "vehicle", "pedestrian", "`}`"], msg));
                }
            }
        }
    }

    fn ego(&mut self) -> PResult<(EgoSpec, Span)> {
        let mut ego = EgoSpec::default();
        let span = self.fields(&["position", "speed", "controller"], |p, key, _| {
            match key {
                "position" => ego.start_position = p.number()?,
                "speed" => ego.start_speed = p.number()?,
                _ => ego.controller = p.controller()?,
            }
            Ok(())
        })?;
        Ok((ego, span))
    }

    fn controller(&mut self) -> PResult<Controller> {
        let (c, _) = self.choice("controller", &["rule_follower", "faulted"])?;
        if c == "rule_follower" {
            return Ok(Controller::RuleFollower);
        }
        self.expect(Tok::LParen)?;
        let kinds: Vec<&str> = FaultKind::ALL.iter().map(|k| k.keyword()).collect();
        let (k, _) = self.choice("fault kind", &kinds)?;
        let kind = FaultKind::ALL
            .into_iter()
            .find(|f| f.keyword() == k)
            .expect("choice restricted to fault keywords");
        let guard = if matches!(&self.peek().tok, Tok::Ident(s) if s == "if") {
            self.bump();
            let (field, _) = self.choice("guard field", &["weather", "time"])?;
            self.expect(Tok::Eq)?;
            Some(if field == "weather" {
                let (w, _) = self.choice("weather", &["clear", "rain", "fog"])?;
                Guard::Weather(weather_of(&w))
            } else {
                let (t, _) = self.choice("time of day", &["day", "night"])?;
                Guard::Time(time_of(&t))
            })
        } else {
            None
        };
        self.expect(Tok::RParen)?;
        Ok(Controller::Faulted(FaultSpec { kind, guard }))
    }

    fn vehicle(&mut self, id: String) -> PResult<(NpcSpec, Span)> {
        let mut position = None;
        let mut speed = 0.0;
        let mut behavior = NpcBehavior::Cruise;
        let span = self.fields(&["position", "speed", "behavior"], |p, key, _| {
            match key {
                "position" => position = Some(p.number()?),
                "speed" => speed = p.number()?,
                _ => {
                    let (b, _) = p.choice("behavior", &["cruise", "brake_at", "cut_in_at"])?;
                    behavior = match b.as_str() {
                        "cruise" => NpcBehavior::Cruise,
                        "brake_at" => {
                            p.expect(Tok::LParen)?;
                            let k = p.step_index()?;
                            p.expect(Tok::RParen)?;
                            NpcBehavior::BrakeAt(k)
                        }
                        _ => {
                            p.expect(Tok::LParen)?;
                            let k = p.step_index()?;
                            p.expect(Tok::RParen)?;
                            NpcBehavior::CutInAt(k)
                        }
                    };
                }
            }
            Ok(())
        })?;
        let start_position = position.ok_or_else(|| self.missing_field("position", span))?;
        Ok((
            NpcSpec::Vehicle {
                id,
                start_position,
                start_speed: speed,
                behavior,
            },
            span,
        ))
    }

    fn pedestrian(&mut self, id: String) -> PResult<(NpcSpec, Span)> {
        let mut crossing = None;
        let mut trigger = None;
        let span = self.fields(&["crossing", "trigger"], |p, key, _| {
            match key {
                "crossing" => crossing = Some(p.number()?),
                _ => trigger = Some(p.number()?),
            }
            Ok(())
        })?;
        let crossing_position = crossing.ok_or_else(|| self.missing_field("crossing", span))?;
        let trigger_distance = trigger.ok_or_else(|| self.missing_field("trigger", span))?;
        Ok((
            NpcSpec::Pedestrian {
                id,
                crossing_position,
                trigger_distance,
            },
            span,
        ))
    }

    fn missing_field(&self, field: &str, block: Span) -> ParseError {
        ParseError {
            line: block.line,
            column: block.column,
            span: block,
            expected: vec![field.to_string()],
            found: "`}`".into(),
            message: format!("missing field `{field}`"),
        }
    }

    fn oracle(&mut self) -> PResult<(OracleSpec, Span)> {
        let mut longitudinal = None;
        let mut lateral = None;
        let span = self.fields(&["longitudinal", "lateral"], |p, key, _| {
            let items = p.list(|p| p.clause())?;
            let mut clauses = Vec::new();
            for (i, (c, s)) in items.into_iter().enumerate() {
                p.spans.insert(format!("oracle.{key}[{i}]"), s);
                clauses.push(c);
            }
            if key == "longitudinal" {
                longitudinal = Some(clauses);
            } else {
                lateral = Some(clauses);
            }
            Ok(())
        })?;
        let spec = match (longitudinal, lateral) {
            (None, None) => OracleSpec::default(),
            (l, r) => OracleSpec {
                longitudinal: l.unwrap_or_default(),
                lateral: r.unwrap_or_default(),
            },
        };
        Ok((spec, span))
    }

    fn clause(&mut self) -> PResult<OracleClause> {
        let (c, _) = self.choice(
            "oracle clause",
            &["no_collision", "stop_at_sign", "yield_to_pedestrian", "speed_below"],
        )?;
        Ok(match c.as_str() {
            "no_collision" => OracleClause::NoCollision,
            "stop_at_sign" => OracleClause::StopAtSign {
                max_overshoot: self.paren_number()?,
            },
            "speed_below" => OracleClause::SpeedBelow {
                limit: self.paren_number()?,
            },
            _ => {
                let target = if self.eat(&Tok::LParen) {
                    let (id, _) = self.ident()?;
                    self.expect(Tok::RParen)?;
                    Some(id)
                } else {
                    None
                };
                OracleClause::YieldToPedestrian { target }
            }
        })
    }
}

fn weather_of(s: &str) -> Weather {
    match s {
        "rain" => Weather::Rain,
        "fog" => Weather::Fog,
        _ => Weather::Clear,
    }
}

fn time_of(s: &str) -> TimeOfDay {
    if s == "night" {
        TimeOfDay::Night
    } else {
        TimeOfDay::Day
    }
}
