//! Drafting scenarios from natural-language rules with a text-generation
//! provider, behind a parse / validate / dry-run gate with repair rounds.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{
    parse_scenario, validate_scenario_with, Scenario, ValidationReport, GRAMMAR_REFERENCE,
};
use crate::sim::SimConfig;

pub const PROMPT_TEMPLATE_VERSION: &str = "scenario-gen/1";
pub const ENV_ENDPOINT: &str = "CPSTEST_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "CPSTEST_LLM_API_KEY";
pub const ENV_MODEL: &str = "CPSTEST_LLM_MODEL";

/// Separator between scenarios in one reply.
const SEPARATOR: &str = "---";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub max_tokens: u32,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("mock script exhausted")]
    ScriptExhausted,
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("provider returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Decode(String),
}

pub trait Provider {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, ProviderError>;
}

/// Replays a fixed list of replies in order and records every prompt.
#[derive(Debug, Default)]
pub struct MockProvider {
    replies: Mutex<VecDeque<String>>,
    prompts: Mutex<Vec<(String, CompletionParams)>>,
}

impl MockProvider {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        MockProvider {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    /// Script format: a JSON array of reply strings.
    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        let replies: Vec<String> =
            serde_json::from_str(text).map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self::new(replies))
    }

    pub fn from_file(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn prompts(&self) -> Vec<(String, CompletionParams)> {
        self.prompts.lock().expect("mock lock").clone()
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().expect("mock lock").len()
    }
}

impl Provider for MockProvider {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, ProviderError> {
        self.prompts
            .lock()
            .expect("mock lock")
            .push((prompt.to_string(), *params));
        self.replies
            .lock()
            .expect("mock lock")
            .pop_front()
            .ok_or(ProviderError::ScriptExhausted)
    }
}

/// JSON over HTTP: request `{prompt, max_tokens, temperature, model}`,
/// response `{text}`.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub timeout: Duration,
}

#[derive(Serialize)]
struct HttpRequest<'a> {
    prompt: &'a str,
    max_tokens: u32,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
}

#[derive(Deserialize)]
struct HttpResponse {
    text: String,
}

impl HttpProvider {
    pub fn from_env() -> Result<Self, ProviderError> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| ProviderError::Config(format!("{ENV_ENDPOINT} is not set")))?;
        Ok(HttpProvider {
            endpoint,
            api_key: std::env::var(ENV_API_KEY).ok(),
            model: std::env::var(ENV_MODEL).ok(),
            timeout: Duration::from_secs(120),
        })
    }
}

impl Provider for HttpProvider {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let mut req = client.post(&self.endpoint).json(&HttpRequest {
            prompt,
            max_tokens: params.max_tokens,
            temperature: params.temperature,
            model: self.model.as_deref(),
        });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ProviderError::Status {
                status: status.as_u16(),
                body: resp.text().unwrap_or_default(),
            });
        }
        resp.json::<HttpResponse>()
            .map(|r| r.text)
            .map_err(|e| ProviderError::Decode(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay_ms: 1000,
        }
    }
}

/// Calls the provider up to `attempts` times, doubling the delay after each failure.
pub fn complete_with_retry(
    provider: &dyn Provider,
    prompt: &str,
    params: &CompletionParams,
    policy: &RetryPolicy,
) -> Result<String, ProviderError> {
    let mut delay = Duration::from_millis(policy.base_delay_ms);
    let mut attempt = 1;
    loop {
        match provider.complete(prompt, params) {
            Ok(text) => return Ok(text),
            Err(e) if attempt >= policy.attempts.max(1) => return Err(e),
            Err(_) => {
                std::thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
        }
    }
}

pub fn build_prompt(rule_text: &str, grammar_doc: &str, n: usize) -> String {
    format!(
        "[template {PROMPT_TEMPLATE_VERSION}]\n\
         You write test scenarios for an automated vehicle in a small scenario language.\n\n\
         Grammar reference:\n{grammar_doc}\n\
         Traffic rules:\n<<<\n{rule_text}\n>>>\n\n\
         Write exactly {n} scenario(s) that exercise these rules. Reply with scenario text only \
         and put a line containing only {SEPARATOR} between scenarios.\n"
    )
}

pub fn build_repair_prompt(
    rule_text: &str,
    grammar_doc: &str,
    candidate: &str,
    report: &ValidationReport,
) -> String {
    let diagnostics: Vec<String> = report.errors().map(|d| format!("- {d}")).collect();
    format!(
        "[template {PROMPT_TEMPLATE_VERSION}/repair]\n\
         The scenario below was rejected by the validator.\n\n\
         Grammar reference:\n{grammar_doc}\n\
         Traffic rules:\n<<<\n{rule_text}\n>>>\n\n\
         Scenario:\n<<<\n{candidate}\n>>>\n\n\
         Diagnostics:\n{}\n\n\
         Reply with the corrected scenario text only.\n",
        diagnostics.join("\n")
    )
}

/// Drops markdown fences and splits on separator lines; blank chunks are skipped.
pub fn split_candidates(reply: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for line in reply.lines() {
        if line.trim_start().starts_with("```") {
            continue;
        }
        if line.trim() == SEPARATOR {
            out.push(std::mem::take(&mut cur));
            continue;
        }
        cur.push_str(line);
        cur.push('\n');
    }
    out.push(cur);
    out.retain(|c| !c.trim().is_empty());
    out
}

/// Parse, semantic validation and dry run, in that order.
pub fn check_candidate(text: &str, sim: &SimConfig) -> Result<Scenario, ValidationReport> {
    let s = parse_scenario(text).map_err(|e| ValidationReport::syntax(&e))?;
    let report = validate_scenario_with(&s, true, sim);
    if report.is_valid() {
        Ok(s)
    } else {
        Err(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub max_repair_rounds: usize,
    pub max_tokens: u32,
    pub temperature: f64,
    pub repair_temperature: f64,
    pub retry: RetryPolicy,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            max_repair_rounds: 3,
            max_tokens: 2048,
            temperature: 0.7,
            repair_temperature: 0.0,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationJob {
    pub rule_text: String,
    pub count: usize,
    pub config: LlmConfig,
}

impl GenerationJob {
    pub fn new(rule_text: impl Into<String>, count: usize) -> Self {
        GenerationJob {
            rule_text: rule_text.into(),
            count,
            config: LlmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub template_version: String,
    pub candidate: usize,
    /// Raw provider texts, first draft then one per repair round.
    pub texts: Vec<String>,
    pub repair_round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accepted {
    pub scenario: Scenario,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejected {
    pub raw: String,
    pub report: ValidationReport,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GenerationResult {
    pub accepted: Vec<Accepted>,
    pub rejected: Vec<Rejected>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("generation aborted: {source}")]
    Aborted {
        source: ProviderError,
        partial: Box<GenerationResult>,
    },
}

/// Drafts `job.count` candidates and sends each failing one back with its
/// diagnostics for at most `max_repair_rounds` rounds. Candidates are
/// handled one after another so scripted providers see a fixed order.
pub fn generate_scenarios(
    job: &GenerationJob,
    provider: &dyn Provider,
    sim: &SimConfig,
) -> Result<GenerationResult, GenerationError> {
    if job.count == 0 {
        return Err(GenerationError::InvalidJob("count must be at least 1".into()));
    }
    if job.rule_text.trim().is_empty() {
        return Err(GenerationError::InvalidJob("rule text is empty".into()));
    }
    let cfg = &job.config;
    let draft = CompletionParams {
        max_tokens: cfg.max_tokens,
        temperature: cfg.temperature,
    };
    let repair = CompletionParams {
        max_tokens: cfg.max_tokens,
        temperature: cfg.repair_temperature,
    };
    let mut result = GenerationResult::default();
    let abort = |source, partial: &GenerationResult| GenerationError::Aborted {
        source,
        partial: Box::new(partial.clone()),
    };

    let mut drafts: Vec<String> = Vec::new();
    while drafts.len() < job.count {
        let prompt = build_prompt(&job.rule_text, GRAMMAR_REFERENCE, job.count - drafts.len());
        let reply = complete_with_retry(provider, &prompt, &draft, &cfg.retry)
            .map_err(|e| abort(e, &result))?;
        let mut chunks = split_candidates(&reply);
        if chunks.is_empty() {
            chunks.push(reply);
        }
        drafts.extend(chunks);
    }
    drafts.truncate(job.count);

    for (candidate, first) in drafts.into_iter().enumerate() {
        let mut texts = vec![first];
        let mut round = 0;
        loop {
            let text = texts.last().expect("nonempty");
            let provenance = |texts: &Vec<String>| Provenance {
                template_version: PROMPT_TEMPLATE_VERSION.to_string(),
                candidate,
                texts: texts.clone(),
                repair_round: round,
            };
            match check_candidate(text, sim) {
                Ok(scenario) => {
                    result.accepted.push(Accepted {
                        scenario,
                        provenance: provenance(&texts),
                    });
                    break;
                }
                Err(report) if round >= cfg.max_repair_rounds => {
                    result.rejected.push(Rejected {
                        raw: text.clone(),
                        report,
                        provenance: provenance(&texts),
                    });
                    break;
                }
                Err(report) => {
                    let prompt =
                        build_repair_prompt(&job.rule_text, GRAMMAR_REFERENCE, text, &report);
                    let reply = complete_with_retry(provider, &prompt, &repair, &cfg.retry)
                        .map_err(|e| abort(e, &result))?;
                    let fixed = split_candidates(&reply).into_iter().next().unwrap_or(reply);
                    texts.push(fixed);
                    round += 1;
                }
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{serialize_scenario, Stage};

    const RULE: &str = "Drivers must come to a complete stop at a stop sign.";

    fn valid() -> String {
        "scenario stop {
  environment { weather: clear; time: day; }
  road { type: straight; markers: []; signs: [stop @ 80.0]; }
  actors { ego { position: 0.0; speed: 10.0; controller: rule_follower; } }
  oracle { longitudinal: [no_collision, stop_at_sign(0.5)]; lateral: []; }
}"
        .to_string()
    }

    fn fast(count: usize) -> GenerationJob {
        let mut job = GenerationJob::new(RULE, count);
        job.config.retry.base_delay_ms = 0;
        job
    }

    #[test]
    fn prompt_contract() {
        let p = build_prompt(RULE, GRAMMAR_REFERENCE, 4);
        assert!(p.contains(RULE));
        for kw in ["environment", "road", "actors", "oracle"] {
            assert!(p.contains(kw));
        }
        assert!(p.contains("exactly 4 scenario"));
        assert!(p.contains(PROMPT_TEMPLATE_VERSION));
        assert_eq!(p, build_prompt(RULE, GRAMMAR_REFERENCE, 4));
    }

    #[test]
    fn repaired_after_one_round() {
        let mock = MockProvider::new(["scenario broken {".to_string(), valid()]);
        let r = generate_scenarios(&fast(1), &mock, &SimConfig::default()).unwrap();
        assert_eq!(r.accepted.len(), 1);
        let p = &r.accepted[0].provenance;
        assert_eq!(p.repair_round, 1);
        assert_eq!(p.texts, vec!["scenario broken {\n".to_string(), valid() + "\n"]);
        let (_, params) = &mock.prompts()[1];
        assert_eq!(params.temperature, 0.0);
    }

    #[test]
    fn garbage_rejected_at_syntax_stage() {
        let mock = MockProvider::new(vec!["no idea"; 4]);
        let r = generate_scenarios(&fast(1), &mock, &SimConfig::default()).unwrap();
        assert!(r.accepted.is_empty());
        let d = &r.rejected[0].report.diagnostics[0];
        assert_eq!(d.stage, Stage::Syntax);
        assert_eq!(r.rejected[0].provenance.texts.len(), 4);
    }

    #[test]
    fn missing_sign_rejected_semantically_and_fed_back() {
        let bad = valid().replace("signs: [stop @ 80.0]", "signs: []");
        let mock = MockProvider::new(vec![bad; 4]);
        let r = generate_scenarios(&fast(1), &mock, &SimConfig::default()).unwrap();
        let report = &r.rejected[0].report;
        assert_eq!(report.diagnostics[0].stage, Stage::Semantic);
        let msg = &report.diagnostics[0].message;
        assert!(msg.contains("missing sign"));
        assert!(mock.prompts()[1].0.contains(msg.as_str()));
    }

    #[test]
    fn several_candidates_from_one_reply() {
        let two = format!("```\n{}\n---\n{}\n```", valid(), valid().replace("stop {", "stop2 {"));
        let mock = MockProvider::new([two]);
        let r = generate_scenarios(&fast(2), &mock, &SimConfig::default()).unwrap();
        assert_eq!(r.accepted.len(), 2);
        assert_eq!(r.accepted[1].scenario.name, "stop2");
        assert!(r.accepted.iter().all(|a| {
            crate::dsl::validate_scenario(&a.scenario, true).is_valid()
                && parse_scenario(&serialize_scenario(&a.scenario)).unwrap() == a.scenario
        }));
    }

    #[test]
    fn exhausted_script_aborts_with_partial_results() {
        let mock = MockProvider::new([format!("{}\n---\nbroken", valid())]);
        let err = generate_scenarios(&fast(2), &mock, &SimConfig::default()).unwrap_err();
        match err {
            GenerationError::Aborted { source, partial } => {
                assert_eq!(source, ProviderError::ScriptExhausted);
                assert_eq!(partial.accepted.len(), 1);
            }
            e => panic!("unexpected {e:?}"),
        }
        // first attempt plus two retries
        assert_eq!(mock.prompts().len(), 4);
    }

    #[test]
    fn script_parses_from_json() {
        let m = MockProvider::from_json(r#"["a", "b"]"#).unwrap();
        assert_eq!(m.remaining(), 2);
        assert!(MockProvider::from_json("{}").is_err());
    }
}
