//! Command-line front end.
//!
//! Exit codes: 0 when the command ran and found nothing wrong, 2 when it
//! ran and found something (invalid scenario, failing verdict, violated
//! monitor, counterexamples), 1 on operational errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::abstraction::{oracle_formula, simulate_labeled, Label, LabeledTrace, PredicateSet};
use crate::config::PipelineConfig;
use crate::dsl::{parse_scenario, serialize_scenario, validate_scenario_with, Scenario, ValidationReport};
use crate::fuzz::{fuzz, fuzz_alphabet, FuzzInput, FuzzReport};
use crate::llm::{generate_scenarios, GenerationError, GenerationJob, GenerationResult, HttpProvider, MockProvider, Provider};
use crate::lstar::{learn, CachedTeacher, Dfa, LstarError, SimulatorTeacher};
use crate::ltl::{learn_minimal, Formula, FormulaArtifact, TraceSample};
use crate::monitor::{Classification, MonitorAutomaton, Traversal};
use crate::sim::{parse_word, Event, Trace, Verdict};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FOUND: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cpstest", version, about = "Formal testing toolkit for learning-enabled CPS")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized stage; overrides the config file.
    #[arg(long, global = true)]
    pub rng_seed: Option<u64>,
    /// No progress messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Output file, or directory for `gen` and `pipeline`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProviderKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TraversalArg {
    Dfs,
    Bfs,
    RandomWalk,
}

impl From<TraversalArg> for Traversal {
    fn from(t: TraversalArg) -> Self {
        match t {
            TraversalArg::Dfs => Traversal::Dfs,
            TraversalArg::Bfs => Traversal::Bfs,
            TraversalArg::RandomWalk => Traversal::RandomWalk,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a scenario and print its canonical form.
    Parse {
        file: PathBuf,
        /// Print the syntax tree as JSON instead.
        #[arg(long)]
        json: bool,
    },
    /// Check a scenario; prints the validation report as JSON.
    Validate {
        file: PathBuf,
        #[arg(long)]
        dry_run: bool,
    },
    /// Run a scenario under an event word.
    Simulate {
        file: PathBuf,
        /// Comma-separated events, e.g. `NONE,PED_CROSS(p1)`.
        #[arg(long, default_value = "")]
        word: String,
    },
    /// Draft scenarios from a rule text with a provider.
    Gen {
        #[arg(long)]
        rules: PathBuf,
        #[arg(short = 'n', long = "count", default_value_t = 1)]
        count: usize,
        #[arg(long, value_enum, default_value = "mock")]
        provider: ProviderKind,
        /// Reply script for the mock provider (JSON array of strings).
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Learn a DFA of the passing event words of a scenario.
    LearnDfa {
        scenario: PathBuf,
        /// Membership cache, loaded if present and saved afterwards.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        eq_budget: Option<usize>,
        #[arg(long)]
        max_rounds: Option<usize>,
    },
    /// Learn a minimal LTLf formula separating labeled traces.
    LearnLtl {
        /// Directory of labeled trace JSON files.
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        max_size: Option<usize>,
    },
    /// Run the progression monitor of a formula over one trace.
    MonitorCheck {
        /// Formula JSON artifact, formula text file, or inline formula text.
        #[arg(long)]
        formula: String,
        /// Labeled trace JSON.
        #[arg(long, conflicts_with = "scenario")]
        trace: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "")]
        word: String,
    },
    /// Coverage-guided fuzzing from a directory of seed scenarios.
    Fuzz {
        /// Directory of `.scn` files; an optional `<name>.word` holds the seed word.
        #[arg(long)]
        seeds: PathBuf,
        /// Defaults to the oracle formula of the first seed.
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, value_enum)]
        traversal: Option<TraversalArg>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        stop_on_first: bool,
    },
    /// Generate (optional), label, learn, monitor and fuzz.
    Pipeline {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long, value_enum, default_value = "mock")]
        provider: ProviderKind,
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(short = 'n', long = "count", default_value_t = 1)]
        count: usize,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Render a DFA or formula artifact as a DOT graph.
    ExportDot { artifact: PathBuf },
}

#[derive(Debug)]
pub struct CliError {
    pub stage: String,
    pub message: String,
}

impl CliError {
    fn new(stage: &str, message: impl std::fmt::Display) -> Self {
        CliError {
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn at<E: std::fmt::Display>(stage: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::new(stage, e)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_CLEAN };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {}", e.stage, e.message);
            EXIT_ERROR
        }
    }
}

struct Ctx {
    cfg: PipelineConfig,
    quiet: bool,
    out: Option<PathBuf>,
}

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    /// Writes to `--out` or stdout.
    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.out {
            Some(p) => write_file(p, text),
            None => {
                print!("{text}");
                if !text.ends_with('\n') {
                    println!();
                }
                Ok(())
            }
        }
    }

    fn artifact<T: Serialize>(&self, body: &T) -> String {
        artifact_json(&self.cfg, body)
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a PipelineConfig,
    rng_seeds: RngSeeds,
}

#[derive(Serialize)]
struct RngSeeds {
    lstar: u64,
    fuzz: u64,
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    provenance: Provenance<'a>,
    #[serde(flatten)]
    body: &'a T,
}

/// `body`'s JSON with a `provenance` object (tool version, resolved
/// config, seeds) merged in.
pub fn artifact_json<T: Serialize>(cfg: &PipelineConfig, body: &T) -> String {
    let a = Artifact {
        provenance: Provenance {
            tool: "cpstest",
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            rng_seeds: RngSeeds {
                lstar: cfg.lstar.rng_seed,
                fuzz: cfg.fuzz.rng_seed,
            },
        },
        body,
    };
    let mut s = serde_json::to_string_pretty(&a).expect("artifact serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::new("io", format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))
}

fn read_file(path: &Path, stage: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::new(stage, format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = read_file(path, "parse")?;
    parse_scenario(&text).map_err(|e| CliError::new("parse", format!("{}:{e}", path.display())))
}

/// `.scn` files of a directory in name order.
fn scenario_files(dir: &Path, stage: &str) -> CliResult<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| CliError::new(stage, format!("{}: {e}", dir.display())))?;
    let mut out: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(CliError::new(stage, format!("no .scn files in {}", dir.display())));
    }
    Ok(out)
}

/// Formula JSON artifact, formula text file, or inline text.
pub fn load_formula(spec: &str) -> Result<Formula, String> {
    let names = PredicateSet::names();
    let path = Path::new(spec);
    let text = if path.is_file() {
        fs::read_to_string(path).map_err(|e| format!("{spec}: {e}"))?
    } else {
        spec.to_string()
    };
    if text.trim_start().starts_with('{') {
        let a: FormulaArtifact = serde_json::from_str(&text).map_err(|e| format!("{spec}: {e}"))?;
        return Ok(a.ast);
    }
    Formula::parse(text.trim(), &names).map_err(|e| e.to_string())
}

fn load_labeled(path: &Path) -> CliResult<LabeledTrace> {
    let text = read_file(path, "load")?;
    serde_json::from_str(&text).map_err(|e| CliError::new("load", format!("{}: {e}", path.display())))
}

fn load_seeds(dir: &Path, cfg: &PipelineConfig) -> CliResult<Vec<FuzzInput>> {
    let mut seeds = Vec::new();
    for p in scenario_files(dir, "load")? {
        let s = load_scenario(&p)?;
        let report = validate_scenario_with(&s, false, &cfg.simulator);
        if !report.is_valid() {
            let d = report.errors().next().map(|d| d.to_string()).unwrap_or_default();
            return Err(CliError::new("validate", format!("{}:{d}", p.display())));
        }
        let word_path = p.with_extension("word");
        let word = if word_path.is_file() {
            parse_word(read_file(&word_path, "load")?.trim()).map_err(at("load"))?
        } else {
            Vec::new()
        };
        seeds.push(FuzzInput::new(s, word));
    }
    Ok(seeds)
}

fn execute(cli: Cli) -> CliResult<i32> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(at("config"))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.rng_seed {
        cfg.set_rng_seed(seed);
    }
    let mut ctx = Ctx {
        cfg,
        quiet: cli.quiet,
        out: cli.out,
    };
    match cli.command {
        Command::Parse { file, json } => cmd_parse(&ctx, &file, json),
        Command::Validate { file, dry_run } => cmd_validate(&ctx, &file, dry_run),
        Command::Simulate { file, word } => cmd_simulate(&ctx, &file, &word),
        Command::Gen {
            rules,
            count,
            provider,
            script,
        } => {
            let out = ctx.out.clone().unwrap_or_else(|| PathBuf::from("seeds"));
            cmd_gen(&ctx, &rules, count, provider, script.as_deref(), &out).map(|_| EXIT_CLEAN)
        }
        Command::LearnDfa {
            scenario,
            cache,
            eq_budget,
            max_rounds,
        } => {
            if let Some(b) = eq_budget {
                ctx.cfg.lstar.eq_budget = b;
            }
            if let Some(r) = max_rounds {
                ctx.cfg.lstar.max_rounds = r;
            }
            cmd_learn_dfa(&ctx, &scenario, cache.as_deref())
        }
        Command::LearnLtl { traces, max_size } => {
            if let Some(m) = max_size {
                ctx.cfg.sat.max_size = m;
            }
            cmd_learn_ltl(&ctx, &traces)
        }
        Command::MonitorCheck {
            formula,
            trace,
            scenario,
            word,
        } => cmd_monitor_check(&ctx, &formula, trace.as_deref(), scenario.as_deref(), &word),
        Command::Fuzz {
            seeds,
            formula,
            budget,
            traversal,
            workers,
            stop_on_first,
        } => {
            apply_fuzz_flags(&mut ctx.cfg, budget, traversal, workers, stop_on_first);
            ctx.cfg.check().map_err(at("config"))?;
            cmd_fuzz(&ctx, &seeds, formula.as_deref())
        }
        Command::Pipeline {
            scenarios,
            rules,
            formula,
            provider,
            script,
            count,
            budget,
        } => {
            apply_fuzz_flags(&mut ctx.cfg, budget, None, None, false);
            ctx.cfg.check().map_err(at("config"))?;
            let out = ctx.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let gen = rules.map(|r| (r, provider, script, count));
            cmd_pipeline(&ctx, &scenarios, gen, formula.as_deref(), &out)
        }
        Command::ExportDot { artifact } => cmd_export_dot(&ctx, &artifact),
    }
}

fn apply_fuzz_flags(
    cfg: &mut PipelineConfig,
    budget: Option<usize>,
    traversal: Option<TraversalArg>,
    workers: Option<usize>,
    stop_on_first: bool,
) {
    if let Some(b) = budget {
        cfg.fuzz.budget = b;
    }
    if let Some(t) = traversal {
        cfg.fuzz.traversal = t.into();
    }
    if workers.is_some() {
        cfg.fuzz.workers = workers;
    }
    cfg.fuzz.stop_on_first |= stop_on_first;
}

fn cmd_parse(ctx: &Ctx, file: &Path, json: bool) -> CliResult<i32> {
    let text = read_file(file, "parse")?;
    match parse_scenario(&text) {
        Ok(s) if json => {
            ctx.emit(&serde_json::to_string_pretty(&s).expect("scenario serializes"))?;
            Ok(EXIT_CLEAN)
        }
        Ok(s) => {
            ctx.emit(&serialize_scenario(&s))?;
            Ok(EXIT_CLEAN)
        }
        Err(e) => {
            eprintln!("{}:{e}", file.display());
            Ok(EXIT_FOUND)
        }
    }
}

fn cmd_validate(ctx: &Ctx, file: &Path, dry_run: bool) -> CliResult<i32> {
    let text = read_file(file, "validate")?;
    let report = match parse_scenario(&text) {
        Ok(s) => validate_scenario_with(&s, dry_run, &ctx.cfg.simulator),
        Err(e) => ValidationReport::syntax(&e),
    };
    for d in &report.diagnostics {
        ctx.say(format!("{}:{d}", file.display()));
    }
    ctx.emit(&report.to_json())?;
    Ok(if report.is_valid() { EXIT_CLEAN } else { EXIT_FOUND })
}

#[derive(Serialize)]
struct SimulationOutput {
    trace: Trace,
    verdict: Verdict,
    abstraction: LabeledTrace,
}

fn cmd_simulate(ctx: &Ctx, file: &Path, word: &str) -> CliResult<i32> {
    let s = load_scenario(file)?;
    let word = parse_word(word).map_err(at("simulate"))?;
    let (trace, verdict, abstraction) =
        simulate_labeled(&s, &word, &ctx.cfg.simulator).map_err(at("simulate"))?;
    let passed = verdict.passed();
    for v in &verdict.violated_clauses {
        ctx.say(format!("violated {} at step {}", v.clause, v.first_violation_step));
    }
    ctx.emit(&ctx.artifact(&SimulationOutput {
        trace,
        verdict,
        abstraction,
    }))?;
    Ok(if passed { EXIT_CLEAN } else { EXIT_FOUND })
}

fn provider_of(kind: ProviderKind, script: Option<&Path>) -> CliResult<Box<dyn Provider>> {
    match kind {
        ProviderKind::Mock => {
            let script = script.ok_or_else(|| CliError::new("gen", "the mock provider needs --script"))?;
            Ok(Box::new(MockProvider::from_file(script).map_err(at("gen"))?))
        }
        ProviderKind::Http => Ok(Box::new(HttpProvider::from_env().map_err(at("gen"))?)),
    }
}

/// Writes accepted scenarios as `<name>.scn` plus `provenance.json`.
fn write_generation(ctx: &Ctx, out: &Path, result: &GenerationResult) -> CliResult<Vec<Scenario>> {
    let mut used = std::collections::BTreeSet::new();
    let mut scenarios = Vec::new();
    for a in &result.accepted {
        let mut name = a.scenario.name.clone();
        let mut i = 1;
        while !used.insert(name.clone()) {
            i += 1;
            name = format!("{}_{i}", a.scenario.name);
        }
        write_file(&out.join(format!("{name}.scn")), &serialize_scenario(&a.scenario))?;
        scenarios.push(a.scenario.clone());
    }
    write_file(&out.join("provenance.json"), &ctx.artifact(result))?;
    Ok(scenarios)
}

fn cmd_gen(
    ctx: &Ctx,
    rules: &Path,
    count: usize,
    provider: ProviderKind,
    script: Option<&Path>,
    out: &Path,
) -> CliResult<Vec<Scenario>> {
    let rule_text = read_file(rules, "gen")?;
    let provider = provider_of(provider, script)?;
    let mut job = GenerationJob::new(rule_text, count);
    job.config = ctx.cfg.llm.clone();
    match generate_scenarios(&job, provider.as_ref(), &ctx.cfg.simulator) {
        Ok(result) => {
            ctx.say(format!(
                "gen: {} accepted, {} rejected",
                result.accepted.len(),
                result.rejected.len()
            ));
            write_generation(ctx, out, &result)
        }
        Err(GenerationError::Aborted { source, partial }) => {
            write_generation(ctx, out, &partial)?;
            Err(CliError::new("gen", format!("aborted: {source}")))
        }
        Err(e) => Err(CliError::new("gen", e)),
    }
}

#[derive(Serialize)]
struct DfaArtifact<'a> {
    #[serde(flatten)]
    dfa: &'a Dfa,
    scenario: &'a str,
    rounds: usize,
    counterexamples: Vec<Vec<String>>,
}

fn learn_dfa_for(ctx: &Ctx, s: &Scenario, cache: Option<&Path>) -> CliResult<String> {
    let lc = &ctx.cfg.lstar;
    let alphabet = fuzz_alphabet(s, &lc.event_kinds);
    let teacher = SimulatorTeacher::new(
        s.clone(),
        alphabet.clone(),
        ctx.cfg.simulator.clone(),
        lc.max_word_len,
        lc.rng_seed,
    );
    let names = teacher.alphabet_names();
    let mut teacher = CachedTeacher::new(teacher);
    if let Some(p) = cache.filter(|p| p.is_file()) {
        teacher.load(p).map_err(at("learn-dfa"))?;
    }
    let outcome = match learn(&mut teacher, &names, lc.eq_budget, lc.max_rounds) {
        Ok(o) => o,
        Err(LstarError::BudgetExhausted { rounds, hypothesis }) => {
            return Err(CliError::new(
                "learn-dfa",
                format!(
                    "no equivalent hypothesis after {rounds} rounds (last had {} states)",
                    hypothesis.states
                ),
            ))
        }
        Err(e) => return Err(CliError::new("learn-dfa", e)),
    };
    if let Some(p) = cache {
        teacher.save(p).map_err(at("learn-dfa"))?;
    }
    ctx.say(format!(
        "learn-dfa {}: {} states after {} rounds",
        s.name, outcome.dfa.states, outcome.rounds
    ));
    let counterexamples = outcome
        .counterexamples
        .iter()
        .map(|w| w.iter().map(|i| names[*i].clone()).collect())
        .collect();
    Ok(ctx.artifact(&DfaArtifact {
        dfa: &outcome.dfa,
        scenario: &s.name,
        rounds: outcome.rounds,
        counterexamples,
    }))
}

fn cmd_learn_dfa(ctx: &Ctx, file: &Path, cache: Option<&Path>) -> CliResult<i32> {
    let s = load_scenario(file)?;
    let json = learn_dfa_for(ctx, &s, cache)?;
    ctx.emit(&json)?;
    Ok(EXIT_CLEAN)
}

fn learn_formula(ctx: &Ctx, traces: &[LabeledTrace]) -> CliResult<FormulaArtifact> {
    let sample = TraceSample {
        positives: traces.iter().filter(|t| t.label == Label::Positive).cloned().collect(),
        negatives: traces.iter().filter(|t| t.label == Label::Negative).cloned().collect(),
    };
    for (side, ts) in [("positive", &sample.positives), ("negative", &sample.negatives)] {
        if ts.is_empty() {
            return Err(CliError::new(
                "learn-ltl",
                format!("no separating formula: the {side} trace set is empty"),
            ));
        }
    }
    let learned = learn_minimal(&sample, ctx.cfg.sat.max_size).map_err(at("learn-ltl"))?;
    let names = traces
        .first()
        .map(|t| t.predicates.clone())
        .unwrap_or_else(PredicateSet::names);
    ctx.say(format!(
        "learn-ltl: {} (size {})",
        learned.formula.to_text(&names),
        learned.size
    ));
    Ok(FormulaArtifact::new(&learned.formula, names))
}

fn cmd_learn_ltl(ctx: &Ctx, dir: &Path) -> CliResult<i32> {
    let rd = fs::read_dir(dir).map_err(|e| CliError::new("learn-ltl", format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let traces = paths.iter().map(|p| load_labeled(p)).collect::<CliResult<Vec<_>>>()?;
    let artifact = learn_formula(ctx, &traces)?;
    ctx.emit(&ctx.artifact(&artifact))?;
    Ok(EXIT_CLEAN)
}

#[derive(Serialize)]
struct MonitorRuns<'a> {
    runs: &'a [MonitorOutput],
}

#[derive(Serialize, Deserialize)]
struct MonitorOutput {
    formula: String,
    verdict: Classification,
    decided_at: Option<usize>,
    path: Vec<String>,
}

fn monitor_output(f: &Formula, letters: &[u32]) -> MonitorOutput {
    let names = PredicateSet::names();
    let m = MonitorAutomaton::new(f, names.clone());
    let p = m.trace_path(letters);
    MonitorOutput {
        formula: f.to_text(&names),
        verdict: p.verdict,
        decided_at: p.decided_at,
        path: p.residues.iter().map(|r| r.to_text(&names)).collect(),
    }
}

fn cmd_monitor_check(
    ctx: &Ctx,
    formula: &str,
    trace: Option<&Path>,
    scenario: Option<&Path>,
    word: &str,
) -> CliResult<i32> {
    let f = load_formula(formula).map_err(at("monitor"))?;
    let letters = match (trace, scenario) {
        (Some(t), _) => load_labeled(t)?.letters,
        (None, Some(s)) => {
            let s = load_scenario(s)?;
            let word = parse_word(word).map_err(at("simulate"))?;
            simulate_labeled(&s, &word, &ctx.cfg.simulator)
                .map_err(at("simulate"))?
                .2
                .letters
        }
        (None, None) => return Err(CliError::new("monitor", "give --trace or --scenario")),
    };
    let out = monitor_output(&f, &letters);
    let violated = out.verdict == Classification::Violated;
    ctx.say(format!("monitor: {:?}", out.verdict));
    ctx.emit(&ctx.artifact(&out))?;
    Ok(if violated { EXIT_FOUND } else { EXIT_CLEAN })
}

fn run_fuzz(ctx: &Ctx, seeds: &[FuzzInput], formula: Option<&str>) -> CliResult<FuzzReport> {
    let f = match formula {
        Some(spec) => load_formula(spec).map_err(at("fuzz"))?,
        None => oracle_formula(&seeds[0].scenario),
    };
    let report = fuzz(seeds, &f, &ctx.cfg.fuzz, &ctx.cfg.simulator).map_err(at("fuzz"))?;
    ctx.say(format!(
        "fuzz: {} executions, {} counterexamples, state coverage {:.1}%",
        report.executions,
        report.counterexamples.len(),
        report.coverage.states_pct
    ));
    Ok(report)
}

fn cmd_fuzz(ctx: &Ctx, dir: &Path, formula: Option<&str>) -> CliResult<i32> {
    let seeds = load_seeds(dir, &ctx.cfg)?;
    let report = run_fuzz(ctx, &seeds, formula)?;
    ctx.emit(&ctx.artifact(&report))?;
    Ok(if report.counterexamples.is_empty() {
        EXIT_CLEAN
    } else {
        EXIT_FOUND
    })
}

/// Words used to label each scenario: the empty word and every non-NONE
/// event alone, after 0, 5, 10 and 20 idle steps.
pub fn labeling_words(alphabet: &[Event]) -> Vec<Vec<Event>> {
    let mut words = vec![Vec::new()];
    for e in alphabet.iter().filter(|e| **e != Event::None) {
        for idle in [0, 5, 10, 20] {
            let mut w = vec![Event::None; idle];
            w.push(e.clone());
            words.push(w);
        }
    }
    words
}

fn cmd_pipeline(
    ctx: &Ctx,
    dir: &Path,
    gen: Option<(PathBuf, ProviderKind, Option<PathBuf>, usize)>,
    formula: Option<&str>,
    out: &Path,
) -> CliResult<i32> {
    let cfg = &ctx.cfg;
    write_file(&out.join("config.toml"), &cfg.to_toml())?;

    let mut seeds = load_seeds(dir, cfg)?;
    if let Some((rules, provider, script, count)) = gen {
        let generated = cmd_gen(ctx, &rules, count, provider, script.as_deref(), &out.join("seeds"))?;
        seeds.extend(generated.into_iter().map(|s| FuzzInput::new(s, Vec::new())));
    }

    let mut traces = Vec::new();
    for seed in &seeds {
        let s = &seed.scenario;
        let alphabet = fuzz_alphabet(s, &cfg.lstar.event_kinds);
        for (i, w) in labeling_words(&alphabet).iter().enumerate() {
            let (_, _, lt) = simulate_labeled(s, w, &cfg.simulator).map_err(at("simulate"))?;
            write_file(
                &out.join("traces").join(format!("{}_{i:03}.json", s.name)),
                &ctx.artifact(&lt),
            )?;
            traces.push(lt);
        }
    }
    let negatives = traces.iter().filter(|t| t.label == Label::Negative).count();
    ctx.say(format!(
        "simulate: {} traces, {negatives} failing",
        traces.len()
    ));

    for (i, seed) in seeds.iter().enumerate() {
        let json = learn_dfa_for(ctx, &seed.scenario, None)?;
        if i == 0 {
            write_file(&out.join("dfa.json"), &json)?;
        }
        write_file(&out.join("dfa").join(format!("{}.json", seed.scenario.name)), &json)?;
    }

    let artifact = match formula {
        Some(spec) => {
            let f = load_formula(spec).map_err(at("learn-ltl"))?;
            FormulaArtifact::new(&f, PredicateSet::names())
        }
        None => learn_formula(ctx, &traces)?,
    };
    write_file(&out.join("formula.json"), &ctx.artifact(&artifact))?;

    let mut monitor = MonitorAutomaton::new(&artifact.ast, PredicateSet::names());
    let verdicts: Vec<MonitorOutput> = traces.iter().map(|t| monitor_output(&artifact.ast, &t.letters)).collect();
    for t in &traces {
        monitor.run(&t.letters);
    }
    write_file(&out.join("monitor.json"), &ctx.artifact(&MonitorRuns { runs: &verdicts }))?;
    write_file(&out.join("monitor.dot"), &monitor.to_dot())?;

    let spec = artifact.text.clone();
    let report = run_fuzz(ctx, &seeds, Some(&spec))?;
    write_file(&out.join("report.json"), &ctx.artifact(&report))?;
    Ok(if report.counterexamples.is_empty() {
        EXIT_CLEAN
    } else {
        EXIT_FOUND
    })
}

fn cmd_export_dot(ctx: &Ctx, path: &Path) -> CliResult<i32> {
    let text = read_file(path, "export-dot")?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(at("export-dot"))?;
    let dot = if v.get("transitions").is_some() && v.get("initial").is_some() {
        let d: Dfa = serde_json::from_value(v).map_err(at("export-dot"))?;
        d.to_dot()
    } else if v.get("ast").is_some() {
        let a: FormulaArtifact = serde_json::from_value(v).map_err(at("export-dot"))?;
        let mut m = MonitorAutomaton::new(&a.ast, a.predicates.clone());
        m.explore(ctx.cfg.fuzz.coverage_depth);
        m.to_dot()
    } else {
        return Err(CliError::new("export-dot", "not a DFA or formula artifact"));
    };
    ctx.emit(&dot)?;
    Ok(EXIT_CLEAN)
}
