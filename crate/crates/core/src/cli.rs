//! Command-line front end. [`run`] takes the argument list and output
//! streams and returns the process exit code, so the binary is a thin shim
//! and the commands can be tested in-process.
//!
//! Exit codes: 0 success or true, 1 false or countermodel found, 2 usage,
//! file or parse error, 3 the model is not in KH.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::checker::{find_countermodel, EvalContext, SearchBounds};
use crate::formula::{parse, parse_open, Formula, Printer, UpdateRegistry};
use crate::interchange::{self, ModelDoc, ScenarioDoc};
use crate::kripke::{validate, KripkeModel, Signature, WorldId};
use crate::scenarios::{builtin_scenarios, scenario, Mode, Report};
use crate::translate::translate;
use crate::update::{apply_public, product};

#[derive(Parser, Debug)]
#[command(name = "hopelogic", version, about = "Model checking for knowledge, hope and hope updates")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every randomised search.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest model tried by the countermodel search.
    #[arg(long, global = true, default_value_t = 4)]
    pub bounds_worlds: usize,
    /// Number of models tried by the countermodel search.
    #[arg(long, global = true, default_value_t = 20_000)]
    pub bounds_models: usize,
    /// Check every dynamic formula against its static translation.
    #[arg(long, global = true)]
    pub cross_check: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Print the rewrite steps of a translation.
    #[arg(long, global = true)]
    pub trace: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Human,
    Structured,
}

/// Where the agents and propositions of a free-standing formula come from.
#[derive(Args, Debug, Clone)]
pub struct SigArgs {
    /// Take the signature from this model file.
    #[arg(long, conflicts_with = "agents")]
    pub model: Option<PathBuf>,
    /// Comma-separated agent names; propositions are taken from the formula.
    #[arg(long, value_delimiter = ',')]
    pub agents: Vec<String>,
    /// Update model files, loaded in order.
    #[arg(long = "update-model")]
    pub updates: Vec<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check that a model file describes a KH model.
    Validate { model: PathBuf },
    /// Evaluate a formula at a world.
    Eval {
        model: PathBuf,
        world: String,
        formula: String,
        /// Update model files, loaded in order.
        #[arg(long = "update-model")]
        updates: Vec<PathBuf>,
    },
    /// Apply a public hope update or the product with an update model.
    Update {
        model: PathBuf,
        /// One hope update formula per agent, in signature order.
        #[arg(long, num_args = 1.., conflicts_with = "update_model")]
        public: Vec<String>,
        /// Update model to take the product with; earlier files may be given with --with.
        #[arg(long)]
        update_model: Option<PathBuf>,
        /// Update models the main one refers to.
        #[arg(long = "with")]
        with: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rewrite a formula into one without dynamic operators.
    Translate {
        formula: String,
        #[command(flatten)]
        sig: SigArgs,
    },
    /// Search for a model falsifying a formula.
    Countermodel {
        formula: String,
        #[command(flatten)]
        sig: SigArgs,
    },
    /// Built-in scenarios.
    Scenario {
        #[command(subcommand)]
        action: ScenarioCmd,
    },
    /// Graphviz description of a model.
    ExportDot { model: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum ScenarioCmd {
    List,
    Run {
        name: Option<String>,
        #[arg(long, conflicts_with = "name")]
        all: bool,
    },
    /// Print the scenario as a document.
    Dump { name: String },
}

enum Failure {
    Usage(String),
    Invalid(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let mut text = String::new();
    let result = dispatch(&cli, &mut text);
    let _ = out.write_all(text.as_bytes());
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Invalid(msg)) => {
            let _ = write!(err, "{msg}");
            3
        }
    }
}

fn dispatch(cli: &Cli, out: &mut String) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { model } => cmd_validate(g, model, out),
        Command::Eval { model, world, formula, updates } => cmd_eval(g, model, world, formula, updates, out),
        Command::Update { model, public, update_model, with, output } => {
            cmd_update(g, model, public, update_model.as_deref(), with, output.as_deref(), out)
        }
        Command::Translate { formula, sig } => cmd_translate(g, formula, sig, out),
        Command::Countermodel { formula, sig } => cmd_countermodel(g, formula, sig, out),
        Command::Scenario { action } => cmd_scenario(g, action, out),
        Command::ExportDot { model } => {
            out.push_str(&export_dot(&load(model)?));
            Ok(0)
        }
    }
}

fn load(path: &Path) -> Result<KripkeModel, Failure> {
    let raw = interchange::read_model_doc(path)?.to_raw()?;
    let report = validate(&raw);
    if !report.is_empty() {
        return Err(Failure::Invalid(format!("{}: not a KH model\n{report}", path.display())));
    }
    Ok(raw.into_model()?)
}

fn cmd_validate(g: &Global, path: &Path, out: &mut String) -> Outcome {
    let raw = interchange::read_model_doc(path)?.to_raw()?;
    let report = validate(&raw);
    if g.format == Format::Structured {
        let violations: Vec<_> = report
            .violations
            .iter()
            .map(|v| {
                json!({
                    "condition": v.condition.to_string(),
                    "agent": v.agent.map(|i| raw.sig.agent_name(i).to_string()),
                    "witness": v.witness.iter().map(|&w| raw.worlds[w].clone()).collect::<Vec<_>>(),
                })
            })
            .collect();
        writeln!(out, "{}", json!({ "valid": report.is_empty(), "violations": violations }))?;
    } else {
        write!(out, "{report}")?;
    }
    Ok(if report.is_empty() { 0 } else { 3 })
}

fn cmd_eval(g: &Global, path: &Path, world: &str, text: &str, updates: &[PathBuf], out: &mut String) -> Outcome {
    let model = load(path)?;
    let reg = interchange::load_updates(updates, model.signature())?;
    let f = parse(text, model.signature(), &reg)?;
    let w = model.world(world)?;
    let mut ctx = if g.cross_check { EvalContext::cross_checked(&model) } else { EvalContext::new(&model) };
    let value = ctx.eval(WorldId(w), &f)?;
    if g.format == Format::Structured {
        writeln!(out, "{}", json!({ "world": world, "formula": text, "value": value }))?;
    } else {
        writeln!(out, "{value}")?;
    }
    Ok(if value { 0 } else { 1 })
}

fn cmd_update(
    g: &Global,
    path: &Path,
    public: &[String],
    update_model: Option<&Path>,
    with: &[PathBuf],
    output: Option<&Path>,
    out: &mut String,
) -> Outcome {
    let model = load(path)?;
    let sig = model.signature().clone();
    let updated = match update_model {
        Some(u) => {
            let reg = interchange::load_updates(with, &sig)?;
            let main = interchange::read_update_doc(u)?.to_model(&sig, &reg)?;
            product(&model, &main)?.model
        }
        None => {
            if public.is_empty() {
                return Err(Failure::Usage("give --public formulas or --update-model".into()));
            }
            let reg = interchange::load_updates(with, &sig)?;
            let v = public.iter().map(|t| parse(t, &sig, &reg)).collect::<Result<Vec<Formula>, _>>()?;
            apply_public(&model, &v)?
        }
    };
    let report = validate(&updated.to_raw());
    if !report.is_empty() {
        return Err(Failure::Invalid(format!("updated model is not in KH\n{report}")));
    }
    match output {
        Some(p) => {
            interchange::save_model(&updated, p)?;
            writeln!(out, "wrote {} ({} worlds)", p.display(), updated.world_count())?;
        }
        None if g.format == Format::Structured => writeln!(out, "{}", interchange::model_json(&updated))?,
        None => out.push_str(&describe(&updated)),
    }
    Ok(0)
}

/// Worlds with their true propositions and the agents correct there.
pub fn describe(m: &KripkeModel) -> String {
    let sig = m.signature();
    let mut s = String::new();
    for w in 0..m.world_count() {
        let props: Vec<&str> = m.true_props(w).map(|p| sig.prop_name(p)).collect();
        let ok: Vec<&str> = sig.agents().filter(|&i| m.correct_set(i).contains(w)).map(|i| sig.agent_name(i)).collect();
        let _ = writeln!(s, "{:<12} props {{{}}} correct {{{}}}", m.world_name(w), props.join(","), ok.join(","));
    }
    s
}

fn signature(args: &SigArgs, text: &str) -> Result<(Formula, Arc<Signature>, UpdateRegistry), Failure> {
    let mut sig = match &args.model {
        Some(p) => load(p)?.signature().as_ref().clone(),
        None if !args.agents.is_empty() => Signature::new(args.agents.iter().map(String::as_str), [] as [&str; 0])?,
        None => return Err(Failure::Usage("give --model or --agents".into())),
    };
    if args.model.is_some() {
        let reg = interchange::load_updates(&args.updates, &sig)?;
        let f = parse(text, &sig, &reg)?;
        return Ok((f, Arc::new(sig), reg));
    }
    if !args.updates.is_empty() {
        return Err(Failure::Usage("update model files need --model for their signature".into()));
    }
    let reg = UpdateRegistry::new();
    let f = parse_open(text, &mut sig, &reg)?;
    Ok((f, Arc::new(sig), reg))
}

fn cmd_translate(g: &Global, text: &str, args: &SigArgs, out: &mut String) -> Outcome {
    let (f, sig, _) = signature(args, text)?;
    let t = translate(&f)?;
    let printer = Printer::new(&sig);
    let result = printer.print(&t.formula);
    if g.format == Format::Structured {
        let trace: Vec<_> = t
            .trace
            .iter()
            .map(|s| json!({ "rule": s.rule.to_string(), "position": s.position, "before": s.before.to_string(), "after": s.after.to_string() }))
            .collect();
        let mut doc = json!({ "formula": text, "translation": result });
        if g.trace {
            doc["trace"] = json!(trace);
        }
        writeln!(out, "{doc}")?;
    } else {
        if g.trace {
            for s in &t.trace {
                writeln!(out, "{:<10} at {:<12} complexity {} -> {}", s.rule.to_string(), s.position, s.before, s.after)?;
            }
        }
        writeln!(out, "{result}")?;
    }
    Ok(0)
}

fn cmd_countermodel(g: &Global, text: &str, args: &SigArgs, out: &mut String) -> Outcome {
    let (f, sig, _) = signature(args, text)?;
    let bounds = SearchBounds {
        max_worlds: g.bounds_worlds,
        exhaustive_worlds: g.bounds_worlds.min(SearchBounds::default().exhaustive_worlds),
        max_models: g.bounds_models,
        seed: g.seed,
        ..SearchBounds::default()
    };
    let found = find_countermodel(&f, &sig, &bounds)?;
    match found.countermodel {
        Some((m, w)) => {
            if g.format == Format::Structured {
                let doc = json!({ "world": m.world_name(w.0), "model": ModelDoc::from_model(&m) });
                writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            } else {
                writeln!(out, "false at {} after {} models", m.world_name(w.0), found.models_examined)?;
                out.push_str(&describe(&m));
            }
            Ok(1)
        }
        None => {
            if g.format == Format::Structured {
                writeln!(out, "{}", json!({ "countermodel": null, "models_examined": found.models_examined }))?;
            } else {
                writeln!(out, "none within bounds ({} models)", found.models_examined)?;
            }
            Ok(0)
        }
    }
}

fn report_table(r: &Report, out: &mut String) {
    for a in &r.assertions {
        let mark = if a.passed() { "pass" } else { "FAIL" };
        let _ = writeln!(out, "  {mark}  {:<6} {:<5} {}  ({})", a.assertion.world, a.actual, a.assertion.formula, a.assertion.note);
    }
    for f in &r.figure {
        let mark = if f.passed() { "pass" } else { "FAIL" };
        let _ = writeln!(out, "  {mark}  correct for {}: {{{}}}", f.agent, f.actual.join(", "));
        if !f.passed() {
            let _ = writeln!(out, "        expected {{{}}}", f.expected.join(", "));
        }
    }
    if r.violations > 0 {
        let _ = writeln!(out, "  FAIL  {} KH violations", r.violations);
    }
}

fn cmd_scenario(g: &Global, action: &ScenarioCmd, out: &mut String) -> Outcome {
    let mode = if g.cross_check { Mode::CrossCheck } else { Mode::Direct };
    match action {
        ScenarioCmd::List => {
            for s in builtin_scenarios() {
                writeln!(out, "{:<28} {}", s.name, s.summary)?;
            }
            Ok(0)
        }
        ScenarioCmd::Dump { name } => {
            let doc = ScenarioDoc::from_scenario(&scenario(name)?);
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            Ok(0)
        }
        ScenarioCmd::Run { name, all } => {
            let chosen = match (name, all) {
                (Some(n), false) => vec![scenario(n)?],
                (None, true) => builtin_scenarios(),
                _ => return Err(Failure::Usage("give a scenario name or --all".into())),
            };
            let mut failed = 0;
            let mut docs = Vec::new();
            for s in &chosen {
                let r = s.run(mode)?;
                if !r.passed() {
                    failed += 1;
                }
                if g.format == Format::Structured {
                    docs.push(json!({
                        "name": r.name,
                        "passed": r.passed(),
                        "assertions": r.assertions.iter().map(|a| json!({
                            "world": a.assertion.world,
                            "formula": a.assertion.formula,
                            "expected": a.assertion.expected,
                            "actual": a.actual,
                        })).collect::<Vec<_>>(),
                        "figure": r.figure.iter().map(|f| json!({
                            "agent": f.agent, "expected": f.expected, "actual": f.actual,
                        })).collect::<Vec<_>>(),
                        "violations": r.violations,
                    }));
                } else {
                    writeln!(out, "{} {}", if r.passed() { "PASS" } else { "FAIL" }, r.name)?;
                    report_table(&r, out);
                }
            }
            if g.format == Format::Structured {
                writeln!(out, "{}", serde_json::to_string_pretty(&docs)?)?;
            } else {
                writeln!(out, "{} of {} scenarios passed", chosen.len() - failed, chosen.len())?;
            }
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

/// Undirected graph: one node per world listing its true propositions and
/// the agents correct there, one edge per pair of distinct worlds an agent
/// cannot tell apart. A node where some agent is correct is drawn bold.
pub fn export_dot(m: &KripkeModel) -> String {
    let sig = m.signature();
    let mut s = String::from("graph model {\n  node [shape=box];\n");
    for w in 0..m.world_count() {
        let props: Vec<&str> = m.true_props(w).map(|p| sig.prop_name(p)).collect();
        let ok: Vec<&str> = sig.agents().filter(|&i| m.correct_set(i).contains(w)).map(|i| sig.agent_name(i)).collect();
        let style = if ok.is_empty() { "" } else { ", style=bold" };
        let _ = writeln!(
            s,
            "  \"{}\" [label=\"{}\\n{{{}}}\\ncorrect: {}\"{}];",
            m.world_name(w),
            m.world_name(w),
            props.join(","),
            if ok.is_empty() { "-".to_string() } else { ok.join(",") },
            style
        );
    }
    for i in sig.agents() {
        for class in m.knowledge(i).classes() {
            for (k, &x) in class.iter().enumerate() {
                for &y in &class[k + 1..] {
                    let _ = writeln!(s, "  \"{}\" -- \"{}\" [label=\"{}\"];", m.world_name(x), m.world_name(y), sig.agent_name(i));
                }
            }
        }
    }
    s.push_str("}\n");
    s
}
