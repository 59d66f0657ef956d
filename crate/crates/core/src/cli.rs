//! The `vurf` command line.
//!
//! Exit codes: 0 success, 1 I/O or usage error, 2 validation violations,
//! 3 execution error, 4 generation or correction failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::corrector::{correct, error_sweep, CorrectionOptions, DEFAULT_MAX_ITERS};
use crate::dsl::{parse, print, Program};
use crate::eval::{ablation_matrix, refinement_sweep, run_eval, AblationFlags, EvalConfig, EvalContext, EvalSuite};
use crate::generator::{generate, ExampleSet};
use crate::interpreter::{execute, Bindings, ExecOptions, RemoteBackend, Value, DEFAULT_TIMEOUT};
use crate::llm::{LlmGateway, ProviderConfig, Script, ScriptedProvider};
use crate::refiner::{refine_set, RefinementConfig};
use crate::registry::{builtin_catalog, Registry, SemType};
use crate::synthetic;
use crate::validator::{validate, video_inputs};
use crate::world::{standard_bindings, VideoDescriptor, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Usage = 1,
    Violations = 2,
    Exec = 3,
    Generation = 4,
}

#[derive(Debug)]
struct CliError {
    exit: Exit,
    message: String,
}

impl CliError {
    fn usage(message: impl ToString) -> Self {
        Self {
            exit: Exit::Usage,
            message: message.to_string(),
        }
    }

    fn with(exit: Exit, message: impl ToString) -> Self {
        Self {
            exit,
            message: message.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(name = "vurf", version, about = "Natural-language video queries as checked, self-correcting programs")]
#[command(after_help = "Exit codes: 0 ok, 1 I/O or usage error, 2 validation violations, 3 execution error, 4 generation or correction failure.")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scripted LLM provider file; without it VURF_LLM_URL selects a remote provider.
    #[arg(long, global = true)]
    script: Option<PathBuf>,
    /// Directory persisting LLM completions by content hash.
    #[arg(long, global = true)]
    llm_cache: Option<PathBuf>,
    /// Seed for scripted providers; overrides the script's own seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Registry extension documents merged into the builtin functions.
    #[arg(long = "registry-ext", global = true)]
    registry_ext: Vec<PathBuf>,
    /// Machine-readable output (JSON, one document or one object per line).
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, default_value_t = 0.0)]
    temperature: f64,
    /// Retries after transport failures.
    #[arg(long, global = true, default_value_t = 2)]
    max_retries: u32,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Answer a query over descriptor videos: generate, correct, execute.
    Run(RunArgs),
    /// Check a program against the registry.
    Validate(ValidateArgs),
    /// Refine an in-context example set, writing set_1.jsonl .. set_N.jsonl.
    Refine(RefineArgs),
    /// Score a question suite end to end.
    Eval(EvalArgs),
    /// The four error-correction / self-refinement combinations as CSV.
    Ablation(AblationArgs),
    /// Accuracy per refinement iteration as CSV.
    Sweep(SweepArgs),
    /// Invalid programs remaining per correction budget as CSV.
    BenchErrors(BenchArgs),
    /// Write the synthetic suite, example sets and scripts to a directory.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Descriptor files; one binds VIDEO, several bind VIDEO0, VIDEO1, ...
    #[arg(long = "video", required = true)]
    videos: Vec<PathBuf>,
    /// Natural-language query.
    #[arg(long, conflicts_with = "program", required_unless_present = "program")]
    query: Option<String>,
    /// Run this program instead of generating one.
    #[arg(long)]
    program: Option<PathBuf>,
    /// In-context examples (JSON Lines), needed with --query.
    #[arg(long, required_unless_present = "program")]
    examples: Option<PathBuf>,
    /// Write the execution trace here (also on failure).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_correct_iters: usize,
    /// Ask the LLM whether the program is faulty before each correction.
    #[arg(long)]
    llm_judge: bool,
    /// Model server whose functions replace the mocks.
    #[arg(long)]
    backend_url: Option<String>,
    /// Per-call timeout in seconds.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_secs_f64())]
    timeout_s: f64,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Program file.
    file: PathBuf,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[arg(long)]
    examples: PathBuf,
    #[arg(long, default_value_t = 1)]
    iters: u32,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    /// Items file (JSON Lines); descriptor paths are relative to it.
    #[arg(long)]
    items: PathBuf,
    #[arg(long)]
    examples: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_correct_iters: usize,
    #[arg(long)]
    llm_judge: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    suite: SuiteArgs,
    /// Comma-separated mechanisms: ec (error correction), sr (self refinement), or none.
    #[arg(long, default_value = "ec,sr")]
    flags: String,
    #[arg(long, default_value_t = 1)]
    refine_iters: u32,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the per-item CSV summary.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AblationArgs {
    #[command(flatten)]
    suite: SuiteArgs,
    #[arg(long, default_value_t = 1)]
    refine_iters: u32,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    suite: SuiteArgs,
    #[arg(long, default_value_t = 3)]
    max_iter: u32,
    /// Correct programs before executing them.
    #[arg(long)]
    ec: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Number of synthetic instructions.
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Injection rate of the builtin faulty script; ignored with --script.
    #[arg(long, default_value_t = 0.3)]
    inject: f64,
    #[arg(long, default_value_t = 3)]
    max_faults: usize,
    /// Correction budgets, inclusive, e.g. 0..3.
    #[arg(long, default_value = "0..3", value_parser = parse_range)]
    iters: RangeInclusive<usize>,
    /// Example set; defaults to the synthetic one.
    #[arg(long)]
    examples: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Give every item answer options.
    #[arg(long)]
    multiple_choice: bool,
    /// Injection rate written into script.json.
    #[arg(long)]
    inject: Option<f64>,
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got '{s}'"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad range start in '{s}'"))?;
    let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad range end in '{s}'"))?;
    if a > b {
        return Err(format!("empty range '{s}'"));
    }
    Ok(a..=b)
}

fn parse_flags(s: &str, refinement_iterations: u32) -> Result<AblationFlags, CliError> {
    let mut flags = AblationFlags {
        refinement_iterations,
        ..AblationFlags::NONE
    };
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "ec" => flags.error_correction = true,
            "sr" => flags.self_refinement = true,
            "none" => {}
            other => return Err(CliError::usage(format!("unknown flag '{other}' (expected ec, sr or none)"))),
        }
    }
    if !flags.self_refinement {
        flags.refinement_iterations = 0;
    }
    Ok(flags)
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                Exit::Usage as i32
            } else {
                let _ = write!(out, "{text}");
                Exit::Ok as i32
            };
        }
    };
    init_logging(cli.common.verbose);
    let result = match &cli.command {
        Command::Run(a) => cmd_run(&cli.common, a, out, err),
        Command::Validate(a) => cmd_validate(&cli.common, a, out, err),
        Command::Refine(a) => cmd_refine(&cli.common, a, out),
        Command::Eval(a) => cmd_eval(&cli.common, a, out),
        Command::Ablation(a) => cmd_ablation(&cli.common, a, out),
        Command::Sweep(a) => cmd_sweep(&cli.common, a, out),
        Command::BenchErrors(a) => cmd_bench_errors(&cli.common, a, out),
        Command::Synth(a) => cmd_synth(a, out),
    };
    match result {
        Ok(()) => Exit::Ok as i32,
        Err(e) => {
            if !e.message.is_empty() {
                let _ = writeln!(err, "vurf: {}", e.message);
            }
            e.exit as i32
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    // a second init (tests run many commands in one process) is harmless
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::usage(format!("{}: {e}", path.display()))
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult {
    out.write_all(text.as_bytes()).map_err(|e| CliError::usage(format!("cannot write output: {e}")))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn registry(common: &Common) -> Result<Registry, CliError> {
    let mut reg = builtin_catalog();
    for path in &common.registry_ext {
        let ext = Registry::load(path).map_err(CliError::usage)?;
        reg = reg.merge(&ext).map_err(|e| io_error(path, e))?;
    }
    Ok(reg)
}

fn gateway(common: &Common) -> Result<LlmGateway, CliError> {
    let base = match &common.script {
        Some(path) => ProviderConfig::scripted(path),
        None => ProviderConfig::from_env()
            .ok_or_else(|| CliError::usage("no LLM provider: pass --script or set VURF_LLM_URL"))?,
    };
    let config = ProviderConfig {
        temperature: common.temperature,
        max_retries: common.max_retries,
        ..base
    };
    let g = LlmGateway::from_config(&config, Some(common.seed)).map_err(CliError::usage)?;
    with_cache(g, common)
}

fn with_cache(g: LlmGateway, common: &Common) -> Result<LlmGateway, CliError> {
    match &common.llm_cache {
        Some(dir) => g.with_cache_dir(dir).map_err(CliError::usage),
        None => Ok(g),
    }
}

fn load_examples(path: &Path, registry: &Registry) -> Result<ExampleSet, CliError> {
    let set = ExampleSet::load(path).map_err(CliError::usage)?;
    set.validate(registry).map_err(|e| io_error(path, e))?;
    Ok(set)
}

fn read_program(path: &Path) -> Result<Program, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse(&text).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| format!("{}: {e}", path.display())).collect();
        CliError::usage(lines.join("\n"))
    })
}

fn cmd_run(common: &Common, a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let timeout = Duration::try_from_secs_f64(a.timeout_s).map_err(|e| CliError::usage(format!("--timeout-s: {e}")))?;
    let mut registry = registry(common)?;
    let mut descriptors = Vec::new();
    for path in &a.videos {
        descriptors.push(VideoDescriptor::load(path).map_err(CliError::usage)?);
    }
    let names: Vec<String> = if descriptors.len() == 1 {
        vec!["VIDEO".into()]
    } else {
        (0..descriptors.len()).map(|i| format!("VIDEO{i}")).collect()
    };
    let inputs: BTreeMap<String, Value> = names
        .iter()
        .zip(&descriptors)
        .map(|(n, d)| (n.clone(), Value::Video(d.input_video())))
        .collect();
    let input_types: BTreeMap<String, SemType> = names.iter().map(|n| (n.clone(), SemType::Video)).collect();
    let mut bindings: Bindings = standard_bindings(Arc::new(World::from_descriptors(descriptors)));
    if let Some(url) = &a.backend_url {
        let remote = RemoteBackend::connect(url, timeout).map_err(|e| CliError::usage(format!("{url}: {e}")))?;
        registry = registry.merge(remote.manifest()).map_err(|e| CliError::usage(format!("{url}: {e}")))?;
        let served: Vec<String> = remote.manifest().names().map(str::to_owned).collect();
        bindings = bindings.bind(served.iter().map(String::as_str), Arc::new(remote));
    }

    let (program, generated, iterations) = match (&a.program, &a.query) {
        (Some(path), _) => {
            let p = read_program(path)?;
            let fb = validate(&p, &registry, &input_types);
            if !fb.is_empty() {
                emit(err, &format!("{}\n", fb.rendered))?;
                return Err(CliError::with(Exit::Violations, ""));
            }
            (p, None, 0)
        }
        (None, Some(query)) => {
            let examples_path = a.examples.as_ref().ok_or_else(|| CliError::usage("--query needs --examples"))?;
            let examples = load_examples(examples_path, &registry)?;
            let g = gateway(common)?;
            let generated = generate(query, &examples, &registry, &g).map_err(|e| CliError::with(Exit::Generation, e))?;
            let opts = CorrectionOptions {
                max_iters: a.max_correct_iters,
                llm_judge: a.llm_judge,
            };
            let report = correct(&generated, query, &registry, &input_types, &g, opts);
            if !report.final_valid {
                if let Some(e) = &report.error {
                    emit(err, &format!("correction stopped: {e}\n"))?;
                }
                emit(err, &format!("{}\n", report.final_feedback.rendered))?;
                return Err(CliError::with(
                    Exit::Generation,
                    format!("no valid program after {} correction round(s)", report.iterations_used),
                ));
            }
            (report.final_program, Some(report.initial_program), report.iterations_used)
        }
        (None, None) => return Err(CliError::usage("pass --query or --program")),
    };

    let opts = ExecOptions {
        timeout,
        record_timing: false,
    };
    let (value, trace) = match execute(&program, &inputs, &bindings, &registry, &opts) {
        Ok(r) => r,
        Err(e) => {
            if let Some(path) = &a.trace {
                write_file(path, &e.trace.to_json())?;
            }
            return Err(CliError::with(Exit::Exec, e));
        }
    };
    if let Some(path) = &a.trace {
        write_file(path, &trace.to_json())?;
    }
    if common.json {
        let doc = json!({
            "answer": value,
            "program": print(&program),
            "generated_program": generated.as_ref().map(print),
            "correction_rounds": iterations,
        });
        emit(out, &format!("{doc}\n"))
    } else {
        match &value {
            Value::Text(t) => emit(out, &format!("{t}\n")),
            other => emit(out, &format!("{other}\n")),
        }
    }
}

fn cmd_validate(common: &Common, a: &ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let registry = registry(common)?;
    let text = std::fs::read_to_string(&a.file).map_err(|e| io_error(&a.file, e))?;
    let program = match parse(&text) {
        Ok(p) => p,
        Err(errs) => {
            for e in &errs {
                if common.json {
                    emit(out, &format!("{}\n", json!({"kind": "ParseError", "message": e.to_string()})))?;
                } else {
                    emit(err, &format!("{}: {e}\n", a.file.display()))?;
                }
            }
            return Err(CliError::with(Exit::Usage, ""));
        }
    };
    let fb = validate(&program, &registry, &video_inputs(&program));
    for v in &fb.violations {
        if common.json {
            emit(out, &format!("{}\n", serde_json::to_string(v).expect("violation serializes")))?;
        } else {
            emit(out, &format!("{v}\n"))?;
        }
    }
    if fb.is_empty() {
        Ok(())
    } else {
        Err(CliError::with(Exit::Violations, ""))
    }
}

fn cmd_refine(common: &Common, a: &RefineArgs, out: &mut dyn Write) -> CliResult {
    let registry = registry(common)?;
    let config = RefinementConfig::new(a.iters).map_err(CliError::usage)?;
    let examples = load_examples(&a.examples, &registry)?;
    let g = gateway(common)?;
    let outcome = refine_set(&examples, &registry, &g, config);
    std::fs::create_dir_all(&a.out_dir).map_err(|e| io_error(&a.out_dir, e))?;
    for (t, (set, records)) in outcome.sets.iter().zip(&outcome.records).enumerate() {
        let path = a.out_dir.join(format!("set_{}.jsonl", t + 1));
        set.save(&path).map_err(CliError::usage)?;
        let accepted = records.iter().filter(|r| r.accepted).count();
        if common.json {
            let rejected: Vec<_> = records
                .iter()
                .filter_map(|r| r.rejection.as_ref().map(|why| json!({"id": r.id, "reason": why.to_string()})))
                .collect();
            let doc = json!({"iteration": t + 1, "path": path, "accepted": accepted, "total": records.len(), "rejected": rejected});
            emit(out, &format!("{doc}\n"))?;
        } else {
            emit(out, &format!("{}: {accepted}/{} refined\n", path.display(), records.len()))?;
        }
    }
    Ok(())
}

struct SuiteSetup {
    suite: EvalSuite,
    examples: ExampleSet,
    registry: Registry,
    bindings: Bindings,
    gateway: LlmGateway,
    config: EvalConfig,
}

impl SuiteSetup {
    fn new(common: &Common, a: &SuiteArgs) -> Result<Self, CliError> {
        let registry = registry(common)?;
        let suite = EvalSuite::load(&a.items).map_err(CliError::usage)?;
        let examples = load_examples(&a.examples, &registry)?;
        let bindings = standard_bindings(Arc::new(suite.world.clone()));
        Ok(Self {
            suite,
            examples,
            registry,
            bindings,
            gateway: gateway(common)?,
            config: EvalConfig {
                correction: CorrectionOptions {
                    max_iters: a.max_correct_iters,
                    llm_judge: a.llm_judge,
                },
                exec: ExecOptions::default(),
                seed: common.seed,
            },
        })
    }

    fn ctx(&self) -> EvalContext<'_> {
        EvalContext {
            registry: &self.registry,
            bindings: &self.bindings,
            gateway: &self.gateway,
            config: &self.config,
        }
    }
}

fn cmd_eval(common: &Common, a: &EvalArgs, out: &mut dyn Write) -> CliResult {
    let flags = parse_flags(&a.flags, a.refine_iters)?;
    let s = SuiteSetup::new(common, &a.suite)?;
    let report = run_eval(&s.suite, &s.examples, flags, &s.ctx()).map_err(CliError::usage)?;
    if let Some(path) = &a.csv {
        write_file(path, &report.to_csv())?;
    }
    let text = report.to_json() + "\n";
    match &a.report {
        Some(path) => {
            write_file(path, &text)?;
            if common.json {
                let doc = json!({"accuracy": report.accuracy, "correct": report.correct, "total": report.total});
                emit(out, &format!("{doc}\n"))
            } else {
                emit(out, &format!("accuracy {:.4} ({}/{})\n", report.accuracy, report.correct, report.total))
            }
        }
        None => emit(out, &text),
    }
}

fn cmd_ablation(common: &Common, a: &AblationArgs, out: &mut dyn Write) -> CliResult {
    let s = SuiteSetup::new(common, &a.suite)?;
    let table = ablation_matrix(&s.suite, &s.examples, a.refine_iters, &s.ctx()).map_err(CliError::usage)?;
    if common.json {
        for row in &table.rows {
            emit(out, &format!("{}\n", serde_json::to_string(row).expect("row serializes")))?;
        }
        Ok(())
    } else {
        emit(out, &table.to_csv())
    }
}

fn cmd_sweep(common: &Common, a: &SweepArgs, out: &mut dyn Write) -> CliResult {
    let s = SuiteSetup::new(common, &a.suite)?;
    let table = refinement_sweep(&s.suite, &s.examples, a.max_iter, a.ec, &s.ctx()).map_err(CliError::usage)?;
    if common.json {
        for (t, acc) in &table.rows {
            emit(out, &format!("{}\n", json!({"iteration": t, "accuracy": acc})))?;
        }
        Ok(())
    } else {
        emit(out, &table.to_csv())
    }
}

fn cmd_bench_errors(common: &Common, a: &BenchArgs, out: &mut dyn Write) -> CliResult {
    if a.n == 0 || a.n > synthetic::MAX_ITEMS {
        return Err(CliError::usage(format!("--n must be in 1..={}", synthetic::MAX_ITEMS)));
    }
    let registry = registry(common)?;
    let examples = match &a.examples {
        Some(p) => load_examples(p, &registry)?,
        None => synthetic::example_set(false),
    };
    let g = if common.script.is_some() {
        gateway(common)?
    } else {
        let text = synthetic::script_json(synthetic::ScriptOptions {
            seed: common.seed,
            inject: Some((a.inject, a.max_faults)),
            ..synthetic::ScriptOptions::default()
        });
        let script = Script::from_json(&text, "<builtin faulty script>").map_err(CliError::usage)?;
        let config = ProviderConfig {
            temperature: common.temperature,
            ..ProviderConfig::scripted("<builtin faulty script>")
        };
        with_cache(LlmGateway::new(Arc::new(ScriptedProvider::new(script)), &config), common)?
    };
    let inputs = BTreeMap::from([("VIDEO".to_owned(), SemType::Video)]);
    let sweep = error_sweep(&synthetic::item_instructions(a.n), &examples, &registry, &inputs, &g, a.iters.clone());
    if common.json {
        for (k, n) in &sweep.rows {
            emit(out, &format!("{}\n", json!({"iterations": k, "invalid_count": n})))?;
        }
        Ok(())
    } else {
        emit(out, &sweep.to_csv())
    }
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> CliResult {
    if a.n == 0 || a.n > synthetic::MAX_ITEMS {
        return Err(CliError::usage(format!("--n must be in 1..={}", synthetic::MAX_ITEMS)));
    }
    let dir = &a.out_dir;
    let suite = synthetic::eval_suite(a.n, a.multiple_choice);
    suite.save(&dir.join("suite")).map_err(CliError::usage)?;
    synthetic::example_set(false).save(&dir.join("examples.jsonl")).map_err(CliError::usage)?;
    synthetic::example_set(true)
        .save(&dir.join("examples_flawed.jsonl"))
        .map_err(CliError::usage)?;
    let script = synthetic::script_json(synthetic::ScriptOptions {
        inject: a.inject.map(|r| (r, 3)),
        ..synthetic::ScriptOptions::default()
    });
    write_file(&dir.join("script.json"), &(script + "\n"))?;
    let golden = dir.join("golden");
    std::fs::create_dir_all(&golden).map_err(|e| io_error(&golden, e))?;
    synthetic::golden_descriptor()
        .save(&golden.join("bathroom.vworld.json"))
        .map_err(|e| io_error(&golden, e))?;
    synthetic::golden_examples()
        .save(&golden.join("examples.jsonl"))
        .map_err(CliError::usage)?;
    write_file(&golden.join("script.json"), &(synthetic::golden_script_json() + "\n"))?;
    write_file(&golden.join("program.vp"), &format!("{}\n", synthetic::GOLDEN_PROGRAM))?;
    emit(out, &format!("{}\n", dir.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!(parse_range("0..3"), Ok(0..=3));
        assert_eq!(parse_range("2..=2"), Ok(2..=2));
        assert!(parse_range("3..1").is_err());
        assert!(parse_range("3").is_err());
    }

    #[test]
    fn flags_parse_strictly() {
        let f = parse_flags("ec,sr", 2).unwrap();
        assert!(f.error_correction && f.self_refinement);
        assert_eq!(f.refinement_iterations, 2);
        assert_eq!(parse_flags("none", 2).unwrap(), AblationFlags::NONE);
        assert_eq!(parse_flags("", 5).unwrap(), AblationFlags::NONE);
        assert!(parse_flags("ec,xx", 1).is_err());
    }

    #[test]
    fn usage_errors_exit_one_and_help_exits_zero() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["vurf", "frobnicate"], &mut out, &mut err), 1);
        assert_eq!(run(["vurf", "validate", "x.vp", "--bogus"], &mut out, &mut err), 1);
        out.clear();
        assert_eq!(run(["vurf", "eval", "--help"], &mut out, &mut err), 0);
        assert!(String::from_utf8(out).unwrap().contains("--flags"));
    }
}
