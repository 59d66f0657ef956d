//! End-to-end accuracy over question suites, plus the ablation matrix and
//! refinement sweep built on top of it.
//!
//! An item's program sees its descriptor's video as `VIDEO`. Options of a
//! multiple-choice item are appended to every VQA question literal before
//! execution, and the prediction is snapped to the nearest option.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corrector::{correct, CorrectionOptions};
use crate::dsl::{print, ArgValue, Program};
use crate::generator::{generate, ExampleSet, ExampleSetError};
use crate::interpreter::{execute, Bindings, ExecOptions, Value};
use crate::llm::LlmGateway;
use crate::refiner::{refine_set, RefinementConfig, RefinementConfigError};
use crate::registry::{Registry, SemType};
use crate::validator::validate;
use crate::world::{tokens, DescriptorError, VideoDescriptor, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    /// Descriptor file, relative to the items file.
    pub descriptor: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    pub answer: String,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Json { path: String, line: usize, message: String },
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error("item '{id}': {reason}")]
    Item { id: String, reason: String },
    #[error("no items to evaluate")]
    NoItems,
    #[error("example set: {0}")]
    Examples(#[from] ExampleSetError),
    #[error(transparent)]
    Refinement(#[from] RefinementConfigError),
}

/// Items with the descriptors they point at.
#[derive(Debug, Clone)]
pub struct EvalSuite {
    pub items: Vec<EvalItem>,
    pub world: World,
    /// `EvalItem::descriptor` → video id.
    videos: BTreeMap<String, String>,
}

impl EvalSuite {
    /// Pairs items with descriptors named `<id>.vworld.json`, the layout
    /// [`EvalSuite::save`] writes.
    pub fn from_parts(items: Vec<EvalItem>, descriptors: Vec<VideoDescriptor>) -> Result<Self, EvalError> {
        let mut videos = BTreeMap::new();
        let mut world = World::new();
        for d in descriptors {
            d.validate()?;
            videos.insert(format!("{}.vworld.json", d.id), d.id.clone());
            world.insert(d);
        }
        let suite = Self { items, world, videos };
        suite.check()?;
        Ok(suite)
    }

    /// Reads JSON Lines items; descriptor paths resolve against the items
    /// file's directory.
    pub fn load(items_path: &Path) -> Result<Self, EvalError> {
        let shown = items_path.display().to_string();
        let io = |source| EvalError::Io {
            path: shown.clone(),
            source,
        };
        let file = std::fs::File::open(items_path).map_err(io)?;
        let base = items_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut items: Vec<EvalItem> = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            items.push(serde_json::from_str(&line).map_err(|e| EvalError::Json {
                path: shown.clone(),
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        let mut world = World::new();
        let mut videos = BTreeMap::new();
        for item in &items {
            if videos.contains_key(&item.descriptor) {
                continue;
            }
            let d = VideoDescriptor::load(&base.join(&item.descriptor))?;
            videos.insert(item.descriptor.clone(), d.id.clone());
            world.insert(d);
        }
        let suite = Self { items, world, videos };
        suite.check()?;
        Ok(suite)
    }

    /// Writes `items.jsonl` and one descriptor file per video into `dir`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf, EvalError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| EvalError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for (file, id) in &self.videos {
            let path = dir.join(file);
            self.world.get(id).expect("suite video exists").save(&path).map_err(io(&path))?;
        }
        let path = dir.join("items.jsonl");
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io(&path))?);
        for item in &self.items {
            writeln!(f, "{}", serde_json::to_string(item).expect("item serializes")).map_err(io(&path))?;
        }
        f.flush().map_err(io(&path))?;
        Ok(path)
    }

    fn check(&self) -> Result<(), EvalError> {
        let mut ids = BTreeSet::new();
        for item in &self.items {
            let fail = |reason: &str| {
                Err(EvalError::Item {
                    id: item.id.clone(),
                    reason: reason.to_owned(),
                })
            };
            if !ids.insert(item.id.as_str()) {
                return fail("duplicate id");
            }
            if !self.videos.contains_key(&item.descriptor) {
                return fail("descriptor not loaded");
            }
            if let Some(options) = &item.options {
                if !options.iter().any(|o| normalize(o) == normalize(&item.answer)) {
                    return fail("answer is not among the options");
                }
            }
        }
        Ok(())
    }

    pub fn video_of(&self, item: &EvalItem) -> &str {
        &self.videos[&item.descriptor]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationFlags {
    pub error_correction: bool,
    pub self_refinement: bool,
    /// Ignored without `self_refinement`.
    pub refinement_iterations: u32,
}

impl AblationFlags {
    pub const NONE: Self = Self {
        error_correction: false,
        self_refinement: false,
        refinement_iterations: 0,
    };

    pub fn all(refinement_iterations: u32) -> Self {
        Self {
            error_correction: true,
            self_refinement: true,
            refinement_iterations,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub correction: CorrectionOptions,
    pub exec: ExecOptions,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            correction: CorrectionOptions::default(),
            exec: ExecOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    pub question: String,
    pub generated_program: Option<String>,
    /// The program that was (or would have been) executed, before options
    /// are spliced into its VQA questions.
    pub corrected_program: Option<String>,
    pub valid: bool,
    /// Raw text returned by the program.
    pub raw_prediction: Option<String>,
    /// Prediction after snapping to the options, if any.
    pub predicted: Option<String>,
    pub answer: String,
    pub correct: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub flags: AblationFlags,
    pub max_correct_iters: usize,
    pub llm_judge: bool,
    pub provider: String,
    pub example_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<ItemRecord>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub config: ConfigSnapshot,
    pub seed: u64,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,valid,predicted,answer,correct\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&r.id),
                r.valid,
                csv_field(r.predicted.as_deref().unwrap_or("")),
                csv_field(&r.answer),
                r.correct
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Lowercase, alphanumeric tokens joined by single spaces.
pub fn normalize(text: &str) -> String {
    tokens(text).join(" ")
}

/// Snaps a prediction to an option: exact case-insensitive match first,
/// then normalized equality, then the largest token overlap (first option
/// wins ties). `None` when nothing overlaps.
pub fn nearest_option<'a>(predicted: &str, options: &'a [String]) -> Option<&'a str> {
    let lower = predicted.trim().to_lowercase();
    if let Some(o) = options.iter().find(|o| o.trim().to_lowercase() == lower) {
        return Some(o);
    }
    let norm = normalize(predicted);
    if let Some(o) = options.iter().find(|o| normalize(o) == norm) {
        return Some(o);
    }
    let p: BTreeSet<String> = tokens(predicted).into_iter().collect();
    let mut best: Option<(usize, &str)> = None;
    for o in options {
        let n = tokens(o).iter().filter(|t| p.contains(*t)).count();
        if n > 0 && best.is_none_or(|(b, _)| n > b) {
            best = Some((n, o));
        }
    }
    best.map(|(_, o)| o)
}

/// `(predicted, correct)` for one raw answer.
pub fn score(raw: &str, options: Option<&[String]>, answer: &str) -> (Option<String>, bool) {
    match options {
        Some(opts) if !opts.is_empty() => {
            let picked = nearest_option(raw, opts);
            let ok = picked.is_some_and(|p| normalize(p) == normalize(answer));
            (picked.map(str::to_owned), ok)
        }
        _ => (Some(raw.to_owned()), normalize(raw) == normalize(answer)),
    }
}

/// Appends "Options: a) .. b) .." to every VQA question literal.
pub fn with_options(program: &Program, options: &[String]) -> Program {
    if options.is_empty() {
        return program.clone();
    }
    let listed: Vec<String> = options
        .iter()
        .enumerate()
        .map(|(i, o)| format!("{}) {o}", option_letter(i)))
        .collect();
    let suffix = format!(" Options: {}", listed.join(" "));
    let mut p = program.clone();
    for s in &mut p.statements {
        if s.function_name != "VQA" {
            continue;
        }
        for a in &mut s.args {
            if let (true, ArgValue::Str(q)) = (a.name == "question", &mut a.value) {
                q.push_str(&suffix);
            }
        }
    }
    p
}

fn option_letter(i: usize) -> String {
    if i < 26 {
        char::from(b'a' + i as u8).to_string()
    } else {
        (i + 1).to_string()
    }
}

fn video_types() -> BTreeMap<String, SemType> {
    BTreeMap::from([("VIDEO".to_owned(), SemType::Video)])
}

/// Everything `run_eval` needs besides the items and the example set.
pub struct EvalContext<'a> {
    pub registry: &'a Registry,
    pub bindings: &'a Bindings,
    pub gateway: &'a LlmGateway,
    pub config: &'a EvalConfig,
}

/// Re-runs the recorded program of `record`; returns the raw prediction.
pub fn replay(suite: &EvalSuite, item: &EvalItem, program: &Program, ctx: &EvalContext<'_>) -> Result<String, String> {
    let video = suite.world.input_video(suite.video_of(item)).expect("suite video exists");
    let inputs = BTreeMap::from([("VIDEO".to_owned(), Value::Video(video))]);
    let runnable = with_options(program, item.options.as_deref().unwrap_or_default());
    match execute(&runnable, &inputs, ctx.bindings, ctx.registry, &ctx.config.exec) {
        Ok((Value::Text(t), _)) => Ok(t),
        Ok((other, _)) => Err(format!("program returned {} instead of text", other.sem_type())),
        Err(e) => Err(e.to_string()),
    }
}

fn eval_item(suite: &EvalSuite, item: &EvalItem, examples: &ExampleSet, error_correction: bool, ctx: &EvalContext<'_>) -> ItemRecord {
    let mut record = ItemRecord {
        id: item.id.clone(),
        question: item.question.clone(),
        generated_program: None,
        corrected_program: None,
        valid: false,
        raw_prediction: None,
        predicted: None,
        answer: item.answer.clone(),
        correct: false,
        error: None,
    };
    let generated = match generate(&item.question, examples, ctx.registry, ctx.gateway) {
        Ok(p) => p.canonicalized(),
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.generated_program = Some(print(&generated));
    let program = if error_correction {
        let report = correct(&generated, &item.question, ctx.registry, &video_types(), ctx.gateway, ctx.config.correction);
        if let Some(e) = &report.error {
            record.error = Some(e.to_string());
        }
        report.final_program
    } else {
        generated
    };
    record.corrected_program = Some(print(&program));
    let feedback = validate(&program, ctx.registry, &video_types());
    record.valid = feedback.is_empty() && record.error.is_none();
    if !record.valid {
        if record.error.is_none() {
            record.error = Some(feedback.rendered.lines().nth(1).unwrap_or("invalid program").to_owned());
        }
        return record;
    }
    match replay(suite, item, &program, ctx) {
        Ok(raw) => {
            let (predicted, ok) = score(&raw, item.options.as_deref(), &item.answer);
            record.raw_prediction = Some(raw);
            record.predicted = predicted;
            record.correct = ok;
        }
        Err(e) => record.error = Some(e),
    }
    record
}

/// Scores every item; item failures count as wrong answers.
pub fn run_eval(
    suite: &EvalSuite,
    examples: &ExampleSet,
    flags: AblationFlags,
    ctx: &EvalContext<'_>,
) -> Result<EvalReport, EvalError> {
    if suite.is_empty() {
        return Err(EvalError::NoItems);
    }
    examples.validate(ctx.registry)?;
    let refined;
    let used = if flags.self_refinement && flags.refinement_iterations > 0 {
        let cfg = RefinementConfig::new(flags.refinement_iterations)?;
        refined = refine_set(examples, ctx.registry, ctx.gateway, cfg).sets.pop().expect("at least one iteration");
        &refined
    } else {
        examples
    };
    Ok(evaluate_with(suite, used, flags, ctx))
}

fn evaluate_with(suite: &EvalSuite, examples: &ExampleSet, flags: AblationFlags, ctx: &EvalContext<'_>) -> EvalReport {
    let records: Vec<ItemRecord> = suite
        .items
        .par_iter()
        .map(|item| eval_item(suite, item, examples, flags.error_correction, ctx))
        .collect();
    let correct = records.iter().filter(|r| r.correct).count();
    let total = records.len();
    EvalReport {
        correct,
        total,
        accuracy: correct as f64 / total as f64,
        config: ConfigSnapshot {
            flags,
            max_correct_iters: ctx.config.correction.max_iters,
            llm_judge: ctx.config.correction.llm_judge,
            provider: ctx.gateway.provider().fingerprint(),
            example_ids: examples.ids().into_iter().map(str::to_owned).collect(),
        },
        seed: ctx.config.seed,
        records,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub label: &'static str,
    pub flags: AblationFlags,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

pub const ABLATION_LABELS: [&str; 4] = [
    "w/o error correction & self refinement",
    "w/o error correction",
    "w/o self refinement",
    "with self refinement & error correction",
];

impl AblationTable {
    pub fn row(&self, label: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("setting,correct,total,accuracy\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:.4}\n", csv_field(r.label), r.correct, r.total, r.accuracy));
        }
        out
    }

    /// Both mechanisms beat each single one, which beats neither.
    pub fn is_ordered(&self) -> bool {
        let acc: Vec<f64> = ABLATION_LABELS.iter().map(|l| self.row(l).map_or(f64::NAN, |r| r.accuracy)).collect();
        let (none, sr_only, ec_only, both) = (acc[0], acc[1], acc[2], acc[3]);
        both >= ec_only && ec_only >= none && both >= sr_only && sr_only >= none
    }
}

/// The four on/off combinations of error correction and self refinement.
/// The refined set is computed once and shared by the rows that use it.
pub fn ablation_matrix(
    suite: &EvalSuite,
    examples: &ExampleSet,
    refinement_iterations: u32,
    ctx: &EvalContext<'_>,
) -> Result<AblationTable, EvalError> {
    if suite.is_empty() {
        return Err(EvalError::NoItems);
    }
    examples.validate(ctx.registry)?;
    let cfg = RefinementConfig::new(refinement_iterations)?;
    let refined = refine_set(examples, ctx.registry, ctx.gateway, cfg).sets.pop().expect("at least one iteration");
    let combos = [(false, false), (false, true), (true, false), (true, true)];
    let rows = combos
        .iter()
        .zip(ABLATION_LABELS)
        .map(|(&(ec, sr), label)| {
            let flags = AblationFlags {
                error_correction: ec,
                self_refinement: sr,
                refinement_iterations: if sr { refinement_iterations } else { 0 },
            };
            let r = evaluate_with(suite, if sr { &refined } else { examples }, flags, ctx);
            AblationRow {
                label,
                flags,
                correct: r.correct,
                total: r.total,
                accuracy: r.accuracy,
            }
        })
        .collect();
    Ok(AblationTable { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    /// `(iteration, accuracy)`, iteration 0 being the input set.
    pub rows: Vec<(u32, f64)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,accuracy\n");
        for (t, a) in &self.rows {
            out.push_str(&format!("{t},{a:.4}\n"));
        }
        out
    }
}

/// Accuracy with set(0) .. set(max_iter) as examples.
pub fn refinement_sweep(
    suite: &EvalSuite,
    examples: &ExampleSet,
    max_iter: u32,
    error_correction: bool,
    ctx: &EvalContext<'_>,
) -> Result<SweepTable, EvalError> {
    if suite.is_empty() {
        return Err(EvalError::NoItems);
    }
    examples.validate(ctx.registry)?;
    let outcome = refine_set(examples, ctx.registry, ctx.gateway, RefinementConfig::new(max_iter)?);
    let rows = std::iter::once(examples)
        .chain(&outcome.sets)
        .zip(0..)
        .map(|(set, t)| {
            let flags = AblationFlags {
                error_correction,
                self_refinement: t > 0,
                refinement_iterations: t,
            };
            (t, evaluate_with(suite, set, flags, ctx).accuracy)
        })
        .collect();
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests;
