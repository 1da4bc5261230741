use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tpsmc_core::channel_system::ChannelSystem;
use tpsmc_core::kernel::{EventKind, EventRecord, Rational, Value};
use tpsmc_core::mtl::{parse_properties, CsAtoms, PropertySet};
use tpsmc_core::smc::{estimate, Run, RunStep, SmcReport};
use tpsmc_scxml::{compile_automata, map_trace, parse_scxml, CompiledModel, MessageEvent, ScxmlAtoms};

use crate::diagnostics::{CliError, Diagnostic};
use crate::manifest::{Manifest, ModelKind, SmcOverrides};
use crate::model_file::ModelFile;

/// Steps per trace when neither the flags nor the manifest say otherwise.
pub const DEFAULT_TRACE_STEPS: u64 = 1000;

pub enum Model {
    Scxml(CompiledModel),
    Graphs(ChannelSystem),
}

impl Model {
    pub fn system(&self) -> &ChannelSystem {
        match self {
            Model::Scxml(m) => &m.system,
            Model::Graphs(cs) => cs,
        }
    }

    pub fn parse_properties(&self, xml: &str) -> Result<PropertySet, tpsmc_core::ModelError> {
        match self {
            Model::Scxml(m) => parse_properties(xml, &ScxmlAtoms::new(m)),
            Model::Graphs(cs) => parse_properties(xml, &CsAtoms::new(cs)),
        }
    }
}

pub struct Project {
    pub manifest: Manifest,
    pub model: Model,
    pub properties: Option<PropertySet>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Parses and compiles every model file and the property file, reporting all
/// per-file problems together.
pub fn load(manifest: Manifest) -> Result<Project, CliError> {
    let paths = manifest.model_paths();
    let model = match manifest.kind() {
        ModelKind::Scxml => {
            let mut automata = Vec::new();
            let mut diags = Vec::new();
            for (p, shown) in paths.iter().zip(&manifest.models) {
                match parse_scxml(&read(p)?) {
                    Ok(a) => automata.push(a),
                    Err(e) => diags.push(Diagnostic::from_scxml(&e).in_file(shown.display().to_string())),
                }
            }
            if !diags.is_empty() {
                return Err(CliError::Validation(diags));
            }
            let compiled = compile_automata(&automata, &manifest.compile_options())
                .map_err(|e| CliError::Validation(vec![Diagnostic::from_scxml(&e)]))?;
            Model::Scxml(compiled)
        }
        ModelKind::Graphs => {
            let shown = manifest.models[0].display().to_string();
            let file = ModelFile::from_json(&read(&paths[0])?)
                .and_then(|f| f.build())
                .map_err(|e| CliError::Validation(vec![Diagnostic::new("model", e.to_string()).in_file(shown)]))?;
            Model::Graphs(file)
        }
    };
    let properties = match manifest.property_path() {
        Some(p) => {
            let shown = manifest.properties.as_ref().expect("path came from the manifest").display().to_string();
            let set = model
                .parse_properties(&read(&p)?)
                .map_err(|e| CliError::Validation(vec![Diagnostic::new("property", e.to_string()).in_file(shown)]))?;
            Some(set)
        }
        None => None,
    };
    Ok(Project {
        manifest,
        model,
        properties,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub graphs: Vec<String>,
    pub channels: usize,
    pub locations: usize,
    pub transitions: usize,
    pub properties: Vec<String>,
}

pub fn summarize(p: &Project) -> Summary {
    let cs = p.model.system();
    Summary {
        graphs: cs.pgs().iter().map(|g| g.name().to_string()).collect(),
        channels: cs.channels().len(),
        locations: cs.pgs().iter().map(|g| g.locations().len()).sum(),
        transitions: cs.pgs().iter().map(|g| g.transitions().len()).sum(),
        properties: p.properties.iter().flat_map(|s| s.names().map(str::to_string)).collect(),
    }
}

pub fn validate(manifest: &Path) -> Result<Summary, CliError> {
    let project = load(Manifest::load(manifest)?)?;
    Ok(summarize(&project))
}

/// A trace line of a JSON graph model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphEvent {
    pub t: Rational,
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    /// The action of the fired transition.
    pub event: String,
    pub origin: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
}

fn graph_event(cs: &ChannelSystem, t: Rational, ev: &EventRecord) -> GraphEvent {
    let pg = cs.pg(ev.pg);
    GraphEvent {
        t,
        kind: ev.kind,
        channel: ev.channel.map(|c| cs.channel(c).name.clone()),
        event: pg.action_name(pg.transitions()[ev.transition].action).to_string(),
        origin: cs.pg(ev.source_pg.unwrap_or(ev.pg)).name().to_string(),
        target: ev.target_pg.map(|p| cs.pg(p).name().to_string()),
        payload: ev.payload.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceOptions {
    pub seed: u64,
    pub count: u64,
    pub out: PathBuf,
    pub max_steps: Option<u64>,
}

/// Simulates trial `trial` and renders it as JSON lines. A model error ends the
/// trace with an `{"error": ...}` record.
pub fn trace_lines(project: &Project, seed: u64, trial: u64, max_steps: u64) -> (Vec<String>, Option<String>) {
    let cs = project.model.system();
    let mut steps = Vec::new();
    let mut error = None;
    match cs.initial_states() {
        Ok(init) => {
            let mut run = Run::new(cs, &init, seed, trial, project.manifest.grid());
            while run.steps() < max_steps {
                match run.step() {
                    Ok(RunStep::Fired { event, time }) => steps.push((time, event)),
                    Ok(_) => break,
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
        }
        Err(e) => error = Some(e.to_string()),
    }
    let mut lines: Vec<String> = match &project.model {
        Model::Scxml(m) => map_trace(m, &steps).iter().map(|e: &MessageEvent| json(e)).collect(),
        Model::Graphs(cs) => steps.iter().map(|(t, ev)| json(&graph_event(cs, *t, ev))).collect(),
    };
    if let Some(e) = &error {
        lines.push(json(&BTreeMap::from([("error", e)])));
    }
    (lines, error)
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("trace records always serialize")
}

/// Writes `trace-<k>.jsonl` for trials `0..count` and returns the paths.
pub fn trace(project: &Project, opts: &TraceOptions) -> Result<Vec<PathBuf>, CliError> {
    if opts.count > 0 {
        std::fs::create_dir_all(&opts.out)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", opts.out.display())))?;
    }
    let max_steps = opts.max_steps.or(project.manifest.smc.max_steps).unwrap_or(DEFAULT_TRACE_STEPS);
    let mut written = Vec::new();
    for k in 0..opts.count {
        let (lines, error) = trace_lines(project, opts.seed, k, max_steps);
        let path = opts.out.join(format!("trace-{k}.jsonl"));
        let mut body = lines.join("\n");
        body.push('\n');
        std::fs::write(&path, body).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
        if let Some(e) = error {
            return Err(CliError::Runtime(format!("trial {k}: {e}")));
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    pub flags: SmcOverrides,
    pub emit_model: Option<PathBuf>,
    /// Keep the wall-clock time in the report, which makes it non-reproducible.
    pub timing: bool,
}

pub fn emit_model(project: &Project, path: &Path) -> Result<(), CliError> {
    let text = ModelFile::describe(project.model.system()).to_json();
    std::fs::write(path, text + "\n").map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Estimates every property of the project.
pub fn verify(project: &Project, opts: &VerifyOptions) -> Result<SmcReport, CliError> {
    let cfg = project.manifest.smc_config(&opts.flags);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let props = project
        .properties
        .as_ref()
        .ok_or_else(|| CliError::Usage("the manifest lists no property file".into()))?;
    if let Some(p) = &opts.emit_model {
        emit_model(project, p)?;
    }
    let mut report = estimate(project.model.system(), props, &cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    if !opts.timing {
        report.wall_time_secs = None;
    }
    Ok(report)
}

pub fn report_json(report: &SmcReport) -> String {
    serde_json::to_string_pretty(report).expect("reports always serialize")
}

/// Plain-text table of a report.
pub fn report_table(report: &SmcReport) -> String {
    let width = report.properties.iter().map(|p| p.name.len()).max().unwrap_or(0).max(8);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>8}  {:>8}  {:>8}  {:>17}  {:>12}",
        "property", "samples", "success", "estimate", "interval", "inconclusive"
    );
    for p in &report.properties {
        let mut flags = Vec::new();
        if !p.converged {
            flags.push("not converged");
        }
        if p.inconclusive_flag {
            flags.push("many inconclusive");
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>8}  {:>8.4}  [{:.4}, {:.4}]  {:>12}{}",
            p.name,
            p.samples,
            p.successes,
            p.estimate,
            p.lower,
            p.upper,
            p.inconclusive,
            if flags.is_empty() { String::new() } else { format!("  ({})", flags.join(", ")) }
        );
    }
    let _ = writeln!(
        out,
        "{} trials, seed {}, epsilon {}, delta {}{}",
        report.trials,
        report.seed,
        report.epsilon,
        report.delta,
        report.wall_time_secs.map_or(String::new(), |s| format!(", {s:.2}s"))
    );
    if report.budget_exhausted {
        out.push_str("sample budget exhausted before every property reached its bound\n");
    }
    out
}
