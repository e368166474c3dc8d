//! Command-line frontend: parsing, context checks, satisfaction, bounded
//! verdicts, simulation and development graph management.
//!
//! Exit codes: 0 success or verdict holds, 1 verdict fails or a violation
//! was found (with report), 2 usage, parse or context error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use loosem::checker::{
    check_consistent, check_redundant, check_refines_with, simulate, CheckError, SearchMode, SimError,
};
use loosem::devgraph::{DevGraph, GraphError, TransformKind};
use loosem::doc::{check_context, parse_document, render_document, DocKind, Document};
use loosem::model::{parse_trace, render_trace, validate_system, SystemTrace};
use loosem::semantics::{enumerate, Bounds, DocSet, SemanticsError};
use loosem::syntax::Diagnostic;

#[derive(Parser)]
#[command(name = "loosem", version, about = "Loose semantics for object-oriented modeling documents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct BoundsArgs {
    /// Maximum number of objects per class
    #[arg(long, default_value_t = 1)]
    max_objects: usize,
    /// Maximum number of events per trace
    #[arg(long, default_value_t = 1)]
    trace_len: usize,
    /// Number of anonymous classes beyond the mentioned ones
    #[arg(long, default_value_t = 0)]
    extra_classes: usize,
    /// Object model whose classes exist in every system of the universe
    #[arg(long)]
    base: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a document or system trace and summarize it
    Parse { file: PathBuf },
    /// Cross-document context conditions
    Context {
        #[arg(required = true)]
        docs: Vec<PathBuf>,
    },
    /// Satisfaction of a system trace against each document
    Check {
        /// System trace file
        system: PathBuf,
        /// Document files
        docs: Vec<PathBuf>,
    },
    /// Enumerate the bounded universe of traces satisfying the documents
    Enumerate {
        /// Document files
        docs: Vec<PathBuf>,
        #[command(flatten)]
        bounds: BoundsArgs,
        /// Print only the number of traces
        #[arg(long)]
        count_only: bool,
    },
    /// Check that the new documents refine the old ones
    Refines {
        /// Documents being refined
        #[arg(long, num_args = 1.., required = true)]
        old: Vec<PathBuf>,
        /// Refining documents
        #[arg(long, num_args = 1.., required = true)]
        new: Vec<PathBuf>,
        #[command(flatten)]
        bounds: BoundsArgs,
        /// Stop at the first counterexample (which one is reported may vary)
        #[arg(long)]
        early_exit: bool,
    },
    /// Check that a document is implied by the others
    Redundant {
        /// Candidate document
        doc: PathBuf,
        #[arg(long, num_args = 0..)]
        against: Vec<PathBuf>,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Check that some system satisfies all documents
    Consistent {
        /// Document files
        docs: Vec<PathBuf>,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Generate a trace driven by the lifecycles
    Simulate {
        #[arg(required = true)]
        docs: Vec<PathBuf>,
        /// Random seed; equal seeds give equal traces
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum number of environment calls
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Trace output file; the trace goes to standard output otherwise
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Development graph operations
    Graph {
        #[command(subcommand)]
        op: GraphOp,
    },
}

#[derive(Subcommand)]
enum GraphOp {
    /// Create an empty graph manifest
    Init { graph: PathBuf },
    /// Add a document
    Add {
        graph: PathBuf,
        doc: PathBuf,
        /// Expected document kind (OM, STD, MSC, ITD)
        #[arg(long)]
        kind: Option<DocKind>,
    },
    /// Record a transformation from active documents to new files
    Transform {
        graph: PathBuf,
        /// refine, preserve, edit or decompose
        #[arg(long)]
        kind: TransformKind,
        /// Names of active input documents
        #[arg(long = "in", num_args = 1.., required = true)]
        inputs: Vec<String>,
        /// Files holding the output documents
        #[arg(long = "out", num_args = 1.., required = true)]
        outputs: Vec<PathBuf>,
        #[arg(long, default_value = "")]
        note: String,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Ancestry of a document
    Trace { graph: PathBuf, id: String },
    /// Node states and records
    Status { graph: PathBuf },
    /// Mark a document redundant without evidence
    Override { graph: PathBuf, id: String },
}

#[derive(Debug, Error)]
enum Fail {
    /// Usage, parse or context error: exit 2.
    #[error("{0}")]
    Input(String),
    /// A failing verdict or violation already reported: exit 1.
    #[error("{0}")]
    Verdict(String),
}

struct Out {
    text: String,
    code: u8,
}

impl Out {
    fn ok(text: String) -> Self {
        Out { text, code: 0 }
    }

    fn fails(text: String, failed: bool) -> Self {
        Out {
            text,
            code: u8::from(failed),
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))
}

fn locate(path: &Path, d: &Diagnostic) -> String {
    format!("{}:{}:{}: {}", path.display(), d.line, d.col, d.message)
}

fn load_doc(path: &Path) -> Result<Document, Fail> {
    parse_document(&read(path)?).map_err(|diags| {
        Fail::Input(diags.iter().map(|d| locate(path, d)).collect::<Vec<_>>().join("\n"))
    })
}

fn load_docs(paths: &[PathBuf]) -> Result<Vec<Document>, Fail> {
    paths.iter().map(|p| load_doc(p)).collect()
}

fn load_trace(path: &Path) -> Result<SystemTrace, Fail> {
    let s = parse_trace(&read(path)?).map_err(|d| Fail::Input(locate(path, &d)))?;
    let v = validate_system(&s);
    if !v.is_empty() {
        let lines: Vec<String> = v.iter().map(|x| format!("{}: {x}", path.display())).collect();
        return Err(Fail::Input(lines.join("\n")));
    }
    Ok(s)
}

/// Context diagnostics, each attributed to the file of its document.
fn context_lines(paths: &[PathBuf], docs: &[Document], diags: &[Diagnostic]) -> Vec<String> {
    diags
        .iter()
        .map(|d| match docs.iter().position(|x| x.id() == d.doc) {
            Some(i) => locate(&paths[i], d),
            None => d.to_string(),
        })
        .collect()
}

fn doc_set(paths: &[PathBuf], docs: &[Document]) -> Result<DocSet, Fail> {
    DocSet::new(docs).map_err(|e| semantic_fail(paths, docs, e))
}

fn semantic_fail(paths: &[PathBuf], docs: &[Document], e: SemanticsError) -> Fail {
    match e {
        SemanticsError::ContextIncorrect(d) => Fail::Input(context_lines(paths, docs, &d).join("\n")),
        e => Fail::Input(e.to_string()),
    }
}

fn check_fail(paths: &[PathBuf], docs: &[Document], e: CheckError) -> Fail {
    match e {
        CheckError::Semantics(e) => semantic_fail(paths, docs, e),
    }
}

fn bounds(b: &BoundsArgs) -> Result<Bounds, Fail> {
    let mut out = Bounds::new(b.max_objects, b.trace_len, b.extra_classes);
    if let Some(p) = &b.base {
        let d = load_doc(p)?;
        let Document::Om(_) = d else {
            return Err(Fail::Input(format!("{}: --base needs an object model", p.display())));
        };
        let set = doc_set(std::slice::from_ref(p), std::slice::from_ref(&d))?;
        out = out.with_base(set.table().clone());
    }
    Ok(out)
}

fn summary(d: &Document) -> String {
    match d {
        Document::Om(om) => format!(
            "OM {}: {} class(es), {} association(s), {} invariant(s)",
            om.name,
            om.classes().count(),
            om.assocs().count(),
            om.invariants().count()
        ),
        Document::Std(s) => format!(
            "STD {} for {}: {} state(s), {} transition(s)",
            s.name,
            s.class,
            s.states.len(),
            s.transitions.len()
        ),
        Document::Msc(m) => format!("MSC {}: {} role(s), {} item(s)", m.name, m.roles.len(), m.body.len()),
        Document::Itd(i) => format!("ITD {}: state {}", i.name, i.state),
    }
}

fn parse_cmd(file: &Path) -> Result<Out, Fail> {
    let text = read(file)?;
    if text.trim_start().starts_with("system") {
        let s = load_trace(file)?;
        let objects = s.snapshots().last().map_or(0, |x| x.objects.len());
        return Ok(Out::ok(format!(
            "system: {} class(es), {} event(s), {} object(s) at the end\n",
            s.class_table.classes.len(),
            s.steps.len(),
            objects
        )));
    }
    let d = load_doc(file)?;
    Ok(Out::ok(format!("{}\n{}", summary(&d), render_document(&d))))
}

fn context_cmd(paths: &[PathBuf]) -> Result<Out, Fail> {
    let docs = load_docs(paths)?;
    let diags = check_context(&docs);
    if diags.is_empty() {
        Ok(Out::ok(format!("{} document(s): context-correct\n", docs.len())))
    } else {
        Err(Fail::Input(context_lines(paths, &docs, &diags).join("\n")))
    }
}

fn check_cmd(system: &Path, paths: &[PathBuf]) -> Result<Out, Fail> {
    let s = load_trace(system)?;
    let docs = load_docs(paths)?;
    let set = DocSet::in_context(&docs, &s.class_table).map_err(|e| semantic_fail(paths, &docs, e))?;
    let mut text = String::new();
    let mut all = true;
    for (i, p) in paths.iter().enumerate() {
        if set.satisfies_doc(&s, i) {
            let _ = writeln!(text, "{}: SAT", p.display());
        } else {
            all = false;
            let single = DocSet::in_context(&docs[i..=i], &s.class_table).map_err(|e| semantic_fail(paths, &docs, e))?;
            let why = single.violation(&s).unwrap_or_default();
            let _ = writeln!(text, "{}: UNSAT ({why})", p.display());
        }
    }
    Ok(Out::fails(text, !all))
}

fn enumerate_cmd(paths: &[PathBuf], b: &BoundsArgs, count_only: bool) -> Result<Out, Fail> {
    let docs = load_docs(paths)?;
    let set = doc_set(paths, &docs)?;
    let traces = enumerate(&set, &bounds(b)?).map_err(|e| semantic_fail(paths, &docs, e))?;
    if count_only {
        return Ok(Out::ok(format!("{}\n", traces.len())));
    }
    let mut text = String::new();
    for (i, s) in traces.iter().enumerate() {
        let _ = writeln!(text, "// trace {}", i + 1);
        text.push_str(&render_trace(s));
    }
    let _ = writeln!(text, "// {} trace(s)", traces.len());
    Ok(Out::ok(text))
}

fn simulate_cmd(
    paths: &[PathBuf],
    seed: u64,
    steps: usize,
    output: Option<&Path>,
    b: &BoundsArgs,
) -> Result<Out, Fail> {
    let docs = load_docs(paths)?;
    let sim = match simulate(&docs, &bounds(b)?, seed, steps) {
        Ok(s) => s,
        Err(SimError::Semantics(e)) => return Err(semantic_fail(paths, &docs, e)),
        Err(e @ SimError::NoObjectModel) => return Err(Fail::Input(e.to_string())),
        Err(e) => return Err(Fail::Verdict(e.to_string())),
    };
    let trace = render_trace(&sim.trace);
    let mut text = sim.report();
    match output {
        Some(p) => fs::write(p, &trace).map_err(|e| Fail::Input(format!("{}: {e}", p.display())))?,
        None => text.push_str(&trace),
    }
    let violated = sim.charts.iter().any(|(_, ok)| !ok);
    Ok(Out::fails(text, violated))
}

fn graph_fail(e: GraphError) -> Fail {
    match e {
        GraphError::CheckFailed { .. } => Fail::Verdict(e.to_string()),
        e => Fail::Input(e.to_string()),
    }
}

fn graph_cmd(op: &GraphOp) -> Result<Out, Fail> {
    match op {
        GraphOp::Init { graph } => {
            if graph.exists() {
                return Err(Fail::Input(format!("{} already exists", graph.display())));
            }
            let root = graph.parent().map(Path::to_path_buf).unwrap_or_default();
            DevGraph::new(root).save(graph).map_err(graph_fail)?;
            Ok(Out::ok(format!("initialized {}\n", graph.display())))
        }
        GraphOp::Add { graph, doc, kind } => {
            let mut g = DevGraph::load(graph).map_err(graph_fail)?;
            let id = g.add(doc, *kind).map_err(graph_fail)?;
            g.save(graph).map_err(graph_fail)?;
            Ok(Out::ok(format!("added {id}\n")))
        }
        GraphOp::Transform {
            graph,
            kind,
            inputs,
            outputs,
            note,
            bounds: b,
        } => {
            let mut g = DevGraph::load(graph).map_err(graph_fail)?;
            let idx = g
                .transform(*kind, inputs, outputs, &bounds(b)?, note)
                .map_err(graph_fail)?;
            g.save(graph).map_err(graph_fail)?;
            let r = &g.records[idx];
            let evidence = r.evidence.as_ref().map_or("no evidence".to_string(), |e| e.to_string());
            Ok(Out::ok(format!(
                "record {idx}: {} {} -> {}: {evidence}\n",
                r.kind,
                r.inputs.join(","),
                r.outputs.join(",")
            )))
        }
        GraphOp::Trace { graph, id } => {
            let g = DevGraph::load(graph).map_err(graph_fail)?;
            let a = g.trace(id).map_err(graph_fail)?;
            Ok(Out::ok(a.render(&g)))
        }
        GraphOp::Status { graph } => {
            let g = DevGraph::load(graph).map_err(graph_fail)?;
            Ok(Out::ok(g.status()))
        }
        GraphOp::Override { graph, id } => {
            let mut g = DevGraph::load(graph).map_err(graph_fail)?;
            g.override_redundant(id).map_err(graph_fail)?;
            g.save(graph).map_err(graph_fail)?;
            Ok(Out::ok(format!("{id} marked redundant by MANUAL OVERRIDE\n")))
        }
    }
}

fn run(cli: &Cli) -> Result<Out, Fail> {
    match &cli.command {
        Command::Parse { file } => parse_cmd(file),
        Command::Context { docs } => context_cmd(docs),
        Command::Check { system, docs } => check_cmd(system, docs),
        Command::Enumerate {
            docs,
            bounds: b,
            count_only,
        } => enumerate_cmd(docs, b, *count_only),
        Command::Refines {
            old,
            new,
            bounds: b,
            early_exit,
        } => {
            let old_docs = load_docs(old)?;
            let new_docs = load_docs(new)?;
            let mode = if *early_exit {
                SearchMode::EarlyExit
            } else {
                SearchMode::Deterministic
            };
            let all_paths: Vec<PathBuf> = old.iter().chain(new).cloned().collect();
            let all_docs: Vec<Document> = old_docs.iter().chain(&new_docs).cloned().collect();
            let v = check_refines_with(&old_docs, &new_docs, &bounds(b)?, mode)
                .map_err(|e| check_fail(&all_paths, &all_docs, e))?;
            Ok(Out::fails(v.report(), !v.holds()))
        }
        Command::Redundant { doc, against, bounds: b } => {
            let d = load_doc(doc)?;
            let rest = load_docs(against)?;
            let all_paths: Vec<PathBuf> = against.iter().chain([doc]).cloned().collect();
            let all_docs: Vec<Document> = rest.iter().chain([&d]).cloned().collect();
            let v = check_redundant(&d, &rest, &bounds(b)?).map_err(|e| check_fail(&all_paths, &all_docs, e))?;
            Ok(Out::fails(v.report(), !v.holds()))
        }
        Command::Consistent { docs, bounds: b } => {
            let ds = load_docs(docs)?;
            let v = check_consistent(&ds, &bounds(b)?).map_err(|e| check_fail(docs, &ds, e))?;
            Ok(Out::fails(v.report(), !v.holds()))
        }
        Command::Simulate {
            docs,
            seed,
            steps,
            output,
            bounds: b,
        } => simulate_cmd(docs, *seed, *steps, output.as_deref(), b),
        Command::Graph { op } => graph_cmd(op),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.code)
        }
        Err(Fail::Verdict(msg)) => {
            println!("{msg}");
            ExitCode::from(1)
        }
        Err(Fail::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
