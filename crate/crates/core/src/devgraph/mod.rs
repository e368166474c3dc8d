//! Development graph: documents as nodes with states, transformation
//! records with bounded evidence, and requirement tracing.
//!
//! Document content lives in files next to the manifest; nodes keep the
//! relative path and a content hash so that edits made after a check are
//! detected.

mod manifest;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checker::{check_preserves, check_refines, CheckError, Outcome, Verdict};
use crate::doc::{parse_document, DocKind, Document};
use crate::semantics::Bounds;
use crate::syntax::{format_diagnostics, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DocState {
    pub redundant: bool,
    pub validated: bool,
    /// Marked redundant by hand, without evidence.
    pub manual_override: bool,
}

impl fmt::Display for DocState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.redundant { "redundant" } else { "active" })?;
        if self.validated {
            f.write_str(", validated")?;
        }
        if self.manual_override {
            f.write_str(", MANUAL OVERRIDE")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TransformKind {
    Refine,
    SemanticsPreserving,
    ManualEdit,
    Decompose,
}

impl TransformKind {
    /// The manifest tag.
    pub fn tag(self) -> &'static str {
        match self {
            TransformKind::Refine => "refine",
            TransformKind::SemanticsPreserving => "preserve",
            TransformKind::ManualEdit => "edit",
            TransformKind::Decompose => "decompose",
        }
    }

    /// Whether the transformation is checked and makes its inputs redundant.
    pub fn is_checked(self) -> bool {
        self != TransformKind::ManualEdit
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Refine => "refine",
            TransformKind::SemanticsPreserving => "semantics-preserving",
            TransformKind::ManualEdit => "manual-edit",
            TransformKind::Decompose => "decompose",
        })
    }
}

impl FromStr for TransformKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "refine" => TransformKind::Refine,
            "preserve" | "semantics-preserving" => TransformKind::SemanticsPreserving,
            "edit" | "manual-edit" => TransformKind::ManualEdit,
            "decompose" => TransformKind::Decompose,
            _ => return Err(format!("unknown transformation kind `{s}`")),
        })
    }
}

/// Bounds-stamped outcome of a check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    pub outcome: Outcome,
    /// (max objects, trace length, extra classes).
    pub bounds: (usize, usize, usize),
}

impl Evidence {
    pub fn from_verdict(v: &Verdict) -> Self {
        Evidence {
            outcome: v.outcome,
            bounds: (v.bounds.max_objects, v.bounds.max_trace_len, v.bounds.extra_classes),
        }
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.bounds.0, self.bounds.1, self.bounds.2)
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.outcome, self.bounds())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformRecord {
    pub kind: TransformKind,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub evidence: Option<Evidence>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: DocKind,
    /// Relative to the graph root unless absolute.
    pub path: PathBuf,
    pub hash: String,
    pub state: DocState,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Arc {
    pub from: String,
    pub to: String,
    pub rec: usize,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: cannot parse document:\n{}", .path.display(), format_diagnostics(.diags))]
    Parse { path: PathBuf, diags: Vec<Diagnostic> },
    #[error("document id `{0}` is already in the graph")]
    DuplicateId(String),
    #[error("unknown document id `{0}`")]
    UnknownId(String),
    #[error("{}: expected a {expected} document, found {found}", .path.display())]
    KindMismatch { path: PathBuf, expected: DocKind, found: DocKind },
    #[error("document `{0}` is redundant; only active documents can be transformed")]
    NotActive(String),
    #[error("document `{id}` changed since it was added ({})", .path.display())]
    Stale { id: String, path: PathBuf },
    #[error("a transformation needs at least one input and one output")]
    EmptyTransform,
    #[error("{kind} check failed:\n{}", .verdict.report())]
    CheckFailed { kind: TransformKind, verdict: Box<Verdict> },
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("referenced document file is missing: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("unsupported manifest version `{0}` (expected GRAPH v1)")]
    Version(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("graph invariant violated: {0}")]
    Invariant(String),
}

/// Hex SHA-256 of a document file's content.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DevGraph {
    /// Directory that relative document paths are resolved against.
    pub root: PathBuf,
    pub nodes: BTreeMap<String, Node>,
    pub arcs: BTreeSet<Arc>,
    pub records: Vec<TransformRecord>,
}

/// One step back along an ancestry path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AncestryStep {
    pub from: String,
    pub rec: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ancestry {
    pub id: String,
    /// Every path to a source document, each listed from `id` backwards.
    pub paths: Vec<Vec<AncestryStep>>,
}

impl Ancestry {
    /// All transitive predecessors.
    pub fn predecessors(&self) -> BTreeSet<&str> {
        self.paths.iter().flatten().map(|s| s.from.as_str()).collect()
    }

    pub fn render(&self, g: &DevGraph) -> String {
        let mut out = format!("ancestry of {}: {} path(s)\n", self.id, self.paths.len());
        for (i, path) in self.paths.iter().enumerate() {
            out.push_str(&format!("path {}:\n", i + 1));
            let mut cur = self.id.as_str();
            for st in path {
                let r = &g.records[st.rec];
                let evidence = r
                    .evidence
                    .as_ref()
                    .map_or("no evidence".to_string(), |e| e.to_string());
                out.push_str(&format!(
                    "  {cur} <- {} [record {}, {}, {evidence}] \"{}\"\n",
                    st.from, st.rec, r.kind, r.note
                ));
                cur = &st.from;
            }
        }
        out
    }
}

impl DevGraph {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DevGraph {
            root: root.into(),
            ..DevGraph::default()
        }
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// `p` relative to the root when it lies below it.
    fn relative(&self, p: &Path) -> PathBuf {
        let abs = if p.is_absolute() {
            p.to_path_buf()
        } else {
            std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf())
        };
        let root = if self.root.is_absolute() {
            self.root.clone()
        } else {
            std::env::current_dir()
                .map(|d| d.join(&self.root))
                .unwrap_or_else(|_| self.root.clone())
        };
        let clean = |q: &Path| fs::canonicalize(q).unwrap_or_else(|_| q.to_path_buf());
        match clean(&abs).strip_prefix(clean(&root)) {
            Ok(rel) => rel.to_path_buf(),
            Err(_) => abs,
        }
    }

    fn read(path: &Path) -> Result<String, GraphError> {
        fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => GraphError::MissingFile(path.to_path_buf()),
            _ => GraphError::Io {
                path: path.to_path_buf(),
                source: e,
            },
        })
    }

    fn parse_file(path: &Path) -> Result<(Document, String), GraphError> {
        let text = Self::read(path)?;
        let doc = parse_document(&text).map_err(|diags| GraphError::Parse {
            path: path.to_path_buf(),
            diags,
        })?;
        Ok((doc, content_hash(text.as_bytes())))
    }

    /// Adds the document at `path` (resolved against the working
    /// directory) as an active node; returns its id.
    pub fn add(&mut self, path: &Path, expected: Option<DocKind>) -> Result<String, GraphError> {
        let (doc, hash) = Self::parse_file(path)?;
        if let Some(k) = expected {
            if k != doc.kind() {
                return Err(GraphError::KindMismatch {
                    path: path.to_path_buf(),
                    expected: k,
                    found: doc.kind(),
                });
            }
        }
        let id = doc.id().to_string();
        if self.nodes.contains_key(&id) {
            return Err(GraphError::DuplicateId(id));
        }
        let validated = matches!(&doc, Document::Itd(d) if d.state.validated);
        self.nodes.insert(
            id.clone(),
            Node {
                kind: doc.kind(),
                path: self.relative(path),
                hash,
                state: DocState {
                    validated,
                    ..DocState::default()
                },
            },
        );
        Ok(id)
    }

    fn node(&self, id: &str) -> Result<&Node, GraphError> {
        self.nodes.get(id).ok_or_else(|| GraphError::UnknownId(id.to_string()))
    }

    /// The current document of a node; fails if its file changed.
    pub fn document(&self, id: &str) -> Result<Document, GraphError> {
        let node = self.node(id)?;
        let (doc, hash) = Self::parse_file(&self.resolve_path(&node.path))?;
        if hash != node.hash {
            return Err(GraphError::Stale {
                id: id.to_string(),
                path: node.path.clone(),
            });
        }
        Ok(doc)
    }

    pub fn is_stale(&self, id: &str) -> Result<bool, GraphError> {
        let node = self.node(id)?;
        let text = Self::read(&self.resolve_path(&node.path))?;
        Ok(content_hash(text.as_bytes()) != node.hash)
    }

    pub fn active_ids(&self) -> Vec<String> {
        self.nodes
            .iter()
            .filter(|(_, n)| !n.state.redundant)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn documents(&self, ids: &[String]) -> Result<Vec<Document>, GraphError> {
        ids.iter().map(|id| self.document(id)).collect()
    }

    /// Applies a transformation producing the documents at `outputs`. Checked
    /// kinds compare the active documents before and after the step: the
    /// inputs become redundant only if every system satisfying the new
    /// active set satisfies the inputs within `bounds`. On failure the graph
    /// is unchanged.
    pub fn transform(
        &mut self,
        kind: TransformKind,
        inputs: &[String],
        outputs: &[PathBuf],
        bounds: &Bounds,
        note: &str,
    ) -> Result<usize, GraphError> {
        self.transform_at(kind, inputs, outputs, bounds, note, now())
    }

    pub fn transform_at(
        &mut self,
        kind: TransformKind,
        inputs: &[String],
        outputs: &[PathBuf],
        bounds: &Bounds,
        note: &str,
        timestamp: u64,
    ) -> Result<usize, GraphError> {
        if inputs.is_empty() || outputs.is_empty() {
            return Err(GraphError::EmptyTransform);
        }
        for id in inputs {
            if self.node(id)?.state.redundant {
                return Err(GraphError::NotActive(id.clone()));
            }
        }
        let in_docs = self.documents(inputs)?;
        let mut next = self.clone();
        let mut out_ids = Vec::new();
        for p in outputs {
            out_ids.push(next.add(p, None)?);
        }
        let out_docs = next.documents(&out_ids)?;
        let input_set: BTreeSet<&String> = inputs.iter().collect();
        let rest_ids: Vec<String> = self
            .active_ids()
            .into_iter()
            .filter(|id| !input_set.contains(id))
            .collect();
        let rest = self.documents(&rest_ids)?;
        let before: Vec<Document> = rest.iter().chain(&in_docs).cloned().collect();
        let after: Vec<Document> = rest.iter().chain(&out_docs).cloned().collect();
        let evidence = if kind.is_checked() {
            let verdict = match kind {
                TransformKind::SemanticsPreserving => check_preserves(&before, &after, bounds)?,
                _ => check_refines(&before, &after, bounds)?,
            };
            if !verdict.holds() {
                return Err(GraphError::CheckFailed {
                    kind,
                    verdict: Box::new(verdict),
                });
            }
            Some(Evidence::from_verdict(&verdict))
        } else {
            None
        };
        let idx = next.records.len();
        next.records.push(TransformRecord {
            kind,
            inputs: inputs.to_vec(),
            outputs: out_ids.clone(),
            evidence,
            timestamp,
            note: note.to_string(),
        });
        for i in inputs {
            for o in &out_ids {
                next.arcs.insert(Arc {
                    from: i.clone(),
                    to: o.clone(),
                    rec: idx,
                });
            }
            if kind.is_checked() {
                next.nodes.get_mut(i).expect("input exists").state.redundant = true;
            }
        }
        next.check_invariants()?;
        *self = next;
        Ok(idx)
    }

    /// Marks a document redundant without evidence. The override is kept
    /// and shown in every status report.
    pub fn override_redundant(&mut self, id: &str) -> Result<(), GraphError> {
        self.node(id)?;
        let st = &mut self.nodes.get_mut(id).expect("checked").state;
        st.redundant = true;
        st.manual_override = true;
        Ok(())
    }

    pub fn set_validated(&mut self, id: &str, validated: bool) -> Result<(), GraphError> {
        self.node(id)?;
        self.nodes.get_mut(id).expect("checked").state.validated = validated;
        Ok(())
    }

    /// Every path from `id` back to documents without predecessors.
    pub fn trace(&self, id: &str) -> Result<Ancestry, GraphError> {
        self.node(id)?;
        let mut paths = Vec::new();
        let mut cur = Vec::new();
        self.collect_paths(id, &mut cur, &mut paths);
        Ok(Ancestry {
            id: id.to_string(),
            paths,
        })
    }

    fn collect_paths(&self, id: &str, cur: &mut Vec<AncestryStep>, out: &mut Vec<Vec<AncestryStep>>) {
        let incoming: Vec<&Arc> = self.arcs.iter().filter(|a| a.to == id).collect();
        if incoming.is_empty() {
            if !cur.is_empty() {
                out.push(cur.clone());
            }
            return;
        }
        for a in incoming {
            cur.push(AncestryStep {
                from: a.from.clone(),
                rec: a.rec,
            });
            self.collect_paths(&a.from, cur, out);
            cur.pop();
        }
    }

    /// Records whose evidence no longer applies because a document they
    /// mention changed on disk.
    pub fn invalidated_records(&self) -> Vec<usize> {
        let stale: BTreeSet<&String> = self
            .nodes
            .keys()
            .filter(|id| self.is_stale(id).unwrap_or(true))
            .collect();
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.evidence.is_some() && r.inputs.iter().chain(&r.outputs).any(|d| stale.contains(d)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Human-readable state of every node and record.
    pub fn status(&self) -> String {
        let mut out = format!("{} document(s), {} record(s)\n", self.nodes.len(), self.records.len());
        for (id, n) in &self.nodes {
            let stale = match self.is_stale(id) {
                Ok(false) => "",
                Ok(true) => " STALE",
                Err(_) => " MISSING",
            };
            out.push_str(&format!("{id} [{}] {}: {}{stale}\n", n.kind, n.path.display(), n.state));
        }
        let invalid: BTreeSet<usize> = self.invalidated_records().into_iter().collect();
        for (i, r) in self.records.iter().enumerate() {
            let evidence = r.evidence.as_ref().map_or("no evidence".to_string(), |e| e.to_string());
            let mark = if invalid.contains(&i) { " (evidence invalidated)" } else { "" };
            out.push_str(&format!(
                "record {i}: {} {} -> {}: {evidence}{mark} \"{}\"\n",
                r.kind,
                r.inputs.join(","),
                r.outputs.join(","),
                r.note
            ));
        }
        out
    }

    /// Structural invariants: arcs between existing nodes, acyclic arcs,
    /// well-formed records, and evidence for every redundant node.
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::Invariant(m));
        for (i, r) in self.records.iter().enumerate() {
            if r.inputs.is_empty() || r.outputs.is_empty() {
                return bad(format!("record {i} has no inputs or no outputs"));
            }
            for d in r.inputs.iter().chain(&r.outputs) {
                if !self.nodes.contains_key(d) {
                    return bad(format!("record {i} mentions unknown document `{d}`"));
                }
            }
            if let Some(e) = &r.evidence {
                if r.kind.is_checked() && e.outcome != Outcome::HoldsWithinBounds {
                    return bad(format!("record {i} is a {} without a holding verdict", r.kind));
                }
            } else if r.kind.is_checked() {
                return bad(format!("record {i} is a {} without evidence", r.kind));
            }
        }
        for a in &self.arcs {
            if !self.nodes.contains_key(&a.from) || !self.nodes.contains_key(&a.to) {
                return bad(format!("arc {} -> {} references an unknown document", a.from, a.to));
            }
            if a.rec >= self.records.len() {
                return bad(format!("arc {} -> {} references unknown record {}", a.from, a.to, a.rec));
            }
        }
        if let Some(id) = self.cycle() {
            return bad(format!("arcs form a cycle through `{id}`"));
        }
        for (id, n) in &self.nodes {
            if n.state.redundant && !n.state.manual_override {
                let backed = self.records.iter().any(|r| {
                    r.kind.is_checked() && r.evidence.is_some() && r.inputs.contains(id)
                });
                if !backed {
                    return bad(format!("redundant document `{id}` has no evidence and no override"));
                }
            }
        }
        Ok(())
    }

    fn cycle(&self) -> Option<String> {
        let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for a in &self.arcs {
            succ.entry(&a.from).or_default().push(&a.to);
        }
        let mut mark: BTreeMap<&str, u8> = BTreeMap::new();
        fn dfs<'a>(n: &'a str, succ: &BTreeMap<&'a str, Vec<&'a str>>, mark: &mut BTreeMap<&'a str, u8>) -> bool {
            match mark.get(n) {
                Some(1) => return true,
                Some(2) => return false,
                _ => {}
            }
            mark.insert(n, 1);
            for m in succ.get(n).into_iter().flatten() {
                if dfs(m, succ, mark) {
                    return true;
                }
            }
            mark.insert(n, 2);
            false
        }
        self.nodes
            .keys()
            .find(|id| dfs(id, &succ, &mut mark))
            .cloned()
    }

    /// Manifest text.
    pub fn to_manifest(&self) -> String {
        manifest::render(self)
    }

    /// Parses a manifest; relative document paths resolve against `root`.
    /// Referenced files must exist.
    pub fn from_manifest(text: &str, root: impl Into<PathBuf>) -> Result<DevGraph, GraphError> {
        let g = manifest::parse(text, root.into())?;
        for n in g.nodes.values() {
            let p = g.resolve_path(&n.path);
            if !p.is_file() {
                return Err(GraphError::MissingFile(p));
            }
        }
        g.check_invariants()?;
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        self.check_invariants()?;
        fs::write(path, self.to_manifest()).map_err(|e| GraphError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    /// Loads a manifest; document paths resolve against its directory.
    pub fn load(path: &Path) -> Result<DevGraph, GraphError> {
        let text = Self::read(path)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_manifest(&text, root)
    }
}
