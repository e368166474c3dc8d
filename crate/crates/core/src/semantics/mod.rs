//! Loose set semantics: the satisfaction relation `s ⊨ d` per document kind,
//! its extension to document sets (intersection), and exhaustive
//! enumeration of the bounded system universe.

mod lifecycle;
mod msc;
mod om;
mod universe;

pub use lifecycle::satisfies_std;
pub use msc::{satisfies_msc, satisfies_msc_in};
pub use om::satisfies_om;
pub use universe::{enumerate, enumerate_within, Partition, Universe, Visit};
pub(crate) use universe::Walker;
pub(crate) use om::explain_om;

pub(crate) use lifecycle::{outputs, param_map, post_holds, pre_holds, Owed};
pub(crate) use om::{signature_problem, snapshot_ok};

use std::fmt;

use thiserror::Error;

use crate::doc::{resolve, resolve_in, Document, MscDoc, OmDoc, Resolved, StdDoc};
use crate::model::{ClassTable, SystemTrace};
use crate::syntax::{format_diagnostics, Diagnostic};
use lifecycle::StdRun;
use msc::Nfa;

/// Finiteness parameters of the universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    /// Maximum number of objects per class.
    pub max_objects: usize,
    /// Maximum number of events per trace.
    pub max_trace_len: usize,
    /// Number of anonymous classes that may exist beyond the mentioned ones.
    pub extra_classes: usize,
    /// Classes that exist in every system of the universe, whether or not a
    /// document mentions them.
    pub base: ClassTable,
}

impl Bounds {
    pub fn new(max_objects: usize, max_trace_len: usize, extra_classes: usize) -> Self {
        Bounds {
            max_objects,
            max_trace_len,
            extra_classes,
            base: ClassTable::default(),
        }
    }

    pub fn with_base(mut self, base: ClassTable) -> Self {
        self.base = base;
        self
    }

    /// `objects,trace,extras`, as stored in evidence records.
    pub fn triple(&self) -> String {
        format!("{},{},{}", self.max_objects, self.max_trace_len, self.extra_classes)
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "max-objects={} trace-len={} extra-classes={}",
            self.max_objects, self.max_trace_len, self.extra_classes
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("no semantics for context-incorrect document set:\n{}", format_diagnostics(.0))]
    ContextIncorrect(Vec<Diagnostic>),
    #[error("empty universe: no class is mentioned and no extra classes are allowed")]
    EmptyUniverse,
    #[error("class table conflict: {0}")]
    TableConflict(String),
}

/// A context-correct document set, prepared for evaluation.
#[derive(Debug, Clone)]
pub struct DocSet {
    resolved: Resolved,
    charts: Vec<Option<Nfa>>,
}

impl DocSet {
    pub fn new(docs: &[Document]) -> Result<DocSet, SemanticsError> {
        DocSet::from_resolved(resolve(docs).map_err(SemanticsError::ContextIncorrect)?)
    }

    /// A set whose documents may also refer to the classes of `background`.
    pub fn in_context(docs: &[Document], background: &ClassTable) -> Result<DocSet, SemanticsError> {
        DocSet::from_resolved(resolve_in(docs, background).map_err(SemanticsError::ContextIncorrect)?)
    }

    fn from_resolved(resolved: Resolved) -> Result<DocSet, SemanticsError> {
        let charts = resolved
            .docs
            .iter()
            .map(|d| match d {
                Document::Msc(m) => Some(Nfa::compile(m, &resolved.docs)),
                _ => None,
            })
            .collect();
        Ok(DocSet { resolved, charts })
    }

    pub fn empty() -> DocSet {
        DocSet::new(&[]).expect("the empty set is context-correct")
    }

    /// The documents with names resolved.
    pub fn docs(&self) -> &[Document] {
        &self.resolved.docs
    }

    /// The class table merged from all object models.
    pub fn table(&self) -> &ClassTable {
        &self.resolved.table
    }

    pub fn len(&self) -> usize {
        self.resolved.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resolved.docs.is_empty()
    }

    pub fn union(&self, other: &DocSet) -> Result<DocSet, SemanticsError> {
        let docs: Vec<Document> = self.docs().iter().chain(other.docs()).cloned().collect();
        DocSet::new(&docs)
    }

    pub(crate) fn oms(&self) -> impl Iterator<Item = &OmDoc> {
        self.docs().iter().filter_map(|d| match d {
            Document::Om(o) => Some(o),
            _ => None,
        })
    }

    pub(crate) fn stds(&self) -> impl Iterator<Item = &StdDoc> {
        self.docs().iter().filter_map(|d| match d {
            Document::Std(s) => Some(s),
            _ => None,
        })
    }

    pub(crate) fn charts(&self) -> impl Iterator<Item = (&MscDoc, &Nfa)> {
        self.docs()
            .iter()
            .zip(&self.charts)
            .filter_map(|(d, n)| match (d, n) {
                (Document::Msc(m), Some(n)) => Some((m, n)),
                _ => None,
            })
    }

    /// `s ⊨ d` for the `i`-th document, in the context of the whole set.
    pub fn satisfies_doc(&self, s: &SystemTrace, i: usize) -> bool {
        match &self.docs()[i] {
            Document::Om(d) => satisfies_om(s, d),
            Document::Std(d) => satisfies_std(s, d),
            Document::Msc(d) => msc::holds(self.charts[i].as_ref().expect("compiled"), d, s),
            Document::Itd(_) => true,
        }
    }

    /// Why `s` is outside the set semantics: the first violated document
    /// and, for object models, the violated constraint.
    pub fn violation(&self, s: &SystemTrace) -> Option<String> {
        let i = (0..self.len()).find(|&i| !self.satisfies_doc(s, i))?;
        let d = &self.docs()[i];
        let detail = match d {
            Document::Om(om) => explain_om(s, om),
            Document::Std(std) => format!("the lifecycle of class {} rejects the trace", std.class),
            Document::Msc(_) => "a triggered scenario is not completed".to_string(),
            Document::Itd(_) => unreachable!("informal documents constrain nothing"),
        };
        Some(format!("{} {} is violated: {detail}", d.kind(), d.id()))
    }

    /// Membership in the intersection of the document semantics.
    pub fn satisfies(&self, s: &SystemTrace) -> bool {
        (0..self.len()).all(|i| self.satisfies_doc(s, i))
    }

    /// Incremental monitor used to prune enumeration.
    pub(crate) fn monitor(&self) -> Monitor<'_> {
        Monitor { set: self }
    }
}

/// Prefix-closed part of a document set (object models and lifecycles),
/// checked step by step; charts are checked on complete traces.
pub(crate) struct Monitor<'a> {
    set: &'a DocSet,
}

#[derive(Debug, Clone, Default)]
pub struct MonitorState {
    runs: Vec<StdRun>,
}

impl Monitor<'_> {
    pub fn table_ok(&self, table: &ClassTable) -> bool {
        self.set.oms().all(|om| signature_problem(table, om).is_none())
    }

    pub fn snapshot_ok(&self, table: &ClassTable, snap: &crate::model::Snapshot) -> bool {
        self.set.oms().all(|om| snapshot_ok(table, om, snap))
    }

    pub fn start(&self, s: &SystemTrace) -> MonitorState {
        MonitorState {
            runs: self.set.stds().map(|d| StdRun::start(d, s)).collect(),
        }
    }

    /// Advances over the last step of `s`; `None` when some lifecycle fails.
    pub fn step(&self, state: &MonitorState, s: &SystemTrace) -> Option<MonitorState> {
        let i = s.len() - 1;
        let mut next = state.clone();
        for (run, d) in next.runs.iter_mut().zip(self.set.stds()) {
            if !run.step(d, s, i) {
                return None;
            }
        }
        Some(next)
    }

    pub fn accepts(&self, s: &SystemTrace) -> bool {
        self.set.charts().all(|(m, n)| msc::holds(n, m, s))
    }
}

/// `s ⊨ d`. Fails with an error for a document that is not context-correct
/// against the class table of `s`.
pub fn satisfies(s: &SystemTrace, d: &Document) -> Result<bool, SemanticsError> {
    let set = DocSet::in_context(std::slice::from_ref(d), &s.class_table)?;
    Ok(set.satisfies_doc(s, 0))
}

/// `s ∈ ⋂_{d∈D} [[d]]`.
pub fn satisfies_set(s: &SystemTrace, docs: &[Document]) -> Result<bool, SemanticsError> {
    Ok(DocSet::in_context(docs, &s.class_table)?.satisfies(s))
}
