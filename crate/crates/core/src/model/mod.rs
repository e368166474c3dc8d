//! The finite system model: class tables, object snapshots, message events
//! and system traces.
//!
//! A [`SystemTrace`] is one bounded member of the system universe: an initial
//! snapshot followed by alternating message events and snapshots.

mod table;
pub(crate) mod text;
mod validate;

pub use table::{AssocEnd, AssocSig, ClassSig, ClassTable, OpSig, ValueDomain};
pub use text::{parse_trace, render_trace};
pub use validate::{replay_active_ops, validate_system, Violation, ViolationKind};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Identity of an object within one system trace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub String);

impl ObjectId {
    pub fn new(s: impl Into<String>) -> Self {
        ObjectId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Sender or receiver of a message: an object or the environment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Env,
    Obj(ObjectId),
}

impl Party {
    pub fn obj(&self) -> Option<&ObjectId> {
        match self {
            Party::Env => None,
            Party::Obj(o) => Some(o),
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Env => f.write_str("env"),
            Party::Obj(o) => write!(f, "{o}"),
        }
    }
}

/// An attribute, argument or result value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Nil,
    Bool(bool),
    Int(i64),
    Enum(String),
    Ref(ObjectId),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nil => f.write_str("nil"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Enum(l) => f.write_str(l),
            Value::Ref(o) => write!(f, "{o}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectState {
    pub attrs: BTreeMap<String, Value>,
    /// Names of the operations currently executing on the object.
    pub active: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectEntry {
    pub class: String,
    pub state: ObjectState,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub assoc: String,
    pub source: ObjectId,
    pub target: ObjectId,
}

impl Link {
    pub fn new(assoc: impl Into<String>, source: ObjectId, target: ObjectId) -> Self {
        Link {
            assoc: assoc.into(),
            source,
            target,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Snapshot {
    pub objects: BTreeMap<ObjectId, ObjectEntry>,
    pub links: BTreeSet<Link>,
}

/// Which end of an association the queried object sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkEnd {
    Source,
    Target,
}

impl Snapshot {
    pub fn insert(&mut self, id: ObjectId, class: impl Into<String>, attrs: BTreeMap<String, Value>) {
        self.objects.insert(
            id,
            ObjectEntry {
                class: class.into(),
                state: ObjectState {
                    attrs,
                    active: BTreeSet::new(),
                },
            },
        );
    }

    pub fn class_of(&self, id: &ObjectId) -> Option<&str> {
        self.objects.get(id).map(|e| e.class.as_str())
    }

    /// Objects linked to `o` under `assoc`, where `o` sits at `end`.
    pub fn link_partners(
        &self,
        assoc: &str,
        o: &ObjectId,
        end: LinkEnd,
    ) -> Result<BTreeSet<ObjectId>, ModelError> {
        if !self.objects.contains_key(o) {
            return Err(ModelError::UnknownObject(o.clone()));
        }
        Ok(self
            .links
            .iter()
            .filter(|l| l.assoc == assoc)
            .filter_map(|l| match end {
                LinkEnd::Source if &l.source == o => Some(l.target.clone()),
                LinkEnd::Target if &l.target == o => Some(l.source.clone()),
                _ => None,
            })
            .collect())
    }

    /// Objects whose class is `class` or one of its subclasses.
    pub fn objects_of(&self, table: &ClassTable, class: &str) -> BTreeSet<ObjectId> {
        self.objects
            .iter()
            .filter(|(_, e)| table.is_subclass(&e.class, class))
            .map(|(id, _)| id.clone())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MsgKind {
    Call,
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MsgEvent {
    pub kind: MsgKind,
    pub sender: Party,
    pub receiver: Party,
    pub op: String,
    /// Call arguments, or a single result value for returns.
    pub args: Vec<Value>,
}

impl MsgEvent {
    pub fn call(sender: Party, receiver: ObjectId, op: impl Into<String>, args: Vec<Value>) -> Self {
        MsgEvent {
            kind: MsgKind::Call,
            sender,
            receiver: Party::Obj(receiver),
            op: op.into(),
            args,
        }
    }

    pub fn ret(sender: ObjectId, receiver: Party, op: impl Into<String>, result: Value) -> Self {
        MsgEvent {
            kind: MsgKind::Return,
            sender: Party::Obj(sender),
            receiver,
            op: op.into(),
            args: vec![result],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    pub event: MsgEvent,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SystemTrace {
    pub class_table: ClassTable,
    pub initial: Snapshot,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("snapshot index {index} out of range (trace has {len} snapshots)")]
    StepOutOfRange { index: usize, len: usize },
    #[error("unknown object `{0}`")]
    UnknownObject(ObjectId),
}

impl SystemTrace {
    pub fn new(class_table: ClassTable, initial: Snapshot) -> Self {
        SystemTrace {
            class_table,
            initial,
            steps: Vec::new(),
        }
    }

    /// Number of snapshots (events + 1).
    pub fn len(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn snapshot(&self, index: usize) -> Result<&Snapshot, ModelError> {
        match index {
            0 => Ok(&self.initial),
            i if i <= self.steps.len() => Ok(&self.steps[i - 1].snapshot),
            i => Err(ModelError::StepOutOfRange {
                index: i,
                len: self.len(),
            }),
        }
    }

    pub fn snapshots(&self) -> impl Iterator<Item = &Snapshot> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.snapshot))
    }

    pub fn events(&self) -> impl Iterator<Item = &MsgEvent> {
        self.steps.iter().map(|s| &s.event)
    }

    pub fn last_snapshot(&self) -> &Snapshot {
        self.steps.last().map(|s| &s.snapshot).unwrap_or(&self.initial)
    }

    pub fn push(&mut self, event: MsgEvent, snapshot: Snapshot) {
        self.steps.push(Step { event, snapshot });
    }

    /// Objects of class `class` (or a subclass) at snapshot `index`.
    pub fn objects_of(&self, index: usize, class: &str) -> Result<BTreeSet<ObjectId>, ModelError> {
        if !self.class_table.classes.contains_key(class) {
            return Err(ModelError::UnknownClass(class.to_string()));
        }
        Ok(self.snapshot(index)?.objects_of(&self.class_table, class))
    }
}
