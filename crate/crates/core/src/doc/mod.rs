//! Documents: object models (OM), state transition diagrams (STD), message
//! sequence charts (MSC) and informal text documents (ITD).
//!
//! Expressions inside documents are stored as parsed (names unresolved);
//! [`check_context`] resolves and type checks them against the class table
//! merged from all object models of a document set.

mod context;
mod parse;
mod render;

pub use context::{check_context, resolve, resolve_in, Resolved};
pub use parse::parse_document;
pub use render::render_document;

use std::fmt;

use crate::model::{AssocEnd, AssocSig, ClassSig, ClassTable, MsgKind, OpSig, Value, ValueDomain};
use crate::sl::SlExpr;
use crate::syntax::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DocKind {
    Om,
    Std,
    Msc,
    Itd,
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocKind::Om => "OM",
            DocKind::Std => "STD",
            DocKind::Msc => "MSC",
            DocKind::Itd => "ITD",
        })
    }
}

impl std::str::FromStr for DocKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "OM" => Ok(DocKind::Om),
            "STD" => Ok(DocKind::Std),
            "MSC" => Ok(DocKind::Msc),
            "ITD" => Ok(DocKind::Itd),
            other => Err(format!("unknown document kind `{other}`")),
        }
    }
}

/// Association end multiplicity; `hi == None` is `*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multiplicity {
    pub lo: u32,
    pub hi: Option<u32>,
}

impl Multiplicity {
    pub const ANY: Multiplicity = Multiplicity { lo: 0, hi: None };

    pub fn admits(&self, n: usize) -> bool {
        n >= self.lo as usize && self.hi.is_none_or(|h| n <= h as usize)
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(h) => write!(f, "[{}..{}]", self.lo, h),
            None => write!(f, "[{}..*]", self.lo),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassMember {
    Attr(String, ValueDomain),
    Op(OpSig),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub extends: Vec<String>,
    pub members: Vec<ClassMember>,
    pub pos: Pos,
}

impl ClassDecl {
    pub fn signature(&self) -> ClassSig {
        let mut sig = ClassSig::default();
        for m in &self.members {
            match m {
                ClassMember::Attr(n, d) => sig.attrs.push((n.clone(), d.clone())),
                ClassMember::Op(op) => sig.ops.push(op.clone()),
            }
        }
        sig
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssocEndDecl {
    pub role: String,
    pub class: String,
    pub mult: Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssocDecl {
    pub name: String,
    pub source: AssocEndDecl,
    pub target: AssocEndDecl,
    pub aggregate: bool,
    pub pos: Pos,
}

impl AssocDecl {
    pub fn signature(&self) -> AssocSig {
        AssocSig {
            source: AssocEnd {
                role: self.source.role.clone(),
                class: self.source.class.clone(),
            },
            target: AssocEnd {
                role: self.target.role.clone(),
                class: self.target.class.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invariant {
    pub name: String,
    pub expr: SlExpr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OmMember {
    Class(ClassDecl),
    Assoc(AssocDecl),
    Inv(Invariant),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmDoc {
    pub name: String,
    pub members: Vec<OmMember>,
    pub pos: Pos,
}

impl OmDoc {
    pub fn classes(&self) -> impl Iterator<Item = &ClassDecl> {
        self.members.iter().filter_map(|m| match m {
            OmMember::Class(c) => Some(c),
            _ => None,
        })
    }

    pub fn assocs(&self) -> impl Iterator<Item = &AssocDecl> {
        self.members.iter().filter_map(|m| match m {
            OmMember::Assoc(a) => Some(a),
            _ => None,
        })
    }

    pub fn invariants(&self) -> impl Iterator<Item = &Invariant> {
        self.members.iter().filter_map(|m| match m {
            OmMember::Inv(i) => Some(i),
            _ => None,
        })
    }

    /// The signature declared by this document alone.
    pub fn class_table(&self) -> ClassTable {
        let mut t = ClassTable::default();
        for c in self.classes() {
            t.add_class(c.name.clone(), c.signature());
            for sup in &c.extends {
                t.generalization.insert((c.name.clone(), sup.clone()));
            }
        }
        for a in self.assocs() {
            t.associations.insert(a.name.clone(), a.signature());
        }
        t
    }
}

/// Receiver of an output message: `self` or a parameter, followed by
/// association role navigation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receiver {
    pub root: String,
    pub path: Vec<String>,
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.root)?;
        for r in &self.path {
            write!(f, ".{r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputTemplate {
    pub receiver: Receiver,
    pub op: String,
    pub args: Vec<SlExpr>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub source: String,
    pub target: String,
    pub op: String,
    pub params: Vec<String>,
    pub pre: SlExpr,
    pub outputs: Vec<OutputTemplate>,
    pub post: SlExpr,
    pub pos: Pos,
}

impl Transition {
    pub fn label(&self) -> String {
        format!("{} -> {} on {}", self.source, self.target, self.op)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StdDoc {
    pub name: String,
    pub class: String,
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<Transition>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MscMsg {
    pub from: String,
    pub to: String,
    pub kind: MsgKind,
    pub op: String,
    /// Call arguments; for a return, at most one result literal (none
    /// matches any result).
    pub args: Vec<Value>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MscItem {
    Msg(MscMsg),
    Seq(Vec<MscItem>),
    /// Choice between at least two branches.
    Alt(Vec<Vec<MscItem>>),
    /// Zero or more repetitions.
    Loop(Vec<MscItem>),
    Ref(String, Pos),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleDecl {
    pub name: String,
    pub class: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MscDoc {
    pub name: String,
    pub roles: Vec<RoleDecl>,
    pub body: Vec<MscItem>,
    pub pos: Pos,
}

impl MscDoc {
    pub fn role_class(&self, role: &str) -> Option<&str> {
        self.roles
            .iter()
            .find(|r| r.name == role)
            .map(|r| r.class.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ItdState {
    pub redundant: bool,
    pub validated: bool,
}

impl fmt::Display for ItdState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.redundant, self.validated) {
            (false, false) => "active",
            (false, true) => "validated",
            (true, false) => "redundant",
            (true, true) => "redundant-validated",
        })
    }
}

impl std::str::FromStr for ItdState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (redundant, validated) = match s {
            "active" => (false, false),
            "validated" => (false, true),
            "redundant" => (true, false),
            "redundant-validated" => (true, true),
            other => return Err(format!("unknown document state `{other}`")),
        };
        Ok(ItdState {
            redundant,
            validated,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItdDoc {
    pub name: String,
    pub state: ItdState,
    /// Verbatim text between the outer braces.
    pub text: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Document {
    Om(OmDoc),
    Std(StdDoc),
    Msc(MscDoc),
    Itd(ItdDoc),
}

impl Document {
    /// Stable document id: the declared name.
    pub fn id(&self) -> &str {
        match self {
            Document::Om(d) => &d.name,
            Document::Std(d) => &d.name,
            Document::Msc(d) => &d.name,
            Document::Itd(d) => &d.name,
        }
    }

    pub fn kind(&self) -> DocKind {
        match self {
            Document::Om(_) => DocKind::Om,
            Document::Std(_) => DocKind::Std,
            Document::Msc(_) => DocKind::Msc,
            Document::Itd(_) => DocKind::Itd,
        }
    }

    pub fn pos(&self) -> Pos {
        match self {
            Document::Om(d) => d.pos,
            Document::Std(d) => d.pos,
            Document::Msc(d) => d.pos,
            Document::Itd(d) => d.pos,
        }
    }
}
