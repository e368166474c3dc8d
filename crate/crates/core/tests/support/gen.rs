//! Random documents, expressions and snapshots.

use std::collections::BTreeSet;

use loosem::doc::{
    AssocDecl, AssocEndDecl, ClassDecl, ClassMember, Document, Invariant, ItdDoc, ItdState, MscDoc, MscItem,
    MscMsg, Multiplicity, OmDoc, OmMember, OutputTemplate, Receiver, RoleDecl, StdDoc, Transition,
};
use loosem::model::{Link, MsgKind, ObjectId, OpSig, Snapshot, Value, ValueDomain};
use loosem::sl::{BinOp, Quantifier, SlExpr};
use loosem::syntax::Pos;
use rand::seq::SliceRandom;
use rand::Rng;

use super::TestRng;

fn pick<'a>(r: &mut TestRng, xs: &[&'a str]) -> &'a str {
    xs.choose(r).copied().expect("non-empty pool")
}

fn subset<'a>(r: &mut TestRng, xs: &[&'a str], max: usize) -> Vec<&'a str> {
    let n = r.gen_range(0..=max.min(xs.len()));
    let mut v: Vec<&str> = xs.to_vec();
    v.shuffle(r);
    v.truncate(n);
    v
}

// ---- syntax-level ASTs, for round trips ----

const IDENTS: &[&str] = &["a", "b", "x", "y", "n", "val", "count", "q"];
const CLASSES: &[&str] = &["C", "D", "E", "Account", "Node"];
const ATTRS: &[&str] = &["b", "n", "k", "level", "owner", "flag"];
const OPS: &[&str] = &["m", "ping", "set", "deposit", "close"];
const ROLES: &[&str] = &["r", "s", "owner", "items", "next"];
const LABELS: &[&str] = &["red", "green", "blue", "open", "closed"];
const BINOPS: &[BinOp] = &[
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
    BinOp::Eq,
    BinOp::Ne,
    BinOp::Lt,
    BinOp::Le,
    BinOp::Gt,
    BinOp::Ge,
    BinOp::And,
    BinOp::Or,
    BinOp::Implies,
];

fn sl_leaf(r: &mut TestRng) -> SlExpr {
    match r.gen_range(0..6) {
        0 => SlExpr::Bool(r.gen()),
        1 => SlExpr::Int(r.gen_range(-3..=9)),
        2 => SlExpr::Nil,
        3 => SlExpr::SelfRef,
        _ => SlExpr::Ident(pick(r, IDENTS).to_string()),
    }
}

/// An arbitrary (not necessarily well-typed) expression as the parser
/// produces it.
pub fn sl_syntax(r: &mut TestRng, depth: usize) -> SlExpr {
    if depth <= 1 || r.gen_bool(0.2) {
        return sl_leaf(r);
    }
    let d = depth - 1;
    match r.gen_range(0..7) {
        0 => SlExpr::Not(Box::new(sl_syntax(r, d))),
        1 => SlExpr::Neg(Box::new(sl_syntax(r, d))),
        2 | 3 => {
            let op = *BINOPS.choose(r).unwrap();
            SlExpr::bin(op, sl_syntax(r, d), sl_syntax(r, d))
        }
        4 => SlExpr::Quant {
            kind: if r.gen() { Quantifier::Forall } else { Quantifier::Exists },
            var: pick(r, IDENTS).to_string(),
            class: pick(r, CLASSES).to_string(),
            primed: r.gen_bool(0.3),
            body: Box::new(sl_syntax(r, d)),
        },
        5 => SlExpr::Linked {
            assoc: pick(r, &["L", "Owns"]).to_string(),
            source: Box::new(sl_syntax(r, d)),
            target: Box::new(sl_syntax(r, d)),
            primed: r.gen_bool(0.3),
        },
        _ => {
            let mut target = sl_syntax(r, d);
            if matches!(target, SlExpr::Int(_)) {
                target = SlExpr::Ident(pick(r, IDENTS).to_string());
            }
            SlExpr::attr(target, pick(r, ATTRS), r.gen_bool(0.3))
        }
    }
}

fn domain(r: &mut TestRng) -> ValueDomain {
    match r.gen_range(0..4) {
        0 => ValueDomain::Bool,
        1 => {
            let lo = r.gen_range(-2..=2);
            ValueDomain::Int { lo, hi: lo + r.gen_range(0..=3) }
        }
        2 => {
            let mut ls = subset(r, LABELS, 3);
            if ls.is_empty() {
                ls.push("red");
            }
            ValueDomain::Enum(ls.into_iter().map(str::to_string).collect())
        }
        _ => ValueDomain::Ref(pick(r, CLASSES).to_string()),
    }
}

fn mult(r: &mut TestRng) -> Multiplicity {
    let lo = r.gen_range(0..=2);
    let hi = if r.gen() { None } else { Some(lo + r.gen_range(0..=2)) };
    Multiplicity { lo, hi }
}

fn om_ast(r: &mut TestRng, name: String) -> OmDoc {
    let mut members = Vec::new();
    let mut declared: Vec<&str> = Vec::new();
    for c in subset(r, CLASSES, 3) {
        let extends: Vec<String> = subset(r, &declared, 2).into_iter().map(str::to_string).collect();
        let mut names = subset(r, ATTRS, 3);
        names.extend(subset(r, OPS, 2));
        let mut cm = Vec::new();
        for n in &names {
            if ATTRS.contains(n) {
                cm.push(ClassMember::Attr(n.to_string(), domain(r)));
            } else {
                let params = (0..r.gen_range(0..=2)).map(|_| domain(r)).collect();
                let result = r.gen_bool(0.3).then(|| domain(r));
                cm.push(ClassMember::Op(OpSig { name: n.to_string(), params, result }));
            }
        }
        members.push(OmMember::Class(ClassDecl { name: c.to_string(), extends, members: cm, pos: Pos::default() }));
        declared.push(c);
    }
    for (i, a) in subset(r, &["L", "Owns", "Has"], 2).into_iter().enumerate() {
        let roles = subset(r, ROLES, 5);
        let (s, t) = if roles.len() >= 2 { (roles[0], roles[1]) } else { ("src", "dst") };
        members.insert(
            r.gen_range(0..=members.len()),
            OmMember::Assoc(AssocDecl {
                name: a.to_string(),
                source: AssocEndDecl { role: s.to_string(), class: pick(r, CLASSES).to_string(), mult: mult(r) },
                target: AssocEndDecl { role: t.to_string(), class: pick(r, CLASSES).to_string(), mult: mult(r) },
                aggregate: i == 0 && r.gen(),
                pos: Pos::default(),
            }),
        );
    }
    for i in 0..r.gen_range(0..=3) {
        members.push(OmMember::Inv(Invariant {
            name: format!("I{i}"),
            expr: sl_syntax(r, 4),
            pos: Pos::default(),
        }));
    }
    OmDoc { name, members, pos: Pos::default() }
}

fn std_ast(r: &mut TestRng, name: String) -> StdDoc {
    let mut states: Vec<String> = subset(r, &["A", "B", "Idle", "Busy"], 4).into_iter().map(str::to_string).collect();
    if states.is_empty() {
        states.push("A".into());
    }
    let initial = states.choose(r).unwrap().clone();
    let transitions = (0..r.gen_range(0..=3))
        .map(|_| Transition {
            source: states.choose(r).unwrap().clone(),
            target: states.choose(r).unwrap().clone(),
            op: pick(r, OPS).to_string(),
            params: subset(r, &["v", "w", "amount"], 2).into_iter().map(str::to_string).collect(),
            pre: if r.gen() { SlExpr::Bool(true) } else { sl_syntax(r, 3) },
            outputs: (0..r.gen_range(0..=2))
                .map(|_| OutputTemplate {
                    receiver: Receiver {
                        root: pick(r, &["self", "v", "other"]).to_string(),
                        path: subset(r, ROLES, 2).into_iter().map(str::to_string).collect(),
                    },
                    op: pick(r, OPS).to_string(),
                    args: (0..r.gen_range(0..=2)).map(|_| sl_syntax(r, 2)).collect(),
                    pos: Pos::default(),
                })
                .collect(),
            post: if r.gen() { SlExpr::Bool(true) } else { sl_syntax(r, 3) },
            pos: Pos::default(),
        })
        .collect();
    StdDoc {
        name,
        class: pick(r, CLASSES).to_string(),
        states,
        initial,
        transitions,
        pos: Pos::default(),
    }
}

fn literal(r: &mut TestRng) -> Value {
    match r.gen_range(0..4) {
        0 => Value::Bool(r.gen()),
        1 => Value::Int(r.gen_range(-3..=9)),
        2 => Value::Nil,
        _ => Value::Enum(pick(r, LABELS).to_string()),
    }
}

fn msc_items(r: &mut TestRng, roles: &[String], depth: usize) -> Vec<MscItem> {
    let mut out = Vec::new();
    for _ in 0..r.gen_range(0..=3) {
        let k = if depth == 0 { 0 } else { r.gen_range(0..6) };
        out.push(match k {
            0..=2 => {
                if roles.is_empty() {
                    continue;
                }
                let kind = if r.gen_bool(0.7) { MsgKind::Call } else { MsgKind::Return };
                let n = match kind {
                    MsgKind::Call => r.gen_range(0..=2),
                    MsgKind::Return => r.gen_range(0..=1),
                };
                MscItem::Msg(MscMsg {
                    from: roles.choose(r).unwrap().clone(),
                    to: roles.choose(r).unwrap().clone(),
                    kind,
                    op: pick(r, OPS).to_string(),
                    args: (0..n).map(|_| literal(r)).collect(),
                    pos: Pos::default(),
                })
            }
            3 => MscItem::Seq(msc_items(r, roles, depth - 1)),
            4 => MscItem::Loop(msc_items(r, roles, depth - 1)),
            _ => MscItem::Alt((0..r.gen_range(2..=3)).map(|_| msc_items(r, roles, depth - 1)).collect()),
        });
    }
    if r.gen_bool(0.2) {
        out.push(MscItem::Ref(pick(r, &["Login", "Setup"]).to_string(), Pos::default()));
    }
    out
}

fn msc_ast(r: &mut TestRng, name: String) -> MscDoc {
    let roles: Vec<RoleDecl> = subset(r, &["client", "server", "db", "u"], 3)
        .into_iter()
        .map(|n| RoleDecl { name: n.to_string(), class: pick(r, CLASSES).to_string(), pos: Pos::default() })
        .collect();
    let names: Vec<String> = roles.iter().map(|d| d.name.clone()).collect();
    MscDoc { name, body: msc_items(r, &names, 2), roles, pos: Pos::default() }
}

const WORDS: &[&str] = &["the", "account", "must", "never", "\"quoted\"", "a\\b", "x = 1;", "// note", "{nested}", "\n"];

fn itd_ast(r: &mut TestRng, name: String) -> ItdDoc {
    let state = ItdState { redundant: r.gen(), validated: r.gen() };
    let words: Vec<&str> = (0..r.gen_range(0..8)).map(|_| pick(r, WORDS)).collect();
    ItdDoc { name, state, text: format!(" {} ", words.join(" ")), pos: Pos::default() }
}

/// A random document of kind `k` (0 = OM, 1 = STD, 2 = MSC, 3 = ITD).
pub fn document_ast(r: &mut TestRng, k: usize, name: String) -> Document {
    match k {
        0 => Document::Om(om_ast(r, name)),
        1 => Document::Std(std_ast(r, name)),
        2 => Document::Msc(msc_ast(r, name)),
        _ => Document::Itd(itd_ast(r, name)),
    }
}

// ---- well-typed expression text over a fixed schema ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Bool,
    Int,
    Ref(&'static str),
    Enum,
}

pub struct Schema {
    /// Classes with all attributes, inherited ones included.
    pub classes: &'static [(&'static str, &'static [(&'static str, Kind)])],
    /// (subclass, superclass)
    pub supers: &'static [(&'static str, &'static str)],
    /// (name, source class, target class)
    pub assocs: &'static [(&'static str, &'static str, &'static str)],
    pub labels: &'static [&'static str],
}

/// Schema for evaluator oracle checks.
pub const ORACLE_OM: &str = "objectmodel Probe {
  class C { attr b: Bool; attr n: Int[0..2]; attr r: Ref D; attr e: Enum{red, green} }
  class D { attr k: Bool }
  class E extends D { attr z: Bool }
  assoc L src: C[0..*] dst: D[0..*]
}";

pub const ORACLE_SCHEMA: Schema = Schema {
    classes: &[
        ("C", &[("b", Kind::Bool), ("n", Kind::Int), ("r", Kind::Ref("D")), ("e", Kind::Enum)]),
        ("D", &[("k", Kind::Bool)]),
        ("E", &[("k", Kind::Bool), ("z", Kind::Bool)]),
    ],
    supers: &[("E", "D")],
    assocs: &[("L", "C", "D")],
    labels: &["red", "green"],
};

/// Vocabulary of the random semantic documents.
pub const VOCAB_OM: &str = "objectmodel Base {
  class C { attr b: Bool; attr n: Int[0..1]; op m() }
  class D { attr k: Bool; op ping() }
  assoc L c: C[0..*] d: D[0..1]
}";

pub const VOCAB_SCHEMA: Schema = Schema {
    classes: &[("C", &[("b", Kind::Bool), ("n", Kind::Int)]), ("D", &[("k", Kind::Bool)])],
    supers: &[],
    assocs: &[("L", "C", "D")],
    labels: &[],
};

/// The vocabulary without its association, for larger populations.
pub const PLAIN_OM: &str = "objectmodel Base {
  class C { attr b: Bool; attr n: Int[0..1]; op m() }
  class D { attr k: Bool; op ping() }
}";

const PLAIN_SCHEMA: Schema = Schema {
    classes: &[("C", &[("b", Kind::Bool), ("n", Kind::Int)]), ("D", &[("k", Kind::Bool)])],
    supers: &[],
    assocs: &[],
    labels: &[],
};

const C_ONLY_SCHEMA: Schema = Schema {
    classes: &[("C", &[("b", Kind::Bool), ("n", Kind::Int)])],
    supers: &[],
    assocs: &[],
    labels: &[],
};

impl Schema {
    fn attrs(&self, class: &str) -> &'static [(&'static str, Kind)] {
        self.classes.iter().find(|(c, _)| *c == class).map(|(_, a)| *a).unwrap_or(&[])
    }

    fn is_sub(&self, sub: &str, sup: &str) -> bool {
        sub == sup || self.supers.iter().any(|(a, b)| *a == sub && self.is_sub(b, sup))
    }
}

pub struct ExprGen<'a> {
    pub r: &'a mut TestRng,
    pub schema: &'a Schema,
    /// Whether `nil` may appear.
    pub nil: bool,
    vars: Vec<(String, &'static str)>,
    fresh: usize,
}

impl<'a> ExprGen<'a> {
    pub fn new(r: &'a mut TestRng, schema: &'a Schema) -> Self {
        ExprGen { r, schema, nil: true, vars: Vec::new(), fresh: 0 }
    }

    fn var_of(&mut self, class: &str) -> Option<String> {
        let vs: Vec<String> =
            self.vars.iter().filter(|(_, c)| self.schema.is_sub(c, class)).map(|(v, _)| v.clone()).collect();
        vs.choose(self.r).cloned()
    }

    /// An object-valued expression of static class `class`, or `None`.
    fn obj(&mut self, class: &'static str, d: usize) -> Option<String> {
        let mut options: Vec<String> = Vec::new();
        if let Some(v) = self.var_of(class) {
            options.push(v);
        }
        if d > 0 {
            for &(c, attrs) in self.schema.classes {
                for &(a, k) in attrs {
                    if k == Kind::Ref(class) && self.r.gen_bool(0.5) {
                        if let Some(t) = self.obj(c_static(self.schema, c), d - 1) {
                            options.push(format!("{t}.{a}"));
                        }
                    }
                }
            }
        }
        options.choose(self.r).cloned()
    }

    /// An attribute access of kind `k`, if any is in reach.
    fn attr(&mut self, k: Kind, d: usize) -> Option<String> {
        let mut cands = Vec::new();
        for &(c, attrs) in self.schema.classes {
            for &(a, ak) in attrs {
                if ak == k {
                    cands.push((c, a));
                }
            }
        }
        cands.shuffle(self.r);
        for (c, a) in cands {
            if let Some(t) = self.obj(c_static(self.schema, c), d) {
                return Some(format!("{t}.{a}"));
            }
        }
        None
    }

    pub fn int(&mut self, d: usize) -> String {
        if d == 0 || self.r.gen_bool(0.3) {
            if self.r.gen() {
                if let Some(a) = self.attr(Kind::Int, d.min(1)) {
                    return a;
                }
            }
            return self.r.gen_range(0..=3).to_string();
        }
        match self.r.gen_range(0..4) {
            0 => format!("({} + {})", self.int(d - 1), self.int(d - 1)),
            1 => format!("({} - {})", self.int(d - 1), self.int(d - 1)),
            2 => format!("({} * {})", self.int(d - 1), self.int(d - 1)),
            _ => format!("-({})", self.int(d - 1)),
        }
    }

    pub fn boolean(&mut self, d: usize) -> String {
        if d == 0 {
            if self.r.gen_bool(0.6) {
                if let Some(a) = self.attr(Kind::Bool, 1) {
                    return a;
                }
            }
            return if self.r.gen() { "true".into() } else { "false".into() };
        }
        let d1 = d - 1;
        match self.r.gen_range(0..10) {
            0 => format!("!({})", self.boolean(d1)),
            1 => format!("({} && {})", self.boolean(d1), self.boolean(d1)),
            2 => format!("({} || {})", self.boolean(d1), self.boolean(d1)),
            3 => format!("({} => {})", self.boolean(d1), self.boolean(d1)),
            4 => {
                let op = *["==", "!=", "<", "<=", ">", ">="].choose(self.r).unwrap();
                format!("({} {op} {})", self.int(d1), self.int(d1))
            }
            5 => {
                if let Some(a) = self.attr(Kind::Enum, d1) {
                    let l = *self.schema.labels.choose(self.r).unwrap();
                    let op = if self.r.gen() { "==" } else { "!=" };
                    return format!("({a} {op} {l})");
                }
                self.boolean(d1)
            }
            6 => {
                let classes: Vec<&'static str> = self.schema.classes.iter().map(|(c, _)| *c).collect();
                let c = *classes.choose(self.r).unwrap();
                match self.obj(c, d1) {
                    Some(a) => {
                        let rhs = if self.nil && self.r.gen() {
                            "nil".to_string()
                        } else {
                            self.obj(c, d1).unwrap_or_else(|| a.clone())
                        };
                        let op = if self.r.gen() { "==" } else { "!=" };
                        format!("({a} {op} {rhs})")
                    }
                    None => self.boolean(d1),
                }
            }
            7 => {
                let assocs = self.schema.assocs;
                let Some(&(name, s, t)) = assocs.choose(self.r) else { return self.boolean(d1) };
                match (self.obj(s, d1), self.obj(t, d1)) {
                    (Some(a), Some(b)) => format!("linked({name}, {a}, {b})"),
                    _ => self.boolean(d1),
                }
            }
            _ => {
                let classes: Vec<&'static str> = self.schema.classes.iter().map(|(c, _)| *c).collect();
                let c = *classes.choose(self.r).unwrap();
                self.fresh += 1;
                let v = format!("v{}", self.fresh);
                self.vars.push((v.clone(), c));
                let body = self.boolean(d1);
                self.vars.pop();
                let q = if self.r.gen() { "forall" } else { "exists" };
                format!("({q} {v}: {c} . {body})")
            }
        }
    }
}

fn c_static(schema: &Schema, c: &str) -> &'static str {
    schema.classes.iter().find(|(n, _)| *n == c).map(|(n, _)| *n).expect("schema class")
}

// ---- snapshots over the oracle schema ----

/// A random snapshot over [`ORACLE_SCHEMA`] with at most `max` objects.
/// With `nil` false, every reference attribute points to an object when one
/// exists.
pub fn oracle_snapshot(r: &mut TestRng, max: usize, nil: bool) -> Snapshot {
    let mut snap = Snapshot::default();
    let n = r.gen_range(0..=max);
    let mut counts = [0usize; 3];
    let mut ids: Vec<(ObjectId, &str)> = Vec::new();
    for _ in 0..n {
        let k = r.gen_range(0..3);
        counts[k] += 1;
        let (class, stem) = [("C", "c"), ("D", "d"), ("E", "e")][k];
        ids.push((ObjectId::new(format!("{stem}{}", counts[k])), class));
    }
    let ds: Vec<ObjectId> = ids.iter().filter(|(_, c)| *c != "C").map(|(o, _)| o.clone()).collect();
    for (id, class) in &ids {
        let mut attrs = std::collections::BTreeMap::new();
        match *class {
            "C" => {
                attrs.insert("b".to_string(), Value::Bool(r.gen()));
                attrs.insert("n".to_string(), Value::Int(r.gen_range(0..=2)));
                let target = if ds.is_empty() || (nil && r.gen_bool(0.3)) {
                    Value::Nil
                } else {
                    Value::Ref(ds.choose(r).unwrap().clone())
                };
                attrs.insert("r".to_string(), target);
                attrs.insert("e".to_string(), Value::Enum(pick(r, &["red", "green"]).to_string()));
            }
            "D" => {
                attrs.insert("k".to_string(), Value::Bool(r.gen()));
            }
            _ => {
                attrs.insert("k".to_string(), Value::Bool(r.gen()));
                attrs.insert("z".to_string(), Value::Bool(r.gen()));
            }
        }
        snap.insert(id.clone(), *class, attrs);
    }
    let links: BTreeSet<Link> = ids
        .iter()
        .filter(|(_, c)| *c == "C")
        .flat_map(|(c, _)| ds.iter().map(move |d| Link::new("L", c.clone(), d.clone())))
        .filter(|_| r.gen())
        .collect();
    snap.links = links;
    snap
}

// ---- semantic documents over [`VOCAB_OM`] ----

/// A random object model over the shared vocabulary, possibly without
/// class D, with up to two random invariants. Without `assoc` the model
/// never declares or mentions association L.
pub fn semantic_om(r: &mut TestRng, name: &str, assoc: bool) -> String {
    let with_d = r.gen_bool(0.5);
    let mut out = format!("objectmodel {name} {{ class C {{ attr b: Bool; attr n: Int[0..1]; op m() }} ");
    if with_d {
        out.push_str("class D { attr k: Bool; op ping() } ");
        if assoc {
            out.push_str("assoc L c: C[0..*] d: D[0..1] ");
        }
    }
    let schema = match (with_d, assoc) {
        (false, _) => &C_ONLY_SCHEMA,
        (true, true) => &VOCAB_SCHEMA,
        (true, false) => &PLAIN_SCHEMA,
    };
    for i in 0..r.gen_range(0..=2) {
        let mut g = ExprGen::new(r, schema);
        let depth = g.r.gen_range(1..=3);
        let e = g.boolean(depth);
        out.push_str(&format!("inv I{i}: {e} "));
    }
    out.push('}');
    out
}

/// A random lifecycle for class C of the shared vocabulary. Only with
/// `assoc` may a transition call `ping` along L.
pub fn semantic_std(r: &mut TestRng, name: &str, assoc: bool) -> String {
    let mut out = format!("std {name} for C {{ states {{ A, B }} initial A ");
    for _ in 0..r.gen_range(0..=3) {
        let from = pick(r, &["A", "B"]);
        let to = pick(r, &["A", "B"]);
        out.push_str(&format!("trans {from} -> {to} on m() "));
        out.push_str(pick(r, &["", "pre b", "pre !b", "pre n == 0"]));
        out.push(' ');
        if assoc && r.gen_bool(0.2) {
            out.push_str("out [ self.d.ping() ] ");
        }
        out.push_str(pick(r, &["", "post b' == !b", "post b' == b", "post n' >= n", "post n' == n"]));
        out.push(' ');
    }
    out.push('}');
    out
}

/// A random chart over roles `c: C` and `d: D` of the shared vocabulary.
pub fn semantic_msc(r: &mut TestRng, name: &str) -> String {
    let msgs = ["c -> d : ping()", "d -> c : return ping", "d -> c : m()", "c -> d : return m"];
    let mut body = vec![msgs[*[0usize, 2].choose(r).unwrap()].to_string()];
    for _ in 0..r.gen_range(0..=2) {
        let m = msgs.choose(r).unwrap();
        body.push(match r.gen_range(0..4) {
            0 => format!("alt {{ {m} | }}"),
            1 => format!("loop {{ {m} }}"),
            _ => m.to_string(),
        });
    }
    format!("msc {name} {{ roles {{ c: C, d: D }} {} }}", body.join(" "))
}
