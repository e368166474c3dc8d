//! Cross-document context conditions.

use std::collections::{BTreeMap, BTreeSet};

use super::parse::intra_check;
use super::*;
use crate::model::Snapshot;
use crate::sl::{domain_type, typecheck, Mode, SlContext, SlType};
use crate::syntax::Diagnostic;

/// A context-correct document set: the merged class table and the documents
/// with every SL expression name-resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub table: ClassTable,
    pub docs: Vec<Document>,
}

/// All context diagnostics of a document set; empty iff the set is
/// context-correct.
pub fn check_context(docs: &[Document]) -> Vec<Diagnostic> {
    analyze(docs, None).0
}

/// Checks the set and returns its resolved form.
pub fn resolve(docs: &[Document]) -> Result<Resolved, Vec<Diagnostic>> {
    finish(analyze(docs, None))
}

/// As [`resolve`], with the classes of `background` (typically a system's
/// class table) available to every document. Declarations of the object
/// models take precedence over conflicting background entries.
pub fn resolve_in(docs: &[Document], background: &ClassTable) -> Result<Resolved, Vec<Diagnostic>> {
    finish(analyze(docs, Some(background)))
}

fn finish((diags, resolved): (Vec<Diagnostic>, Resolved)) -> Result<Resolved, Vec<Diagnostic>> {
    if diags.is_empty() {
        Ok(resolved)
    } else {
        Err(diags)
    }
}

struct Ctx<'a> {
    diags: Vec<Diagnostic>,
    table: ClassTable,
    docs: &'a [Document],
}

impl Ctx<'_> {
    fn push(&mut self, doc: &str, pos: Pos, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(doc, pos, msg));
    }

    fn has_class(&self, c: &str) -> bool {
        self.table.classes.contains_key(c)
    }

    fn expr(&mut self, doc: &str, pos: Pos, what: &str, e: &SlExpr, ctx: &SlContext) -> SlExpr {
        match typecheck(e, ctx) {
            Ok((r, SlType::Bool)) => r,
            Ok((_, ty)) => {
                self.push(doc, pos, format!("{what}: expected a boolean expression, found {ty}"));
                e.clone()
            }
            Err(msg) => {
                self.push(doc, pos, format!("{what}: {msg}"));
                e.clone()
            }
        }
    }
}

fn conforms(table: &ClassTable, ty: &SlType, dom: &ValueDomain) -> bool {
    match (ty, domain_type(dom)) {
        (SlType::EnumLit(l), SlType::Enum(ls)) => ls.contains(l),
        (SlType::Obj(None), SlType::Obj(_)) => true,
        (SlType::Obj(Some(a)), SlType::Obj(Some(b))) => {
            table.is_subclass(a, &b) || table.is_subclass(&b, a)
        }
        (a, b) => *a == b,
    }
}

fn analyze(docs: &[Document], background: Option<&ClassTable>) -> (Vec<Diagnostic>, Resolved) {
    let mut cx = Ctx {
        diags: Vec::new(),
        table: ClassTable::default(),
        docs,
    };
    let mut ids = BTreeSet::new();
    for d in docs {
        if !ids.insert(d.id()) {
            cx.push(d.id(), d.pos(), format!("duplicate document id `{}`", d.id()));
        }
        cx.diags.extend(intra_check(d));
    }

    for d in docs {
        if let Document::Om(om) = d {
            if let Err(conflicts) = cx.table.merge(&om.class_table()) {
                for c in conflicts {
                    cx.push(&om.name, om.pos, c);
                }
            }
        }
    }
    if let Some(bg) = background {
        // conflicting entries keep the model's declaration
        let _ = cx.table.merge(bg);
    }
    for d in docs {
        if let Document::Om(om) = d {
            check_om_refs(&mut cx, om);
        }
    }
    if let Some(c) = cx.table.has_cycle() {
        let (doc, pos) = docs
            .iter()
            .find_map(|d| match d {
                Document::Om(om) => om.classes().find(|k| k.name == c).map(|k| (om.name.clone(), k.pos)),
                _ => None,
            })
            .unwrap_or_default();
        cx.push(&doc, pos, format!("cyclic generalization through class {c}"));
    }

    let mut std_for: BTreeMap<String, String> = BTreeMap::new();
    let mut out = Vec::with_capacity(docs.len());
    for d in docs {
        let resolved = match d {
            Document::Om(om) => Document::Om(resolve_om(&mut cx, om)),
            Document::Std(std) => {
                if let Some(first) = std_for.get(&std.class) {
                    let msg = format!(
                        "class {} already has a lifecycle in STD {first}; at most one STD per class",
                        std.class
                    );
                    cx.push(&std.name, std.pos, msg);
                } else {
                    std_for.insert(std.class.clone(), std.name.clone());
                }
                Document::Std(resolve_std(&mut cx, std))
            }
            Document::Msc(msc) => {
                check_msc(&mut cx, msc);
                d.clone()
            }
            Document::Itd(_) => d.clone(),
        };
        out.push(resolved);
    }
    let table = cx.table;
    (cx.diags, Resolved { table, docs: out })
}

fn check_om_refs(cx: &mut Ctx, om: &OmDoc) {
    for c in om.classes() {
        for sup in &c.extends {
            if !cx.has_class(sup) {
                cx.push(&om.name, c.pos, format!("unknown class {sup} in `extends`"));
            }
        }
        for m in &c.members {
            let doms: Vec<&ValueDomain> = match m {
                ClassMember::Attr(_, d) => vec![d],
                ClassMember::Op(op) => op.params.iter().chain(op.result.iter()).collect(),
            };
            for d in doms {
                if let ValueDomain::Ref(r) = d {
                    if !cx.has_class(r) {
                        cx.push(&om.name, c.pos, format!("unknown class {r} in `Ref {r}`"));
                    }
                }
            }
        }
    }
    for a in om.assocs() {
        for end in [&a.source, &a.target] {
            if !cx.has_class(&end.class) {
                cx.push(&om.name, a.pos, format!("unknown class {} at association end `{}`", end.class, end.role));
            }
        }
    }
}

fn resolve_om(cx: &mut Ctx, om: &OmDoc) -> OmDoc {
    let table = cx.table.clone();
    let ctx = SlContext::single(&table);
    let mut r = om.clone();
    for m in &mut r.members {
        if let OmMember::Inv(inv) = m {
            inv.expr = cx.expr(&om.name, inv.pos, &format!("invariant {}", inv.name), &inv.expr, &ctx);
        }
    }
    r
}

fn resolve_std(cx: &mut Ctx, std: &StdDoc) -> StdDoc {
    let mut r = std.clone();
    if !cx.has_class(&std.class) {
        cx.push(&std.name, std.pos, format!("unknown class {}", std.class));
        return r;
    }
    let table = cx.table.clone();
    for t in &mut r.transitions {
        let Some(op) = table.find_op(&std.class, &t.op) else {
            cx.push(
                &std.name,
                t.pos,
                format!("class {} has no operation `{}`", std.class, t.op),
            );
            continue;
        };
        if op.params.len() != t.params.len() {
            cx.push(
                &std.name,
                t.pos,
                format!(
                    "operation `{}` takes {} parameter(s), the transition binds {}",
                    t.op,
                    op.params.len(),
                    t.params.len()
                ),
            );
            continue;
        }
        let params: Vec<(String, ValueDomain)> = t
            .params
            .iter()
            .cloned()
            .zip(op.params.iter().cloned())
            .collect();
        let single = SlContext::single(&table)
            .with_self(std.class.clone())
            .with_params(params.clone());
        let two = SlContext {
            mode: Mode::TwoState,
            ..single.clone()
        };
        let label = t.label();
        t.pre = cx.expr(&std.name, t.pos, &format!("precondition of {label}"), &t.pre, &single);
        t.post = cx.expr(&std.name, t.pos, &format!("postcondition of {label}"), &t.post, &two);
        for o in &mut t.outputs {
            let mut class = if o.receiver.root == "self" {
                Some(std.class.clone())
            } else {
                match params.iter().find(|(n, _)| *n == o.receiver.root) {
                    Some((_, ValueDomain::Ref(c))) => Some(c.clone()),
                    _ => None,
                }
            };
            if class.is_none() {
                cx.push(
                    &std.name,
                    o.pos,
                    format!("receiver `{}` is neither `self` nor a reference parameter", o.receiver.root),
                );
                continue;
            }
            for role in &o.receiver.path {
                let cur = class.take().unwrap();
                match table.navigate(&cur, role) {
                    Some((_, _, next)) => class = Some(next),
                    None => {
                        cx.push(&std.name, o.pos, format!("class {cur} has no association end `{role}`"));
                        break;
                    }
                }
            }
            let Some(class) = class else { continue };
            let Some(target_op) = table.find_op(&class, &o.op) else {
                cx.push(&std.name, o.pos, format!("class {class} has no operation `{}`", o.op));
                continue;
            };
            if target_op.params.len() != o.args.len() {
                cx.push(
                    &std.name,
                    o.pos,
                    format!(
                        "output `{}` passes {} argument(s), the operation takes {}",
                        o.op,
                        o.args.len(),
                        target_op.params.len()
                    ),
                );
                continue;
            }
            for (a, dom) in o.args.iter_mut().zip(&target_op.params) {
                match typecheck(a, &two) {
                    Ok((ra, ty)) if conforms(&table, &ty, dom) => *a = ra,
                    Ok((_, ty)) => cx.push(
                        &std.name,
                        o.pos,
                        format!("argument of output `{}` has type {ty}, expected {dom}", o.op),
                    ),
                    Err(msg) => cx.push(&std.name, o.pos, format!("argument of output `{}`: {msg}", o.op)),
                }
            }
        }
    }
    r
}

fn msgs<'a>(items: &'a [MscItem], out: &mut Vec<&'a MscMsg>, refs: &mut Vec<(&'a str, Pos)>) {
    for it in items {
        match it {
            MscItem::Msg(m) => out.push(m),
            MscItem::Seq(b) | MscItem::Loop(b) => msgs(b, out, refs),
            MscItem::Alt(bs) => bs.iter().for_each(|b| msgs(b, out, refs)),
            MscItem::Ref(n, p) => refs.push((n, *p)),
        }
    }
}

/// First basic message of the normalized body, or why there is none.
enum First<'a> {
    Msg(&'a MscMsg),
    Empty,
    Ambiguous(&'static str),
}

fn first_of<'a>(docs: &'a [Document], items: &'a [MscItem], seen: &mut Vec<&'a str>) -> First<'a> {
    for it in items {
        match it {
            MscItem::Msg(m) => return First::Msg(m),
            MscItem::Seq(b) => match first_of(docs, b, seen) {
                First::Empty => continue,
                f => return f,
            },
            MscItem::Alt(_) => return First::Ambiguous("a choice"),
            MscItem::Loop(_) => return First::Ambiguous("a repetition"),
            MscItem::Ref(n, _) => {
                if seen.contains(&n.as_str()) {
                    return First::Empty;
                }
                let Some(Document::Msc(t)) = docs.iter().find(|d| d.id() == n) else {
                    return First::Empty;
                };
                seen.push(n);
                let f = first_of(docs, &t.body, seen);
                seen.pop();
                match f {
                    First::Empty => continue,
                    f => return f,
                }
            }
        }
    }
    First::Empty
}

fn ref_cycle<'a>(docs: &'a [Document], name: &'a str, stack: &mut Vec<&'a str>) -> bool {
    if stack.contains(&name) {
        return true;
    }
    let Some(Document::Msc(m)) = docs.iter().find(|d| d.id() == name) else {
        return false;
    };
    stack.push(name);
    let (mut ms, mut refs) = (Vec::new(), Vec::new());
    msgs(&m.body, &mut ms, &mut refs);
    let cyc = refs.iter().any(|(r, _)| ref_cycle(docs, r, stack));
    stack.pop();
    cyc
}

fn check_msc(cx: &mut Ctx, msc: &MscDoc) {
    let name = msc.name.as_str();
    for r in &msc.roles {
        if !cx.has_class(&r.class) {
            cx.push(name, r.pos, format!("unknown class {} for role {}", r.class, r.name));
        }
    }
    let (mut ms, mut refs) = (Vec::new(), Vec::new());
    msgs(&msc.body, &mut ms, &mut refs);
    let empty = Snapshot::default();
    for m in ms {
        let owner = match m.kind {
            MsgKind::Call => &m.to,
            MsgKind::Return => &m.from,
        };
        let Some(class) = msc.role_class(owner) else { continue };
        if !cx.has_class(class) {
            continue;
        }
        let Some(op) = cx.table.find_op(class, &m.op) else {
            cx.push(name, m.pos, format!("class {class} has no operation `{}`", m.op));
            continue;
        };
        let doms: Vec<ValueDomain> = match m.kind {
            MsgKind::Call => {
                if op.params.len() != m.args.len() {
                    cx.push(
                        name,
                        m.pos,
                        format!("`{}` takes {} argument(s), message has {}", m.op, op.params.len(), m.args.len()),
                    );
                    continue;
                }
                op.params.clone()
            }
            MsgKind::Return => match (&op.result, m.args.is_empty()) {
                (_, true) => vec![],
                (Some(d), false) => vec![d.clone()],
                (None, false) => vec![ValueDomain::Ref(class.to_string())],
            },
        };
        for (v, d) in m.args.iter().zip(&doms) {
            let ok = match (d, v) {
                (ValueDomain::Ref(_), Value::Nil) => true,
                (ValueDomain::Ref(_), _) => false,
                _ => d.admits(&cx.table, &empty, v),
            };
            if !ok {
                cx.push(name, m.pos, format!("literal {v} does not belong to {d}"));
            }
        }
    }
    for (r, pos) in refs {
        match cx.docs.iter().find(|d| d.id() == r) {
            Some(Document::Msc(target)) => {
                for role in &target.roles {
                    if msc.role_class(&role.name) != Some(role.class.as_str()) {
                        cx.push(
                            name,
                            pos,
                            format!("ref {r}: role {} is not declared here with class {}", role.name, role.class),
                        );
                    }
                }
            }
            _ => cx.push(name, pos, format!("unresolved ref {r}")),
        }
    }
    let mut stack = Vec::new();
    if ref_cycle(cx.docs, name, &mut stack) {
        cx.push(name, msc.pos, format!("cyclic ref through msc {name}"));
    }
    match first_of(cx.docs, &msc.body, &mut vec![name]) {
        First::Msg(m) if m.kind == MsgKind::Call => {}
        First::Msg(m) => cx.push(name, m.pos, "the trigger (first message) must be a call"),
        First::Empty => cx.push(name, msc.pos, "msc has no trigger message"),
        First::Ambiguous(what) => cx.push(
            name,
            msc.pos,
            format!("msc starts with {what}; the trigger must be a single determinate message"),
        ),
    }
}
