//! Text format for system traces:
//!
//! ```text
//! system {
//!   classes { C(a: Int[0..3]; op m(Int[0..3])); D extends C }
//!   snapshot { obj c1: C { a = 0 } links { } active { } }
//!   event call env -> c1 : m(1)
//!   snapshot { obj c1: C { a = 1 } links { } active { c1.m } }
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::{
    AssocEnd, AssocSig, ClassSig, ClassTable, Link, MsgEvent, MsgKind, ObjectEntry, ObjectId,
    ObjectState, OpSig, Party, Snapshot, Step, SystemTrace, Value, ValueDomain,
};
use crate::syntax::{Diagnostic, PResult, Parser, Pos, Tok};

pub(crate) fn parse_domain(p: &mut Parser) -> PResult<ValueDomain> {
    let (kw, pos) = p.ident()?;
    match kw.as_str() {
        "Bool" => Ok(ValueDomain::Bool),
        "Int" => {
            p.expect_sym("[")?;
            let lo = p.int()?;
            p.expect_sym("..")?;
            let hi = p.int()?;
            p.expect_sym("]")?;
            Ok(ValueDomain::Int { lo, hi })
        }
        "Enum" => {
            p.expect_sym("{")?;
            let mut ls = Vec::new();
            while !p.at_sym("}")? {
                ls.push(p.ident()?.0);
                if !p.eat_sym(",")? {
                    break;
                }
            }
            p.expect_sym("}")?;
            Ok(ValueDomain::Enum(ls))
        }
        "Ref" => Ok(ValueDomain::Ref(p.ident()?.0)),
        other => p.error(pos, format!("unknown value domain `{other}`")),
    }
}

pub(crate) fn parse_op_sig_tail(p: &mut Parser, name: String) -> PResult<OpSig> {
    p.expect_sym("(")?;
    let mut params = Vec::new();
    while !p.at_sym(")")? {
        params.push(parse_domain(p)?);
        if !p.eat_sym(",")? {
            break;
        }
    }
    p.expect_sym(")")?;
    let result = if p.eat_sym(":")? {
        Some(parse_domain(p)?)
    } else {
        None
    };
    Ok(OpSig {
        name,
        params,
        result,
    })
}

pub(crate) fn render_op_sig(op: &OpSig) -> String {
    let params: Vec<String> = op.params.iter().map(|d| d.to_string()).collect();
    let mut s = format!("op {}({})", op.name, params.join(", "));
    if let Some(r) = &op.result {
        let _ = write!(s, ": {r}");
    }
    s
}

#[derive(Debug, Clone)]
enum RawValue {
    Nil,
    Bool(bool),
    Int(i64),
    Ident(String),
}

fn parse_raw_value(p: &mut Parser) -> PResult<RawValue> {
    if p.at_sym("-")? {
        return Ok(RawValue::Int(p.int()?));
    }
    let t = p.next()?;
    match t.tok {
        Tok::Int(n) => Ok(RawValue::Int(n)),
        Tok::Ident(s) => Ok(match s.as_str() {
            "nil" => RawValue::Nil,
            "true" => RawValue::Bool(true),
            "false" => RawValue::Bool(false),
            _ => RawValue::Ident(s),
        }),
        other => p.error(t.pos, format!("expected a value, found {other}")),
    }
}

fn resolve(raw: &RawValue, dom: Option<&ValueDomain>, snap: &Snapshot) -> Value {
    match raw {
        RawValue::Nil => Value::Nil,
        RawValue::Bool(b) => Value::Bool(*b),
        RawValue::Int(n) => Value::Int(*n),
        RawValue::Ident(s) => match dom {
            Some(ValueDomain::Ref(_)) => Value::Ref(ObjectId::new(s.clone())),
            Some(ValueDomain::Enum(_)) => Value::Enum(s.clone()),
            _ if snap.objects.contains_key(&ObjectId::new(s.clone())) => {
                Value::Ref(ObjectId::new(s.clone()))
            }
            _ => Value::Enum(s.clone()),
        },
    }
}

struct RawSnapshot {
    objects: Vec<(ObjectId, String, Vec<(String, RawValue)>)>,
    links: BTreeSet<Link>,
    active: Vec<(ObjectId, String, Pos)>,
}

struct RawEvent {
    kind: MsgKind,
    sender: Party,
    receiver: Party,
    op: String,
    args: Vec<RawValue>,
}

fn parse_party(p: &mut Parser) -> PResult<Party> {
    let (name, _) = p.ident()?;
    Ok(if name == "env" {
        Party::Env
    } else {
        Party::Obj(ObjectId(name))
    })
}

fn parse_classes(p: &mut Parser) -> PResult<ClassTable> {
    p.expect_kw("classes")?;
    p.expect_sym("{")?;
    let mut t = ClassTable::default();
    while !p.at_sym("}")? {
        if p.eat_kw("assoc")? {
            let (name, pos) = p.ident()?;
            p.expect_sym("(")?;
            let (r1, _) = p.ident()?;
            p.expect_sym(":")?;
            let (c1, _) = p.ident()?;
            p.expect_sym(",")?;
            let (r2, _) = p.ident()?;
            p.expect_sym(":")?;
            let (c2, _) = p.ident()?;
            p.expect_sym(")")?;
            let sig = AssocSig {
                source: AssocEnd {
                    role: r1,
                    class: c1,
                },
                target: AssocEnd {
                    role: r2,
                    class: c2,
                },
            };
            if t.associations.insert(name.clone(), sig).is_some() {
                return p.error(pos, format!("duplicate association `{name}`"));
            }
        } else {
            let (name, pos) = p.ident()?;
            if t.classes.contains_key(&name) {
                return p.error(pos, format!("duplicate class `{name}`"));
            }
            if p.eat_kw("extends")? {
                loop {
                    let (sup, _) = p.ident()?;
                    t.generalization.insert((name.clone(), sup));
                    if !p.eat_sym(",")? {
                        break;
                    }
                }
            }
            let mut sig = ClassSig::default();
            if p.eat_sym("(")? {
                while !p.at_sym(")")? {
                    if p.eat_kw("op")? {
                        let (op, _) = p.ident()?;
                        sig.ops.push(parse_op_sig_tail(p, op)?);
                    } else {
                        let (a, _) = p.ident()?;
                        p.expect_sym(":")?;
                        sig.attrs.push((a, parse_domain(p)?));
                    }
                    if !p.eat_sym(";")? {
                        break;
                    }
                }
                p.expect_sym(")")?;
            }
            t.classes.insert(name, sig);
        }
        if !p.eat_sym(";")? {
            break;
        }
    }
    p.expect_sym("}")?;
    Ok(t)
}

fn parse_snapshot(p: &mut Parser) -> PResult<RawSnapshot> {
    p.expect_kw("snapshot")?;
    p.expect_sym("{")?;
    let mut raw = RawSnapshot {
        objects: Vec::new(),
        links: BTreeSet::new(),
        active: Vec::new(),
    };
    while p.at_kw("obj")? {
        p.next()?;
        let (id, pos) = p.ident()?;
        if raw.objects.iter().any(|(o, _, _)| o.0 == id) {
            return p.error(pos, format!("duplicate object `{id}`"));
        }
        p.expect_sym(":")?;
        let (class, _) = p.ident()?;
        p.expect_sym("{")?;
        let mut attrs = Vec::new();
        while !p.at_sym("}")? {
            let (a, _) = p.ident()?;
            p.expect_sym("=")?;
            attrs.push((a, parse_raw_value(p)?));
            if !(p.eat_sym(",")? || p.eat_sym(";")?) {
                break;
            }
        }
        p.expect_sym("}")?;
        raw.objects.push((ObjectId(id), class, attrs));
    }
    if p.eat_kw("links")? {
        p.expect_sym("{")?;
        while !p.at_sym("}")? {
            let (assoc, _) = p.ident()?;
            p.expect_sym("(")?;
            let (s, _) = p.ident()?;
            p.expect_sym(",")?;
            let (t, _) = p.ident()?;
            p.expect_sym(")")?;
            raw.links.insert(Link::new(assoc, ObjectId(s), ObjectId(t)));
            p.eat_sym(",")?;
        }
        p.expect_sym("}")?;
    }
    if p.eat_kw("active")? {
        p.expect_sym("{")?;
        while !p.at_sym("}")? {
            let (o, pos) = p.ident()?;
            p.expect_sym(".")?;
            let (op, _) = p.ident()?;
            raw.active.push((ObjectId(o), op, pos));
            p.eat_sym(",")?;
        }
        p.expect_sym("}")?;
    }
    p.expect_sym("}")?;
    Ok(raw)
}

fn build_snapshot(p: &Parser, t: &ClassTable, raw: RawSnapshot) -> PResult<Snapshot> {
    let mut snap = Snapshot {
        objects: BTreeMap::new(),
        links: raw.links,
    };
    // First pass registers the population so reference values can resolve.
    for (id, class, _) in &raw.objects {
        snap.objects.insert(
            id.clone(),
            ObjectEntry {
                class: class.clone(),
                state: ObjectState::default(),
            },
        );
    }
    let mut resolved = Vec::new();
    for (id, class, attrs) in &raw.objects {
        let map: BTreeMap<String, Value> = attrs
            .iter()
            .map(|(a, v)| {
                let dom = t.attr_domain(class, a);
                (a.clone(), resolve(v, dom.as_ref(), &snap))
            })
            .collect();
        resolved.push((id.clone(), map));
    }
    for (id, map) in resolved {
        snap.objects.get_mut(&id).unwrap().state.attrs = map;
    }
    for (o, op, pos) in raw.active {
        match snap.objects.get_mut(&o) {
            Some(e) => {
                e.state.active.insert(op);
            }
            None => return p.error(pos, format!("active operation on unknown object `{o}`")),
        }
    }
    Ok(snap)
}

fn parse_event(p: &mut Parser) -> PResult<RawEvent> {
    p.expect_kw("event")?;
    let (k, pos) = p.ident()?;
    let kind = match k.as_str() {
        "call" => MsgKind::Call,
        "return" => MsgKind::Return,
        other => return p.error(pos, format!("expected `call` or `return`, found `{other}`")),
    };
    let sender = parse_party(p)?;
    p.expect_sym("->")?;
    let receiver = parse_party(p)?;
    p.expect_sym(":")?;
    let (op, _) = p.ident()?;
    p.expect_sym("(")?;
    let mut args = Vec::new();
    while !p.at_sym(")")? {
        args.push(parse_raw_value(p)?);
        if !p.eat_sym(",")? {
            break;
        }
    }
    p.expect_sym(")")?;
    Ok(RawEvent {
        kind,
        sender,
        receiver,
        op,
        args,
    })
}

fn build_event(t: &ClassTable, raw: RawEvent, pre: &Snapshot, post: &Snapshot) -> MsgEvent {
    let domains: Vec<Option<ValueDomain>> = match raw.kind {
        MsgKind::Call => {
            let sig = raw
                .receiver
                .obj()
                .and_then(|o| post.class_of(o))
                .and_then(|c| t.find_op(c, &raw.op));
            match sig {
                Some(sig) => sig.params.into_iter().map(Some).collect(),
                None => vec![],
            }
        }
        MsgKind::Return => {
            let sig = raw
                .sender
                .obj()
                .and_then(|o| pre.class_of(o))
                .and_then(|c| t.find_op(c, &raw.op));
            vec![sig.and_then(|s| s.result)]
        }
    };
    let args = raw
        .args
        .iter()
        .enumerate()
        .map(|(i, v)| resolve(v, domains.get(i).and_then(|d| d.as_ref()), post))
        .collect();
    MsgEvent {
        kind: raw.kind,
        sender: raw.sender,
        receiver: raw.receiver,
        op: raw.op,
        args,
    }
}

/// Parses a system trace file. Syntax errors are reported with positions;
/// well-formedness is checked separately by `validate_system`.
pub fn parse_trace(text: &str) -> Result<SystemTrace, Diagnostic> {
    let mut p = Parser::new(text);
    p.doc = "<trace>".to_string();
    p.expect_kw("system")?;
    p.expect_sym("{")?;
    let table = parse_classes(&mut p)?;
    let initial = parse_snapshot(&mut p)?;
    let initial = build_snapshot(&p, &table, initial)?;
    let mut trace = SystemTrace::new(table, initial);
    while p.at_kw("event")? {
        let ev = parse_event(&mut p)?;
        let snap = parse_snapshot(&mut p)?;
        let snap = build_snapshot(&p, &trace.class_table, snap)?;
        let ev = build_event(&trace.class_table, ev, trace.last_snapshot(), &snap);
        trace.steps.push(Step {
            event: ev,
            snapshot: snap,
        });
    }
    p.expect_sym("}")?;
    p.expect_eof()?;
    Ok(trace)
}

fn render_snapshot(out: &mut String, snap: &Snapshot) {
    out.push_str("  snapshot {\n");
    for (id, e) in &snap.objects {
        let attrs: Vec<String> = e
            .state
            .attrs
            .iter()
            .map(|(a, v)| format!("{a} = {v}"))
            .collect();
        if attrs.is_empty() {
            let _ = writeln!(out, "    obj {id}: {} {{ }}", e.class);
        } else {
            let _ = writeln!(out, "    obj {id}: {} {{ {} }}", e.class, attrs.join(", "));
        }
    }
    let links: Vec<String> = snap
        .links
        .iter()
        .map(|l| format!("{}({}, {})", l.assoc, l.source, l.target))
        .collect();
    let _ = writeln!(out, "    links {}", braced(&links));
    let active: Vec<String> = snap
        .objects
        .iter()
        .flat_map(|(id, e)| e.state.active.iter().map(move |op| format!("{id}.{op}")))
        .collect();
    let _ = writeln!(out, "    active {}", braced(&active));
    out.push_str("  }\n");
}

fn braced(items: &[String]) -> String {
    if items.is_empty() {
        "{ }".to_string()
    } else {
        format!("{{ {} }}", items.join(", "))
    }
}

pub(crate) fn render_class_table(table: &ClassTable) -> Vec<String> {
    let mut entries = Vec::new();
    for (name, sig) in &table.classes {
        let mut e = name.clone();
        let supers: Vec<&str> = table.direct_supers(name).collect();
        if !supers.is_empty() {
            let _ = write!(e, " extends {}", supers.join(", "));
        }
        let members: Vec<String> = sig
            .attrs
            .iter()
            .map(|(a, d)| format!("{a}: {d}"))
            .chain(sig.ops.iter().map(render_op_sig))
            .collect();
        if !members.is_empty() {
            let _ = write!(e, "({})", members.join("; "));
        }
        entries.push(e);
    }
    for (name, a) in &table.associations {
        entries.push(format!(
            "assoc {name}({}: {}, {}: {})",
            a.source.role, a.source.class, a.target.role, a.target.class
        ));
    }
    entries
}

/// Canonical text form; `parse_trace(render_trace(s)) == s`.
pub fn render_trace(s: &SystemTrace) -> String {
    let mut out = String::from("system {\n");
    let entries = render_class_table(&s.class_table);
    if entries.is_empty() {
        out.push_str("  classes { }\n");
    } else {
        out.push_str("  classes {\n");
        for (i, e) in entries.iter().enumerate() {
            let sep = if i + 1 < entries.len() { ";" } else { "" };
            let _ = writeln!(out, "    {e}{sep}");
        }
        out.push_str("  }\n");
    }
    render_snapshot(&mut out, &s.initial);
    for st in &s.steps {
        let ev = &st.event;
        let kind = match ev.kind {
            MsgKind::Call => "call",
            MsgKind::Return => "return",
        };
        let args: Vec<String> = ev.args.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(
            out,
            "  event {kind} {} -> {} : {}({})",
            ev.sender,
            ev.receiver,
            ev.op,
            args.join(", ")
        );
        render_snapshot(&mut out, &st.snapshot);
    }
    out.push_str("}\n");
    out
}
