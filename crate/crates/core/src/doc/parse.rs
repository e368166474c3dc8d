use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::model::text::{parse_domain, parse_op_sig_tail};
use crate::sl::{parse_expr, SlExpr};
use crate::syntax::{Diagnostic, PResult, Parser, Tok};

/// Parses one document, dispatching on the leading keyword, and runs the
/// intra-document checks.
pub fn parse_document(text: &str) -> Result<Document, Vec<Diagnostic>> {
    let mut p = Parser::new(text);
    let doc = parse_any(&mut p).map_err(|d| vec![d])?;
    let problems = intra_check(&doc);
    if problems.is_empty() {
        Ok(doc)
    } else {
        Err(problems)
    }
}

fn parse_any(p: &mut Parser) -> PResult<Document> {
    let t = p.peek()?.clone();
    let doc = match &t.tok {
        Tok::Ident(k) if k == "objectmodel" => Document::Om(parse_om(p)?),
        Tok::Ident(k) if k == "std" => Document::Std(parse_std(p)?),
        Tok::Ident(k) if k == "msc" => Document::Msc(parse_msc(p)?),
        Tok::Ident(k) if k == "itd" => Document::Itd(parse_itd(p)?),
        other => {
            return p.error(
                t.pos,
                format!("expected `objectmodel`, `std`, `msc` or `itd`, found {other}"),
            )
        }
    };
    p.expect_eof()?;
    Ok(doc)
}

fn header(p: &mut Parser, kw: &str) -> PResult<(String, Pos)> {
    p.expect_kw(kw)?;
    let (name, pos) = p.ident()?;
    p.doc = name.clone();
    Ok((name, pos))
}

fn parse_mult(p: &mut Parser) -> PResult<Multiplicity> {
    p.expect_sym("[")?;
    let m = if p.eat_sym("*")? {
        Multiplicity::ANY
    } else {
        let pos = p.pos()?;
        let lo = p.int()?;
        if lo < 0 || lo > u32::MAX as i64 {
            return p.error(pos, "multiplicity bounds must be non-negative");
        }
        if p.eat_sym("..")? {
            if p.eat_sym("*")? {
                Multiplicity {
                    lo: lo as u32,
                    hi: None,
                }
            } else {
                let pos = p.pos()?;
                let hi = p.int()?;
                if hi < 0 || hi > u32::MAX as i64 {
                    return p.error(pos, "multiplicity bounds must be non-negative");
                }
                Multiplicity {
                    lo: lo as u32,
                    hi: Some(hi as u32),
                }
            }
        } else {
            Multiplicity {
                lo: lo as u32,
                hi: Some(lo as u32),
            }
        }
    };
    p.expect_sym("]")?;
    Ok(m)
}

fn parse_assoc_end(p: &mut Parser) -> PResult<AssocEndDecl> {
    let (role, _) = p.ident()?;
    p.expect_sym(":")?;
    let (class, _) = p.ident()?;
    let mult = parse_mult(p)?;
    Ok(AssocEndDecl { role, class, mult })
}

fn parse_class(p: &mut Parser) -> PResult<ClassDecl> {
    let pos = p.expect_kw("class")?;
    let (name, _) = p.ident()?;
    let mut extends = Vec::new();
    if p.eat_kw("extends")? {
        loop {
            extends.push(p.ident()?.0);
            if !p.eat_sym(",")? {
                break;
            }
        }
    }
    p.expect_sym("{")?;
    let mut members = Vec::new();
    while !p.eat_sym("}")? {
        if p.eat_kw("attr")? {
            let (a, _) = p.ident()?;
            p.expect_sym(":")?;
            members.push(ClassMember::Attr(a, parse_domain(p)?));
        } else if p.eat_kw("op")? {
            let (m, _) = p.ident()?;
            members.push(ClassMember::Op(parse_op_sig_tail(p, m)?));
        } else {
            let t = p.peek()?.clone();
            return p.error(t.pos, format!("expected `attr`, `op` or `}}`, found {}", t.tok));
        }
        p.eat_sym(";")?;
    }
    Ok(ClassDecl {
        name,
        extends,
        members,
        pos,
    })
}

fn parse_om(p: &mut Parser) -> PResult<OmDoc> {
    let (name, pos) = header(p, "objectmodel")?;
    p.expect_sym("{")?;
    let mut members = Vec::new();
    while !p.eat_sym("}")? {
        if p.at_kw("class")? {
            members.push(OmMember::Class(parse_class(p)?));
        } else if p.at_kw("assoc")? {
            let pos = p.expect_kw("assoc")?;
            let (name, _) = p.ident()?;
            let source = parse_assoc_end(p)?;
            let target = parse_assoc_end(p)?;
            let aggregate = p.eat_kw("aggregate")?;
            members.push(OmMember::Assoc(AssocDecl {
                name,
                source,
                target,
                aggregate,
                pos,
            }));
        } else if p.at_kw("inv")? {
            let pos = p.expect_kw("inv")?;
            let (name, _) = p.ident()?;
            p.expect_sym(":")?;
            let expr = parse_expr(p)?;
            members.push(OmMember::Inv(Invariant { name, expr, pos }));
        } else {
            let t = p.peek()?.clone();
            return p.error(
                t.pos,
                format!("expected `class`, `assoc`, `inv` or `}}`, found {}", t.tok),
            );
        }
        p.eat_sym(";")?;
    }
    Ok(OmDoc { name, members, pos })
}

fn parse_output(p: &mut Parser) -> PResult<OutputTemplate> {
    let pos = p.pos()?;
    let mut names = vec![p.ident()?.0];
    while p.eat_sym(".")? {
        names.push(p.ident()?.0);
    }
    if names.len() < 2 {
        return p.error(pos, "output message needs a receiver, as in `self.op(..)`");
    }
    let op = names.pop().unwrap();
    let root = names.remove(0);
    p.expect_sym("(")?;
    let mut args = Vec::new();
    while !p.at_sym(")")? {
        args.push(parse_expr(p)?);
        if !p.eat_sym(",")? {
            break;
        }
    }
    p.expect_sym(")")?;
    Ok(OutputTemplate {
        receiver: Receiver { root, path: names },
        op,
        args,
        pos,
    })
}

fn parse_transition(p: &mut Parser) -> PResult<Transition> {
    let pos = p.expect_kw("trans")?;
    let (source, _) = p.ident()?;
    p.expect_sym("->")?;
    let (target, _) = p.ident()?;
    p.expect_kw("on")?;
    let (op, _) = p.ident()?;
    p.expect_sym("(")?;
    let mut params = Vec::new();
    while !p.at_sym(")")? {
        params.push(p.ident()?.0);
        if !p.eat_sym(",")? {
            break;
        }
    }
    p.expect_sym(")")?;
    let pre = if p.eat_kw("pre")? {
        parse_expr(p)?
    } else {
        SlExpr::Bool(true)
    };
    let mut outputs = Vec::new();
    if p.eat_kw("out")? {
        p.expect_sym("[")?;
        while !p.at_sym("]")? {
            outputs.push(parse_output(p)?);
            if !p.eat_sym(";")? {
                break;
            }
        }
        p.expect_sym("]")?;
    }
    let post = if p.eat_kw("post")? {
        parse_expr(p)?
    } else {
        SlExpr::Bool(true)
    };
    Ok(Transition {
        source,
        target,
        op,
        params,
        pre,
        outputs,
        post,
        pos,
    })
}

fn parse_std(p: &mut Parser) -> PResult<StdDoc> {
    let (name, pos) = header(p, "std")?;
    p.expect_kw("for")?;
    let (class, _) = p.ident()?;
    p.expect_sym("{")?;
    p.expect_kw("states")?;
    p.expect_sym("{")?;
    let mut states = Vec::new();
    while !p.at_sym("}")? {
        states.push(p.ident()?.0);
        if !p.eat_sym(",")? {
            break;
        }
    }
    p.expect_sym("}")?;
    p.expect_kw("initial")?;
    let (initial, _) = p.ident()?;
    let mut transitions = Vec::new();
    while !p.eat_sym("}")? {
        transitions.push(parse_transition(p)?);
    }
    Ok(StdDoc {
        name,
        class,
        states,
        initial,
        transitions,
        pos,
    })
}

/// Literal in an MSC message: boolean, integer, `nil` or an enumeration
/// label.
fn parse_literal(p: &mut Parser) -> PResult<Value> {
    let t = p.peek()?.clone();
    match &t.tok {
        Tok::Int(_) | Tok::Sym("-") => Ok(Value::Int(p.int()?)),
        Tok::Ident(s) => {
            p.next()?;
            Ok(match s.as_str() {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                "nil" => Value::Nil,
                _ => Value::Enum(s.clone()),
            })
        }
        other => p.error(t.pos, format!("expected a literal, found {other}")),
    }
}

fn parse_msc_items(p: &mut Parser, stop: &[&str]) -> PResult<Vec<MscItem>> {
    let mut items = Vec::new();
    loop {
        let at_stop = match &p.peek()?.tok {
            Tok::Sym(s) => stop.contains(s),
            _ => false,
        };
        if at_stop {
            return Ok(items);
        }
        items.push(parse_msc_item(p)?);
        p.eat_sym(";")?;
    }
}

fn parse_block(p: &mut Parser) -> PResult<Vec<MscItem>> {
    p.expect_sym("{")?;
    let items = parse_msc_items(p, &["}"])?;
    p.expect_sym("}")?;
    Ok(items)
}

fn parse_msc_item(p: &mut Parser) -> PResult<MscItem> {
    let (first, pos) = p.ident()?;
    match first.as_str() {
        "seq" if p.at_sym("{")? => Ok(MscItem::Seq(parse_block(p)?)),
        "loop" if p.at_sym("{")? => Ok(MscItem::Loop(parse_block(p)?)),
        "alt" if p.at_sym("{")? => {
            p.expect_sym("{")?;
            let mut branches = vec![parse_msc_items(p, &["|", "}"])?];
            while p.eat_sym("|")? {
                branches.push(parse_msc_items(p, &["|", "}"])?);
            }
            p.expect_sym("}")?;
            Ok(MscItem::Alt(branches))
        }
        "ref" if !p.at_sym("->")? => Ok(MscItem::Ref(p.ident()?.0, pos)),
        _ => {
            p.expect_sym("->")?;
            let (to, _) = p.ident()?;
            p.expect_sym(":")?;
            let kind = if p.eat_kw("return")? {
                MsgKind::Return
            } else {
                MsgKind::Call
            };
            let (op, _) = p.ident()?;
            let mut args = Vec::new();
            if p.eat_sym("(")? {
                while !p.at_sym(")")? {
                    args.push(parse_literal(p)?);
                    if !p.eat_sym(",")? {
                        break;
                    }
                }
                p.expect_sym(")")?;
            } else if kind == MsgKind::Call {
                let pos = p.pos()?;
                return p.error(pos, "expected `(` after the operation name");
            }
            if kind == MsgKind::Return && args.len() > 1 {
                return p.error(pos, "a return carries at most one result");
            }
            Ok(MscItem::Msg(MscMsg {
                from: first,
                to,
                kind,
                op,
                args,
                pos,
            }))
        }
    }
}

fn parse_msc(p: &mut Parser) -> PResult<MscDoc> {
    let (name, pos) = header(p, "msc")?;
    p.expect_sym("{")?;
    p.expect_kw("roles")?;
    p.expect_sym("{")?;
    let mut roles = Vec::new();
    while !p.at_sym("}")? {
        let (role, rpos) = p.ident()?;
        p.expect_sym(":")?;
        let (class, _) = p.ident()?;
        roles.push(RoleDecl {
            name: role,
            class,
            pos: rpos,
        });
        if !p.eat_sym(",")? {
            break;
        }
    }
    p.expect_sym("}")?;
    let body = parse_msc_items(p, &["}"])?;
    p.expect_sym("}")?;
    Ok(MscDoc {
        name,
        roles,
        body,
        pos,
    })
}

fn parse_itd(p: &mut Parser) -> PResult<ItdDoc> {
    let (name, pos) = header(p, "itd")?;
    let mut state = ItdState::default();
    if p.eat_kw("state")? {
        p.expect_sym("=")?;
        let (mut flag, fpos) = p.ident()?;
        if p.eat_sym("-")? {
            flag.push('-');
            flag.push_str(&p.ident()?.0);
        }
        state = match flag.parse() {
            Ok(s) => s,
            Err(msg) => return p.error(fpos, msg),
        };
    }
    p.expect_sym("{")?;
    let text = p.raw_block()?;
    Ok(ItdDoc {
        name,
        state,
        text,
        pos,
    })
}

// ---- intra-document checks ----

struct Problems<'a> {
    doc: &'a str,
    out: Vec<Diagnostic>,
}

impl Problems<'_> {
    fn push(&mut self, pos: Pos, msg: impl Into<String>) {
        self.out.push(Diagnostic::new(self.doc, pos, msg));
    }

    fn unique<'n>(&mut self, what: &str, names: impl IntoIterator<Item = (&'n str, Pos)>) {
        let mut seen = BTreeSet::new();
        for (n, pos) in names {
            if !seen.insert(n) {
                self.push(pos, format!("duplicate {what} `{n}`"));
            }
        }
    }
}

pub(super) fn intra_check(doc: &Document) -> Vec<Diagnostic> {
    let mut pr = Problems {
        doc: doc.id(),
        out: Vec::new(),
    };
    match doc {
        Document::Om(om) => check_om(om, &mut pr),
        Document::Std(std) => check_std(std, &mut pr),
        Document::Msc(msc) => check_msc(msc, &mut pr),
        Document::Itd(_) => {}
    }
    pr.out
}

fn check_om(om: &OmDoc, pr: &mut Problems) {
    pr.unique("class", om.classes().map(|c| (c.name.as_str(), c.pos)));
    pr.unique("association", om.assocs().map(|a| (a.name.as_str(), a.pos)));
    pr.unique("invariant", om.invariants().map(|i| (i.name.as_str(), i.pos)));
    for c in om.classes() {
        pr.unique(
            "member",
            c.members.iter().map(|m| match m {
                ClassMember::Attr(n, _) => (n.as_str(), c.pos),
                ClassMember::Op(op) => (op.name.as_str(), c.pos),
            }),
        );
        pr.unique("superclass", c.extends.iter().map(|s| (s.as_str(), c.pos)));
        for m in &c.members {
            let domains: Vec<&ValueDomain> = match m {
                ClassMember::Attr(_, d) => vec![d],
                ClassMember::Op(op) => op.params.iter().chain(op.result.iter()).collect(),
            };
            for d in domains {
                if let Some(msg) = d.shape_problem() {
                    pr.push(c.pos, format!("in class {}: {msg}", c.name));
                }
            }
        }
    }
    for a in om.assocs() {
        if a.source.role == a.target.role {
            pr.push(a.pos, format!("association {} uses role `{}` twice", a.name, a.source.role));
        }
        for end in [&a.source, &a.target] {
            if let Some(h) = end.mult.hi {
                if end.mult.lo > h {
                    pr.push(a.pos, format!("multiplicity {} of `{}` has lo > hi", end.mult, end.role));
                }
            }
        }
    }
    let local = om.class_table();
    if let Some(c) = local.has_cycle() {
        let pos = om
            .classes()
            .find(|d| d.name == c)
            .map(|d| d.pos)
            .unwrap_or(om.pos);
        pr.push(pos, format!("cyclic generalization through class {c}"));
    }
}

fn check_std(std: &StdDoc, pr: &mut Problems) {
    pr.unique("state", std.states.iter().map(|s| (s.as_str(), std.pos)));
    let states: BTreeSet<&str> = std.states.iter().map(String::as_str).collect();
    if !states.contains(std.initial.as_str()) {
        pr.push(std.pos, format!("initial state `{}` is not declared", std.initial));
    }
    for t in &std.transitions {
        for s in [&t.source, &t.target] {
            if !states.contains(s.as_str()) {
                pr.push(t.pos, format!("undeclared state `{s}`"));
            }
        }
        pr.unique("parameter", t.params.iter().map(|n| (n.as_str(), t.pos)));
        for n in &t.params {
            if n == "self" {
                pr.push(t.pos, "`self` cannot be a parameter name");
            }
        }
    }
}

fn check_items(items: &[MscItem], roles: &BTreeMap<&str, &str>, pr: &mut Problems) {
    for it in items {
        match it {
            MscItem::Msg(m) => {
                for r in [&m.from, &m.to] {
                    if !roles.contains_key(r.as_str()) {
                        pr.push(m.pos, format!("undeclared role {r}"));
                    }
                }
            }
            MscItem::Seq(b) | MscItem::Loop(b) => check_items(b, roles, pr),
            MscItem::Alt(bs) => {
                if bs.len() < 2 {
                    let pos = first_pos(bs.iter().flatten()).unwrap_or_default();
                    pr.push(pos, "`alt` needs at least two branches");
                }
                for b in bs {
                    check_items(b, roles, pr);
                }
            }
            MscItem::Ref(..) => {}
        }
    }
}

fn first_pos<'a>(mut items: impl Iterator<Item = &'a MscItem>) -> Option<Pos> {
    items.find_map(|it| match it {
        MscItem::Msg(m) => Some(m.pos),
        MscItem::Ref(_, p) => Some(*p),
        MscItem::Seq(b) | MscItem::Loop(b) => first_pos(b.iter()),
        MscItem::Alt(bs) => first_pos(bs.iter().flatten()),
    })
}

fn check_msc(msc: &MscDoc, pr: &mut Problems) {
    pr.unique("role", msc.roles.iter().map(|r| (r.name.as_str(), r.pos)));
    let roles: BTreeMap<&str, &str> = msc
        .roles
        .iter()
        .map(|r| (r.name.as_str(), r.class.as_str()))
        .collect();
    check_items(&msc.body, &roles, pr);
}
