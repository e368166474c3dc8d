use std::fmt::Write;

use super::*;
use crate::model::text::render_op_sig;
use crate::sl::render_sl;

/// Canonical text of a document. Members keep their declaration order.
pub fn render_document(d: &Document) -> String {
    let mut out = String::new();
    match d {
        Document::Om(om) => render_om(om, &mut out),
        Document::Std(std) => render_std(std, &mut out),
        Document::Msc(msc) => render_msc(msc, &mut out),
        Document::Itd(itd) => {
            let _ = writeln!(out, "itd {} state={} {{{}}}", itd.name, itd.state, itd.text);
        }
    }
    out
}

fn render_om(om: &OmDoc, out: &mut String) {
    let _ = writeln!(out, "objectmodel {} {{", om.name);
    for m in &om.members {
        match m {
            OmMember::Class(c) => {
                let _ = write!(out, "  class {}", c.name);
                if !c.extends.is_empty() {
                    let _ = write!(out, " extends {}", c.extends.join(", "));
                }
                if c.members.is_empty() {
                    out.push_str(" { }\n");
                    continue;
                }
                out.push_str(" {\n");
                for cm in &c.members {
                    match cm {
                        ClassMember::Attr(n, d) => {
                            let _ = writeln!(out, "    attr {n}: {d};");
                        }
                        ClassMember::Op(op) => {
                            let _ = writeln!(out, "    {};", render_op_sig(op));
                        }
                    }
                }
                out.push_str("  }\n");
            }
            OmMember::Assoc(a) => {
                let _ = writeln!(
                    out,
                    "  assoc {} {}: {}{} {}: {}{}{}",
                    a.name,
                    a.source.role,
                    a.source.class,
                    a.source.mult,
                    a.target.role,
                    a.target.class,
                    a.target.mult,
                    if a.aggregate { " aggregate" } else { "" }
                );
            }
            OmMember::Inv(i) => {
                let _ = writeln!(out, "  inv {}: {}", i.name, render_sl(&i.expr));
            }
        }
    }
    out.push_str("}\n");
}

fn render_std(std: &StdDoc, out: &mut String) {
    let _ = writeln!(out, "std {} for {} {{", std.name, std.class);
    let _ = writeln!(out, "  states {{ {} }}", std.states.join(", "));
    let _ = writeln!(out, "  initial {}", std.initial);
    for t in &std.transitions {
        let _ = writeln!(
            out,
            "  trans {} -> {} on {}({})",
            t.source,
            t.target,
            t.op,
            t.params.join(", ")
        );
        if t.pre != SlExpr::Bool(true) {
            let _ = writeln!(out, "    pre {}", render_sl(&t.pre));
        }
        if !t.outputs.is_empty() {
            let outs: Vec<String> = t
                .outputs
                .iter()
                .map(|o| {
                    let args: Vec<String> = o.args.iter().map(render_sl).collect();
                    format!("{}.{}({})", o.receiver, o.op, args.join(", "))
                })
                .collect();
            let _ = writeln!(out, "    out [ {} ]", outs.join("; "));
        }
        if t.post != SlExpr::Bool(true) {
            let _ = writeln!(out, "    post {}", render_sl(&t.post));
        }
    }
    out.push_str("}\n");
}

fn render_msg(m: &MscMsg) -> String {
    let args: Vec<String> = m.args.iter().map(|v| v.to_string()).collect();
    match m.kind {
        MsgKind::Call => format!("{} -> {} : {}({})", m.from, m.to, m.op, args.join(", ")),
        MsgKind::Return if args.is_empty() => format!("{} -> {} : return {}", m.from, m.to, m.op),
        MsgKind::Return => format!("{} -> {} : return {}({})", m.from, m.to, m.op, args[0]),
    }
}

fn render_items(items: &[MscItem], indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    for it in items {
        match it {
            MscItem::Msg(m) => {
                let _ = writeln!(out, "{pad}{}", render_msg(m));
            }
            MscItem::Ref(n, _) => {
                let _ = writeln!(out, "{pad}ref {n}");
            }
            MscItem::Seq(b) | MscItem::Loop(b) => {
                let kw = if matches!(it, MscItem::Seq(_)) { "seq" } else { "loop" };
                let _ = writeln!(out, "{pad}{kw} {{");
                render_items(b, indent + 1, out);
                let _ = writeln!(out, "{pad}}}");
            }
            MscItem::Alt(bs) => {
                let _ = writeln!(out, "{pad}alt {{");
                for (i, b) in bs.iter().enumerate() {
                    if i > 0 {
                        let _ = writeln!(out, "{pad}|");
                    }
                    render_items(b, indent + 1, out);
                }
                let _ = writeln!(out, "{pad}}}");
            }
        }
    }
}

fn render_msc(msc: &MscDoc, out: &mut String) {
    let _ = writeln!(out, "msc {} {{", msc.name);
    let roles: Vec<String> = msc
        .roles
        .iter()
        .map(|r| format!("{}: {}", r.name, r.class))
        .collect();
    if roles.is_empty() {
        out.push_str("  roles { }\n");
    } else {
        let _ = writeln!(out, "  roles {{ {} }}", roles.join(", "));
    }
    render_items(&msc.body, 1, out);
    out.push_str("}\n");
}
