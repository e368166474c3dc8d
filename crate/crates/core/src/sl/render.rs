use super::{BinOp, Quantifier, SlExpr};

const PREC_UNARY: u8 = 7;
const PREC_ATOM: u8 = 8;

fn prec(e: &SlExpr) -> u8 {
    match e {
        SlExpr::Quant { .. } => 0,
        SlExpr::Bin(op, ..) => op.prec(),
        SlExpr::Not(_) | SlExpr::Neg(_) => PREC_UNARY,
        SlExpr::Int(n) if *n < 0 => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

fn render_at(e: &SlExpr, min: u8, out: &mut String) {
    if prec(e) < min {
        out.push('(');
        render_at(e, 0, out);
        out.push(')');
        return;
    }
    match e {
        SlExpr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        SlExpr::Int(n) => out.push_str(&n.to_string()),
        SlExpr::Nil => out.push_str("nil"),
        SlExpr::Ident(n) | SlExpr::Var(n) | SlExpr::Param(n) | SlExpr::EnumLit(n) => {
            out.push_str(n)
        }
        SlExpr::SelfRef => out.push_str("self"),
        SlExpr::Attr {
            target,
            attr,
            primed,
        } => {
            render_at(target, PREC_ATOM, out);
            out.push('.');
            out.push_str(attr);
            if *primed {
                out.push('\'');
            }
        }
        SlExpr::Not(x) => {
            out.push('!');
            render_at(x, PREC_UNARY, out);
        }
        SlExpr::Neg(x) => {
            out.push('-');
            if matches!(**x, SlExpr::Int(_)) {
                // keep the parser from folding the sign into the literal
                out.push('(');
                render_at(x, 0, out);
                out.push(')');
            } else {
                render_at(x, PREC_UNARY, out);
            }
        }
        SlExpr::Bin(op, l, r) => {
            let p = op.prec();
            let (lmin, rmin) = match op {
                BinOp::Implies => (p + 1, p),
                BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    (p + 1, p + 1)
                }
                _ => (p, p + 1),
            };
            render_at(l, lmin, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            render_at(r, rmin, out);
        }
        SlExpr::Quant {
            kind,
            var,
            class,
            primed,
            body,
        } => {
            out.push_str(match kind {
                Quantifier::Forall => "forall ",
                Quantifier::Exists => "exists ",
            });
            out.push_str(var);
            out.push_str(": ");
            out.push_str(class);
            if *primed {
                out.push('\'');
            }
            out.push_str(" . ");
            render_at(body, 0, out);
        }
        SlExpr::Linked {
            assoc,
            source,
            target,
            primed,
        } => {
            out.push_str("linked");
            if *primed {
                out.push('\'');
            }
            out.push('(');
            out.push_str(assoc);
            out.push_str(", ");
            render_at(source, 0, out);
            out.push_str(", ");
            render_at(target, 0, out);
            out.push(')');
        }
    }
}

/// Canonical text of an expression; parsing it yields the same AST.
pub fn render_sl(e: &SlExpr) -> String {
    let mut out = String::new();
    render_at(e, 0, &mut out);
    out
}
