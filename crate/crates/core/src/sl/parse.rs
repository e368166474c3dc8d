use super::{typecheck, BinOp, Quantifier, SlContext, SlExpr, SlType};
use crate::syntax::{Diagnostic, PResult, Parser, Tok};

/// Parses an SL expression starting at the parser's current token and stops
/// at the first token that cannot continue it.
pub(crate) fn parse_expr(p: &mut Parser) -> PResult<SlExpr> {
    if p.at_kw("forall")? || p.at_kw("exists")? {
        return parse_quant(p);
    }
    parse_implies(p)
}

fn parse_quant(p: &mut Parser) -> PResult<SlExpr> {
    let (kw, _) = p.ident()?;
    let kind = if kw == "forall" {
        Quantifier::Forall
    } else {
        Quantifier::Exists
    };
    let (var, pos) = p.ident()?;
    if super::KEYWORDS.contains(&var.as_str()) {
        return p.error(pos, format!("keyword `{var}` cannot be a variable"));
    }
    p.expect_sym(":")?;
    let (class, _) = p.ident()?;
    let primed = p.eat_sym("'")?;
    p.expect_sym(".")?;
    let body = parse_expr(p)?;
    Ok(SlExpr::Quant {
        kind,
        var,
        class,
        primed,
        body: Box::new(body),
    })
}

fn parse_implies(p: &mut Parser) -> PResult<SlExpr> {
    let lhs = parse_or(p)?;
    if p.eat_sym("=>")? {
        let rhs = if p.at_kw("forall")? || p.at_kw("exists")? {
            parse_quant(p)?
        } else {
            parse_implies(p)?
        };
        return Ok(SlExpr::bin(BinOp::Implies, lhs, rhs));
    }
    Ok(lhs)
}

fn parse_or(p: &mut Parser) -> PResult<SlExpr> {
    let mut lhs = parse_and(p)?;
    while p.eat_sym("||")? {
        let rhs = parse_and(p)?;
        lhs = SlExpr::bin(BinOp::Or, lhs, rhs);
    }
    Ok(lhs)
}

fn parse_and(p: &mut Parser) -> PResult<SlExpr> {
    let mut lhs = parse_cmp(p)?;
    while p.eat_sym("&&")? {
        let rhs = parse_cmp(p)?;
        lhs = SlExpr::bin(BinOp::And, lhs, rhs);
    }
    Ok(lhs)
}

fn cmp_op(t: &Tok) -> Option<BinOp> {
    match t {
        Tok::Sym("==") => Some(BinOp::Eq),
        Tok::Sym("!=") => Some(BinOp::Ne),
        Tok::Sym("<") => Some(BinOp::Lt),
        Tok::Sym("<=") => Some(BinOp::Le),
        Tok::Sym(">") => Some(BinOp::Gt),
        Tok::Sym(">=") => Some(BinOp::Ge),
        _ => None,
    }
}

fn parse_cmp(p: &mut Parser) -> PResult<SlExpr> {
    let lhs = parse_add(p)?;
    if let Some(op) = cmp_op(&p.peek()?.tok) {
        p.next()?;
        let rhs = parse_add(p)?;
        if let Some(op2) = cmp_op(&p.peek()?.tok) {
            let pos = p.pos()?;
            return p.error(
                pos,
                format!("comparison `{}` cannot be chained; add parentheses", op2.symbol()),
            );
        }
        return Ok(SlExpr::bin(op, lhs, rhs));
    }
    Ok(lhs)
}

fn parse_add(p: &mut Parser) -> PResult<SlExpr> {
    let mut lhs = parse_mul(p)?;
    loop {
        let op = if p.eat_sym("+")? {
            BinOp::Add
        } else if p.eat_sym("-")? {
            BinOp::Sub
        } else {
            return Ok(lhs);
        };
        let rhs = parse_mul(p)?;
        lhs = SlExpr::bin(op, lhs, rhs);
    }
}

fn parse_mul(p: &mut Parser) -> PResult<SlExpr> {
    let mut lhs = parse_unary(p)?;
    while p.eat_sym("*")? {
        let rhs = parse_unary(p)?;
        lhs = SlExpr::bin(BinOp::Mul, lhs, rhs);
    }
    Ok(lhs)
}

fn parse_unary(p: &mut Parser) -> PResult<SlExpr> {
    if p.eat_sym("!")? {
        return Ok(SlExpr::Not(Box::new(parse_unary(p)?)));
    }
    if p.eat_sym("-")? {
        // A minus directly before a literal is part of the literal.
        if let Tok::Int(n) = p.peek()?.tok {
            p.next()?;
            return parse_postfix(p, SlExpr::Int(-n));
        }
        return Ok(SlExpr::Neg(Box::new(parse_unary(p)?)));
    }
    let prim = parse_primary(p)?;
    parse_postfix(p, prim)
}

fn parse_postfix(p: &mut Parser, mut e: SlExpr) -> PResult<SlExpr> {
    while p.eat_sym(".")? {
        let (attr, _) = p.ident()?;
        let primed = p.eat_sym("'")?;
        e = SlExpr::attr(e, attr, primed);
    }
    Ok(e)
}

fn parse_primary(p: &mut Parser) -> PResult<SlExpr> {
    let t = p.peek()?.clone();
    match &t.tok {
        Tok::Int(n) => {
            p.next()?;
            Ok(SlExpr::Int(*n))
        }
        Tok::Sym("(") => {
            p.next()?;
            let e = parse_expr(p)?;
            p.expect_sym(")")?;
            Ok(e)
        }
        Tok::Ident(name) => match name.as_str() {
            "forall" | "exists" => parse_quant(p),
            "true" => {
                p.next()?;
                Ok(SlExpr::Bool(true))
            }
            "false" => {
                p.next()?;
                Ok(SlExpr::Bool(false))
            }
            "nil" => {
                p.next()?;
                Ok(SlExpr::Nil)
            }
            "self" => {
                p.next()?;
                Ok(SlExpr::SelfRef)
            }
            "linked" => {
                p.next()?;
                let primed = p.eat_sym("'")?;
                p.expect_sym("(")?;
                let (assoc, _) = p.ident()?;
                p.expect_sym(",")?;
                let source = parse_expr(p)?;
                p.expect_sym(",")?;
                let target = parse_expr(p)?;
                p.expect_sym(")")?;
                Ok(SlExpr::Linked {
                    assoc,
                    source: Box::new(source),
                    target: Box::new(target),
                    primed,
                })
            }
            _ => {
                let name = name.clone();
                p.next()?;
                if p.eat_sym("'")? {
                    // Bare primed name: post-state attribute of `self`.
                    Ok(SlExpr::attr(SlExpr::SelfRef, name, true))
                } else {
                    Ok(SlExpr::Ident(name))
                }
            }
        },
        other => p.error(t.pos, format!("expected an expression, found {other}")),
    }
}

/// Syntactic parse only; names stay unresolved.
pub fn parse_sl_syntax(text: &str) -> Result<SlExpr, Diagnostic> {
    let mut p = Parser::new(text);
    let e = parse_expr(&mut p)?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses and type checks a boolean SL expression in `ctx`, returning the
/// resolved AST.
pub fn parse_sl(text: &str, ctx: &SlContext) -> Result<SlExpr, Vec<Diagnostic>> {
    let mut p = Parser::new(text);
    let start = p.pos().map_err(|d| vec![d])?;
    let e = parse_expr(&mut p).map_err(|d| vec![d])?;
    p.expect_eof().map_err(|d| vec![d])?;
    match typecheck(&e, ctx) {
        Ok((resolved, SlType::Bool)) => Ok(resolved),
        Ok((_, ty)) => Err(vec![Diagnostic::new(
            "<input>",
            start,
            format!("expected a boolean expression, found {ty}"),
        )]),
        Err(msg) => Err(vec![Diagnostic::new("<input>", start, msg)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClassSig, ClassTable, ValueDomain};
    use crate::sl::Mode;

    fn account_table() -> ClassTable {
        let mut t = ClassTable::default();
        t.add_class(
            "Account",
            ClassSig {
                attrs: vec![("balance".into(), ValueDomain::Int { lo: 0, hi: 3 })],
                ops: vec![],
            },
        );
        t
    }

    #[test]
    fn boolean_connectives() {
        let t = ClassTable::default();
        let e = parse_sl("true && !false", &SlContext::single(&t)).unwrap();
        assert_eq!(
            e,
            SlExpr::bin(
                BinOp::And,
                SlExpr::Bool(true),
                SlExpr::not(SlExpr::Bool(false))
            )
        );
    }

    #[test]
    fn quantified_invariant() {
        let t = account_table();
        let e = parse_sl("forall a: Account . a.balance >= 0", &SlContext::single(&t)).unwrap();
        assert_eq!(
            e,
            SlExpr::quant(
                Quantifier::Forall,
                "a",
                "Account",
                SlExpr::bin(
                    BinOp::Ge,
                    SlExpr::attr(SlExpr::Var("a".into()), "balance", false),
                    SlExpr::Int(0)
                )
            )
        );
    }

    #[test]
    fn primed_access_needs_two_state_mode() {
        let t = account_table();
        let params = vec![("amount".to_string(), ValueDomain::Int { lo: 0, hi: 3 })];
        let single = SlContext::single(&t)
            .with_self("Account")
            .with_params(params.clone());
        let err = parse_sl("balance' == balance + amount", &single).unwrap_err();
        assert!(err[0].message.contains("post-state"), "{:?}", err);

        let two = SlContext {
            mode: Mode::TwoState,
            ..single
        };
        let e = parse_sl("balance' == balance + amount", &two).unwrap();
        assert_eq!(
            e,
            SlExpr::bin(
                BinOp::Eq,
                SlExpr::attr(SlExpr::SelfRef, "balance", true),
                SlExpr::bin(
                    BinOp::Add,
                    SlExpr::attr(SlExpr::SelfRef, "balance", false),
                    SlExpr::Param("amount".into())
                )
            )
        );
    }

    #[test]
    fn syntax_errors_have_positions() {
        let err = parse_sl_syntax("a &&\n  )").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
        assert!(parse_sl_syntax("a < b < c").is_err());
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(parse_sl_syntax("-3").unwrap(), SlExpr::Int(-3));
        assert_eq!(
            parse_sl_syntax("-(3)").unwrap(),
            SlExpr::Neg(Box::new(SlExpr::Int(3)))
        );
    }
}
