use std::collections::BTreeSet;
use std::fmt;

use super::{BinOp, Mode, SlContext, SlExpr};
use crate::model::ValueDomain;

/// Static type of an SL expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlType {
    Bool,
    Int,
    Enum(Vec<String>),
    /// An enumeration literal whose domain is fixed by context.
    EnumLit(String),
    /// An object reference; `None` for `nil`.
    Obj(Option<String>),
}

impl fmt::Display for SlType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlType::Bool => f.write_str("Bool"),
            SlType::Int => f.write_str("Int"),
            SlType::Enum(ls) => write!(f, "Enum{{{}}}", ls.join(", ")),
            SlType::EnumLit(l) => write!(f, "enumeration literal `{l}`"),
            SlType::Obj(Some(c)) => write!(f, "Ref {c}"),
            SlType::Obj(None) => f.write_str("nil"),
        }
    }
}

pub fn domain_type(d: &ValueDomain) -> SlType {
    match d {
        ValueDomain::Bool => SlType::Bool,
        ValueDomain::Int { .. } => SlType::Int,
        ValueDomain::Enum(ls) => SlType::Enum(ls.clone()),
        ValueDomain::Ref(c) => SlType::Obj(Some(c.clone())),
    }
}

struct Checker<'c, 'a> {
    ctx: &'c SlContext<'a>,
    vars: Vec<(String, String)>,
    labels: BTreeSet<String>,
}

fn collect_labels(d: &ValueDomain, out: &mut BTreeSet<String>) {
    if let ValueDomain::Enum(ls) = d {
        out.extend(ls.iter().cloned());
    }
}

impl Checker<'_, '_> {
    fn related(&self, a: &str, b: &str) -> bool {
        self.ctx.table.is_subclass(a, b) || self.ctx.table.is_subclass(b, a)
    }

    fn comparable(&self, a: &SlType, b: &SlType) -> bool {
        use SlType::*;
        match (a, b) {
            (Bool, Bool) | (Int, Int) => true,
            (Enum(x), Enum(y)) => x == y,
            (Enum(d), EnumLit(l)) | (EnumLit(l), Enum(d)) => d.contains(l),
            (EnumLit(_), EnumLit(_)) => true,
            (Obj(None), Obj(_)) | (Obj(_), Obj(None)) => true,
            (Obj(Some(x)), Obj(Some(y))) => self.related(x, y),
            _ => false,
        }
    }

    fn need_two_state(&self, what: &str) -> Result<(), String> {
        match self.ctx.mode {
            Mode::TwoState => Ok(()),
            Mode::SingleState => Err(format!(
                "{what} refers to the post-state, which is not available here"
            )),
        }
    }

    fn self_attr(&self, name: &str) -> Option<ValueDomain> {
        let c = self.ctx.self_class.as_deref()?;
        self.ctx.table.attr_domain(c, name)
    }

    fn check(&mut self, e: &SlExpr) -> Result<(SlExpr, SlType), String> {
        use SlType as T;
        Ok(match e {
            SlExpr::Bool(_) => (e.clone(), T::Bool),
            SlExpr::Int(_) => (e.clone(), T::Int),
            SlExpr::Nil => (e.clone(), T::Obj(None)),
            SlExpr::Ident(n) => {
                if let Some((_, c)) = self.vars.iter().rev().find(|(v, _)| v == n) {
                    (SlExpr::Var(n.clone()), T::Obj(Some(c.clone())))
                } else if let Some((_, d)) = self.ctx.params.iter().find(|(p, _)| p == n) {
                    (SlExpr::Param(n.clone()), domain_type(d))
                } else if let Some(d) = self.self_attr(n) {
                    (SlExpr::attr(SlExpr::SelfRef, n.clone(), false), domain_type(&d))
                } else if self.labels.contains(n) {
                    (SlExpr::EnumLit(n.clone()), T::EnumLit(n.clone()))
                } else {
                    return Err(format!("unknown name `{n}`"));
                }
            }
            SlExpr::Var(n) => match self.vars.iter().rev().find(|(v, _)| v == n) {
                Some((_, c)) => (e.clone(), T::Obj(Some(c.clone()))),
                None => return Err(format!("unbound variable `{n}`")),
            },
            SlExpr::Param(n) => match self.ctx.params.iter().find(|(p, _)| p == n) {
                Some((_, d)) => (e.clone(), domain_type(d)),
                None => return Err(format!("unknown parameter `{n}`")),
            },
            SlExpr::EnumLit(l) => {
                if !self.labels.contains(l) {
                    return Err(format!("unknown enumeration literal `{l}`"));
                }
                (e.clone(), T::EnumLit(l.clone()))
            }
            SlExpr::SelfRef => match &self.ctx.self_class {
                Some(c) => (e.clone(), T::Obj(Some(c.clone()))),
                None => return Err("`self` is not available here".into()),
            },
            SlExpr::Attr {
                target,
                attr,
                primed,
            } => {
                if *primed {
                    self.need_two_state(&format!("`{attr}'`"))?;
                }
                let (t, tt) = self.check(target)?;
                let class = match tt {
                    T::Obj(Some(c)) => c,
                    T::Obj(None) => return Err(format!("attribute `{attr}` accessed on nil")),
                    other => {
                        return Err(format!("attribute `{attr}` accessed on a value of type {other}"))
                    }
                };
                let d = self
                    .ctx
                    .table
                    .attr_domain(&class, attr)
                    .ok_or_else(|| format!("class {class} has no attribute `{attr}`"))?;
                (SlExpr::attr(t, attr.clone(), *primed), domain_type(&d))
            }
            SlExpr::Not(x) => {
                let (x, t) = self.check(x)?;
                if t != T::Bool {
                    return Err(format!("`!` expects Bool, found {t}"));
                }
                (SlExpr::not(x), T::Bool)
            }
            SlExpr::Neg(x) => {
                let (x, t) = self.check(x)?;
                if t != T::Int {
                    return Err(format!("unary `-` expects Int, found {t}"));
                }
                (SlExpr::Neg(Box::new(x)), T::Int)
            }
            SlExpr::Bin(op, l, r) => {
                let (l, lt) = self.check(l)?;
                let (r, rt) = self.check(r)?;
                let ty = match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul => {
                        if lt != T::Int || rt != T::Int {
                            return Err(format!(
                                "`{}` expects Int operands, found {lt} and {rt}",
                                op.symbol()
                            ));
                        }
                        T::Int
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if lt != T::Int || rt != T::Int {
                            return Err(format!(
                                "`{}` expects Int operands, found {lt} and {rt}",
                                op.symbol()
                            ));
                        }
                        T::Bool
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if !self.comparable(&lt, &rt) {
                            return Err(format!("cannot compare {lt} with {rt}"));
                        }
                        T::Bool
                    }
                    BinOp::And | BinOp::Or | BinOp::Implies => {
                        if lt != T::Bool || rt != T::Bool {
                            return Err(format!(
                                "`{}` expects Bool operands, found {lt} and {rt}",
                                op.symbol()
                            ));
                        }
                        T::Bool
                    }
                };
                (SlExpr::bin(*op, l, r), ty)
            }
            SlExpr::Quant {
                kind,
                var,
                class,
                primed,
                body,
            } => {
                if *primed {
                    self.need_two_state(&format!("quantification over `{class}'`"))?;
                }
                if !self.ctx.table.classes.contains_key(class) {
                    return Err(format!("unknown class `{class}`"));
                }
                self.vars.push((var.clone(), class.clone()));
                let res = self.check(body);
                self.vars.pop();
                let (b, bt) = res?;
                if bt != T::Bool {
                    return Err(format!("quantifier body must be Bool, found {bt}"));
                }
                (
                    SlExpr::Quant {
                        kind: *kind,
                        var: var.clone(),
                        class: class.clone(),
                        primed: *primed,
                        body: Box::new(b),
                    },
                    T::Bool,
                )
            }
            SlExpr::Linked {
                assoc,
                source,
                target,
                primed,
            } => {
                if *primed {
                    self.need_two_state(&format!("`linked'({assoc}, ..)`"))?;
                }
                let sig = self
                    .ctx
                    .table
                    .associations
                    .get(assoc)
                    .ok_or_else(|| format!("unknown association `{assoc}`"))?
                    .clone();
                let (s, st) = self.check(source)?;
                let (t, tt) = self.check(target)?;
                for (ty, end) in [(&st, &sig.source), (&tt, &sig.target)] {
                    let ok = match ty {
                        T::Obj(None) => true,
                        T::Obj(Some(c)) => self.related(c, &end.class),
                        _ => false,
                    };
                    if !ok {
                        return Err(format!(
                            "end `{}` of {assoc} expects Ref {}, found {ty}",
                            end.role, end.class
                        ));
                    }
                }
                (
                    SlExpr::Linked {
                        assoc: assoc.clone(),
                        source: Box::new(s),
                        target: Box::new(t),
                        primed: *primed,
                    },
                    T::Bool,
                )
            }
        })
    }
}

/// Resolves names and computes the type of `e` in `ctx`.
pub fn typecheck(e: &SlExpr, ctx: &SlContext) -> Result<(SlExpr, SlType), String> {
    let mut labels = BTreeSet::new();
    for sig in ctx.table.classes.values() {
        for (_, d) in &sig.attrs {
            collect_labels(d, &mut labels);
        }
        for op in &sig.ops {
            for d in op.params.iter().chain(op.result.iter()) {
                collect_labels(d, &mut labels);
            }
        }
    }
    for (_, d) in &ctx.params {
        collect_labels(d, &mut labels);
    }
    let mut ck = Checker {
        ctx,
        vars: ctx.vars.clone(),
        labels,
    };
    ck.check(e)
}
