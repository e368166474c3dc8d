//! The specification language: first-order predicate logic over snapshots
//! (invariants, preconditions) and snapshot pairs (postconditions).

mod eval;
mod parse;
mod render;
mod typeck;

pub use eval::{eval_in, eval_pair, eval_single, Bindings, EvalEnv, EvalError, SlValue};
pub use parse::{parse_sl, parse_sl_syntax};
pub(crate) use parse::parse_expr;
pub use render::render_sl;
pub use typeck::{domain_type, typecheck, SlType};

use crate::model::{ClassTable, ValueDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "=>",
        }
    }

    pub(crate) fn prec(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

/// SL abstract syntax.
///
/// The parser produces `Ident` for bare names; type checking resolves them
/// to `Var`, `Param`, an attribute of `self`, or `EnumLit`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlExpr {
    Bool(bool),
    Int(i64),
    Nil,
    Ident(String),
    Var(String),
    Param(String),
    EnumLit(String),
    SelfRef,
    /// `target.attr`, or `target.attr'` (post-state) when `primed`.
    Attr {
        target: Box<SlExpr>,
        attr: String,
        primed: bool,
    },
    Not(Box<SlExpr>),
    Neg(Box<SlExpr>),
    Bin(BinOp, Box<SlExpr>, Box<SlExpr>),
    /// `forall var: class . body`; a primed class ranges over the post-state.
    Quant {
        kind: Quantifier,
        var: String,
        class: String,
        primed: bool,
        body: Box<SlExpr>,
    },
    Linked {
        assoc: String,
        source: Box<SlExpr>,
        target: Box<SlExpr>,
        primed: bool,
    },
}

impl SlExpr {
    pub fn bin(op: BinOp, l: SlExpr, r: SlExpr) -> SlExpr {
        SlExpr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn not(e: SlExpr) -> SlExpr {
        SlExpr::Not(Box::new(e))
    }

    pub fn attr(target: SlExpr, attr: impl Into<String>, primed: bool) -> SlExpr {
        SlExpr::Attr {
            target: Box::new(target),
            attr: attr.into(),
            primed,
        }
    }

    pub fn quant(kind: Quantifier, var: impl Into<String>, class: impl Into<String>, body: SlExpr) -> SlExpr {
        SlExpr::Quant {
            kind,
            var: var.into(),
            class: class.into(),
            primed: false,
            body: Box::new(body),
        }
    }

    /// Whether the expression reads the post-state anywhere.
    pub fn is_two_state(&self) -> bool {
        match self {
            SlExpr::Attr { target, primed, .. } => *primed || target.is_two_state(),
            SlExpr::Not(e) | SlExpr::Neg(e) => e.is_two_state(),
            SlExpr::Bin(_, l, r) => l.is_two_state() || r.is_two_state(),
            SlExpr::Quant { primed, body, .. } => *primed || body.is_two_state(),
            SlExpr::Linked {
                source,
                target,
                primed,
                ..
            } => *primed || source.is_two_state() || target.is_two_state(),
            _ => false,
        }
    }

    /// Maximum nesting depth (leaves have depth 1).
    pub fn depth(&self) -> usize {
        1 + match self {
            SlExpr::Attr { target, .. } => target.depth(),
            SlExpr::Not(e) | SlExpr::Neg(e) => e.depth(),
            SlExpr::Bin(_, l, r) => l.depth().max(r.depth()),
            SlExpr::Quant { body, .. } => body.depth(),
            SlExpr::Linked { source, target, .. } => source.depth().max(target.depth()),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SingleState,
    TwoState,
}

/// Typing context for SL expressions.
#[derive(Debug, Clone)]
pub struct SlContext<'a> {
    pub mode: Mode,
    pub table: &'a ClassTable,
    /// Operation parameters in scope (STD transitions).
    pub params: Vec<(String, ValueDomain)>,
    /// Free object variables in scope, with their classes.
    pub vars: Vec<(String, String)>,
    /// Class of `self`, when evaluating inside a lifecycle.
    pub self_class: Option<String>,
}

impl<'a> SlContext<'a> {
    pub fn single(table: &'a ClassTable) -> Self {
        SlContext {
            mode: Mode::SingleState,
            table,
            params: Vec::new(),
            vars: Vec::new(),
            self_class: None,
        }
    }

    pub fn two_state(table: &'a ClassTable) -> Self {
        SlContext {
            mode: Mode::TwoState,
            ..SlContext::single(table)
        }
    }

    pub fn with_self(mut self, class: impl Into<String>) -> Self {
        self.self_class = Some(class.into());
        self
    }

    pub fn with_params(mut self, params: Vec<(String, ValueDomain)>) -> Self {
        self.params = params;
        self
    }

    pub fn with_var(mut self, name: impl Into<String>, class: impl Into<String>) -> Self {
        self.vars.push((name.into(), class.into()));
        self
    }
}

pub(crate) const KEYWORDS: &[&str] = &[
    "forall", "exists", "true", "false", "nil", "self", "linked",
];
