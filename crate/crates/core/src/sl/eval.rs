use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use super::{BinOp, Quantifier, SlExpr};
use crate::model::{ClassTable, Link, ObjectId, Snapshot, SystemTrace, Value};

/// Variable bindings; the name `self` binds the receiver object.
pub type Bindings = BTreeMap<String, Value>;

/// Runtime value. Arithmetic is unbounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlValue {
    Nil,
    Bool(bool),
    Int(BigInt),
    Enum(String),
    Obj(ObjectId),
}

impl From<&Value> for SlValue {
    fn from(v: &Value) -> Self {
        match v {
            Value::Nil => SlValue::Nil,
            Value::Bool(b) => SlValue::Bool(*b),
            Value::Int(n) => SlValue::Int(BigInt::from(*n)),
            Value::Enum(l) => SlValue::Enum(l.clone()),
            Value::Ref(o) => SlValue::Obj(o.clone()),
        }
    }
}

impl fmt::Display for SlValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlValue::Nil => f.write_str("nil"),
            SlValue::Bool(b) => write!(f, "{b}"),
            SlValue::Int(n) => write!(f, "{n}"),
            SlValue::Enum(l) => f.write_str(l),
            SlValue::Obj(o) => write!(f, "{o}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("attribute `{0}` accessed on nil")]
    NilDereference(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("object {0} does not exist in the snapshot")]
    UnknownObject(ObjectId),
    #[error("object {object} has no attribute `{attr}`")]
    UnknownAttribute { object: ObjectId, attr: String },
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("post-state is not available")]
    NoPostState,
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("step {index} out of range for a trace of length {len}")]
    StepOutOfRange { index: usize, len: usize },
}

/// Evaluation environment: one snapshot, or a pre/post pair.
#[derive(Debug, Clone, Copy)]
pub struct EvalEnv<'a> {
    pub table: &'a ClassTable,
    pub pre: &'a Snapshot,
    pub post: Option<&'a Snapshot>,
    pub params: Option<&'a BTreeMap<String, Value>>,
}

struct Eval<'a> {
    env: EvalEnv<'a>,
    scope: Vec<(String, SlValue)>,
}

impl<'a> Eval<'a> {
    fn snap(&self, primed: bool) -> Result<&'a Snapshot, EvalError> {
        if primed {
            self.env.post.ok_or(EvalError::NoPostState)
        } else {
            Ok(self.env.pre)
        }
    }

    fn lookup(&self, name: &str) -> Option<&SlValue> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn self_obj(&self) -> Result<ObjectId, EvalError> {
        match self.lookup("self") {
            Some(SlValue::Obj(o)) => Ok(o.clone()),
            Some(SlValue::Nil) => Err(EvalError::TypeMismatch("`self` is nil".into())),
            _ => Err(EvalError::UnboundVariable("self".into())),
        }
    }

    fn attr_of(&self, o: &ObjectId, attr: &str, primed: bool) -> Result<SlValue, EvalError> {
        let snap = self.snap(primed)?;
        let entry = snap
            .objects
            .get(o)
            .ok_or_else(|| EvalError::UnknownObject(o.clone()))?;
        entry
            .state
            .attrs
            .get(attr)
            .map(SlValue::from)
            .ok_or_else(|| EvalError::UnknownAttribute {
                object: o.clone(),
                attr: attr.to_string(),
            })
    }

    fn bool(&mut self, e: &SlExpr) -> Result<bool, EvalError> {
        match self.eval(e)? {
            SlValue::Bool(b) => Ok(b),
            v => Err(EvalError::TypeMismatch(format!("expected Bool, found {v}"))),
        }
    }

    fn int(&mut self, e: &SlExpr) -> Result<BigInt, EvalError> {
        match self.eval(e)? {
            SlValue::Int(n) => Ok(n),
            v => Err(EvalError::TypeMismatch(format!("expected Int, found {v}"))),
        }
    }

    fn obj(&mut self, e: &SlExpr) -> Result<Option<ObjectId>, EvalError> {
        match self.eval(e)? {
            SlValue::Obj(o) => Ok(Some(o)),
            SlValue::Nil => Ok(None),
            v => Err(EvalError::TypeMismatch(format!("expected an object, found {v}"))),
        }
    }

    fn eval(&mut self, e: &SlExpr) -> Result<SlValue, EvalError> {
        Ok(match e {
            SlExpr::Bool(b) => SlValue::Bool(*b),
            SlExpr::Int(n) => SlValue::Int(BigInt::from(*n)),
            SlExpr::Nil => SlValue::Nil,
            SlExpr::EnumLit(l) => SlValue::Enum(l.clone()),
            SlExpr::Var(n) => self
                .lookup(n)
                .cloned()
                .ok_or_else(|| EvalError::UnboundVariable(n.clone()))?,
            SlExpr::Param(n) => self
                .env
                .params
                .and_then(|p| p.get(n))
                .map(SlValue::from)
                .ok_or_else(|| EvalError::MissingParameter(n.clone()))?,
            SlExpr::SelfRef => SlValue::Obj(self.self_obj()?),
            SlExpr::Ident(n) => {
                // Unresolved name: same order as type checking.
                if let Some(v) = self.lookup(n) {
                    v.clone()
                } else if let Some(v) = self.env.params.and_then(|p| p.get(n)) {
                    SlValue::from(v)
                } else if let Some(SlValue::Obj(o)) = self.lookup("self").cloned() {
                    match self.attr_of(&o, n, false) {
                        Ok(v) => v,
                        Err(EvalError::UnknownAttribute { .. }) => SlValue::Enum(n.clone()),
                        Err(err) => return Err(err),
                    }
                } else {
                    SlValue::Enum(n.clone())
                }
            }
            SlExpr::Attr {
                target,
                attr,
                primed,
            } => match self.obj(target)? {
                Some(o) => self.attr_of(&o, attr, *primed)?,
                None => return Err(EvalError::NilDereference(attr.clone())),
            },
            SlExpr::Not(x) => SlValue::Bool(!self.bool(x)?),
            SlExpr::Neg(x) => SlValue::Int(-self.int(x)?),
            SlExpr::Bin(op, l, r) => match op {
                BinOp::And => SlValue::Bool(self.bool(l)? && self.bool(r)?),
                BinOp::Or => SlValue::Bool(self.bool(l)? || self.bool(r)?),
                BinOp::Implies => SlValue::Bool(!self.bool(l)? || self.bool(r)?),
                BinOp::Eq => SlValue::Bool(self.eval(l)? == self.eval(r)?),
                BinOp::Ne => SlValue::Bool(self.eval(l)? != self.eval(r)?),
                BinOp::Add => SlValue::Int(self.int(l)? + self.int(r)?),
                BinOp::Sub => SlValue::Int(self.int(l)? - self.int(r)?),
                BinOp::Mul => SlValue::Int(self.int(l)? * self.int(r)?),
                BinOp::Lt => SlValue::Bool(self.int(l)? < self.int(r)?),
                BinOp::Le => SlValue::Bool(self.int(l)? <= self.int(r)?),
                BinOp::Gt => SlValue::Bool(self.int(l)? > self.int(r)?),
                BinOp::Ge => SlValue::Bool(self.int(l)? >= self.int(r)?),
            },
            SlExpr::Quant {
                kind,
                var,
                class,
                primed,
                body,
            } => {
                if !self.env.table.classes.contains_key(class) {
                    return Err(EvalError::UnknownClass(class.clone()));
                }
                let snap = self.snap(*primed)?;
                let domain = snap.objects_of(self.env.table, class);
                let want = matches!(kind, Quantifier::Exists);
                let mut result = !want;
                for o in domain {
                    self.scope.push((var.clone(), SlValue::Obj(o)));
                    let b = self.bool(body);
                    self.scope.pop();
                    if b? == want {
                        result = want;
                        break;
                    }
                }
                SlValue::Bool(result)
            }
            SlExpr::Linked {
                assoc,
                source,
                target,
                primed,
            } => {
                let s = self.obj(source)?;
                let t = self.obj(target)?;
                let snap = self.snap(*primed)?;
                SlValue::Bool(match (s, t) {
                    (Some(s), Some(t)) => snap.links.contains(&Link::new(assoc.clone(), s, t)),
                    _ => false,
                })
            }
        })
    }
}

/// Evaluates `e` in `env` with the given bindings.
pub fn eval_in(e: &SlExpr, env: EvalEnv, bindings: &Bindings) -> Result<SlValue, EvalError> {
    let mut ev = Eval {
        env,
        scope: bindings
            .iter()
            .map(|(k, v)| (k.clone(), SlValue::from(v)))
            .collect(),
    };
    ev.eval(e)
}

fn expect_bool(v: SlValue) -> Result<bool, EvalError> {
    match v {
        SlValue::Bool(b) => Ok(b),
        v => Err(EvalError::TypeMismatch(format!("expected Bool, found {v}"))),
    }
}

/// Evaluates a single-state expression on snapshot `step` of `s`.
pub fn eval_single(
    e: &SlExpr,
    s: &SystemTrace,
    step: usize,
    bindings: &Bindings,
) -> Result<bool, EvalError> {
    let snap = s.snapshot(step).map_err(|_| EvalError::StepOutOfRange {
        index: step,
        len: s.len(),
    })?;
    let env = EvalEnv {
        table: &s.class_table,
        pre: snap,
        post: None,
        params: None,
    };
    expect_bool(eval_in(e, env, bindings)?)
}

/// Evaluates a two-state expression on the snapshot pair (`pre`, `post`).
pub fn eval_pair(
    e: &SlExpr,
    s: &SystemTrace,
    pre: usize,
    post: usize,
    params: &BTreeMap<String, Value>,
    bindings: &Bindings,
) -> Result<bool, EvalError> {
    let range = |index| EvalError::StepOutOfRange { index, len: s.len() };
    let pre_snap = s.snapshot(pre).map_err(|_| range(pre))?;
    let post_snap = s.snapshot(post).map_err(|_| range(post))?;
    let env = EvalEnv {
        table: &s.class_table,
        pre: pre_snap,
        post: Some(post_snap),
        params: Some(params),
    };
    expect_bool(eval_in(e, env, bindings)?)
}
