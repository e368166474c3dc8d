//! Satisfaction of state transition diagrams.
//!
//! The control state is not part of the system model; it is guessed. For
//! each object of the subject class we track the set of configurations
//! (control state, outputs still owed) reachable by some acceptance run.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::om::instances;
use crate::doc::{StdDoc, Transition};
use crate::model::{ClassTable, LinkEnd, MsgEvent, MsgKind, ObjectId, Party, Snapshot, SystemTrace, Value};
use crate::sl::{eval_in, Bindings, EvalEnv, SlValue};

/// An output message the object still has to send.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Owed {
    pub receiver: ObjectId,
    pub op: String,
    pub args: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Config {
    state: String,
    owed: VecDeque<Owed>,
}

/// Incremental acceptance run of one STD over a growing trace.
#[derive(Debug, Clone, Default)]
pub(crate) struct StdRun {
    objects: BTreeMap<ObjectId, BTreeSet<Config>>,
}

/// Outcome of firing one transition on a call event.
pub(crate) struct Firing {
    pub owed: Vec<Owed>,
}

fn sl_to_value(v: SlValue) -> Option<Value> {
    Some(match v {
        SlValue::Nil => Value::Nil,
        SlValue::Bool(b) => Value::Bool(b),
        SlValue::Int(n) => Value::Int(i64::try_from(n).ok()?),
        SlValue::Enum(l) => Value::Enum(l),
        SlValue::Obj(o) => Value::Ref(o),
    })
}

/// Objects reached from `root` by following association roles in `post`.
pub(crate) fn navigate(
    table: &ClassTable,
    post: &Snapshot,
    root: ObjectId,
    path: &[String],
) -> Option<BTreeSet<ObjectId>> {
    let mut cur: BTreeSet<ObjectId> = [root].into_iter().collect();
    for role in path {
        let mut next = BTreeSet::new();
        for o in &cur {
            let class = post.class_of(o)?;
            let (assoc, forward, _) = table.navigate(class, role)?;
            let end = if forward { LinkEnd::Source } else { LinkEnd::Target };
            next.extend(post.link_partners(&assoc, o, end).ok()?);
        }
        cur = next;
    }
    Some(cur)
}

/// Parameter bindings of a transition for a call's arguments.
pub(crate) fn param_map(t: &Transition, args: &[Value]) -> BTreeMap<String, Value> {
    t.params.iter().cloned().zip(args.iter().cloned()).collect()
}

/// Whether the precondition of `t` holds for object `o` in `pre`.
pub(crate) fn pre_holds(
    table: &ClassTable,
    t: &Transition,
    o: &ObjectId,
    pre: &Snapshot,
    params: &BTreeMap<String, Value>,
) -> bool {
    let env = EvalEnv {
        table,
        pre,
        post: None,
        params: Some(params),
    };
    let b: Bindings = [("self".to_string(), Value::Ref(o.clone()))].into_iter().collect();
    matches!(eval_in(&t.pre, env, &b), Ok(SlValue::Bool(true)))
}

/// Whether the postcondition of `t` holds on (`pre`, `post`).
pub(crate) fn post_holds(
    table: &ClassTable,
    t: &Transition,
    o: &ObjectId,
    pre: &Snapshot,
    post: &Snapshot,
    params: &BTreeMap<String, Value>,
) -> bool {
    let env = EvalEnv {
        table,
        pre,
        post: Some(post),
        params: Some(params),
    };
    let b: Bindings = [("self".to_string(), Value::Ref(o.clone()))].into_iter().collect();
    matches!(eval_in(&t.post, env, &b), Ok(SlValue::Bool(true)))
}

/// Output messages of `t` for the trigger pair (`pre`, `post`). `None`
/// when a receiver or argument cannot be evaluated.
pub(crate) fn outputs(
    table: &ClassTable,
    t: &Transition,
    o: &ObjectId,
    pre: &Snapshot,
    post: &Snapshot,
    params: &BTreeMap<String, Value>,
) -> Option<Vec<Owed>> {
    let env = EvalEnv {
        table,
        pre,
        post: Some(post),
        params: Some(params),
    };
    let b: Bindings = [("self".to_string(), Value::Ref(o.clone()))].into_iter().collect();
    let mut owed = Vec::new();
    for tpl in &t.outputs {
        let root = if tpl.receiver.root == "self" {
            o.clone()
        } else {
            match params.get(&tpl.receiver.root)? {
                Value::Ref(r) => r.clone(),
                _ => return None,
            }
        };
        let receivers = navigate(table, post, root, &tpl.receiver.path)?;
        let mut args = Vec::with_capacity(tpl.args.len());
        for a in &tpl.args {
            args.push(sl_to_value(eval_in(a, env, &b).ok()?)?);
        }
        for r in receivers {
            owed.push(Owed {
                receiver: r,
                op: tpl.op.clone(),
                args: args.clone(),
            });
        }
    }
    Some(owed)
}

/// Fires `t` for a call to `o` between `pre` and `post`, if enabled.
pub(crate) fn fire(
    table: &ClassTable,
    t: &Transition,
    o: &ObjectId,
    ev: &MsgEvent,
    pre: &Snapshot,
    post: &Snapshot,
) -> Option<Firing> {
    if t.op != ev.op || t.params.len() != ev.args.len() {
        return None;
    }
    let params = param_map(t, &ev.args);
    if !pre_holds(table, t, o, pre, &params) || !post_holds(table, t, o, pre, post, &params) {
        return None;
    }
    let owed = outputs(table, t, o, pre, post, &params)?;
    Some(Firing { owed })
}

impl StdRun {
    /// Starts runs for subject objects present in `snap` and not yet
    /// tracked (objects are tracked from creation).
    fn admit(&mut self, std: &StdDoc, table: &ClassTable, snap: &Snapshot) {
        for o in instances(table, snap, &std.class) {
            self.objects.entry(o.clone()).or_insert_with(|| {
                [Config {
                    state: std.initial.clone(),
                    owed: VecDeque::new(),
                }]
                .into_iter()
                .collect()
            });
        }
    }

    pub fn start(std: &StdDoc, s: &SystemTrace) -> StdRun {
        let mut run = StdRun::default();
        run.admit(std, &s.class_table, &s.initial);
        run
    }

    /// Consumes step `i` (1-based) of `s`. Returns false once some object
    /// has no surviving run.
    pub fn step(&mut self, std: &StdDoc, s: &SystemTrace, i: usize) -> bool {
        let table = &s.class_table;
        let pre = s.snapshot(i - 1).expect("step in range");
        let post = s.snapshot(i).expect("step in range");
        let ev = &s.steps[i - 1].event;
        self.admit(std, table, post);
        if ev.kind != MsgKind::Call {
            return true;
        }
        if let Party::Obj(sender) = &ev.sender {
            if let Some(configs) = self.objects.get_mut(sender) {
                let Party::Obj(receiver) = &ev.receiver else {
                    unreachable!("calls are addressed to objects")
                };
                let sent = Owed {
                    receiver: receiver.clone(),
                    op: ev.op.clone(),
                    args: ev.args.clone(),
                };
                *configs = std::mem::take(configs)
                    .into_iter()
                    .filter_map(|mut c| {
                        (c.owed.pop_front().as_ref() == Some(&sent)).then_some(c)
                    })
                    .collect();
                if configs.is_empty() {
                    return false;
                }
            }
        }
        if let Party::Obj(receiver) = &ev.receiver {
            if let Some(configs) = self.objects.get_mut(receiver) {
                let mut next = BTreeSet::new();
                for c in configs.iter().filter(|c| c.owed.is_empty()) {
                    for t in std.transitions.iter().filter(|t| t.source == c.state) {
                        if let Some(f) = fire(table, t, receiver, ev, pre, post) {
                            next.insert(Config {
                                state: t.target.clone(),
                                owed: f.owed.into(),
                            });
                        }
                    }
                }
                *configs = next;
                if configs.is_empty() {
                    return false;
                }
            }
        }
        true
    }
}

/// `s ⊨ std`. Outputs still owed at the end of the trace are allowed: the
/// semantics of a lifecycle is closed under prefixes.
pub fn satisfies_std(s: &SystemTrace, std: &StdDoc) -> bool {
    let mut run = StdRun::start(std, s);
    (1..s.len()).all(|i| run.step(std, s, i))
}
