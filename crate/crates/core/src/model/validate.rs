use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{ClassTable, MsgKind, ObjectId, Party, Snapshot, SystemTrace, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    ClassTable,
    UnknownClass,
    EnvObject,
    Attribute,
    ActiveOps,
    Link,
    PopulationDecreased,
    ClassChanged,
    UnknownSender,
    MissingReceiver,
    UnknownOperation,
    Arguments,
    ConcurrentInvocation,
    UnmatchedReturn,
    ReturnAddressee,
}

/// A well-formedness violation located at a snapshot index (0 = initial,
/// `k` = the k-th event and the snapshot following it).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub step: usize,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.step, self.message)
    }
}

struct Report(Vec<Violation>);

impl Report {
    fn push(&mut self, step: usize, kind: ViolationKind, message: String) {
        self.0.push(Violation {
            step,
            kind,
            message,
        });
    }
}

/// Active operations per object at every snapshot, computed by replaying the
/// call/return events in order.
pub fn replay_active_ops(s: &SystemTrace) -> Vec<BTreeMap<ObjectId, BTreeSet<String>>> {
    let mut pending: BTreeSet<(ObjectId, String)> = BTreeSet::new();
    let mut out = vec![BTreeMap::new()];
    for ev in s.events() {
        match ev.kind {
            MsgKind::Call => {
                if let Party::Obj(r) = &ev.receiver {
                    pending.insert((r.clone(), ev.op.clone()));
                }
            }
            MsgKind::Return => {
                if let Party::Obj(snd) = &ev.sender {
                    pending.remove(&(snd.clone(), ev.op.clone()));
                }
            }
        }
        let mut m: BTreeMap<ObjectId, BTreeSet<String>> = BTreeMap::new();
        for (o, op) in &pending {
            m.entry(o.clone()).or_default().insert(op.clone());
        }
        out.push(m);
    }
    out
}

fn check_snapshot(t: &ClassTable, snap: &Snapshot, step: usize, r: &mut Report) {
    for (id, entry) in &snap.objects {
        if id.as_str() == "env" {
            r.push(step, ViolationKind::EnvObject, "`env` used as an object".into());
        }
        if !t.classes.contains_key(&entry.class) {
            r.push(
                step,
                ViolationKind::UnknownClass,
                format!("object `{id}` has unknown class `{}`", entry.class),
            );
            continue;
        }
        let declared = t.all_attrs(&entry.class);
        for (a, dom) in &declared {
            match entry.state.attrs.get(a) {
                None => r.push(
                    step,
                    ViolationKind::Attribute,
                    format!("object `{id}` lacks attribute `{a}`"),
                ),
                Some(v) if !dom.admits(t, snap, v) => r.push(
                    step,
                    ViolationKind::Attribute,
                    format!("object `{id}` attribute `{a}` = {v} outside {dom}"),
                ),
                Some(_) => {}
            }
        }
        for a in entry.state.attrs.keys() {
            if !declared.iter().any(|(n, _)| n == a) {
                r.push(
                    step,
                    ViolationKind::Attribute,
                    format!("object `{id}` has undeclared attribute `{a}`"),
                );
            }
        }
        for op in &entry.state.active {
            if t.find_op(&entry.class, op).is_none() {
                r.push(
                    step,
                    ViolationKind::ActiveOps,
                    format!("object `{id}` has undeclared active operation `{op}`"),
                );
            }
        }
    }
    for l in &snap.links {
        let Some(a) = t.associations.get(&l.assoc) else {
            r.push(
                step,
                ViolationKind::Link,
                format!("link of unknown association `{}`", l.assoc),
            );
            continue;
        };
        for (o, class) in [(&l.source, &a.source.class), (&l.target, &a.target.class)] {
            match snap.class_of(o) {
                None => r.push(
                    step,
                    ViolationKind::Link,
                    format!("link `{}` endpoint `{o}` does not exist", l.assoc),
                ),
                Some(c) if !t.is_subclass(c, class) => r.push(
                    step,
                    ViolationKind::Link,
                    format!("link `{}` endpoint `{o}` is not a `{class}`", l.assoc),
                ),
                Some(_) => {}
            }
        }
    }
}

/// Returns every well-formedness violation of `s`, ordered by step.
pub fn validate_system(s: &SystemTrace) -> Vec<Violation> {
    let t = &s.class_table;
    let mut r = Report(Vec::new());
    for p in t.problems() {
        r.push(0, ViolationKind::ClassTable, p);
    }
    check_snapshot(t, &s.initial, 0, &mut r);

    // (callee, op) -> caller
    let mut pending: BTreeMap<(ObjectId, String), Party> = BTreeMap::new();
    let mut prev = &s.initial;
    for (i, st) in s.steps.iter().enumerate() {
        let k = i + 1;
        let snap = &st.snapshot;
        let ev = &st.event;
        check_snapshot(t, snap, k, &mut r);
        for (id, e) in &prev.objects {
            match snap.objects.get(id) {
                None => r.push(
                    k,
                    ViolationKind::PopulationDecreased,
                    format!("population decreased: object `{id}` disappeared"),
                ),
                Some(e2) if e2.class != e.class => r.push(
                    k,
                    ViolationKind::ClassChanged,
                    format!("object `{id}` changed class"),
                ),
                Some(_) => {}
            }
        }
        if let Party::Obj(o) = &ev.sender {
            if !prev.objects.contains_key(o) {
                r.push(
                    k,
                    ViolationKind::UnknownSender,
                    format!("sender `{o}` does not exist before the event"),
                );
            }
        }
        match ev.kind {
            MsgKind::Call => match &ev.receiver {
                Party::Env => r.push(
                    k,
                    ViolationKind::MissingReceiver,
                    "call addressed to the environment".into(),
                ),
                Party::Obj(recv) => {
                    match snap.class_of(recv) {
                        None => r.push(
                            k,
                            ViolationKind::MissingReceiver,
                            format!("receiver `{recv}` does not exist after the call"),
                        ),
                        Some(class) => match t.find_op(class, &ev.op) {
                            None => r.push(
                                k,
                                ViolationKind::UnknownOperation,
                                format!("`{class}` declares no operation `{}`", ev.op),
                            ),
                            Some(sig) => {
                                let ok = sig.params.len() == ev.args.len()
                                    && sig
                                        .params
                                        .iter()
                                        .zip(&ev.args)
                                        .all(|(d, v)| d.admits(t, snap, v));
                                if !ok {
                                    r.push(
                                        k,
                                        ViolationKind::Arguments,
                                        format!("arguments of call `{}` do not conform", ev.op),
                                    );
                                }
                            }
                        },
                    }
                    let key = (recv.clone(), ev.op.clone());
                    if pending.contains_key(&key) {
                        r.push(
                            k,
                            ViolationKind::ConcurrentInvocation,
                            format!("`{}` is already active on `{recv}`", ev.op),
                        );
                    } else {
                        pending.insert(key, ev.sender.clone());
                    }
                }
            },
            MsgKind::Return => {
                let matched = ev
                    .sender
                    .obj()
                    .and_then(|o| pending.remove(&(o.clone(), ev.op.clone())));
                match matched {
                    None => r.push(
                        k,
                        ViolationKind::UnmatchedReturn,
                        format!("unmatched return of `{}` from `{}`", ev.op, ev.sender),
                    ),
                    Some(caller) => {
                        if caller != ev.receiver {
                            r.push(
                                k,
                                ViolationKind::ReturnAddressee,
                                format!(
                                    "return of `{}` addressed to `{}` instead of caller `{caller}`",
                                    ev.op, ev.receiver
                                ),
                            );
                        }
                        let sender_class = ev.sender.obj().and_then(|o| prev.class_of(o));
                        let result_dom = sender_class
                            .and_then(|c| t.find_op(c, &ev.op))
                            .and_then(|sig| sig.result);
                        let ok = match (&result_dom, ev.args.as_slice()) {
                            (None, [Value::Nil]) => true,
                            (Some(d), [v]) => d.admits(t, snap, v),
                            _ => false,
                        };
                        if !ok {
                            r.push(
                                k,
                                ViolationKind::Arguments,
                                format!("result of return `{}` does not conform", ev.op),
                            );
                        }
                    }
                }
            }
        }
        prev = snap;
    }

    let replay = replay_active_ops(s);
    for (k, snap) in s.snapshots().enumerate() {
        for (id, e) in &snap.objects {
            let expected = replay[k].get(id).cloned().unwrap_or_default();
            if e.state.active != expected {
                r.push(
                    k,
                    ViolationKind::ActiveOps,
                    format!("active operations of `{id}` disagree with call/return history"),
                );
            }
        }
    }

    let mut out = r.0;
    out.sort_by_key(|v| v.step);
    out
}
