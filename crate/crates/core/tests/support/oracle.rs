//! Independent reference implementations.

use std::collections::{BTreeMap, BTreeSet};

use loosem::model::{
    render_trace, validate_system, ClassSig, ClassTable, Link, MsgEvent, MsgKind, ObjectEntry, ObjectId, ObjectState,
    Party, Snapshot, Step, SystemTrace, Value, ValueDomain,
};
use loosem::semantics::Bounds;
use loosem::sl::{BinOp, Quantifier, SlExpr};

// ---- SL: quantifier expansion ----

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ov {
    Nil,
    B(bool),
    I(i128),
    E(String),
    O(String),
}

fn ov(v: &Value) -> Ov {
    match v {
        Value::Nil => Ov::Nil,
        Value::Bool(b) => Ov::B(*b),
        Value::Int(n) => Ov::I(*n as i128),
        Value::Enum(l) => Ov::E(l.clone()),
        Value::Ref(o) => Ov::O(o.0.clone()),
    }
}

/// Quantifier-free form: every quantifier replaced by the explicit
/// conjunction or disjunction over the objects of its class.
#[derive(Debug, Clone)]
enum Ground {
    Const(Ov),
    Attr(Box<Ground>, String),
    Not(Box<Ground>),
    Neg(Box<Ground>),
    Bin(BinOp, Box<Ground>, Box<Ground>),
    All(Vec<Ground>),
    Any(Vec<Ground>),
    Linked(String, Box<Ground>, Box<Ground>),
}

fn descends(t: &ClassTable, sub: &str, sup: &str) -> bool {
    sub == sup
        || t
            .generalization
            .iter()
            .any(|(a, b)| a == sub && descends(t, b, sup))
}

fn expand(e: &SlExpr, t: &ClassTable, snap: &Snapshot, env: &BTreeMap<String, Ov>) -> Ground {
    let bx = |g| Box::new(g);
    match e {
        SlExpr::Bool(b) => Ground::Const(Ov::B(*b)),
        SlExpr::Int(n) => Ground::Const(Ov::I(*n as i128)),
        SlExpr::Nil => Ground::Const(Ov::Nil),
        SlExpr::EnumLit(l) => Ground::Const(Ov::E(l.clone())),
        SlExpr::Var(v) | SlExpr::Ident(v) => Ground::Const(env.get(v).cloned().unwrap_or_else(|| Ov::E(v.clone()))),
        SlExpr::Param(p) => panic!("oracle has no parameters ({p})"),
        SlExpr::SelfRef => Ground::Const(env.get("self").cloned().expect("self bound")),
        SlExpr::Attr { target, attr, primed } => {
            assert!(!primed, "single-state oracle");
            Ground::Attr(bx(expand(target, t, snap, env)), attr.clone())
        }
        SlExpr::Not(x) => Ground::Not(bx(expand(x, t, snap, env))),
        SlExpr::Neg(x) => Ground::Neg(bx(expand(x, t, snap, env))),
        SlExpr::Bin(op, l, r) => Ground::Bin(*op, bx(expand(l, t, snap, env)), bx(expand(r, t, snap, env))),
        SlExpr::Quant { kind, var, class, body, .. } => {
            let parts = snap
                .objects
                .iter()
                .filter(|(_, o)| descends(t, &o.class, class))
                .map(|(id, _)| {
                    let mut env = env.clone();
                    env.insert(var.clone(), Ov::O(id.0.clone()));
                    expand(body, t, snap, &env)
                })
                .collect();
            match kind {
                Quantifier::Forall => Ground::All(parts),
                Quantifier::Exists => Ground::Any(parts),
            }
        }
        SlExpr::Linked { assoc, source, target, .. } => {
            Ground::Linked(assoc.clone(), bx(expand(source, t, snap, env)), bx(expand(target, t, snap, env)))
        }
    }
}

/// `Err(())` is an evaluation error (nil dereference).
fn ground(g: &Ground, snap: &Snapshot) -> Result<Ov, ()> {
    let b = |g: &Ground| match ground(g, snap)? {
        Ov::B(b) => Ok(b),
        _ => Err(()),
    };
    let i = |g: &Ground| match ground(g, snap)? {
        Ov::I(n) => Ok(n),
        _ => Err(()),
    };
    Ok(match g {
        Ground::Const(v) => v.clone(),
        Ground::Attr(target, a) => match ground(target, snap)? {
            Ov::O(id) => ov(&snap.objects[&ObjectId::new(id)].state.attrs[a]),
            _ => return Err(()),
        },
        Ground::Not(x) => Ov::B(!b(x)?),
        Ground::Neg(x) => Ov::I(-i(x)?),
        Ground::Bin(op, l, r) => match op {
            BinOp::And => Ov::B(b(l)? && b(r)?),
            BinOp::Or => Ov::B(b(l)? || b(r)?),
            BinOp::Implies => Ov::B(!b(l)? || b(r)?),
            BinOp::Eq => Ov::B(ground(l, snap)? == ground(r, snap)?),
            BinOp::Ne => Ov::B(ground(l, snap)? != ground(r, snap)?),
            BinOp::Add => Ov::I(i(l)? + i(r)?),
            BinOp::Sub => Ov::I(i(l)? - i(r)?),
            BinOp::Mul => Ov::I(i(l)? * i(r)?),
            BinOp::Lt => Ov::B(i(l)? < i(r)?),
            BinOp::Le => Ov::B(i(l)? <= i(r)?),
            BinOp::Gt => Ov::B(i(l)? > i(r)?),
            BinOp::Ge => Ov::B(i(l)? >= i(r)?),
        },
        // left to right, stopping at the first decisive conjunct
        Ground::All(parts) => {
            for p in parts {
                if !b(p)? {
                    return Ok(Ov::B(false));
                }
            }
            Ov::B(true)
        }
        Ground::Any(parts) => {
            for p in parts {
                if b(p)? {
                    return Ok(Ov::B(true));
                }
            }
            Ov::B(false)
        }
        Ground::Linked(a, s, t) => {
            let s = ground(s, snap)?;
            let t = ground(t, snap)?;
            Ov::B(match (s, t) {
                (Ov::O(s), Ov::O(t)) => snap.links.contains(&Link::new(a.clone(), ObjectId::new(s), ObjectId::new(t))),
                _ => false,
            })
        }
    })
}

/// Truth value of a resolved single-state expression by quantifier
/// expansion; `None` on an evaluation error.
pub fn eval_expanded(e: &SlExpr, t: &ClassTable, snap: &Snapshot) -> Option<bool> {
    match ground(&expand(e, t, snap, &BTreeMap::new()), snap) {
        Ok(Ov::B(b)) => Some(b),
        _ => None,
    }
}

// ---- brute-force universe ----

fn class_tables(vocab: &ClassTable, b: &Bounds) -> Vec<ClassTable> {
    let mut full = b.base.clone();
    full.merge(vocab).expect("compatible base");
    let names: Vec<&String> = full.classes.keys().collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << names.len()) {
        let keep: BTreeSet<String> = names
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, n)| (*n).clone())
            .collect();
        if !b.base.classes.keys().all(|c| keep.contains(c)) {
            continue;
        }
        let supers_kept = full
            .generalization
            .iter()
            .all(|(sub, sup)| !keep.contains(sub) || keep.contains(sup));
        let t = full.restrict(&keep);
        if !supers_kept || !t.problems().is_empty() {
            continue;
        }
        let mut n = 0;
        for extra in 0..=b.extra_classes {
            let mut t = t.clone();
            let mut added = 0;
            while added < extra {
                n += 1;
                let name = format!("Extra{n}");
                if full.classes.contains_key(&name) {
                    continue;
                }
                t.add_class(name, ClassSig { attrs: vec![("flag".into(), ValueDomain::Bool)], ops: vec![] });
                added += 1;
            }
            n = 0;
            out.push(t);
        }
    }
    out
}

fn domain_values(t: &ClassTable, snap: &Snapshot, d: &ValueDomain) -> Vec<Value> {
    match d {
        ValueDomain::Bool => vec![Value::Bool(false), Value::Bool(true)],
        ValueDomain::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
        ValueDomain::Enum(ls) => ls.iter().cloned().map(Value::Enum).collect(),
        ValueDomain::Ref(c) => {
            let mut v = vec![Value::Nil];
            for (id, o) in &snap.objects {
                if descends(t, &o.class, c) {
                    v.push(Value::Ref(id.clone()));
                }
            }
            v
        }
    }
}

fn attrs_of(t: &ClassTable, class: &str) -> Vec<(String, ValueDomain)> {
    let mut out: Vec<(String, ValueDomain)> = Vec::new();
    for (c, sig) in &t.classes {
        if descends(t, class, c) {
            for a in &sig.attrs {
                if !out.iter().any(|(n, _)| n == &a.0) {
                    out.push(a.clone());
                }
            }
        }
    }
    out
}

fn cartesian<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::new();
        for prefix in &out {
            for x in c {
                let mut p = prefix.clone();
                p.push(x.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Every state of the population `objs` (attribute values and link sets),
/// with no active operations.
fn states(t: &ClassTable, objs: &[(ObjectId, String)]) -> Vec<Snapshot> {
    let mut skel = Snapshot::default();
    for (id, c) in objs {
        skel.objects.insert(id.clone(), ObjectEntry { class: c.clone(), state: ObjectState::default() });
    }
    let mut slots: Vec<(ObjectId, String)> = Vec::new();
    let mut choices: Vec<Vec<Value>> = Vec::new();
    for (id, c) in objs {
        for (a, d) in attrs_of(t, c) {
            slots.push((id.clone(), a));
            choices.push(domain_values(t, &skel, &d));
        }
    }
    let mut links = Vec::new();
    for (name, a) in &t.associations {
        for (s, sc) in objs {
            for (x, xc) in objs {
                if descends(t, sc, &a.source.class) && descends(t, xc, &a.target.class) {
                    links.push(Link::new(name.clone(), s.clone(), x.clone()));
                }
            }
        }
    }
    let mut out = Vec::new();
    for vals in cartesian(&choices) {
        for mask in 0u32..(1 << links.len()) {
            let mut snap = skel.clone();
            for ((id, a), v) in slots.iter().zip(&vals) {
                snap.objects.get_mut(id).unwrap().state.attrs.insert(a.clone(), v.clone());
            }
            for (i, l) in links.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    snap.links.insert(l.clone());
                }
            }
            out.push(snap);
        }
    }
    out
}

fn population(t: &ClassTable, counts: &[usize]) -> Vec<(ObjectId, String)> {
    let mut out = Vec::new();
    for (c, &n) in t.classes.keys().zip(counts) {
        for i in 1..=n {
            out.push((t.object_name(c, i), c.clone()));
        }
    }
    out
}

/// Candidate events, deliberately broader than what a well-formed trace
/// allows; ill-formed ones are filtered by validation.
fn candidate_events(t: &ClassTable, objs: &[(ObjectId, String)], post: &Snapshot) -> Vec<MsgEvent> {
    let mut out = Vec::new();
    let parties: Vec<Party> = std::iter::once(Party::Env).chain(objs.iter().map(|(o, _)| Party::Obj(o.clone()))).collect();
    let mut sigs = Vec::new();
    for sig in t.classes.values() {
        for op in &sig.ops {
            if !sigs.contains(op) {
                sigs.push(op.clone());
            }
        }
    }
    for op in &sigs {
        let args = cartesian(&op.params.iter().map(|d| domain_values(t, post, d)).collect::<Vec<_>>());
        let results = match &op.result {
            Some(d) => domain_values(t, post, d),
            None => vec![Value::Nil],
        };
        for sender in &parties {
            for (recv, _) in objs {
                for a in &args {
                    out.push(MsgEvent::call(sender.clone(), recv.clone(), op.name.clone(), a.clone()));
                }
            }
        }
        for (callee, _) in objs {
            for receiver in &parties {
                for r in &results {
                    out.push(MsgEvent::ret(callee.clone(), receiver.clone(), op.name.clone(), r.clone()));
                }
            }
        }
    }
    out
}

fn set_active(trace: &SystemTrace, snap: &mut Snapshot, ev: &MsgEvent) {
    let mut pending: BTreeSet<(ObjectId, String)> = BTreeSet::new();
    for e in trace.events().chain(std::iter::once(ev)) {
        match (e.kind, &e.sender, &e.receiver) {
            (MsgKind::Call, _, Party::Obj(r)) => {
                pending.insert((r.clone(), e.op.clone()));
            }
            (MsgKind::Return, Party::Obj(s), _) => {
                pending.remove(&(s.clone(), e.op.clone()));
            }
            _ => {}
        }
    }
    for (o, op) in pending {
        if let Some(entry) = snap.objects.get_mut(&o) {
            entry.state.active.insert(op);
        }
    }
}

fn extend(t: &ClassTable, trace: &mut SystemTrace, counts: &[usize], b: &Bounds, out: &mut Vec<SystemTrace>) {
    out.push(trace.clone());
    if trace.steps.len() >= b.max_trace_len {
        return;
    }
    let ranges: Vec<Vec<usize>> = counts.iter().map(|&c| (c..=b.max_objects).collect()).collect();
    for next in cartesian(&ranges) {
        let objs = population(t, &next);
        let posts = states(t, &objs);
        let Some(first) = posts.first() else { continue };
        for ev in candidate_events(t, &objs, first) {
            for post in &posts {
                let mut post = post.clone();
                set_active(trace, &mut post, &ev);
                trace.steps.push(Step { event: ev.clone(), snapshot: post });
                if validate_system(trace).is_empty() {
                    extend(t, trace, &next, b, out);
                }
                trace.steps.pop();
            }
        }
    }
}

/// All well-formed traces within `b` over the classes of `vocab`, one per
/// object naming (no symmetry reduction).
pub fn raw_universe(vocab: &ClassTable, b: &Bounds) -> Vec<SystemTrace> {
    let mut out = Vec::new();
    for t in class_tables(vocab, b) {
        let ranges: Vec<Vec<usize>> = t.classes.keys().map(|_| (0..=b.max_objects).collect()).collect();
        for counts in cartesian(&ranges) {
            for snap in states(&t, &population(&t, &counts)) {
                let mut trace = SystemTrace::new(t.clone(), snap);
                if validate_system(&trace).is_empty() {
                    extend(&t, &mut trace, &counts, b, &mut out);
                }
            }
        }
    }
    out
}

// ---- orbits under renaming ----

type Renaming = BTreeMap<ObjectId, ObjectId>;

fn rn(m: &Renaming, o: &ObjectId) -> ObjectId {
    m.get(o).cloned().unwrap_or_else(|| o.clone())
}

fn rn_value(m: &Renaming, v: &Value) -> Value {
    match v {
        Value::Ref(o) => Value::Ref(rn(m, o)),
        v => v.clone(),
    }
}

fn rn_party(m: &Renaming, p: &Party) -> Party {
    match p {
        Party::Obj(o) => Party::Obj(rn(m, o)),
        Party::Env => Party::Env,
    }
}

fn rn_snapshot(m: &Renaming, s: &Snapshot) -> Snapshot {
    let mut out = Snapshot::default();
    for (id, e) in &s.objects {
        let mut e = e.clone();
        for v in e.state.attrs.values_mut() {
            *v = rn_value(m, v);
        }
        out.objects.insert(rn(m, id), e);
    }
    out.links = s.links.iter().map(|l| Link::new(l.assoc.clone(), rn(m, &l.source), rn(m, &l.target))).collect();
    out
}

fn rename(s: &SystemTrace, m: &Renaming) -> SystemTrace {
    let mut out = SystemTrace::new(s.class_table.clone(), rn_snapshot(m, &s.initial));
    for st in &s.steps {
        let ev = MsgEvent {
            kind: st.event.kind,
            sender: rn_party(m, &st.event.sender),
            receiver: rn_party(m, &st.event.receiver),
            op: st.event.op.clone(),
            args: st.event.args.iter().map(|v| rn_value(m, v)).collect(),
        };
        out.push(ev, rn_snapshot(m, &st.snapshot));
    }
    out
}

fn perms(xs: &[ObjectId]) -> Vec<Vec<ObjectId>> {
    if xs.len() <= 1 {
        return vec![xs.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..xs.len() {
        let mut rest = xs.to_vec();
        let x = rest.remove(i);
        for mut p in perms(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

/// A representative of the isomorphism class of `s` under permutations of
/// same-class objects created in the same step: the smallest rendering.
pub fn orbit_key(s: &SystemTrace) -> String {
    let mut groups: Vec<Vec<ObjectId>> = Vec::new();
    let mut seen: BTreeSet<ObjectId> = BTreeSet::new();
    for snap in s.snapshots() {
        let mut by_class: BTreeMap<&str, Vec<ObjectId>> = BTreeMap::new();
        for (id, e) in &snap.objects {
            if seen.insert(id.clone()) {
                by_class.entry(&e.class).or_default().push(id.clone());
            }
        }
        groups.extend(by_class.into_values().filter(|g| g.len() > 1));
    }
    let choices: Vec<Vec<Vec<ObjectId>>> = groups.iter().map(|g| perms(g)).collect();
    let mut best: Option<String> = None;
    for combo in cartesian(&choices) {
        let mut m = Renaming::new();
        for (g, p) in groups.iter().zip(&combo) {
            for (a, b) in g.iter().zip(p) {
                m.insert(a.clone(), b.clone());
            }
        }
        let text = render_trace(&rename(s, &m));
        if best.as_ref().is_none_or(|b| text < *b) {
            best = Some(text);
        }
    }
    best.expect("at least the identity")
}

/// Active operations per snapshot, replayed from the events alone: a call
/// opens `(receiver, op)`, a return from the callee closes it.
pub fn replay_active(s: &SystemTrace) -> Vec<BTreeMap<ObjectId, BTreeSet<String>>> {
    let mut open: Vec<(ObjectId, String)> = Vec::new();
    let mut out = vec![BTreeMap::new()];
    for e in s.events() {
        match (e.kind, &e.sender, &e.receiver) {
            (MsgKind::Call, _, Party::Obj(r)) => open.push((r.clone(), e.op.clone())),
            (MsgKind::Return, Party::Obj(c), _) => {
                if let Some(i) = open.iter().position(|(o, op)| o == c && op == &e.op) {
                    open.remove(i);
                }
            }
            _ => {}
        }
        let mut now: BTreeMap<ObjectId, BTreeSet<String>> = BTreeMap::new();
        for (o, op) in &open {
            now.entry(o.clone()).or_default().insert(op.clone());
        }
        out.push(now);
    }
    out
}

/// The active sets recorded in the snapshots of `s`, objects without
/// active operations left out.
pub fn recorded_active(s: &SystemTrace) -> Vec<BTreeMap<ObjectId, BTreeSet<String>>> {
    s.snapshots()
        .map(|snap| {
            snap.objects
                .iter()
                .filter(|(_, e)| !e.state.active.is_empty())
                .map(|(id, e)| (id.clone(), e.state.active.clone()))
                .collect()
        })
        .collect()
}
