//! The bounded system universe and its exhaustive enumeration.
//!
//! Class tables range over the always-present base classes, every subset of
//! the mentioned classes closed under generalization and reference domains,
//! and up to `extra_classes` anonymous classes. Objects of a class are named
//! in creation order; traces that differ only by permuting objects of the
//! same class created in the same step are enumerated once, as the
//! lexicographically smallest member of their orbit.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use itertools::Itertools;
use rayon::prelude::*;

use super::{Bounds, DocSet, Monitor, MonitorState, SemanticsError};
use crate::model::{
    ClassSig, ClassTable, Link, MsgEvent, MsgKind, ObjectEntry, ObjectId, ObjectState, Party,
    Snapshot, SystemTrace, Value, ValueDomain,
};

/// What to do after visiting a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visit {
    Continue,
    /// Do not extend this trace.
    SkipChildren,
    Stop,
}

#[derive(Debug, Clone)]
pub struct Universe {
    bounds: Bounds,
    vocabulary: ClassTable,
    variants: Vec<ClassTable>,
}

/// A slice of the universe: all traces starting with one initial snapshot
/// under one class table. Partitions are disjoint and ordered.
#[derive(Debug, Clone)]
pub struct Partition {
    pub variant: usize,
    initial: Snapshot,
    pv: Vec<usize>,
}

fn extra_name(vocab: &ClassTable, taken: &BTreeSet<String>, n: usize) -> String {
    let mut i = n;
    loop {
        let name = format!("Extra{i}");
        if !vocab.classes.contains_key(&name) && !taken.contains(&name) {
            return name;
        }
        i += 1;
    }
}

impl Universe {
    /// The universe over `vocabulary` (classes mentioned by documents) and
    /// the base classes of `bounds`.
    pub fn new(vocabulary: &ClassTable, bounds: &Bounds) -> Result<Universe, SemanticsError> {
        let mut vocab = bounds.base.clone();
        vocab
            .merge(vocabulary)
            .map_err(|c| SemanticsError::TableConflict(c.join("; ")))?;
        if let Some(p) = bounds.base.problems().into_iter().next() {
            return Err(SemanticsError::TableConflict(format!("base classes: {p}")));
        }
        if vocab.is_empty() && bounds.extra_classes == 0 {
            return Err(SemanticsError::EmptyUniverse);
        }
        let base: BTreeSet<String> = bounds.base.classes.keys().cloned().collect();
        let optional: Vec<&String> = vocab.classes.keys().filter(|c| !base.contains(*c)).collect();
        assert!(optional.len() < 24, "too many optional classes to enumerate");
        let mut variants = Vec::new();
        for mask in 0u32..(1 << optional.len()) {
            let mut keep = base.clone();
            for (i, c) in optional.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    keep.insert((*c).clone());
                }
            }
            let closed = keep
                .iter()
                .all(|c| vocab.dependencies(c).iter().all(|d| keep.contains(d)));
            if !closed {
                continue;
            }
            let table = vocab.restrict(&keep);
            let mut taken = BTreeSet::new();
            for j in 0..=bounds.extra_classes {
                let mut t = table.clone();
                for n in 1..=j {
                    let name = extra_name(&vocab, &taken, n);
                    taken.insert(name.clone());
                    t.add_class(
                        name,
                        ClassSig {
                            attrs: vec![("flag".to_string(), ValueDomain::Bool)],
                            ops: vec![],
                        },
                    );
                }
                taken.clear();
                variants.push(t);
            }
        }
        variants.sort_by(|a, b| {
            a.classes
                .len()
                .cmp(&b.classes.len())
                .then_with(|| a.classes.keys().cmp(b.classes.keys()))
        });
        variants.dedup();
        Ok(Universe {
            bounds: bounds.clone(),
            vocabulary: vocab,
            variants,
        })
    }

    pub fn for_docs(set: &DocSet, bounds: &Bounds) -> Result<Universe, SemanticsError> {
        Universe::new(set.table(), bounds)
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn vocabulary(&self) -> &ClassTable {
        &self.vocabulary
    }

    pub fn variants(&self) -> &[ClassTable] {
        &self.variants
    }

    /// Partitions whose traces may satisfy the prefix-closed part of
    /// `filter`, in enumeration order.
    pub fn partitions(&self, filter: &DocSet) -> Vec<Partition> {
        let monitor = filter.monitor();
        let mut out = Vec::new();
        for (v, table) in self.variants.iter().enumerate() {
            if !monitor.table_ok(table) {
                continue;
            }
            let mut w = Walker::new(table, &self.bounds, filter.monitor());
            for pv in w.populations(&vec![0; w.classes.len()]) {
                let groups = w.initial_groups(&pv);
                let perms = permutations(&groups);
                for snap in w.family(&pv).iter() {
                    let trace = SystemTrace::new(table.clone(), snap.clone());
                    if canonical(&trace, &perms) {
                        out.push(Partition {
                            variant: v,
                            initial: snap.clone(),
                            pv: pv.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Depth-first walk over the traces of `part` that satisfy `filter`.
    /// Returns true if the visitor stopped the walk.
    pub fn walk_partition(
        &self,
        filter: &DocSet,
        part: &Partition,
        visit: &mut dyn FnMut(&SystemTrace) -> Visit,
    ) -> bool {
        let table = &self.variants[part.variant];
        let mut w = Walker::new(table, &self.bounds, filter.monitor());
        let mut trace = SystemTrace::new(table.clone(), part.initial.clone());
        let groups = w.initial_groups(&part.pv);
        let node = Node {
            pv: part.pv.clone(),
            active: BTreeMap::new(),
            perms: Rc::new(permutations(&groups)),
            groups,
            mon: w.monitor.start(&trace),
        };
        w.dfs(&mut trace, &node, visit)
    }

    /// Sequential walk over the whole universe, in enumeration order.
    pub fn walk(&self, filter: &DocSet, visit: &mut dyn FnMut(&SystemTrace) -> Visit) {
        for p in self.partitions(filter) {
            if self.walk_partition(filter, &p, visit) {
                return;
            }
        }
    }

    /// Number of traces satisfying `filter`.
    pub fn count(&self, filter: &DocSet) -> usize {
        self.partitions(filter)
            .par_iter()
            .map(|p| {
                let mut n = 0usize;
                self.walk_partition(filter, p, &mut |_| {
                    n += 1;
                    Visit::Continue
                });
                n
            })
            .sum()
    }
}

/// All traces of the universe of `set` under `bounds` that satisfy `set`,
/// without isomorphic duplicates, in a deterministic order.
pub fn enumerate(set: &DocSet, bounds: &Bounds) -> Result<Vec<SystemTrace>, SemanticsError> {
    Ok(enumerate_within(&Universe::for_docs(set, bounds)?, set))
}

/// As [`enumerate`], inside a given universe.
pub fn enumerate_within(universe: &Universe, set: &DocSet) -> Vec<SystemTrace> {
    let parts = universe.partitions(set);
    let chunks: Vec<Vec<SystemTrace>> = parts
        .par_iter()
        .map(|p| {
            let mut out = Vec::new();
            universe.walk_partition(set, p, &mut |s| {
                out.push(s.clone());
                Visit::Continue
            });
            out
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

type Active = BTreeMap<ObjectId, BTreeMap<String, Party>>;
type Renaming = BTreeMap<ObjectId, ObjectId>;

struct Node {
    pv: Vec<usize>,
    /// Pending calls: callee -> op -> caller.
    active: Active,
    groups: Vec<Vec<ObjectId>>,
    perms: Rc<Vec<Renaming>>,
    mon: MonitorState,
}

pub(crate) struct Walker<'a> {
    table: &'a ClassTable,
    pub(crate) classes: Vec<String>,
    pub(crate) names: Vec<Vec<ObjectId>>,
    max: usize,
    len: usize,
    monitor: Monitor<'a>,
    families: HashMap<Vec<usize>, Rc<Vec<Snapshot>>>,
}

/// Non-identity renamings permuting objects within each group.
fn permutations(groups: &[Vec<ObjectId>]) -> Vec<Renaming> {
    let per_group: Vec<Vec<Vec<&ObjectId>>> = groups
        .iter()
        .map(|g| g.iter().permutations(g.len()).collect())
        .collect();
    let mut out = Vec::new();
    for choice in per_group.iter().multi_cartesian_product() {
        let mut m = Renaming::new();
        for (g, perm) in groups.iter().zip(choice) {
            for (from, to) in g.iter().zip(perm) {
                if from != *to {
                    m.insert(from.clone(), (*to).clone());
                }
            }
        }
        if !m.is_empty() {
            out.push(m);
        }
    }
    out
}

fn rename_id(m: &Renaming, o: &ObjectId) -> ObjectId {
    m.get(o).cloned().unwrap_or_else(|| o.clone())
}

fn rename_value(m: &Renaming, v: &Value) -> Value {
    match v {
        Value::Ref(o) => Value::Ref(rename_id(m, o)),
        v => v.clone(),
    }
}

fn rename_snapshot(m: &Renaming, s: &Snapshot) -> Snapshot {
    Snapshot {
        objects: s
            .objects
            .iter()
            .map(|(id, e)| {
                (
                    rename_id(m, id),
                    ObjectEntry {
                        class: e.class.clone(),
                        state: ObjectState {
                            attrs: e
                                .state
                                .attrs
                                .iter()
                                .map(|(a, v)| (a.clone(), rename_value(m, v)))
                                .collect(),
                            active: e.state.active.clone(),
                        },
                    },
                )
            })
            .collect(),
        links: s
            .links
            .iter()
            .map(|l| Link::new(l.assoc.clone(), rename_id(m, &l.source), rename_id(m, &l.target)))
            .collect(),
    }
}

fn rename_party(m: &Renaming, p: &Party) -> Party {
    match p {
        Party::Obj(o) => Party::Obj(rename_id(m, o)),
        Party::Env => Party::Env,
    }
}

fn rename_event(m: &Renaming, e: &MsgEvent) -> MsgEvent {
    MsgEvent {
        kind: e.kind,
        sender: rename_party(m, &e.sender),
        receiver: rename_party(m, &e.receiver),
        op: e.op.clone(),
        args: e.args.iter().map(|v| rename_value(m, v)).collect(),
    }
}

/// Lexicographic comparison of the renamed trace against the trace.
fn compare_renamed(s: &SystemTrace, m: &Renaming) -> Ordering {
    let o = rename_snapshot(m, &s.initial).cmp(&s.initial);
    if o != Ordering::Equal {
        return o;
    }
    for st in &s.steps {
        let o = rename_event(m, &st.event).cmp(&st.event);
        if o != Ordering::Equal {
            return o;
        }
        let o = rename_snapshot(m, &st.snapshot).cmp(&st.snapshot);
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Whether `s` is the smallest member of its orbit.
fn canonical(s: &SystemTrace, perms: &[Renaming]) -> bool {
    perms.iter().all(|m| compare_renamed(s, m) != Ordering::Less)
}

impl<'a> Walker<'a> {
    pub(crate) fn new(table: &'a ClassTable, bounds: &Bounds, monitor: Monitor<'a>) -> Self {
        let classes: Vec<String> = table.classes.keys().cloned().collect();
        let names = classes
            .iter()
            .map(|c| (1..=bounds.max_objects).map(|n| table.object_name(c, n)).collect())
            .collect();
        Walker {
            table,
            classes,
            names,
            max: bounds.max_objects,
            len: bounds.max_trace_len,
            monitor,
            families: HashMap::new(),
        }
    }

    /// Population vectors pointwise at least `from`, in lexicographic order.
    pub(crate) fn populations(&self, from: &[usize]) -> Vec<Vec<usize>> {
        if from.is_empty() {
            return vec![vec![]];
        }
        from.iter()
            .map(|&lo| lo..=self.max)
            .multi_cartesian_product()
            .collect()
    }

    fn initial_groups(&self, pv: &[usize]) -> Vec<Vec<ObjectId>> {
        pv.iter()
            .enumerate()
            .filter(|(_, &n)| n >= 2)
            .map(|(k, &n)| self.names[k][..n].to_vec())
            .collect()
    }

    /// Objects of a population, with empty state.
    fn skeleton(&self, pv: &[usize]) -> Snapshot {
        let mut s = Snapshot::default();
        for (k, &n) in pv.iter().enumerate() {
            for id in &self.names[k][..n] {
                s.objects.insert(
                    id.clone(),
                    ObjectEntry {
                        class: self.classes[k].clone(),
                        state: ObjectState::default(),
                    },
                );
            }
        }
        s
    }

    /// All snapshots of a population (attribute valuations and link sets)
    /// that satisfy the object-model constraints of the filter.
    pub(crate) fn family(&mut self, pv: &[usize]) -> Rc<Vec<Snapshot>> {
        if let Some(f) = self.families.get(pv) {
            return f.clone();
        }
        let skel = self.skeleton(pv);
        enum Slot {
            Attr(ObjectId, String),
            Link(Link),
        }
        let mut slots: Vec<(Slot, Vec<Value>)> = Vec::new();
        for (id, e) in &skel.objects {
            for (a, d) in self.table.all_attrs(&e.class) {
                slots.push((Slot::Attr(id.clone(), a), d.values(self.table, &skel)));
            }
        }
        for (name, sig) in &self.table.associations {
            let sources = skel.objects_of(self.table, &sig.source.class);
            let targets = skel.objects_of(self.table, &sig.target.class);
            for s in &sources {
                for t in &targets {
                    slots.push((
                        Slot::Link(Link::new(name.clone(), s.clone(), t.clone())),
                        vec![Value::Bool(false), Value::Bool(true)],
                    ));
                }
            }
        }
        let mut out = Vec::new();
        let choices = slots.iter().map(|(_, vs)| vs.iter()).multi_cartesian_product();
        let mut emit = |vals: &[&Value]| {
            let mut snap = skel.clone();
            for ((slot, _), v) in slots.iter().zip(vals) {
                match slot {
                    Slot::Attr(id, a) => {
                        snap.objects
                            .get_mut(id)
                            .expect("skeleton object")
                            .state
                            .attrs
                            .insert(a.clone(), (*v).clone());
                    }
                    Slot::Link(l) => {
                        if **v == Value::Bool(true) {
                            snap.links.insert(l.clone());
                        }
                    }
                }
            }
            if self.monitor.snapshot_ok(self.table, &snap) {
                out.push(snap);
            }
        };
        if slots.is_empty() {
            emit(&[]);
        } else {
            for vals in choices {
                emit(&vals);
            }
        }
        let rc = Rc::new(out);
        self.families.insert(pv.to_vec(), rc.clone());
        rc
    }

    /// Candidate events from `pre` to a snapshot with population `post_pv`.
    fn events(&self, pre: &Snapshot, active: &Active, post_pv: &[usize]) -> Vec<MsgEvent> {
        let skel = self.skeleton(post_pv);
        let mut out = Vec::new();
        let senders = std::iter::once(Party::Env).chain(pre.objects.keys().cloned().map(Party::Obj));
        for sender in senders {
            for (recv, e) in &skel.objects {
                let busy = active.get(recv);
                for op in self.table.all_ops(&e.class) {
                    if busy.is_some_and(|b| b.contains_key(&op.name)) {
                        continue;
                    }
                    let domains: Vec<Vec<Value>> =
                        op.params.iter().map(|d| d.values(self.table, &skel)).collect();
                    if domains.is_empty() {
                        out.push(MsgEvent::call(sender.clone(), recv.clone(), op.name.clone(), vec![]));
                        continue;
                    }
                    for args in domains.iter().map(|d| d.iter().cloned()).multi_cartesian_product() {
                        out.push(MsgEvent::call(sender.clone(), recv.clone(), op.name.clone(), args));
                    }
                }
            }
        }
        for (callee, ops) in active {
            let class = &pre.objects[callee].class;
            for (op, caller) in ops {
                let results = match self.table.find_op(class, op).and_then(|o| o.result) {
                    Some(d) => d.values(self.table, &skel),
                    None => vec![Value::Nil],
                };
                for r in results {
                    out.push(MsgEvent::ret(callee.clone(), caller.clone(), op.clone(), r));
                }
            }
        }
        out
    }

    fn dfs(
        &mut self,
        trace: &mut SystemTrace,
        node: &Node,
        visit: &mut dyn FnMut(&SystemTrace) -> Visit,
    ) -> bool {
        if self.monitor.accepts(trace) {
            match visit(trace) {
                Visit::Stop => return true,
                Visit::SkipChildren => return false,
                Visit::Continue => {}
            }
        }
        if trace.steps.len() >= self.len {
            return false;
        }
        for post_pv in self.populations(&node.pv) {
            let fam = self.family(&post_pv);
            if fam.is_empty() {
                continue;
            }
            let mut groups = node.groups.clone();
            for (k, (&a, &b)) in node.pv.iter().zip(&post_pv).enumerate() {
                if b >= a + 2 {
                    groups.push(self.names[k][a..b].to_vec());
                }
            }
            let perms = if groups.len() == node.groups.len() {
                node.perms.clone()
            } else {
                Rc::new(permutations(&groups))
            };
            let events = self.events(trace.last_snapshot(), &node.active, &post_pv);
            for ev in events {
                let mut active = node.active.clone();
                match (&ev.kind, &ev.receiver, &ev.sender) {
                    (MsgKind::Call, Party::Obj(r), _) => {
                        active.entry(r.clone()).or_default().insert(ev.op.clone(), ev.sender.clone());
                    }
                    (MsgKind::Return, _, Party::Obj(s)) => {
                        let ops = active.get_mut(s).expect("pending call");
                        ops.remove(&ev.op);
                        if ops.is_empty() {
                            active.remove(s);
                        }
                    }
                    _ => unreachable!("calls go to objects, returns come from objects"),
                }
                for snap in fam.iter() {
                    let mut post = snap.clone();
                    for (o, ops) in &active {
                        if let Some(e) = post.objects.get_mut(o) {
                            e.state.active = ops.keys().cloned().collect();
                        }
                    }
                    trace.push(ev.clone(), post);
                    if canonical(trace, &perms) {
                        if let Some(mon) = self.monitor.step(&node.mon, trace) {
                            let child = Node {
                                pv: post_pv.clone(),
                                active: active.clone(),
                                groups: groups.clone(),
                                perms: perms.clone(),
                                mon,
                            };
                            if self.dfs(trace, &child, visit) {
                                trace.steps.pop();
                                return true;
                            }
                        }
                    }
                    trace.steps.pop();
                }
            }
        }
        false
    }
}
