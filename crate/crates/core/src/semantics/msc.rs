//! Satisfaction of message sequence charts.
//!
//! The chart body compiles to a Thompson automaton over basic messages.
//! Every occurrence of the trigger (the first message) under an injective
//! binding of roles to live objects obliges the rest of the chart to follow;
//! only events between two bound objects are observed, and such an event
//! that does not fit the chart kills the attempt.

use std::collections::BTreeSet;

use crate::doc::{Document, MscDoc, MscItem, MscMsg};
use crate::model::{MsgEvent, ObjectId, Party, SystemTrace};

#[derive(Debug, Clone, Default)]
pub(crate) struct Nfa {
    /// Per state: epsilon successors.
    eps: Vec<Vec<usize>>,
    /// Per state: labelled successors (label index, target).
    edges: Vec<Vec<(usize, usize)>>,
    labels: Vec<MscMsg>,
    start: usize,
    accept: usize,
}

impl Nfa {
    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.edges.push(Vec::new());
        self.eps.len() - 1
    }

    /// Builds `items` between fresh states; returns (entry, exit).
    fn build(&mut self, items: &[MscItem], docs: &[Document], depth: usize) -> (usize, usize) {
        let entry = self.state();
        let mut cur = entry;
        for it in items {
            let (a, b) = self.build_item(it, docs, depth);
            self.eps[cur].push(a);
            cur = b;
        }
        (entry, cur)
    }

    fn build_item(&mut self, it: &MscItem, docs: &[Document], depth: usize) -> (usize, usize) {
        match it {
            MscItem::Msg(m) => {
                let a = self.state();
                let b = self.state();
                self.labels.push(m.clone());
                self.edges[a].push((self.labels.len() - 1, b));
                (a, b)
            }
            MscItem::Seq(items) => self.build(items, docs, depth),
            MscItem::Alt(branches) => {
                let a = self.state();
                let b = self.state();
                for br in branches {
                    let (x, y) = self.build(br, docs, depth);
                    self.eps[a].push(x);
                    self.eps[y].push(b);
                }
                (a, b)
            }
            MscItem::Loop(items) => {
                let a = self.state();
                let (x, y) = self.build(items, docs, depth);
                self.eps[a].push(x);
                self.eps[y].push(a);
                (a, a)
            }
            MscItem::Ref(name, _) => {
                // Context conditions exclude cyclic references; the depth
                // guard only protects unchecked input.
                match docs.iter().find(|d| d.id() == name) {
                    Some(Document::Msc(m)) if depth < 64 => self.build(&m.body, docs, depth + 1),
                    _ => {
                        let a = self.state();
                        (a, a)
                    }
                }
            }
        }
    }

    pub fn compile(msc: &MscDoc, docs: &[Document]) -> Nfa {
        let mut n = Nfa::default();
        let (start, accept) = n.build(&msc.body, docs, 0);
        n.start = start;
        n.accept = accept;
        n
    }

    fn closure(&self, states: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<usize> = states.into_iter().collect();
        while let Some(s) = stack.pop() {
            if out.insert(s) {
                stack.extend(self.eps[s].iter().copied());
            }
        }
        out
    }

    fn advance(&self, states: &BTreeSet<usize>, ev: &MsgEvent, bind: &[(String, ObjectId)]) -> BTreeSet<usize> {
        let next = states.iter().flat_map(|&s| {
            self.edges[s]
                .iter()
                .filter(|(l, _)| matches(&self.labels[*l], ev, bind))
                .map(|&(_, t)| t)
        });
        self.closure(next.collect::<Vec<_>>())
    }
}

fn bound<'a>(bind: &'a [(String, ObjectId)], role: &str) -> Option<&'a ObjectId> {
    bind.iter().find(|(r, _)| r == role).map(|(_, o)| o)
}

fn matches(m: &MscMsg, ev: &MsgEvent, bind: &[(String, ObjectId)]) -> bool {
    if m.kind != ev.kind || m.op != ev.op {
        return false;
    }
    let (Party::Obj(s), Party::Obj(r)) = (&ev.sender, &ev.receiver) else {
        return false;
    };
    if bound(bind, &m.from) != Some(s) || bound(bind, &m.to) != Some(r) {
        return false;
    }
    match m.kind {
        crate::model::MsgKind::Call => m.args == ev.args,
        crate::model::MsgKind::Return => m.args.is_empty() || m.args == ev.args,
    }
}

fn observed(ev: &MsgEvent, bind: &[(String, ObjectId)]) -> bool {
    let is_bound = |p: &Party| match p {
        Party::Obj(o) => bind.iter().any(|(_, b)| b == o),
        Party::Env => false,
    };
    is_bound(&ev.sender) && is_bound(&ev.receiver)
}

/// Injective bindings of `roles` to objects of the snapshot after event
/// `i`, respecting role classes.
fn bindings(msc: &MscDoc, s: &SystemTrace, i: usize) -> Vec<Vec<(String, ObjectId)>> {
    let snap = s.snapshot(i).expect("index in range");
    let mut out = vec![Vec::new()];
    for role in &msc.roles {
        let cands: Vec<ObjectId> = snap.objects_of(&s.class_table, &role.class).into_iter().collect();
        let mut next = Vec::new();
        for b in &out {
            for c in &cands {
                if b.iter().all(|(_, o): &(String, ObjectId)| o != c) {
                    let mut nb = b.clone();
                    nb.push((role.name.clone(), c.clone()));
                    next.push(nb);
                }
            }
        }
        out = next;
    }
    out
}

/// Whether `s` satisfies the chart compiled to `nfa`.
pub(crate) fn holds(nfa: &Nfa, msc: &MscDoc, s: &SystemTrace) -> bool {
    let start = nfa.closure([nfa.start]);
    if start.contains(&nfa.accept) {
        return true;
    }
    let events: Vec<&MsgEvent> = s.events().collect();
    for (k, ev) in events.iter().enumerate() {
        // cheap pre-filter: some first message must have this op and kind
        let triggerable = start.iter().any(|&st| {
            nfa.edges[st]
                .iter()
                .any(|(l, _)| nfa.labels[*l].op == ev.op && nfa.labels[*l].kind == ev.kind)
        });
        if !triggerable {
            continue;
        }
        for bind in bindings(msc, s, k + 1) {
            let mut cur = nfa.advance(&start, ev, &bind);
            if cur.is_empty() {
                continue;
            }
            let mut done = cur.contains(&nfa.accept);
            for later in &events[k + 1..] {
                if done {
                    break;
                }
                if !observed(later, &bind) {
                    continue;
                }
                cur = nfa.advance(&cur, later, &bind);
                if cur.is_empty() {
                    break;
                }
                done = cur.contains(&nfa.accept);
            }
            if !done {
                return false;
            }
        }
    }
    true
}

/// `s ⊨ msc`, with `ref`s resolved among `docs`.
pub fn satisfies_msc_in(s: &SystemTrace, msc: &MscDoc, docs: &[Document]) -> bool {
    holds(&Nfa::compile(msc, docs), msc, s)
}

/// `s ⊨ msc` for a chart without references.
pub fn satisfies_msc(s: &SystemTrace, msc: &MscDoc) -> bool {
    satisfies_msc_in(s, msc, &[])
}
