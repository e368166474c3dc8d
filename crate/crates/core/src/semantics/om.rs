//! Satisfaction of object models.

use std::collections::BTreeMap;

use crate::doc::{ClassMember, OmDoc};
use crate::model::{ClassTable, ObjectId, Snapshot, SystemTrace};
use crate::sl::{eval_in, Bindings, EvalEnv, SlValue};

/// Why `table` does not include the signature declared by `om`, if it
/// does not.
pub(crate) fn signature_problem(table: &ClassTable, om: &OmDoc) -> Option<String> {
    for c in om.classes() {
        if !table.classes.contains_key(&c.name) {
            return Some(format!("class {} does not exist", c.name));
        }
        for m in &c.members {
            match m {
                ClassMember::Attr(a, d) => {
                    if table.attr_domain(&c.name, a).as_ref() != Some(d) {
                        return Some(format!("class {} lacks attribute {a}: {d}", c.name));
                    }
                }
                ClassMember::Op(op) => {
                    if table.find_op(&c.name, &op.name).as_ref() != Some(op) {
                        return Some(format!("class {} lacks operation {}", c.name, op.name));
                    }
                }
            }
        }
        for sup in &c.extends {
            if c.name != *sup && !table.is_subclass(&c.name, sup) {
                return Some(format!("class {} does not extend {sup}", c.name));
            }
        }
    }
    for a in om.assocs() {
        if table.associations.get(&a.name) != Some(&a.signature()) {
            return Some(format!("association {} does not exist", a.name));
        }
    }
    None
}

fn has_cycle(edges: &BTreeMap<&ObjectId, Vec<&ObjectId>>) -> bool {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit<'a>(
        n: &'a ObjectId,
        edges: &BTreeMap<&'a ObjectId, Vec<&'a ObjectId>>,
        mark: &mut BTreeMap<&'a ObjectId, u8>,
    ) -> bool {
        match mark.get(n) {
            Some(1) => return true,
            Some(2) => return false,
            _ => {}
        }
        mark.insert(n, 1);
        for m in edges.get(n).into_iter().flatten() {
            if visit(m, edges, mark) {
                return true;
            }
        }
        mark.insert(n, 2);
        false
    }
    let mut mark = BTreeMap::new();
    edges.keys().any(|n| visit(n, edges, &mut mark))
}

/// Structural constraints of `om` on one snapshot: multiplicities,
/// aggregation acyclicity and invariants.
pub(crate) fn snapshot_ok(table: &ClassTable, om: &OmDoc, snap: &Snapshot) -> bool {
    let mut aggregate: BTreeMap<&ObjectId, Vec<&ObjectId>> = BTreeMap::new();
    for a in om.assocs() {
        let mut out_deg: BTreeMap<&ObjectId, usize> = BTreeMap::new();
        let mut in_deg: BTreeMap<&ObjectId, usize> = BTreeMap::new();
        for l in snap.links.iter().filter(|l| l.assoc == a.name) {
            *out_deg.entry(&l.source).or_default() += 1;
            *in_deg.entry(&l.target).or_default() += 1;
            if a.aggregate {
                aggregate.entry(&l.source).or_default().push(&l.target);
            }
        }
        for (id, e) in &snap.objects {
            if table.is_subclass(&e.class, &a.source.class)
                && !a.target.mult.admits(out_deg.get(id).copied().unwrap_or(0))
            {
                return false;
            }
            if table.is_subclass(&e.class, &a.target.class)
                && !a.source.mult.admits(in_deg.get(id).copied().unwrap_or(0))
            {
                return false;
            }
        }
    }
    if has_cycle(&aggregate) {
        return false;
    }
    let env = EvalEnv {
        table,
        pre: snap,
        post: None,
        params: None,
    };
    let none = Bindings::new();
    om.invariants()
        .all(|inv| matches!(eval_in(&inv.expr, env, &none), Ok(SlValue::Bool(true))))
}

/// `s ⊨ om`: signature inclusion plus the structural constraints in every
/// snapshot.
pub fn satisfies_om(s: &SystemTrace, om: &OmDoc) -> bool {
    signature_problem(&s.class_table, om).is_none()
        && s.snapshots()
            .all(|snap| snapshot_ok(&s.class_table, om, snap))
}

/// The first reason `s` does not satisfy `om`, in words.
pub(crate) fn explain_om(s: &SystemTrace, om: &OmDoc) -> String {
    if let Some(p) = signature_problem(&s.class_table, om) {
        return p;
    }
    let none = Bindings::new();
    for (k, snap) in s.snapshots().enumerate() {
        let env = EvalEnv {
            table: &s.class_table,
            pre: snap,
            post: None,
            params: None,
        };
        if let Some(inv) = om
            .invariants()
            .find(|inv| !matches!(eval_in(&inv.expr, env, &none), Ok(SlValue::Bool(true))))
        {
            return format!("invariant {} fails in snapshot {k}", inv.name);
        }
        if !snapshot_ok(&s.class_table, om, snap) {
            return format!("a multiplicity or aggregation constraint fails in snapshot {k}");
        }
    }
    "no violation".to_string()
}

/// Objects of a snapshot whose class is `class` or a subclass.
pub(crate) fn instances<'a>(
    table: &'a ClassTable,
    snap: &'a Snapshot,
    class: &'a str,
) -> impl Iterator<Item = &'a ObjectId> + 'a {
    snap.objects
        .iter()
        .filter(move |(_, e)| table.is_subclass(&e.class, class))
        .map(|(id, _)| id)
}
