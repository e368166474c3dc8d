use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{ObjectId, Snapshot, Value};

/// A finite value domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueDomain {
    Bool,
    /// Inclusive integer range.
    Int { lo: i64, hi: i64 },
    Enum(Vec<String>),
    /// Reference to an object of the named class (or a subclass), or nil.
    Ref(String),
}

impl fmt::Display for ValueDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueDomain::Bool => f.write_str("Bool"),
            ValueDomain::Int { lo, hi } => write!(f, "Int[{lo}..{hi}]"),
            ValueDomain::Enum(ls) => write!(f, "Enum{{{}}}", ls.join(", ")),
            ValueDomain::Ref(c) => write!(f, "Ref {c}"),
        }
    }
}

impl ValueDomain {
    /// All values of the domain, given the population for reference domains.
    pub fn values(&self, table: &ClassTable, snap: &Snapshot) -> Vec<Value> {
        match self {
            ValueDomain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            ValueDomain::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            ValueDomain::Enum(ls) => ls.iter().cloned().map(Value::Enum).collect(),
            ValueDomain::Ref(c) => std::iter::once(Value::Nil)
                .chain(snap.objects_of(table, c).into_iter().map(Value::Ref))
                .collect(),
        }
    }

    /// Whether `v` belongs to the domain in the given snapshot.
    pub fn admits(&self, table: &ClassTable, snap: &Snapshot, v: &Value) -> bool {
        match (self, v) {
            (ValueDomain::Bool, Value::Bool(_)) => true,
            (ValueDomain::Int { lo, hi }, Value::Int(n)) => lo <= n && n <= hi,
            (ValueDomain::Enum(ls), Value::Enum(l)) => ls.contains(l),
            (ValueDomain::Ref(_), Value::Nil) => true,
            (ValueDomain::Ref(c), Value::Ref(o)) => snap
                .class_of(o)
                .is_some_and(|oc| table.is_subclass(oc, c)),
            _ => false,
        }
    }

    /// Problems independent of any class table: empty ranges and
    /// enumerations, duplicate literals.
    pub fn shape_problem(&self) -> Option<String> {
        match self {
            ValueDomain::Int { lo, hi } if lo > hi => Some(format!("empty range {lo}..{hi}")),
            ValueDomain::Enum(ls) if ls.is_empty() => Some("empty enumeration".to_string()),
            ValueDomain::Enum(ls) => {
                let set: BTreeSet<_> = ls.iter().collect();
                (set.len() != ls.len()).then(|| "duplicate enumeration literal".to_string())
            }
            _ => None,
        }
    }

    pub fn size_hint(&self) -> usize {
        match self {
            ValueDomain::Bool => 2,
            ValueDomain::Int { lo, hi } => (hi - lo + 1).max(0) as usize,
            ValueDomain::Enum(ls) => ls.len(),
            ValueDomain::Ref(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpSig {
    pub name: String,
    pub params: Vec<ValueDomain>,
    /// Result domain; `None` means returns carry `nil`.
    pub result: Option<ValueDomain>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassSig {
    pub attrs: Vec<(String, ValueDomain)>,
    pub ops: Vec<OpSig>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssocEnd {
    pub role: String,
    pub class: String,
}

/// Association signature. Links run from the `source` end to the `target` end.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssocSig {
    pub source: AssocEnd,
    pub target: AssocEnd,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassTable {
    pub classes: BTreeMap<String, ClassSig>,
    /// (subclass, superclass) pairs.
    pub generalization: BTreeSet<(String, String)>,
    pub associations: BTreeMap<String, AssocSig>,
}

impl ClassTable {
    pub fn add_class(&mut self, name: impl Into<String>, sig: ClassSig) {
        self.classes.insert(name.into(), sig);
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn direct_supers<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.generalization
            .iter()
            .filter(move |(sub, _)| sub == class)
            .map(|(_, sup)| sup.as_str())
    }

    /// `class` and all its ancestors, ancestors first (depth-first post-order).
    /// Terminates on cyclic tables.
    pub fn lineage(&self, class: &str) -> Vec<String> {
        fn visit(t: &ClassTable, c: &str, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
            if !seen.insert(c.to_string()) {
                return;
            }
            for sup in t.direct_supers(c) {
                visit(t, sup, seen, out);
            }
            out.push(c.to_string());
        }
        let mut out = Vec::new();
        visit(self, class, &mut BTreeSet::new(), &mut out);
        out
    }

    /// Reflexive-transitive generalization.
    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        if sub == sup {
            return true;
        }
        let mut stack = vec![sub];
        let mut seen = BTreeSet::new();
        while let Some(c) = stack.pop() {
            for s in self.direct_supers(c) {
                if s == sup {
                    return true;
                }
                if seen.insert(s) {
                    stack.push(s);
                }
            }
        }
        false
    }

    /// Own and inherited attributes; the first declaration of a name wins.
    pub fn all_attrs(&self, class: &str) -> Vec<(String, ValueDomain)> {
        let mut out: Vec<(String, ValueDomain)> = Vec::new();
        for c in self.lineage(class) {
            if let Some(sig) = self.classes.get(&c) {
                for (n, d) in &sig.attrs {
                    if !out.iter().any(|(m, _)| m == n) {
                        out.push((n.clone(), d.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn attr_domain(&self, class: &str, attr: &str) -> Option<ValueDomain> {
        self.lineage(class).iter().find_map(|c| {
            self.classes
                .get(c)
                .and_then(|sig| sig.attrs.iter().find(|(n, _)| n == attr))
                .map(|(_, d)| d.clone())
        })
    }

    pub fn all_ops(&self, class: &str) -> Vec<OpSig> {
        let mut out: Vec<OpSig> = Vec::new();
        for c in self.lineage(class) {
            if let Some(sig) = self.classes.get(&c) {
                for op in &sig.ops {
                    if !out.iter().any(|o| o.name == op.name) {
                        out.push(op.clone());
                    }
                }
            }
        }
        out
    }

    /// Operation lookup, consistent with [`ClassTable::all_ops`].
    pub fn find_op(&self, class: &str, op: &str) -> Option<OpSig> {
        self.lineage(class).iter().find_map(|c| {
            self.classes
                .get(c)
                .and_then(|sig| sig.ops.iter().find(|o| o.name == op))
                .cloned()
        })
    }

    pub fn has_cycle(&self) -> Option<String> {
        self.classes
            .keys()
            .find(|c| self.direct_supers(c).any(|s| self.is_subclass(s, c)))
            .cloned()
    }

    /// Classes referenced by `class`'s attribute domains and supers.
    pub fn dependencies(&self, class: &str) -> BTreeSet<String> {
        let mut deps: BTreeSet<String> = self.direct_supers(class).map(str::to_string).collect();
        if let Some(sig) = self.classes.get(class) {
            let doms = sig
                .attrs
                .iter()
                .map(|(_, d)| d)
                .chain(sig.ops.iter().flat_map(|o| o.params.iter().chain(o.result.iter())));
            for d in doms {
                if let ValueDomain::Ref(c) = d {
                    deps.insert(c.clone());
                }
            }
        }
        deps.remove(class);
        deps
    }

    /// Well-formedness problems of the table itself.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (sub, sup) in &self.generalization {
            for c in [sub, sup] {
                if !self.classes.contains_key(c) {
                    out.push(format!("generalization mentions unknown class `{c}`"));
                }
            }
        }
        if let Some(c) = self.has_cycle() {
            out.push(format!("cyclic generalization through `{c}`"));
        }
        for (name, sig) in &self.classes {
            let mut seen = BTreeSet::new();
            for (a, _) in &sig.attrs {
                if !seen.insert(a) {
                    out.push(format!("duplicate attribute `{a}` in class `{name}`"));
                }
            }
            let mut seen = BTreeSet::new();
            for op in &sig.ops {
                if !seen.insert(&op.name) {
                    out.push(format!("duplicate operation `{}` in class `{name}`", op.name));
                }
            }
            let doms = sig
                .attrs
                .iter()
                .map(|(_, d)| d)
                .chain(sig.ops.iter().flat_map(|o| o.params.iter().chain(o.result.iter())));
            for d in doms {
                if let Some(p) = self.domain_problem(d) {
                    out.push(format!("class `{name}`: {p}"));
                }
            }
        }
        for (name, a) in &self.associations {
            for end in [&a.source, &a.target] {
                if !self.classes.contains_key(&end.class) {
                    out.push(format!(
                        "association `{name}` end `{}` has unknown class `{}`",
                        end.role, end.class
                    ));
                }
            }
        }
        out
    }

    pub fn domain_problem(&self, d: &ValueDomain) -> Option<String> {
        match d {
            ValueDomain::Ref(c) if !self.classes.contains_key(c) => {
                Some(format!("reference to unknown class `{c}`"))
            }
            _ => d.shape_problem(),
        }
    }

    /// Merges `other` into `self`. Attributes, operations, supers and
    /// associations are united; a name declared twice with different
    /// signatures is a conflict.
    pub fn merge(&mut self, other: &ClassTable) -> Result<(), Vec<String>> {
        let mut conflicts = Vec::new();
        for (name, sig) in &other.classes {
            let mine = self.classes.entry(name.clone()).or_default();
            for (a, d) in &sig.attrs {
                match mine.attrs.iter().find(|(n, _)| n == a) {
                    Some((_, d0)) if d0 != d => conflicts.push(format!(
                        "attribute `{name}.{a}` declared as both {d0} and {d}"
                    )),
                    Some(_) => {}
                    None => mine.attrs.push((a.clone(), d.clone())),
                }
            }
            for op in &sig.ops {
                match mine.ops.iter().find(|o| o.name == op.name) {
                    Some(o0) if o0 != op => conflicts.push(format!(
                        "operation `{name}.{}` declared with different signatures",
                        op.name
                    )),
                    Some(_) => {}
                    None => mine.ops.push(op.clone()),
                }
            }
        }
        self.generalization
            .extend(other.generalization.iter().cloned());
        for (name, a) in &other.associations {
            match self.associations.get(name) {
                Some(a0) if a0 != a => conflicts.push(format!(
                    "association `{name}` declared with different ends"
                )),
                Some(_) => {}
                None => {
                    self.associations.insert(name.clone(), a.clone());
                }
            }
        }
        if conflicts.is_empty() {
            Ok(())
        } else {
            Err(conflicts)
        }
    }

    /// Sub-table over `keep`: generalizations and associations whose classes
    /// are all kept.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> ClassTable {
        ClassTable {
            classes: self
                .classes
                .iter()
                .filter(|(n, _)| keep.contains(*n))
                .map(|(n, s)| (n.clone(), s.clone()))
                .collect(),
            generalization: self
                .generalization
                .iter()
                .filter(|(a, b)| keep.contains(a) && keep.contains(b))
                .cloned()
                .collect(),
            associations: self
                .associations
                .iter()
                .filter(|(_, a)| keep.contains(&a.source.class) && keep.contains(&a.target.class))
                .map(|(n, a)| (n.clone(), a.clone()))
                .collect(),
        }
    }

    /// Whether the other end of `assoc` reached from `class` via the end
    /// named `role` exists; returns the association name, whether the
    /// navigation follows links forward (source to target), and the class
    /// reached.
    pub fn navigate(&self, class: &str, role: &str) -> Option<(String, bool, String)> {
        self.associations.iter().find_map(|(name, a)| {
            if a.target.role == role && self.is_subclass(class, &a.source.class) {
                Some((name.clone(), true, a.target.class.clone()))
            } else if a.source.role == role && self.is_subclass(class, &a.target.class) {
                Some((name.clone(), false, a.source.class.clone()))
            } else {
                None
            }
        })
    }

    /// Canonical enumeration name for the `n`-th object (1-based) of a class.
    pub fn object_name(&self, class: &str, n: usize) -> ObjectId {
        let lower = class.to_lowercase();
        let clash = self
            .classes
            .keys()
            .any(|c| c != class && c.to_lowercase() == lower);
        let stem = if clash { class.to_string() } else { lower };
        if stem.ends_with(|c: char| c.is_ascii_digit()) {
            ObjectId(format!("{stem}_{n}"))
        } else {
            ObjectId(format!("{stem}{n}"))
        }
    }
}
