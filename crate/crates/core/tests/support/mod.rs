//! Generators and independent oracles shared by the acceptance suite and the
//! property tests. Nothing here calls into the enumerator or the evaluator
//! under test except where a result is being compared against them.

#![allow(dead_code)]

pub mod gen;
pub mod graph;
pub mod oracle;

use loosem::checker::Verdict;
use loosem::doc::{parse_document, Document};
use loosem::model::{validate_system, SystemTrace};
use loosem::semantics::{satisfies_set, Bounds};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn doc(src: &str) -> Document {
    parse_document(src).unwrap_or_else(|e| panic!("{src}\n{e:?}"))
}

pub fn docs(srcs: &[&str]) -> Vec<Document> {
    srcs.iter().map(|s| doc(s)).collect()
}

pub fn rename_doc(src: &str, from: &str, to: &str) -> String {
    src.replacen(from, to, 1)
}

/// Inserts an invariant into object model text.
pub fn with_invariant(om: &str, name: &str, inv: &str) -> String {
    let cut = om.rfind('}').expect("closing brace");
    format!("{} inv {name}: {inv} }}", &om[..cut])
}

/// Whether `s` stays within `b`: trace length, objects per class and the
/// number of classes beyond the vocabulary.
pub fn within_bounds(s: &SystemTrace, b: &Bounds, vocabulary_size: usize) -> Result<(), String> {
    if s.steps.len() > b.max_trace_len {
        return Err(format!("trace has {} events, bound is {}", s.steps.len(), b.max_trace_len));
    }
    let last = s.last_snapshot();
    for class in s.class_table.classes.keys() {
        let n = last.objects.values().filter(|e| &e.class == class).count();
        if n > b.max_objects {
            return Err(format!("{n} objects of class {class}, bound is {}", b.max_objects));
        }
    }
    let extra = s.class_table.classes.len().saturating_sub(vocabulary_size);
    if extra > b.extra_classes {
        return Err(format!("{extra} classes beyond the vocabulary"));
    }
    Ok(())
}

/// Re-checks a failing refinement verdict: the counterexample must be a
/// well-formed trace within the verdict bounds that satisfies `new` and
/// violates `old`.
pub fn recheck_counterexample(old: &[Document], new: &[Document], v: &Verdict) -> Result<(), String> {
    let s = v.counterexample().ok_or("fails verdict without a counterexample")?;
    let problems = validate_system(s);
    if !problems.is_empty() {
        return Err(format!("counterexample is ill-formed: {}", problems[0]));
    }
    if s.steps.len() > v.bounds.max_trace_len {
        return Err("counterexample exceeds the trace length bound".into());
    }
    let last = s.last_snapshot();
    for class in s.class_table.classes.keys() {
        if last.objects.values().filter(|e| &e.class == class).count() > v.bounds.max_objects {
            return Err(format!("counterexample exceeds the object bound for {class}"));
        }
    }
    match satisfies_set(s, new) {
        Ok(true) => {}
        Ok(false) => return Err("counterexample does not satisfy the new documents".into()),
        Err(e) => return Err(format!("new documents: {e}")),
    }
    match satisfies_set(s, old) {
        Ok(false) => Ok(()),
        Ok(true) => Err("counterexample satisfies the old documents".into()),
        Err(e) => Err(format!("old documents: {e}")),
    }
}
