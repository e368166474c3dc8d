//! Random development graphs built through the public graph operations.

use std::fs;
use std::path::{Path, PathBuf};

use loosem::checker::Verdict;
use loosem::devgraph::{DevGraph, GraphError, TransformKind};
use loosem::doc::{DocKind, Document};
use loosem::semantics::Bounds;
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::VOCAB_OM;
use super::{doc, rename_doc, with_invariant, TestRng};

/// Invariants of increasing strength over [`VOCAB_OM`].
pub const LADDER: [&str; 5] = [
    "true",
    "forall x: C . x.n == 0 || x.b",
    "forall x: D . x.k",
    "forall x: C . x.b",
    "forall x: C . x.n == 0",
];

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const NOTES: [&str; 5] = ["plain", "with \"quotes\"", "two\nlines", "back\\slash", ""];

/// A random development graph built through the public operations.
///
/// Failed checked transformations leave the graph unchanged and are
/// reported to `on_fail` with the active documents before and after.
pub fn random_graph(r: &mut TestRng, dir: &Path, on_fail: &mut dyn FnMut(Vec<Document>, Vec<Document>, Verdict)) -> Result<DevGraph, String> {
    let mut g = DevGraph::new(dir);
    let mut active_om: Option<String> = None;
    let mut k = 0;
    for _ in 0..r.gen_range(2..=8) {
        k += 1;
        let spaced = if r.gen() { " copy" } else { "" };
        let action = if r.gen_bool(0.5) { 1 + usize::from(active_om.is_some()) } else { r.gen_range(0..5) };
        match action {
            0 => {
                let state = if r.gen() { " state=validated" } else { "" };
                let p = write(dir, &format!("note {k}{spaced}.itd"), &format!("itd N{k}{state} {{ text {{nested}} \"q\" }}"));
                g.add(&p, Some(DocKind::Itd)).map_err(|e| e.to_string())?;
            }
            1 if active_om.is_none() => {
                let p = write(dir, &format!("m{k}{spaced}.om"), &rename_doc(VOCAB_OM, "Base", &format!("M{k}")));
                active_om = Some(g.add(&p, None).map_err(|e| e.to_string())?);
            }
            2 if active_om.is_some() => {
                let input = active_om.clone().unwrap();
                let om = with_invariant(&rename_doc(VOCAB_OM, "Base", &format!("M{k}")), "I", LADDER[r.gen_range(0..5)]);
                let p = write(dir, &format!("m{k}{spaced}.om"), &om);
                let kind = *[TransformKind::Refine, TransformKind::ManualEdit, TransformKind::Decompose].choose(r).unwrap();
                let note = NOTES.choose(r).unwrap();
                let before = g.clone();
                match g.transform_at(kind, &[input.clone()], &[p], &Bounds::new(1, 1, 0), note, r.gen_range(0..1 << 40)) {
                    Ok(_) => active_om = Some(format!("M{k}")),
                    Err(GraphError::CheckFailed { verdict, .. }) => {
                        let old = before.documents(&before.active_ids()).unwrap();
                        let mut new: Vec<Document> = old.iter().filter(|d| d.id() != input).cloned().collect();
                        new.push(doc(&om));
                        on_fail(old, new, *verdict);
                        if g != before {
                            return Err("failed transformation changed the graph".into());
                        }
                    }
                    Err(e) => return Err(e.to_string()),
                }
                if kind == TransformKind::ManualEdit && g != before {
                    // the edited input stays active next to its successor
                    active_om = None;
                }
            }
            3 => {
                let ids: Vec<String> = g.nodes.keys().cloned().collect();
                if let Some(id) = ids.choose(r) {
                    let v = r.gen();
                    g.set_validated(id, v).map_err(|e| e.to_string())?;
                }
            }
            _ => {
                let ids: Vec<String> = g.nodes.keys().filter(|i| i.starts_with('N')).cloned().collect();
                if let Some(id) = ids.choose(r) {
                    g.override_redundant(id).map_err(|e| e.to_string())?;
                }
            }
        }
    }
    Ok(g)
}
