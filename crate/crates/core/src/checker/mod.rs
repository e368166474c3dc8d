//! Bounded verdicts: refinement, redundancy, consistency and semantics
//! preservation, each established by exhaustive search of the bounded
//! universe. Plus a lifecycle-driven simulator producing witness traces.

mod simulate;

pub use simulate::{simulate, SimError, Simulation};

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::doc::Document;
use crate::model::{render_trace, SystemTrace};
use crate::semantics::{Bounds, DocSet, SemanticsError, Universe, Visit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    HoldsWithinBounds,
    Fails,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::HoldsWithinBounds => "holds-within-bounds",
            Outcome::Fails => "fails",
        })
    }
}

/// What a verdict's attached trace shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceRole {
    Counterexample,
    Witness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stats {
    /// Traces of the filtered universe that were visited.
    pub examined: usize,
    /// Universe partitions searched.
    pub partitions: usize,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Counterexample for a failed refinement, witness for consistency.
    pub trace: Option<SystemTrace>,
    pub role: TraceRole,
    /// Why the trace is a counterexample, in words.
    pub reason: Option<String>,
    pub bounds: Bounds,
    pub stats: Stats,
    pub elapsed: Duration,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.outcome == Outcome::HoldsWithinBounds
    }

    pub fn counterexample(&self) -> Option<&SystemTrace> {
        match self.role {
            TraceRole::Counterexample => self.trace.as_ref(),
            TraceRole::Witness => None,
        }
    }

    /// Text report. Elapsed time is left out so that reports are
    /// reproducible byte for byte.
    pub fn report(&self) -> String {
        let mut out = format!(
            "outcome: {}\nbounds: {}\nexamined: {} traces in {} partitions\n",
            self.outcome, self.bounds, self.stats.examined, self.stats.partitions
        );
        if let Some(r) = &self.reason {
            out.push_str(&format!("reason: {r}\n"));
        }
        if let Some(t) = &self.trace {
            out.push_str(match self.role {
                TraceRole::Counterexample => "counterexample:\n",
                TraceRole::Witness => "witness:\n",
            });
            out.push_str(&render_trace(t));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// How counterexample search treats the universe partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Complete pass; the reported trace is the first in enumeration order
    /// among the shortest per partition, independent of scheduling.
    #[default]
    Deterministic,
    /// Stops as soon as any worker finds a trace. The outcome is the same
    /// as in deterministic mode, but which trace is reported may vary.
    EarlyExit,
}

/// Searches the traces of `universe` satisfying `filter` for one with `pred`.
fn search(
    universe: &Universe,
    filter: &DocSet,
    pred: &(dyn Fn(&SystemTrace) -> bool + Sync),
    mode: SearchMode,
) -> (Option<SystemTrace>, Stats) {
    let parts = universe.partitions(filter);
    let stop = AtomicBool::new(false);
    let results: Vec<(Option<SystemTrace>, usize)> = parts
        .par_iter()
        .map(|p| {
            if mode == SearchMode::EarlyExit && stop.load(Ordering::Relaxed) {
                return (None, 0);
            }
            let mut best: Option<SystemTrace> = None;
            let mut examined = 0;
            universe.walk_partition(filter, p, &mut |s| {
                if mode == SearchMode::EarlyExit && stop.load(Ordering::Relaxed) {
                    return Visit::Stop;
                }
                if best.as_ref().is_some_and(|b| s.len() >= b.len()) {
                    return Visit::SkipChildren;
                }
                examined += 1;
                if pred(s) {
                    best = Some(s.clone());
                    if mode == SearchMode::EarlyExit {
                        stop.store(true, Ordering::Relaxed);
                        return Visit::Stop;
                    }
                    return Visit::SkipChildren;
                }
                Visit::Continue
            });
            (best, examined)
        })
        .collect();
    let stats = Stats {
        examined: results.iter().map(|(_, n)| n).sum(),
        partitions: parts.len(),
    };
    (results.into_iter().find_map(|(t, _)| t), stats)
}

fn vocabulary(a: &DocSet, b: &DocSet) -> Result<crate::model::ClassTable, SemanticsError> {
    let mut t = a.table().clone();
    t.merge(b.table())
        .map_err(|c| SemanticsError::TableConflict(c.join("; ")))?;
    Ok(t)
}

/// `old ⊨ new` within `bounds`: every trace satisfying `new` satisfies `old`.
pub fn check_refines(old: &[Document], new: &[Document], bounds: &Bounds) -> Result<Verdict, CheckError> {
    check_refines_with(old, new, bounds, SearchMode::Deterministic)
}

pub fn check_refines_with(
    old: &[Document],
    new: &[Document],
    bounds: &Bounds,
    mode: SearchMode,
) -> Result<Verdict, CheckError> {
    let start = Instant::now();
    refines_sets(&DocSet::new(old)?, &DocSet::new(new)?, bounds, mode, start)
}

fn refines_sets(
    old_set: &DocSet,
    new_set: &DocSet,
    bounds: &Bounds,
    mode: SearchMode,
    start: Instant,
) -> Result<Verdict, CheckError> {
    let universe = Universe::new(&vocabulary(old_set, new_set)?, bounds)?;
    let (found, stats) = search(&universe, new_set, &|s| !old_set.satisfies(s), mode);
    let reason = found.as_ref().and_then(|s| old_set.violation(s));
    Ok(Verdict {
        outcome: if found.is_some() {
            Outcome::Fails
        } else {
            Outcome::HoldsWithinBounds
        },
        trace: found,
        role: TraceRole::Counterexample,
        reason,
        bounds: bounds.clone(),
        stats,
        elapsed: start.elapsed(),
    })
}

/// `d` is redundant next to `rest` within `bounds`: `[[rest]] ⊆ [[d]]`.
/// `d` may refer to classes declared in `rest`.
pub fn check_redundant(d: &Document, rest: &[Document], bounds: &Bounds) -> Result<Verdict, CheckError> {
    let start = Instant::now();
    let mut all = rest.to_vec();
    all.push(d.clone());
    DocSet::new(&all)?;
    let rest_set = DocSet::new(rest)?;
    let d_set = DocSet::in_context(std::slice::from_ref(d), rest_set.table())?;
    refines_sets(&d_set, &rest_set, bounds, SearchMode::Deterministic, start)
}

/// Nonemptiness of `[[docs]]` within `bounds`; the first trace found is
/// attached as a witness.
pub fn check_consistent(docs: &[Document], bounds: &Bounds) -> Result<Verdict, CheckError> {
    let start = Instant::now();
    let set = DocSet::new(docs)?;
    let universe = Universe::for_docs(&set, bounds)?;
    let (found, stats) = search(&universe, &set, &|_| true, SearchMode::Deterministic);
    Ok(Verdict {
        outcome: if found.is_some() {
            Outcome::HoldsWithinBounds
        } else {
            Outcome::Fails
        },
        reason: found.is_none().then(|| "no trace within bounds satisfies every document".to_string()),
        trace: found,
        role: TraceRole::Witness,
        bounds: bounds.clone(),
        stats,
        elapsed: start.elapsed(),
    })
}

/// Semantics preservation: refinement in both directions. Returns the
/// verdict of the first direction that fails, or of the second.
pub fn check_preserves(old: &[Document], new: &[Document], bounds: &Bounds) -> Result<Verdict, CheckError> {
    let forward = check_refines(old, new, bounds)?;
    if !forward.holds() {
        return Ok(forward);
    }
    let mut back = check_refines(new, old, bounds)?;
    back.stats.examined += forward.stats.examined;
    back.stats.partitions += forward.stats.partitions;
    back.elapsed += forward.elapsed;
    Ok(back)
}
