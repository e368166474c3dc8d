//! Lifecycle-driven simulation.
//!
//! Each step the environment calls an operation on an object governed by a
//! lifecycle, choosing pseudo-randomly among enabled (object, transition,
//! arguments) options. The post state is the conforming snapshot closest to
//! the current one; declared outputs are sent, and accepted by their
//! receivers' lifecycles, before the call returns.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::doc::{Document, StdDoc, Transition};
use crate::model::{MsgEvent, ObjectId, Party, Snapshot, SystemTrace, Value};
use crate::semantics::{
    outputs, param_map, post_holds, pre_holds, Bounds, DocSet, MonitorState, Owed, SemanticsError, Walker,
};

const MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("simulation needs at least one object model")]
    NoObjectModel,
    #[error("no population within bounds satisfies the object models")]
    NoPopulation,
    #[error("postcondition of transition {transition} in {std} is unsatisfiable from the current snapshot")]
    Unsatisfiable { std: String, transition: String },
}

/// A simulated trace and how it fares against the charts of the set.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trace: SystemTrace,
    /// Chart name and whether the trace satisfies it.
    pub charts: Vec<(String, bool)>,
}

impl Simulation {
    pub fn report(&self) -> String {
        let mut out = format!("steps: {}\n", self.trace.len() - 1);
        if self.charts.is_empty() {
            out.push_str("charts: none\n");
        }
        for (name, ok) in &self.charts {
            out.push_str(&format!("{name}: {}\n", if *ok { "SAT" } else { "VIOLATED" }));
        }
        out
    }
}

struct Sim<'a> {
    set: &'a DocSet,
    stds: BTreeMap<&'a str, &'a StdDoc>,
    /// Snapshots with the current population and no active operations.
    family: Vec<Snapshot>,
    states: BTreeMap<ObjectId, String>,
}

/// Outcome of one attempted option.
enum Attempt {
    Done(SystemTrace, MonitorState, BTreeMap<ObjectId, String>),
    Rejected,
}

fn hamming(a: &Snapshot, b: &Snapshot) -> usize {
    let attrs: usize = a
        .objects
        .iter()
        .map(|(id, e)| {
            let other = &b.objects[id].state.attrs;
            e.state.attrs.iter().filter(|(k, v)| other.get(*k) != Some(v)).count()
        })
        .sum();
    attrs + a.links.symmetric_difference(&b.links).count()
}

fn with_active(snap: &Snapshot, like: &Snapshot) -> Snapshot {
    let mut s = snap.clone();
    for (id, e) in s.objects.iter_mut() {
        e.state.active = like.objects[id].state.active.clone();
    }
    s
}

impl<'a> Sim<'a> {
    /// The object's lifecycle, if its class (or a superclass) has one.
    fn std_of(&self, snap: &Snapshot, o: &ObjectId) -> Option<&'a StdDoc> {
        let class = snap.class_of(o)?;
        let table = self.set.table();
        table
            .lineage(class)
            .iter()
            .find_map(|c| self.stds.get(c.as_str()).copied())
    }

    /// Enabled (object, transition, arguments) options in canonical order.
    fn options(&self, trace: &SystemTrace) -> Vec<(ObjectId, &'a Transition, Vec<Value>)> {
        let table = self.set.table();
        let pre = trace.last_snapshot();
        let mut out = Vec::new();
        for (o, e) in &pre.objects {
            let Some(std) = self.std_of(pre, o) else { continue };
            for t in std.transitions.iter().filter(|t| t.source == self.states[o]) {
                let Some(op) = table.find_op(&e.class, &t.op) else { continue };
                let domains: Vec<Vec<Value>> = op.params.iter().map(|d| d.values(table, pre)).collect();
                let mut tuples: Vec<Vec<Value>> = vec![vec![]];
                for d in &domains {
                    tuples = tuples
                        .into_iter()
                        .flat_map(|t| {
                            d.iter().map(move |v| {
                                let mut t = t.clone();
                                t.push(v.clone());
                                t
                            })
                        })
                        .collect();
                }
                for args in tuples {
                    if pre_holds(table, t, o, pre, &param_map(t, &args)) {
                        out.push((o.clone(), t, args));
                    }
                }
            }
        }
        out
    }

    /// Closest snapshot of the family satisfying the transition's post.
    fn successor(
        &self,
        t: &Transition,
        o: &ObjectId,
        pre: &Snapshot,
        params: &BTreeMap<String, Value>,
    ) -> Option<Snapshot> {
        let table = self.set.table();
        self.family
            .iter()
            .map(|c| with_active(c, pre))
            .filter(|c| post_holds(table, t, o, pre, c, params))
            .min_by_key(|c| hamming(pre, c))
    }

    fn push(
        &self,
        trace: &mut SystemTrace,
        mon: &mut MonitorState,
        ev: MsgEvent,
        post: Snapshot,
    ) -> bool {
        trace.push(ev, post);
        match self.set.monitor().step(mon, trace) {
            Some(m) => {
                *mon = m;
                true
            }
            None => false,
        }
    }

    /// Sends `call`, lets the receiver react, and returns. Returns Ok(false)
    /// when the attempt is not accepted by the lifecycles.
    fn deliver(
        &self,
        trace: &mut SystemTrace,
        mon: &mut MonitorState,
        states: &mut BTreeMap<ObjectId, String>,
        sender: Party,
        receiver: &ObjectId,
        t: Option<&Transition>,
        args: Vec<Value>,
        op: &str,
        rng: &mut ChaCha8Rng,
        depth: usize,
    ) -> Result<bool, SimError> {
        if depth > MAX_DEPTH {
            return Ok(false);
        }
        let table = self.set.table();
        let pre = trace.last_snapshot().clone();
        if pre.objects[receiver].state.active.contains(op) {
            return Ok(false);
        }
        let mut calling = pre.clone();
        calling
            .objects
            .get_mut(receiver)
            .expect("receiver exists")
            .state
            .active
            .insert(op.to_string());
        let governed = self.std_of(&pre, receiver);
        let t = match (t, governed) {
            (Some(t), _) => Some(t),
            (None, Some(std)) => {
                let params_ok = |t: &&Transition| {
                    t.op == op
                        && t.source == states[receiver]
                        && t.params.len() == args.len()
                        && pre_holds(table, t, receiver, &pre, &param_map(t, &args))
                };
                let enabled: Vec<&Transition> = std.transitions.iter().filter(params_ok).collect();
                match enabled.choose(rng) {
                    Some(t) => Some(*t),
                    None => return Ok(false),
                }
            }
            (None, None) => None,
        };
        let mut owed: Vec<Owed> = Vec::new();
        let post = match t {
            Some(t) => {
                let params = param_map(t, &args);
                let Some(post) = self.successor(t, receiver, &pre, &params) else {
                    return Err(SimError::Unsatisfiable {
                        std: governed.map(|s| s.name.clone()).unwrap_or_default(),
                        transition: t.label(),
                    });
                };
                let post = with_active(&post, &calling);
                match outputs(table, t, receiver, &pre, &post, &params) {
                    Some(o) => owed = o,
                    None => return Ok(false),
                }
                states.insert(receiver.clone(), t.target.clone());
                post
            }
            None => calling,
        };
        let ev = MsgEvent::call(sender.clone(), receiver.clone(), op, args);
        if !self.push(trace, mon, ev, post) {
            return Ok(false);
        }
        for out in owed {
            if !trace.last_snapshot().objects.contains_key(&out.receiver) {
                return Ok(false);
            }
            let ok = self.deliver(
                trace,
                mon,
                states,
                Party::Obj(receiver.clone()),
                &out.receiver,
                None,
                out.args,
                &out.op,
                rng,
                depth + 1,
            )?;
            if !ok {
                return Ok(false);
            }
        }
        let class = &trace.last_snapshot().objects[receiver].class;
        let result = match table.find_op(class, op).and_then(|o| o.result) {
            Some(d) => {
                let vs = d.values(table, trace.last_snapshot());
                vs[rng.gen_range(0..vs.len())].clone()
            }
            None => Value::Nil,
        };
        let mut after = trace.last_snapshot().clone();
        after
            .objects
            .get_mut(receiver)
            .expect("receiver")
            .state
            .active
            .remove(op);
        let ret = MsgEvent::ret(receiver.clone(), sender, op, result);
        Ok(self.push(trace, mon, ret, after))
    }

    fn attempt(
        &self,
        trace: &SystemTrace,
        mon: &MonitorState,
        (o, t, args): &(ObjectId, &'a Transition, Vec<Value>),
        rng: &mut ChaCha8Rng,
    ) -> Result<Attempt, SimError> {
        let mut trace = trace.clone();
        let mut mon = mon.clone();
        let mut states = self.states.clone();
        let ok = self.deliver(
            &mut trace,
            &mut mon,
            &mut states,
            Party::Env,
            o,
            Some(t),
            args.clone(),
            &t.op,
            rng,
            0,
        )?;
        Ok(if ok {
            Attempt::Done(trace, mon, states)
        } else {
            Attempt::Rejected
        })
    }
}

/// Simulates `docs` for up to `steps` environment calls. Deterministic for
/// a fixed seed. The result satisfies every object model and lifecycle of
/// `docs`; charts are only evaluated.
pub fn simulate(docs: &[Document], bounds: &Bounds, seed: u64, steps: usize) -> Result<Simulation, SimError> {
    let set = DocSet::new(docs)?;
    if set.oms().next().is_none() {
        return Err(SimError::NoObjectModel);
    }
    let table = set.table();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut walker = Walker::new(table, bounds, set.monitor());
    let mut pvs = walker.populations(&vec![0; walker.classes.len()]);
    pvs.shuffle(&mut rng);
    let family = pvs
        .into_iter()
        .map(|pv| walker.family(&pv))
        .find(|f| !f.is_empty())
        .ok_or(SimError::NoPopulation)?;
    let initial = family[rng.gen_range(0..family.len())].clone();
    let stds = set.stds().map(|s| (s.class.as_str(), s)).collect();
    let mut sim = Sim {
        set: &set,
        stds,
        family: family.to_vec(),
        states: BTreeMap::new(),
    };
    for o in initial.objects.keys() {
        if let Some(std) = sim.std_of(&initial, o) {
            sim.states.insert(o.clone(), std.initial.clone());
        }
    }
    let mut trace = SystemTrace::new(table.clone(), initial);
    let mut mon = set.monitor().start(&trace);
    for _ in 0..steps {
        let mut options = sim.options(&trace);
        let mut advanced = false;
        while !options.is_empty() {
            let pick = options.remove(rng.gen_range(0..options.len()));
            if let Attempt::Done(t, m, states) = sim.attempt(&trace, &mon, &pick, &mut rng)? {
                trace = t;
                mon = m;
                sim.states = states;
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    let charts = set
        .docs()
        .iter()
        .enumerate()
        .filter_map(|(i, d)| match d {
            Document::Msc(m) => Some((m.name.clone(), set.satisfies_doc(&trace, i))),
            _ => None,
        })
        .collect();
    Ok(Simulation { trace, charts })
}
