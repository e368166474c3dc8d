use loosem::doc::{parse_document, Document};
use loosem::model::{parse_trace, ClassSig, ClassTable, SystemTrace, ValueDomain};
use loosem::semantics::{enumerate, satisfies, satisfies_set, Bounds, DocSet, SemanticsError};

fn doc(src: &str) -> Document {
    parse_document(src).unwrap_or_else(|e| panic!("{src}: {e:?}"))
}

fn trace(src: &str) -> SystemTrace {
    parse_trace(src).unwrap_or_else(|e| panic!("{e}"))
}

fn sat(s: &SystemTrace, d: &str) -> bool {
    satisfies(s, &doc(d)).unwrap()
}

const FLIP: &str = "std F for C { states {A} initial A trans A -> A on m() post b' == !b }";

fn one_call(before: &str, after: &str) -> SystemTrace {
    trace(&format!(
        "system {{ classes {{ C(b: Bool; op m()) }} \
         snapshot {{ obj c1: C {{ b = {before} }} links {{ }} active {{ }} }} \
         event call env -> c1 : m() \
         snapshot {{ obj c1: C {{ b = {after} }} links {{ }} active {{ c1.m }} }} }}"
    ))
}

#[test]
fn std_transition_with_post() {
    assert!(sat(&one_call("false", "true"), FLIP));
    assert!(!sat(&one_call("false", "false"), FLIP));
}

#[test]
fn std_without_transitions_accepts_only_silence() {
    let empty = "std E for C { states {A} initial A }";
    assert!(!sat(&one_call("false", "true"), empty));
    let quiet = trace("system { classes { C(b: Bool; op m()) } snapshot { obj c1: C { b = false } links { } active { } } }");
    assert!(sat(&quiet, empty));
}

#[test]
fn std_guards_and_control_state() {
    let d = "std G for C { states {A, B} initial A
        trans A -> B on m() pre !b
        trans B -> A on m() pre b }";
    assert!(sat(&one_call("false", "true"), d));
    assert!(!sat(&one_call("true", "true"), d));
}

#[test]
fn std_outputs_must_follow_in_order() {
    let cls = "C(op m(); op n())";
    let base = |events: &str| {
        trace(&format!(
            "system {{ classes {{ {cls} }} \
             snapshot {{ obj c1: C {{ }} obj c2: C {{ }} links {{ }} active {{ }} }} {events} }}"
        ))
    };
    let d = "std O for C { states {A} initial A trans A -> A on m() out [ self.n() ] trans A -> A on n() }";
    let ok = base(
        "event call env -> c1 : m() \
         snapshot { obj c1: C { } obj c2: C { } links { } active { c1.m } } \
         event call c1 -> c1 : n() \
         snapshot { obj c1: C { } obj c2: C { } links { } active { c1.m, c1.n } }",
    );
    assert!(sat(&ok, d));
    let wrong_receiver = base(
        "event call env -> c1 : m() \
         snapshot { obj c1: C { } obj c2: C { } links { } active { c1.m } } \
         event call c1 -> c2 : n() \
         snapshot { obj c1: C { } obj c2: C { } links { } active { c1.m, c2.n } }",
    );
    assert!(!sat(&wrong_receiver, d));
    // owed outputs block further calls to the object
    let interrupted = base(
        "event call env -> c1 : m() \
         snapshot { obj c1: C { } obj c2: C { } links { } active { c1.m } } \
         event call env -> c1 : n() \
         snapshot { obj c1: C { } obj c2: C { } links { } active { c1.m, c1.n } }",
    );
    assert!(!sat(&interrupted, d));
    // still owed at the end is fine
    let pending = base(
        "event call env -> c1 : m() \
         snapshot { obj c1: C { } obj c2: C { } links { } active { c1.m } }",
    );
    assert!(sat(&pending, d));
}

const CHART: &str = "msc Q { roles { c: C, a: A } c -> a : m(1) a -> c : return m }";

fn chart_trace(events: &str) -> SystemTrace {
    trace(&format!(
        "system {{ classes {{ C(op k()); A(op m(Int[0..2])) }} \
         snapshot {{ obj a1: A {{ }} obj c1: C {{ }} links {{ }} active {{ }} }} {events} }}"
    ))
}

#[test]
fn msc_trigger_semantics() {
    let ctx = "objectmodel O { class C { op k() } class A { op m(Int[0..2]) } }";
    let chart = |s: &SystemTrace| satisfies_set(s, &[doc(ctx), doc(CHART)]).unwrap();
    assert!(chart(&chart_trace("")));
    let full = chart_trace(
        "event call c1 -> a1 : m(1) \
         snapshot { obj a1: A { } obj c1: C { } links { } active { a1.m } } \
         event return a1 -> c1 : m(nil) \
         snapshot { obj a1: A { } obj c1: C { } links { } active { } }",
    );
    assert!(chart(&full));
    let open = chart_trace(
        "event call c1 -> a1 : m(1) \
         snapshot { obj a1: A { } obj c1: C { } links { } active { a1.m } }",
    );
    assert!(!chart(&open));
    // a different argument does not trigger
    let other = chart_trace(
        "event call c1 -> a1 : m(2) \
         snapshot { obj a1: A { } obj c1: C { } links { } active { a1.m } }",
    );
    assert!(chart(&other));
    // an unexpected message between bound roles breaks the scenario
    let broken = chart_trace(
        "event call c1 -> a1 : m(1) \
         snapshot { obj a1: A { } obj c1: C { } links { } active { a1.m } } \
         event call a1 -> c1 : k() \
         snapshot { obj a1: A { } obj c1: C { } links { } active { a1.m, c1.k } } \
         event return a1 -> c1 : m(nil) \
         snapshot { obj a1: A { } obj c1: C { } links { } active { c1.k } }",
    );
    assert!(!chart(&broken));
    // traffic with unbound parties interleaves freely
    let env_call = chart_trace(
        "event call c1 -> a1 : m(1) \
         snapshot { obj a1: A { } obj c1: C { } links { } active { a1.m } } \
         event call env -> c1 : k() \
         snapshot { obj a1: A { } obj c1: C { } links { } active { a1.m, c1.k } } \
         event return a1 -> c1 : m(nil) \
         snapshot { obj a1: A { } obj c1: C { } links { } active { c1.k } }",
    );
    assert!(chart(&env_call));
}

#[test]
fn om_structure() {
    let s = trace(
        "system { classes { C(b: Bool); D(); assoc L(c: C, d: D) } \
         snapshot { obj c1: C { b = true } obj d1: D { } links { L(c1, d1) } active { } } }",
    );
    assert!(sat(&s, "objectmodel O { class C { attr b: Bool } }"));
    assert!(sat(&s, "objectmodel O { class C { attr b: Bool } class D { } assoc L c: C[1] d: D[0..*] }"));
    assert!(!sat(&s, "objectmodel O { class C { attr b: Bool } class D { } assoc L c: C[1] d: D[2..*] }"));
    assert!(!sat(&s, "objectmodel O { class E { } }"));
    assert!(!sat(&s, "objectmodel O { class C { attr b: Bool } inv N: forall x: C . !x.b }"));
    assert!(!sat(&s, "objectmodel O { class C { attr flag: Bool } }"));
}

#[test]
fn aggregation_is_acyclic() {
    let s = trace(
        "system { classes { C(); assoc P(a: C, b: C) } \
         snapshot { obj c1: C { } obj c2: C { } links { P(c1, c2), P(c2, c1) } active { } } }",
    );
    assert!(sat(&s, "objectmodel O { class C { } assoc P a: C[0..*] b: C[0..*] }"));
    assert!(!sat(&s, "objectmodel O { class C { } assoc P a: C[0..*] b: C[0..*] aggregate }"));
}

#[test]
fn itd_and_sets() {
    let s = one_call("false", "true");
    assert!(sat(&s, "itd Note { anything }"));
    assert!(satisfies_set(&s, &[]).unwrap());
    let om = doc("objectmodel O { class C { attr b: Bool; op m() } }");
    let bad = doc("objectmodel P { class C { attr b: Bool } inv Off: forall x: C . !x.b }");
    assert!(satisfies_set(&s, &[om.clone(), doc(FLIP)]).unwrap());
    assert!(!satisfies_set(&s, &[om, bad]).unwrap());
}

#[test]
fn context_incorrect_has_no_semantics() {
    let s = one_call("false", "true");
    let err = satisfies(&s, &doc("std S for Nowhere { states {A} initial A }")).unwrap_err();
    assert!(matches!(err, SemanticsError::ContextIncorrect(_)));
    assert!(err.to_string().contains("no semantics for context-incorrect document"));
}

fn c_bool() -> ClassTable {
    let mut t = ClassTable::default();
    t.add_class(
        "C",
        ClassSig {
            attrs: vec![("b".into(), ValueDomain::Bool)],
            ops: vec![],
        },
    );
    t
}

#[test]
fn smoke_universe_counts() {
    let b = Bounds::new(1, 0, 0).with_base(c_bool());
    let all = enumerate(&DocSet::empty(), &b).unwrap();
    assert_eq!(all.len(), 3);
    let inv = DocSet::new(&[doc("objectmodel I { class C { attr b: Bool } inv All: forall x: C . x.b }")]).unwrap();
    let kept = enumerate(&inv, &b).unwrap();
    assert_eq!(kept.len(), 2);
    assert!(kept.iter().all(|s| all.contains(s)));
}

#[test]
fn enumeration_is_deterministic_and_itd_neutral() {
    let om = doc("objectmodel O { class C { attr b: Bool; op m() } }");
    let b = Bounds::new(2, 1, 0);
    let d = DocSet::new(&[om.clone(), doc(FLIP)]).unwrap();
    let first = enumerate(&d, &b).unwrap();
    assert_eq!(first, enumerate(&d, &b).unwrap());
    let with_itd = DocSet::new(&[om.clone(), doc(FLIP), doc("itd N { text }")]).unwrap();
    assert_eq!(first, enumerate(&with_itd, &b).unwrap());
    let looser = enumerate(&DocSet::new(&[om]).unwrap(), &b).unwrap();
    assert!(first.len() < looser.len());
    assert!(first.iter().all(|s| looser.contains(s)));
}
