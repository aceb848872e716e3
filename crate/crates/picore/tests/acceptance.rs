//! Acceptance suite: one test per acceptance criterion, each printing a
//! single summary line (run with `--nocapture` to see them; a failed
//! assertion is the FAIL line). The criteria cover small-step rule fidelity,
//! compositionality and serialization of bounded computation sets, empirical
//! soundness of the proof-rule checker against semantic validity, the two
//! bundled case studies, premise-group arities, and parser round-trips.

use picore::casestudies::{build_arinc, build_arinc_mutated, build_stepper, ArincScale, StepperScale};
use picore::semantics::{step_esys, step_event, step_par, step_program, ActLabel};
use picore::{
    annotate_event, annotate_program, check_compositional, check_derivation,
    check_invariant_direct, check_invariant_via_theorem, check_validity, computations,
    parse_expr_str, parse_program_str, parse_spec, pretty_spec, serialization_witness, AnnKind,
    AnnotatedNode, Computation, DomainDecl, EnvModel, Event, EventContext, EventLabel,
    EventSystem, ExecUnitId, Expr, ParallelEventSystem, ProofReport, Program, RGCond, Spec,
    SpecFile, State, Value, Verdict, DEFAULT_CAP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

const ATOM_BOUND: usize = 64;

fn e(src: &str) -> Expr {
    parse_expr_str(src).expect("test expression parses")
}

fn prog(src: &str) -> Program {
    parse_program_str(src).expect("test program parses")
}

fn rg(pre: &str, rely: &str, guar: &str, post: &str) -> RGCond {
    RGCond::new(e(pre), e(rely), e(guar), e(post))
}

/// x ∈ {0, 1, 2}.
fn dx() -> DomainDecl {
    let mut d = DomainDecl::new();
    d.declare("x", (0..=2).map(Value::int).collect());
    d
}

/// x, y ∈ {0, 1, 2}.
fn dxy() -> DomainDecl {
    let mut d = dx();
    d.declare("y", (0..=2).map(Value::int).collect());
    d
}

fn sx(n: i64) -> State {
    State::from_pairs([("x", Value::int(n))])
}

fn unit(u: &str) -> ExecUnitId {
    ExecUnitId::new(u)
}

fn basic_event(name: &str, u: &str, guard: &str, body: &str) -> Event {
    Event::Basic {
        label: EventLabel {
            name: name.to_string(),
            params: vec![],
            unit: unit(u),
        },
        guard: e(guard),
        body: prog(body),
    }
}

fn rules_of(rep: &ProofReport, out: &mut BTreeSet<String>) {
    out.insert(rep.rule.clone());
    for c in &rep.children {
        rules_of(c, out);
    }
}

fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn pass(criterion: &str, started: Instant, budget_secs: u64, detail: &str) {
    let elapsed = started.elapsed();
    println!(
        "[acceptance] {}: PASS ({}, {:.1}s of {}s budget)",
        criterion,
        detail,
        elapsed.as_secs_f64(),
        budget_secs
    );
    assert!(
        elapsed.as_secs() < budget_secs,
        "{} exceeded its {}s budget: {:?}",
        criterion,
        budget_secs,
        elapsed
    );
}

// ---------------------------------------------------------------------------
// Criterion 1: one check per small-step rule, exact successor sets.
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_semantics_rule_coverage() {
    let t0 = Instant::now();
    let d = dx();
    let x0 = sx(0);

    // 1. Basic: simultaneous update, then Done.
    let succ = step_program(&prog("x := x + 1"), &x0, &d, ATOM_BOUND).unwrap();
    assert_eq!(succ, vec![(Program::Done, sx(1))]);

    // 2. Seq while the first component still runs (the head steps but is
    // not yet finished, so it stays in front).
    let succ = step_program(
        &prog("IF x = 0 THEN x := 1 FI ;; x := 2"),
        &x0,
        &d,
        ATOM_BOUND,
    )
    .unwrap();
    assert_eq!(succ, vec![(prog("x := 1 ;; x := 2"), sx(0))]);

    // 3. Seq drops a finished first component in the same step.
    let succ = step_program(&prog("x := 1 ;; x := 2"), &x0, &d, ATOM_BOUND).unwrap();
    assert_eq!(succ, vec![(prog("x := 2"), sx(1))]);

    // 4./5. Cond picks exactly the matching branch; the evaluation step
    // leaves the state unchanged.
    let cond = prog("IF x = 0 THEN x := 1 ELSE x := 2 FI");
    assert_eq!(
        step_program(&cond, &x0, &d, ATOM_BOUND).unwrap(),
        vec![(prog("x := 1"), sx(0))]
    );
    assert_eq!(
        step_program(&cond, &sx(2), &d, ATOM_BOUND).unwrap(),
        vec![(prog("x := 2"), sx(2))]
    );

    // 6. While unfolds into body ;; loop when the test holds (state kept).
    let w = prog("WHILE x < 2 DO x := x + 1 OD");
    let succ = step_program(&w, &x0, &d, ATOM_BOUND).unwrap();
    assert_eq!(succ.len(), 1);
    assert_eq!(succ[0].1, sx(0));
    assert_eq!(
        succ[0].0,
        Program::seq(prog("x := x + 1"), w.clone())
    );

    // 7. While terminates when the test fails (state kept).
    assert_eq!(
        step_program(&w, &sx(2), &d, ATOM_BOUND).unwrap(),
        vec![(Program::Done, sx(2))]
    );

    // 8. Await runs its body atomically when the guard holds and blocks
    // otherwise.
    let a = prog("AWAIT x = 0 THEN x := 1 ;; x := x + 1 END");
    assert_eq!(
        step_program(&a, &x0, &d, ATOM_BOUND).unwrap(),
        vec![(Program::Done, sx(2))]
    );
    assert_eq!(step_program(&a, &sx(1), &d, ATOM_BOUND).unwrap(), vec![]);

    // 9. Nondt: one successor per related in-domain state.
    let mut succ = step_program(
        &prog("NONDT x' = x + 1 \\/ x' = x + 2"),
        &x0,
        &d,
        ATOM_BOUND,
    )
    .unwrap();
    succ.sort();
    assert_eq!(succ, vec![(Program::Done, sx(1)), (Program::Done, sx(2))]);

    // 10. Basic event occurrence: guard evaluated, state unchanged, exactly
    // one context entry written, label reported.
    let ev = basic_event("go", "A", "x = 0", "x := 1");
    let x = EventContext::empty();
    let succ = step_event(&ev, &x0, &x, &unit("A"), &d, ATOM_BOUND).unwrap();
    assert_eq!(succ.len(), 1);
    let (cont, s1, x1, lbl) = &succ[0];
    assert_eq!(cont, &Event::Anon(prog("x := 1")));
    assert_eq!(s1, &x0, "occurrence must not change the state");
    assert_eq!(x1.entries.len(), 1);
    assert_eq!(x1.entries.get(&unit("A")), Some(&ev));
    assert!(matches!(lbl, ActLabel::EvtOcc(l) if l.name == "go"));
    // ... and a guarded event with a false guard does not trigger.
    assert_eq!(
        step_event(&ev, &sx(1), &x, &unit("A"), &d, ATOM_BOUND).unwrap(),
        vec![]
    );

    // 11. An anonymous (running) event steps its program as a command.
    let succ = step_event(
        &Event::Anon(prog("x := 2")),
        &x0,
        &x,
        &unit("A"),
        &d,
        ATOM_BOUND,
    )
    .unwrap();
    assert_eq!(succ.len(), 1);
    assert_eq!(succ[0].0, Event::Anon(Program::Done));
    assert_eq!(succ[0].1, sx(2));
    assert!(matches!(&succ[0].3, ActLabel::Cmd(Some(u)) if *u == unit("A")));

    // 12. An event set triggers any enabled member and keeps the whole set
    // as continuation behind the running body.
    let ev2 = basic_event("back", "A", "x = 2", "x := 0");
    let set = EventSystem::Set(vec![ev.clone(), ev2.clone()]);
    let succ = step_esys(&set, &x0, &x, &unit("A"), &d, ATOM_BOUND).unwrap();
    assert_eq!(succ.len(), 1, "only the enabled event triggers");
    assert_eq!(
        succ[0].0,
        EventSystem::Seq(Event::Anon(prog("x := 1")), Box::new(set.clone()))
    );

    // 13. An event sequence steps its head and drops it once finished.
    let seq = EventSystem::Seq(Event::Anon(prog("x := 1")), Box::new(set.clone()));
    let succ = step_esys(&seq, &x0, &x, &unit("A"), &d, ATOM_BOUND).unwrap();
    assert_eq!(succ.len(), 1);
    assert_eq!(succ[0].0, set, "finished head is dropped");
    assert_eq!(succ[0].1, sx(1));

    // 14. The parallel composition interleaves: any one unit steps on the
    // shared state, the others stay put.
    let mut systems = BTreeMap::new();
    systems.insert(unit("A"), EventSystem::Set(vec![ev.clone()]));
    systems.insert(unit("B"), EventSystem::Set(vec![basic_event("b", "B", "true", "x := 2")]));
    let ps = ParallelEventSystem { systems };
    let succ = step_par(&ps, &x0, &x, &d, ATOM_BOUND).unwrap();
    assert_eq!(succ.len(), 2, "one trigger per unit from x = 0");
    for (psn, sn, _, _) in &succ {
        assert_eq!(sn, &x0);
        assert_eq!(psn.systems.len(), 2);
    }

    pass("criterion 1 (small-step rule coverage)", t0, 5, "14 rules, exact successor sets");
}

// ---------------------------------------------------------------------------
// Criterion 2: compositionality on the bundled 2-unit toy system.
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_compositionality_depth_6() {
    let t0 = Instant::now();
    let src = std::fs::read_to_string(specs_dir().join("toy.picore")).expect("bundled toy spec");
    let sp = parse_spec(&src).unwrap();
    assert_eq!(sp.system.systems.len(), 2);
    let v = check_compositional(
        &sp.system,
        &sx(0),
        &EventContext::empty(),
        6,
        &sp.domains,
        ATOM_BOUND,
        DEFAULT_CAP,
    )
    .unwrap();
    assert!(v.holds(), "computation sets must agree: {}", v);
    pass(
        "criterion 2 (parallel = conjoined computations, depth 6)",
        t0,
        60,
        "exact set equality both directions",
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: serialization witnesses for 100 sampled computations.
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_serialization_witnesses() {
    let t0 = Instant::now();
    let d = dx();
    let inc = basic_event("inc", "A", "x < 2", "x := x + 1");
    let dec = basic_event("dec", "A", "x > 0", "x := x - 1");
    let set = EventSystem::Set(vec![inc.clone(), dec.clone()]);
    let env = EnvModel::Rely(e("x' = x \\/ x' = x + 1 \\/ x' = x - 1"));

    // All depth-≤6 computations from every initial state, then a seeded
    // random sample of 100.
    let mut all: Vec<Computation> = Vec::new();
    for n in 0..=2 {
        for c in computations(
            Spec::Esys(set.clone(), unit("A")),
            sx(n),
            EventContext::empty(),
            6,
            &env,
            &d,
            ATOM_BOUND,
        ) {
            all.push(c.unwrap());
        }
    }
    assert!(all.len() >= 100, "enough computations to sample from");
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for k in 0..100 {
        let w = &all[rng.gen_range(0..all.len())];
        let witness = serialization_witness(w, &[inc.clone(), dec.clone()], 12, &d, ATOM_BOUND)
            .unwrap();
        assert!(
            witness.is_some(),
            "sample {} of length {} has no serialization",
            k,
            w.len()
        );
    }
    pass(
        "criterion 3 (serialization of event-set computations)",
        t0,
        60,
        "100/100 sampled computations serialized",
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: empirical soundness of the derivation checker.
// ---------------------------------------------------------------------------

/// One corpus entry: an annotated derivation plus the semantic subject it
/// claims a specification for.
struct SubjectCase {
    name: &'static str,
    node: AnnotatedNode,
    subject: Spec,
    d: DomainDecl,
}

fn ap(p: &Program, r: &RGCond, mids: &[Expr]) -> AnnotatedNode {
    annotate_program(p, r, mids).expect("annotates")
}

/// The accepted corpus: every program-layer, event-layer, system-layer, and
/// auxiliary rule appears in at least one derivation.
fn accepted_corpus() -> Vec<SubjectCase> {
    let mut out = Vec::new();
    let mut add = |name: &'static str, node: AnnotatedNode, subject: Spec, d: DomainDecl| {
        out.push(SubjectCase { name, node, subject, d });
    };

    // -- program layer --
    let p = prog("x := x + 1");
    let r = rg("x = 0", "Id", "Id \\/ x' = x + 1", "x = 1");
    add("basic_increment", ap(&p, &r, &[]), Spec::Prog(p.clone()), dx());

    let p = prog("x := y, y := x");
    let r = rg(
        "x = 0 /\\ y = 1",
        "Id",
        "Id \\/ (x' = y /\\ y' = x)",
        "x = 1 /\\ y = 0",
    );
    add("basic_swap", ap(&p, &r, &[]), Spec::Prog(p.clone()), dxy());

    let p = prog("x := x + 1");
    let r = rg(
        "x = 0",
        "Id \\/ (x' = x /\\ y' = 2)",
        "Id \\/ x' = x + 1",
        "x = 1",
    );
    add("basic_under_env_writes", ap(&p, &r, &[]), Spec::Prog(p.clone()), dxy());

    let p = prog("x := x + 1 ;; x := x + 1");
    let r = rg("x = 0", "Id", "Id \\/ x' = x + 1", "x = 2");
    add("seq_two_increments", ap(&p, &r, &[e("x = 1")]), Spec::Prog(p.clone()), dx());

    let p = prog("x := 0 ;; x := x + 1 ;; x := x + 1");
    let r = rg("true", "Id", "Id \\/ x' = 0 \\/ x' = x + 1", "x = 2");
    add(
        "seq_three_steps",
        ap(&p, &r, &[e("x = 0"), e("x = 1")]),
        Spec::Prog(p.clone()),
        dx(),
    );

    let p = prog("IF x = 0 THEN x := 1 ELSE x := 2 FI");
    let r = rg("true", "Id", "Id \\/ x' = 1 \\/ x' = 2", "x = 1 \\/ x = 2");
    add("cond_both_branches", ap(&p, &r, &[]), Spec::Prog(p.clone()), dx());

    let p = prog("IF x = 0 THEN x := 1 FI");
    let r = rg("x <= 1", "Id", "Id \\/ x' = 1", "x = 1");
    add("cond_without_else", ap(&p, &r, &[]), Spec::Prog(p.clone()), dx());

    let p = prog("WHILE x < 2 DO x := x + 1 OD");
    let r = rg("x >= 0", "Id", "Id \\/ x' = x + 1", "x = 2");
    add("while_count_up", ap(&p, &r, &[]), Spec::Prog(p.clone()), dx());

    let p = prog("AWAIT x = 1 THEN x := 0 END");
    let r = rg("true", "Id", "Id \\/ (x = 1 /\\ x' = 0)", "x = 0");
    add("await_reset", ap(&p, &r, &[]), Spec::Prog(p.clone()), dx());

    let p = prog("NONDT x' = x \\/ x' = x + 1");
    let r = rg("true", "Id", "Id \\/ x' = x \\/ x' = x + 1", "true");
    add("nondt_keep_or_step", ap(&p, &r, &[]), Spec::Prog(p.clone()), dx());

    // -- auxiliary rules (hand-built nodes) --
    let p = prog("x := x + 1");
    let inner = ap(&p, &rg("x = 0", "Id", "Id \\/ x' = x + 1", "x = 1"), &[]);
    let outer = rg(
        "x = 0 /\\ y = 0",
        "Id",
        "Id \\/ x' = x + 1",
        "x = 1 \\/ y = 2",
    );
    add(
        "conseq_weakening",
        AnnotatedNode::new(AnnKind::Conseq { inner: Box::new(inner) }, outer),
        Spec::Prog(p.clone()),
        dxy(),
    );

    let p = prog("x := 2");
    let shared = |pre: &str| rg(pre, "Id", "Id \\/ x' = 2", "x = 2");
    let node = AnnotatedNode::new(
        AnnKind::UnPre {
            left: Box::new(ap(&p, &shared("x = 0"), &[])),
            right: Box::new(ap(&p, &shared("x = 1"), &[])),
        },
        shared("x = 0 \\/ x = 1"),
    );
    add("unpre_union", node, Spec::Prog(p.clone()), dx());

    let p = prog("x := 1");
    let with_post = |post: &str| rg("x = 0", "Id", "Id \\/ x' = 1", post);
    let node = AnnotatedNode::new(
        AnnKind::IntPost {
            left: Box::new(ap(&p, &with_post("x >= 1"), &[])),
            right: Box::new(ap(&p, &with_post("x <= 1"), &[])),
        },
        with_post("x >= 1 /\\ x <= 1"),
    );
    add("intpost_intersection", node, Spec::Prog(p.clone()), dx());

    let p = prog("y := x");
    let body = ap(&p, &rg("true", "Id", "Id \\/ y' = x", "y = x"), &[]);
    let node = AnnotatedNode::new(
        AnnKind::UnivPre { body: Box::new(body) },
        rg("x = 1 /\\ y = 0", "Id", "Id \\/ y' = x", "y = x"),
    );
    add("univpre_per_state", node, Spec::Prog(p.clone()), dxy());

    let p = prog("x := 0");
    let node = AnnotatedNode::new(
        AnnKind::EmptyPre(p.clone()),
        rg("false", "Id", "Id", "x = 2"),
    );
    add("emptypre_explicit", node, Spec::Prog(p.clone()), dx());

    let p = prog("x := x + 1");
    // Unsatisfiable precondition: the checker short-circuits to EmptyPre.
    let r = rg("x = 0 /\\ x = 1", "Id", "Id", "x = 2");
    add("emptypre_shortcircuit", ap(&p, &r, &[]), Spec::Prog(p.clone()), dx());

    // -- event layer --
    let ev = basic_event("set_one", "A", "x = 0", "x := 1");
    let r = rg("true", "Id", "Id \\/ (x = 0 /\\ x' = 1)", "x = 1");
    add(
        "basicevt_guarded",
        annotate_event(&ev, &r, &[]).unwrap(),
        Spec::Evt(ev.clone(), unit("A")),
        dx(),
    );

    let anon = Event::Anon(prog("x := 2"));
    let r = rg("true", "Id", "Id \\/ x' = 2", "x = 2");
    add(
        "inner_running_event",
        annotate_event(&anon, &r, &[]).unwrap(),
        Spec::Evt(anon.clone(), unit("A")),
        dx(),
    );

    // -- event-system layer --
    let seq_g = "Id \\/ x' = 1 \\/ x' = 2";
    let ev1 = basic_event("init_one", "A", "true", "x := 1");
    let ev2 = basic_event("then_two", "A", "true", "x := 2");
    let set_node = AnnotatedNode::new(
        AnnKind::EvtSet {
            events: vec![
                annotate_event(&ev2, &rg("true", "Id", seq_g, "true"), &[]).unwrap(),
            ],
        },
        rg("x = 1", "Id", seq_g, "true"),
    );
    let node = AnnotatedNode::new(
        AnnKind::EvtSeq {
            mid: e("x = 1"),
            event: Box::new(annotate_event(&ev1, &rg("true", "Id", seq_g, "x = 1"), &[]).unwrap()),
            rest: Box::new(set_node),
        },
        rg("true", "Id", seq_g, "true"),
    );
    let esys = EventSystem::Seq(ev1.clone(), Box::new(EventSystem::Set(vec![ev2.clone()])));
    add("evtseq_init_then_set", node, Spec::Esys(esys, unit("A")), dx());

    let eva = basic_event("toggle_up", "A", "true", "ATOM IF x < 2 THEN x := x + 1 FI END");
    let evb = basic_event("toggle_down", "A", "true", "ATOM IF x > 0 THEN x := x - 1 FI END");
    let set_g = "Id \\/ x' = x + 1 \\/ x' = x - 1";
    let node = AnnotatedNode::new(
        AnnKind::EvtSet {
            events: vec![
                annotate_event(&eva, &rg("true", "Id", set_g, "true"), &[]).unwrap(),
                annotate_event(&evb, &rg("true", "Id", set_g, "true"), &[]).unwrap(),
            ],
        },
        rg("true", "Id", set_g, "true"),
    );
    add(
        "evtset_two_events",
        node,
        Spec::Esys(EventSystem::Set(vec![eva.clone(), evb.clone()]), unit("A")),
        dx(),
    );

    // -- system layer --
    let ga = "Id \\/ x' = x + 1";
    let gb = "Id \\/ x' = x - 1";
    let inc = basic_event("inc", "A", "true", "ATOM IF x < 2 THEN x := x + 1 FI END");
    let dec = basic_event("dec", "B", "true", "ATOM IF x > 0 THEN x := x - 1 FI END");
    let seta = AnnotatedNode::new(
        AnnKind::EvtSet {
            events: vec![annotate_event(&inc, &rg("true", gb, ga, "true"), &[]).unwrap()],
        },
        rg("true", gb, ga, "true"),
    );
    let setb = AnnotatedNode::new(
        AnnKind::EvtSet {
            events: vec![annotate_event(&dec, &rg("true", ga, gb, "true"), &[]).unwrap()],
        },
        rg("true", ga, gb, "true"),
    );
    let mut units = BTreeMap::new();
    units.insert(unit("A"), seta);
    units.insert(unit("B"), setb);
    let node = AnnotatedNode::new(
        AnnKind::Par { units },
        rg("true", "Id", "Id \\/ x' = x + 1 \\/ x' = x - 1", "true"),
    );
    let mut systems = BTreeMap::new();
    systems.insert(unit("A"), EventSystem::Set(vec![inc]));
    systems.insert(unit("B"), EventSystem::Set(vec![dec]));
    add(
        "par_inc_dec",
        node,
        Spec::Par(ParallelEventSystem { systems }),
        dx(),
    );

    out
}

/// A mutated derivation: rejected by the checker; when `semantic` the same
/// (subject, claimed specification) pair also has a bounded counterexample.
struct MutantCase {
    name: &'static str,
    node: AnnotatedNode,
    subject: Spec,
    d: DomainDecl,
    semantic: bool,
    /// A failing-premise path that must be reported.
    expect_failure: &'static str,
}

fn mutant_corpus() -> Vec<MutantCase> {
    let mut out = Vec::new();
    let mut add = |name: &'static str,
                   node: AnnotatedNode,
                   subject: Spec,
                   d: DomainDecl,
                   semantic: bool,
                   expect_failure: &'static str| {
        out.push(MutantCase { name, node, subject, d, semantic, expect_failure });
    };

    // Wrong postcondition (semantic: the run ends at x = 1).
    let p = prog("x := x + 1");
    let r = rg("x = 0", "Id", "Id \\/ x' = x + 1", "x = 2");
    add("basic_wrong_post", ap(&p, &r, &[]), Spec::Prog(p.clone()), dx(), true, "Basic/1");

    // Guarantee misses the action (semantic: the (0,1) step escapes Id).
    let r = rg("x = 0", "Id", "Id", "x = 1");
    add("basic_guar_too_small", ap(&p, &r, &[]), Spec::Prog(p.clone()), dx(), true, "Basic/2");

    // Precondition unstable under the rely (semantic: env bumps x first).
    let r = rg("x = 0", "Id \\/ x' = x + 1", "Id \\/ x' = x + 1", "x = 1");
    add("basic_unstable_pre", ap(&p, &r, &[]), Spec::Prog(p.clone()), dx(), true, "Basic/3");

    // Wrong sequence midpoint; the program itself still meets the spec.
    let p2 = prog("x := x + 1 ;; x := x + 1");
    let r = rg("x = 0", "Id", "Id \\/ x' = x + 1", "x = 2");
    add(
        "seq_wrong_mid",
        ap(&p2, &r, &[e("x = 2")]),
        Spec::Prog(p2.clone()),
        dx(),
        false,
        "Seq/1",
    );

    // Missing reflexivity: the branch-evaluation step is a stutter the
    // guarantee must admit (semantic: the (0,0) evaluation step).
    let pc = prog("IF x = 0 THEN x := 1 ELSE x := 2 FI");
    let r = rg("true", "Id", "x' = 1 \\/ x' = 2", "x = 1 \\/ x = 2");
    add("cond_no_refl", ap(&pc, &r, &[]), Spec::Prog(pc.clone()), dx(), true, "Cond/4");

    // Loop exit violates the postcondition (semantic: terminates at x = 2).
    let pw = prog("WHILE x < 2 DO x := x + 1 OD");
    let r = rg("x >= 0", "Id", "Id \\/ x' = x + 1", "x = 0");
    add("while_wrong_post", ap(&pw, &r, &[]), Spec::Prog(pw.clone()), dx(), true, "While/2");

    // Await lands outside the postcondition (semantic).
    let pa = prog("AWAIT x = 1 THEN x := 0 END");
    let r = rg("true", "Id", "Id \\/ (x = 1 /\\ x' = 0)", "x = 1");
    add("await_wrong_post", ap(&pa, &r, &[]), Spec::Prog(pa.clone()), dx(), true, "Await/1");

    // Nondt with no successor from x = 2; semantically the blocked run
    // never terminates, so validity still holds.
    let pn = prog("NONDT x' = x + 1");
    let r = rg("true", "Id", "Id \\/ x' = x + 1", "x >= 1");
    add("nondt_partial", ap(&pn, &r, &[]), Spec::Prog(pn.clone()), dx(), false, "Nondt/1");

    // Consequence in the wrong direction (semantic: from x = 1 the run ends
    // at x = 2, violating the claimed post).
    let p = prog("x := x + 1");
    let inner = ap(&p, &rg("x = 0", "Id", "Id \\/ x' = x + 1", "x = 1"), &[]);
    let outer = rg("true", "Id", "Id \\/ x' = x + 1", "x = 1");
    add(
        "conseq_pre_not_included",
        AnnotatedNode::new(AnnKind::Conseq { inner: Box::new(inner) }, outer),
        Spec::Prog(p.clone()),
        dx(),
        true,
        "Conseq/1",
    );

    // Event-set with posts that are no preconditions for re-triggering; the
    // set itself never terminates, so validity is unaffected.
    let ev1 = basic_event("first", "A", "true", "x := 1");
    let ev2 = basic_event("second", "A", "true", "x := 2");
    let g = "Id \\/ x' = 1 \\/ x' = 2";
    let node = AnnotatedNode::new(
        AnnKind::EvtSet {
            events: vec![
                annotate_event(&ev1, &rg("x = 0", "Id", g, "x = 1"), &[]).unwrap(),
                annotate_event(&ev2, &rg("x = 0", "Id", g, "true"), &[]).unwrap(),
            ],
        },
        rg("x = 0", "Id", g, "true"),
    );
    add(
        "evtset_posts_not_pres",
        node,
        Spec::Esys(EventSystem::Set(vec![ev1, ev2]), unit("A")),
        dx(),
        false,
        "EvtSet/2",
    );

    // Broken parallel compatibility: B's rely does not admit A's increment.
    let inc = basic_event("inc", "A", "true", "ATOM IF x < 2 THEN x := x + 1 FI END");
    let dec = basic_event("dec", "B", "true", "ATOM IF x > 0 THEN x := x - 1 FI END");
    let ga = "Id \\/ x' = x + 1";
    let gb = "Id \\/ x' = x - 1";
    let seta = AnnotatedNode::new(
        AnnKind::EvtSet {
            events: vec![annotate_event(&inc, &rg("true", gb, ga, "true"), &[]).unwrap()],
        },
        rg("true", gb, ga, "true"),
    );
    let setb = AnnotatedNode::new(
        AnnKind::EvtSet {
            events: vec![annotate_event(&dec, &rg("true", "Id", gb, "true"), &[]).unwrap()],
        },
        rg("true", "Id", gb, "true"),
    );
    let mut units = BTreeMap::new();
    units.insert(unit("A"), seta);
    units.insert(unit("B"), setb);
    let node = AnnotatedNode::new(
        AnnKind::Par { units },
        rg("true", "Id", "Id \\/ x' = x + 1 \\/ x' = x - 1", "true"),
    );
    let mut systems = BTreeMap::new();
    systems.insert(unit("A"), EventSystem::Set(vec![inc]));
    systems.insert(unit("B"), EventSystem::Set(vec![dec]));
    add(
        "par_incompatible",
        node,
        Spec::Par(ParallelEventSystem { systems }),
        dx(),
        false,
        "Par/6",
    );

    // Union precondition that is not the union of the branch preconditions.
    let p = prog("x := 2");
    let shared = |pre: &str| rg(pre, "Id", "Id \\/ x' = 2", "x = 2");
    let node = AnnotatedNode::new(
        AnnKind::UnPre {
            left: Box::new(ap(&p, &shared("x = 0"), &[])),
            right: Box::new(ap(&p, &shared("x = 1"), &[])),
        },
        shared("x = 0"),
    );
    add("unpre_wrong_union", node, Spec::Prog(p.clone()), dx(), false, "UnPre/3");

    out
}

#[test]
fn criterion_4_empirical_soundness() {
    let t0 = Instant::now();

    let accepted = accepted_corpus();
    assert!(accepted.len() >= 20, "corpus has {} subjects", accepted.len());
    let mut rules = BTreeSet::new();
    for case in &accepted {
        let rep = check_derivation(&case.node, &case.d, ATOM_BOUND).unwrap();
        assert!(
            rep.accepted,
            "{} must be accepted:\n{}",
            case.name, rep
        );
        rules_of(&rep, &mut rules);
        // Zero accept-but-invalid tolerated: every accepted derivation must
        // be semantically valid at depth 8.
        let v = check_validity(&case.subject, &case.node.rg, &case.d, 8, ATOM_BOUND, DEFAULT_CAP)
            .unwrap();
        assert!(v.holds(), "{} accepted but invalid: {}", case.name, v);
    }
    let expected: BTreeSet<String> = [
        "Basic", "Seq", "Cond", "While", "Await", "Nondt", "Conseq", "BasicEvt", "Inner",
        "EvtSeq", "EvtSet", "Par", "UnPre", "IntPost", "UnivPre", "EmptyPre",
    ]
    .into_iter()
    .map(str::to_string)
    .collect();
    let missing: Vec<_> = expected.difference(&rules).collect();
    assert!(missing.is_empty(), "rules not covered by the corpus: {:?}", missing);

    let mutants = mutant_corpus();
    assert!(mutants.len() >= 10, "only {} mutants", mutants.len());
    let mut semantic_confirmed = 0;
    for m in &mutants {
        let rep = check_derivation(&m.node, &m.d, ATOM_BOUND).unwrap();
        assert!(!rep.accepted, "mutant {} must be rejected", m.name);
        let failures = rep.failures();
        assert!(
            failures.iter().any(|f| f.contains(m.expect_failure)),
            "mutant {} should fail at {}, got {:?}",
            m.name,
            m.expect_failure,
            failures
        );
        if m.semantic {
            let v =
                check_validity(&m.subject, &m.node.rg, &m.d, 8, ATOM_BOUND, DEFAULT_CAP).unwrap();
            assert!(
                matches!(v, Verdict::Counterexample { .. }),
                "mutant {} should also fail semantically",
                m.name
            );
            semantic_confirmed += 1;
        }
    }
    assert!(semantic_confirmed >= 5, "only {} semantic counterexamples", semantic_confirmed);

    pass(
        "criterion 4 (checker soundness vs semantic validity)",
        t0,
        600,
        &format!(
            "{} accepted+valid covering all 16 rules, {} rejected mutants, {} semantic",
            accepted.len(),
            mutants.len(),
            semantic_confirmed
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: the stepper-controller case study at full scale.
// ---------------------------------------------------------------------------

fn forward_instance(sp: &SpecFile, v: i64) -> Event {
    sp.events()
        .into_iter()
        .find(|ev| {
            ev.label()
                .is_some_and(|l| l.name == "forward" && l.params == vec![Value::int(v)])
        })
        .expect("forward instance exists")
        .clone()
}

#[test]
fn criterion_5_stepper_case_study() {
    let t0 = Instant::now();
    let sp = build_stepper(&StepperScale::default()).unwrap();

    // (a) the forward derivation is accepted, and its annotations carry the
    // loop invariant car_pos = pos_aux + i as an obligation.
    let ev = forward_instance(&sp, 2);
    let label = ev.label().unwrap().clone();
    let (rgc, mids) = sp.gamma(&label).unwrap();
    assert!(
        mids.contains(&e("car_pos = pos_aux + i")),
        "loop invariant must be among the midpoint obligations"
    );
    let node = annotate_event(&ev, &rgc, &mids).unwrap();
    let rep = check_derivation(&node, &sp.domains, ATOM_BOUND).unwrap();
    assert!(rep.accepted, "forward derivation rejected:\n{}", rep);
    let mut rules = BTreeSet::new();
    rules_of(&rep, &mut rules);
    assert!(rules.contains("While"), "the loop rule must appear in the derivation");

    // (b) the invariant pipeline accepts no-collision.
    let inv = sp.invariant("no_collision").unwrap().clone();
    let theorem = check_invariant_via_theorem(&sp, &inv, ATOM_BOUND).unwrap();
    assert!(theorem.accepted, "invariant pipeline rejected:\n{}", theorem);

    // (c) direct bounded reachability at depth 20 agrees.
    let direct = check_invariant_direct(
        &sp.system,
        &sp.init,
        &inv,
        &sp.domains,
        20,
        ATOM_BOUND,
        DEFAULT_CAP,
    )
    .unwrap();
    assert!(direct.holds(), "direct check disagrees: {}", direct);

    // (d) every terminated closed run of a forward event satisfies the
    // declared postcondition car_pos = pos_aux + i ∧ (i = v ∨
    // collide(pos_aux + i + 1, obstacle_pos)).
    let mut terminated_runs = 0;
    for v in 0..=2 {
        let ev = forward_instance(&sp, v);
        let label = ev.label().unwrap().clone();
        let (rgc, _) = sp.gamma(&label).unwrap();
        for obstacles in [vec![], vec![2], vec![-2], vec![2, -2]] {
            let s0 = State::from_pairs([
                ("car_pos", Value::int(0)),
                ("pos_aux", Value::int(0)),
                ("i", Value::int(0)),
                (
                    "obstacle_pos",
                    Value::List(obstacles.iter().copied().map(Value::int).collect()),
                ),
                ("obst_pos_aux", Value::List(vec![])),
                (
                    "stack",
                    Value::List(vec![Value::sym("C"), Value::sym("NONE")]),
                ),
            ]);
            for comp in computations(
                Spec::Evt(ev.clone(), label.unit.clone()),
                s0,
                EventContext::empty(),
                16,
                &EnvModel::Closed,
                &sp.domains,
                ATOM_BOUND,
            ) {
                let comp = comp.unwrap();
                let last = comp.last();
                if last.spec.terminated() {
                    terminated_runs += 1;
                    assert!(
                        picore::eval_bool(&rgc.post, &last.state).unwrap(),
                        "terminated run violates the postcondition at {}",
                        last.state
                    );
                }
            }
        }
    }
    assert!(terminated_runs > 0, "closed runs must terminate");

    pass(
        "criterion 5 (stepper case study)",
        t0,
        600,
        &format!(
            "derivation + pipeline + depth-20 direct + {} terminated runs",
            terminated_runs
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: the ARINC kernel case study.
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_arinc_case_study() {
    let t0 = Instant::now();
    let sp = build_arinc(&ArincScale::default()).unwrap();
    let inv = sp.invariant("inv_all").unwrap().clone();

    let theorem = check_invariant_via_theorem(&sp, &inv, ATOM_BOUND).unwrap();
    assert!(theorem.accepted, "invariant pipeline rejected:\n{}", theorem);

    let direct = check_invariant_direct(
        &sp.system,
        &sp.init,
        &inv,
        &sp.domains,
        15,
        ATOM_BOUND,
        DEFAULT_CAP,
    )
    .unwrap();
    assert!(direct.holds(), "direct check disagrees: {}", direct);

    let bad = build_arinc_mutated(&ArincScale::default()).unwrap();
    let inv2 = bad.invariant("inv2").unwrap().clone();
    let v = check_invariant_direct(
        &bad.system,
        &bad.init,
        &inv2,
        &bad.domains,
        15,
        ATOM_BOUND,
        DEFAULT_CAP,
    )
    .unwrap();
    assert!(
        matches!(v, Verdict::Counterexample { .. }),
        "the seeded Schedule fault must yield an inv2 counterexample"
    );

    pass(
        "criterion 6 (ARINC kernel case study)",
        t0,
        600,
        "pipeline + depth-15 direct + mutation counterexample",
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: premise-group arities of the composite rules.
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_rule_arities() {
    let t0 = Instant::now();
    let src = std::fs::read_to_string(specs_dir().join("toy.picore")).expect("bundled toy spec");
    let sp = parse_spec(&src).unwrap();
    let rgc = RGCond::new(sp.init.clone(), Expr::Empty, Expr::Univ, Expr::Univ);
    let node = picore::annotate_par(&sp, &rgc).unwrap();
    let rep = check_derivation(&node, &sp.domains, ATOM_BOUND).unwrap();
    assert!(rep.accepted);

    fn check_arities(rep: &ProofReport, seen: &mut (usize, usize)) {
        match rep.rule.as_str() {
            "EvtSet" => {
                assert_eq!(rep.premises.len(), 8, "EvtSet must expose 8 premise groups");
                seen.0 += 1;
            }
            "Par" => {
                assert_eq!(rep.premises.len(), 6, "Par must expose 6 premise groups");
                seen.1 += 1;
            }
            _ => {}
        }
        for c in &rep.children {
            check_arities(c, seen);
        }
    }
    let mut seen = (0, 0);
    check_arities(&rep, &mut seen);
    assert!(seen.0 >= 2 && seen.1 == 1, "both rules must occur: {:?}", seen);

    pass(
        "criterion 7 (EvtSet has 8 premise groups, Par has 6)",
        t0,
        600,
        &format!("{} EvtSet nodes, {} Par node", seen.0, seen.1),
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: parser round-trip on every bundled specification.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_parser_round_trip() {
    let t0 = Instant::now();
    let mut checked = 0;
    for entry in std::fs::read_dir(specs_dir()).expect("specs directory present") {
        let path = entry.unwrap().path();
        if path.extension().and_then(|x| x.to_str()) != Some("picore") {
            continue;
        }
        let src = std::fs::read_to_string(&path).unwrap();
        let sp = parse_spec(&src).unwrap_or_else(|err| {
            panic!("{} must parse: {}", path.display(), err)
        });
        let printed = pretty_spec(&sp);
        let sp2 = parse_spec(&printed).unwrap_or_else(|err| {
            panic!("{} pretty output must reparse: {}", path.display(), err)
        });
        assert_eq!(sp, sp2, "{} round-trip must be structural identity", path.display());
        checked += 1;
    }
    assert!(checked >= 4, "expected the bundled specs, found {}", checked);
    pass(
        "criterion 8 (parser round-trip on bundled specs)",
        t0,
        5,
        &format!("{} files", checked),
    );
}
