//! Benchmarks for the hot paths: parsing, closed-system reachability,
//! bounded computation enumeration, and derivation checking.

use criterion::{criterion_group, criterion_main, Criterion};
use picore::casestudies::{build_arinc, build_stepper, ArincScale, StepperScale};
use picore::{
    annotate_event, check_derivation, check_invariant_direct, computations, parse_spec,
    pretty_spec, reachable, EnvModel, EventContext, Spec, DEFAULT_CAP,
};

const ATOM_BOUND: usize = 64;

fn small_stepper() -> StepperScale {
    StepperScale {
        min_pos: -2,
        max_pos: 2,
        max_v: 1,
        obstacle_params: vec![2],
        max_obstacles: 1,
    }
}

fn bench_parse(c: &mut Criterion) {
    let src = pretty_spec(&build_stepper(&StepperScale::default()).expect("builds"));
    c.bench_function("parse_stepper_spec", |b| {
        b.iter(|| parse_spec(std::hint::black_box(&src)).expect("parses"))
    });
}

fn bench_reachable(c: &mut Criterion) {
    let sp = build_arinc(&ArincScale::default()).expect("builds");
    c.bench_function("reachable_arinc_depth_10", |b| {
        b.iter(|| {
            reachable(&sp.system, &sp.init, &sp.domains, 10, ATOM_BOUND, DEFAULT_CAP)
                .expect("explores")
        })
    });
}

fn bench_direct_invariant(c: &mut Criterion) {
    let sp = build_arinc(&ArincScale::default()).expect("builds");
    let inv = sp.invariant("inv_all").expect("declared").clone();
    c.bench_function("direct_invariant_arinc_depth_10", |b| {
        b.iter(|| {
            check_invariant_direct(
                &sp.system,
                &sp.init,
                &inv,
                &sp.domains,
                10,
                ATOM_BOUND,
                DEFAULT_CAP,
            )
            .expect("checks")
        })
    });
}

fn bench_computations(c: &mut Criterion) {
    let sp = build_arinc(&ArincScale::default()).expect("builds");
    let ev = sp
        .events()
        .into_iter()
        .find(|e| e.label().is_some_and(|l| l.name == "Schedule"))
        .expect("schedule event")
        .clone();
    let unit = ev.label().expect("labeled").unit.clone();
    let rg = sp.gamma(ev.label().expect("labeled")).expect("declared").0;
    let s0 = picore::enumerate_states(&sp.domains, &sp.domains.all_vars())
        .expect("enumerable")
        .into_iter()
        .find(|s| picore::eval_bool(&sp.init, s).unwrap())
        .expect("initial state");
    let env = EnvModel::Rely(rg.rely);
    c.bench_function("computations_schedule_rely_env_depth_4", |b| {
        b.iter(|| {
            computations(
                Spec::Evt(ev.clone(), unit.clone()),
                s0.clone(),
                EventContext::empty(),
                4,
                &env,
                &sp.domains,
                ATOM_BOUND,
            )
            .count()
        })
    });
}

fn bench_derivation(c: &mut Criterion) {
    let sp = build_stepper(&small_stepper()).expect("builds");
    let ev = sp
        .events()
        .into_iter()
        .find(|e| {
            e.label()
                .is_some_and(|l| l.name == "forward" && l.params == vec![picore::Value::int(1)])
        })
        .expect("forward[1]")
        .clone();
    let (rg, mids) = sp.gamma(ev.label().expect("labeled")).expect("declared");
    let node = annotate_event(&ev, &rg, &mids).expect("annotates");
    c.bench_function("check_derivation_forward_small", |b| {
        b.iter(|| check_derivation(&node, &sp.domains, ATOM_BOUND).expect("checks"))
    });
}

criterion_group!(
    benches,
    bench_parse,
    bench_reachable,
    bench_direct_invariant,
    bench_computations,
    bench_derivation
);
criterion_main!(benches);
