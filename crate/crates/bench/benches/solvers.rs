use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use v2vsched_bench::convoy;
use v2vsched_core::experiment::greedy_baseline;
use v2vsched_core::{
    build_joint, build_scheduling, evaluate, run_colgen, run_cutting_plane, solve_lp, solve_milp, ColgenBudget, CutplaneBudget,
    FixedPowers, FormulationOptions, PowerAllocation, SolverOptions, VariantFlags,
};

fn link_model(c: &mut Criterion) {
    let s = convoy(20, 20, 1, 1);
    let p = FixedPowers::max_power(&s);
    let x = greedy_baseline(&s, &p, &VariantFlags::default()).unwrap();
    let alloc = PowerAllocation::from_schedule(&x, &p);
    c.bench_function("evaluate N=20 F=20", |b| b.iter(|| evaluate(black_box(&s), &x, &alloc).unwrap()));
}

fn lp_relaxation(c: &mut Criterion) {
    let s = convoy(6, 3, 1, 2);
    let form = build_joint(&s, &VariantFlags::joint(), &FormulationOptions::robust()).unwrap();
    let relaxed = form.model.relaxed();
    c.bench_function("joint LP relaxation N=6 F=3", |b| b.iter(|| solve_lp(black_box(&relaxed), &SolverOptions::default()).unwrap()));
}

fn scheduling_blp(c: &mut Criterion) {
    let s = convoy(4, 3, 1, 3);
    let flags = VariantFlags::scheduling(FixedPowers::max_power(&s));
    let form = build_scheduling(&s, &flags, &FormulationOptions::robust_exact_threshold()).unwrap();
    let opts = SolverOptions { objective_step: form.objective_step(), ..SolverOptions::default() };
    c.bench_function("scheduling BLP N=4 F=3", |b| b.iter(|| solve_milp(black_box(&form.model), &opts).unwrap()));
}

fn methods(c: &mut Criterion) {
    let mut g = c.benchmark_group("methods");
    g.sample_size(10);
    let s = convoy(5, 3, 1, 4);
    let p = FixedPowers::max_power(&s);
    g.bench_function("cutting plane N=5 F=3", |b| {
        b.iter(|| run_cutting_plane(black_box(&s), &p, &VariantFlags::default(), &CutplaneBudget::default()).unwrap())
    });
    let s = convoy(3, 2, 2, 5);
    g.bench_function("column generation N=3 F=2 T=2", |b| {
        b.iter(|| run_colgen(black_box(&s), &VariantFlags::joint(), &ColgenBudget::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, link_model, lp_relaxation, scheduling_blp, methods);
criterion_main!(benches);
