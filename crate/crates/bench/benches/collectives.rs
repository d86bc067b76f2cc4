//! Criterion benchmarks for the planner, transcoder and estimator hot
//! paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ramp_core::baselines::{strategy_plan, StrategyKind};
use ramp_core::engine::{plan_collective, CollectiveOp, Variant4};
use ramp_core::estimator::{ramp_completion, EstimatorConfig, NodeSpec};
use ramp_core::params::RampParams;
use ramp_core::transcoder::{build_schedule, verify_contention, ScheduleConfig};

fn bench_plan(c: &mut Criterion) {
    let mut g = c.benchmark_group("plan");
    for (x, j, lam) in [(3u32, 3u32, 6u32), (32, 32, 64)] {
        let p = RampParams::new(x, j, lam, 1, 400_000_000_000).unwrap();
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("x{x}j{j}l{lam}")),
            &p,
            |b, p| {
                b.iter(|| {
                    plan_collective(
                        black_box(CollectiveOp::AllReduce),
                        1 << 30,
                        p,
                        Variant4::DeviceShift,
                    )
                    .unwrap()
                })
            },
        );
    }
    g.finish();
}

fn bench_schedule(c: &mut Criterion) {
    let p = RampParams::new(3, 3, 6, 1, 400_000_000_000).unwrap();
    let plan =
        plan_collective(CollectiveOp::ReduceScatter, 54 * 950, &p, Variant4::DeviceShift).unwrap();
    c.bench_function("schedule/54-node-reduce-scatter", |b| {
        b.iter(|| build_schedule(black_box(&plan), &ScheduleConfig::default()).unwrap())
    });
    let sched = build_schedule(&plan, &ScheduleConfig::default()).unwrap();
    c.bench_function("contention/54-node-reduce-scatter", |b| {
        b.iter(|| verify_contention(black_box(&sched), p.subnet))
    });
}

fn bench_estimator(c: &mut Criterion) {
    let p = RampParams::max_scale();
    let plan = plan_collective(CollectiveOp::AllReduce, 1 << 30, &p, Variant4::DeviceShift).unwrap();
    let spec = NodeSpec::default();
    c.bench_function("estimate/max-scale-all-reduce", |b| {
        b.iter(|| ramp_completion(black_box(&plan), &spec, &EstimatorConfig::default()))
    });
    c.bench_function("baseline-plan/ring-65536", |b| {
        b.iter(|| {
            strategy_plan(
                StrategyKind::Ring,
                black_box(CollectiveOp::AllReduce),
                65_536,
                &[65_536],
                1 << 30,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_plan, bench_schedule, bench_estimator);
criterion_main!(benches);
