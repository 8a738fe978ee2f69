use criterion::{criterion_group, criterion_main, Criterion};
use qoems_core::linsys::solve_sidebands;
use qoems_core::presets::dimensionless_slowfast;
use qoems_core::response::{group_delay, sideband_amplitude};
use qoems_core::{solve_steady_state, Convention, DelayMethod};
use std::hint::black_box;

fn response(c: &mut Criterion) {
    let params = dimensionless_slowfast(2.0);
    let op = solve_steady_state(&params).unwrap();
    let delta = 1.0005;

    c.bench_function("steady_state", |b| {
        b.iter(|| solve_steady_state(black_box(&params)))
    });
    c.bench_function("sideband_amplitude", |b| {
        b.iter(|| sideband_amplitude(black_box(delta), &params, &op))
    });
    c.bench_function("solve_sidebands", |b| {
        b.iter(|| solve_sidebands(black_box(delta), &params, &op))
    });
    let mut g = c.benchmark_group("group_delay");
    for (name, method) in [
        ("analytic", DelayMethod::Analytic),
        ("finite_difference", DelayMethod::FiniteDifference),
    ] {
        g.bench_function(name, |b| {
            b.iter(|| {
                group_delay(
                    black_box(delta),
                    &params,
                    &op,
                    Convention::PaperCorrected,
                    method,
                )
            })
        });
    }
    g.finish();
}

criterion_group!(benches, response);
criterion_main!(benches);
