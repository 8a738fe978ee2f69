use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use qoems_core::presets::dimensionless_slowfast;
use qoems_core::sweep::run_sweep;
use qoems_core::{Axis, AxisName, Scenario, Spacing, SweepSpec};

fn spectrum_spec(points: usize) -> SweepSpec {
    let mut spec = SweepSpec::new(Scenario::Spectrum);
    spec.axes = vec![Axis {
        name: AxisName::DeltaBar,
        min: -0.05,
        max: 0.05,
        points,
        spacing: Spacing::Linear,
    }];
    spec
}

fn sweep(c: &mut Criterion) {
    let params = dimensionless_slowfast(2.0);
    let spec = spectrum_spec(100_000);
    let mut g = c.benchmark_group("spectrum_1e5");
    g.sample_size(10).throughput(Throughput::Elements(100_000));
    for jobs in [1, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(jobs), &jobs, |b, _| {
            b.iter(|| pool.install(|| run_sweep(&params, &spec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
