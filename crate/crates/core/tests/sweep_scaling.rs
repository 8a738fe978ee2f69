use std::time::Instant;

use qoems_core::presets::dimensionless_slowfast;
use qoems_core::sweep::run_sweep;
use qoems_core::{Axis, AxisName, Scenario, Spacing, SweepSpec};

fn timed_sweep(jobs: usize, spec: &SweepSpec) -> f64 {
    let params = dimensionless_slowfast(2.0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .unwrap();
    pool.install(|| run_sweep(&params, spec).unwrap());
    (0..3)
        .map(|_| {
            let start = Instant::now();
            pool.install(|| run_sweep(&params, spec).unwrap());
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
#[ignore = "timing smoke test; needs an idle host with at least 8 cores"]
fn spectrum_sweep_scales_with_workers() {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut spec = SweepSpec::new(Scenario::Spectrum);
    spec.axes = vec![Axis {
        name: AxisName::DeltaBar,
        min: -0.05,
        max: 0.05,
        points: 100_000,
        spacing: Spacing::Linear,
    }];
    let serial = timed_sweep(1, &spec);
    let parallel = timed_sweep(8, &spec);
    let speedup = serial / parallel;
    println!(
        "1 worker {serial:.3} s, 8 workers {parallel:.3} s, speedup {speedup:.2} on {cores} cores"
    );
    if cores >= 8 {
        assert!(speedup >= 3.0, "speedup {speedup:.2}");
    }
}
