use proptest::prelude::*;
use qoems_core::linsys::solve_sidebands;
use qoems_core::presets::{dimensionless_slowfast, dimensionless_slowfast_delay, paper_2012};
use qoems_core::response::{group_delay, sideband_amplitude, transmission};
use qoems_core::{
    solve_steady_state, CavityDetuning, CavityParams, Complex64, Convention, CouplingParams,
    DelayMethod, Drive, DriveParams, MechanicalMode, SystemParams, UnitMode,
};

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn dimensionless(
    kappa: f64,
    detuning: CavityDetuning,
    g_cav: f64,
    g_coulomb: f64,
    pump: f64,
) -> SystemParams {
    SystemParams {
        units: UnitMode::Dimensionless,
        cavity: CavityParams {
            length: 1.0,
            pump_wavelength: 1.0,
            kappa,
            detuning,
        },
        mech1: MechanicalMode::new(1.0, 1.0, 1e-3).unwrap(),
        mech2: MechanicalMode::new(0.8, 1.1, 2e-3).unwrap(),
        coupling: CouplingParams { g_cav, g_coulomb },
        drive: DriveParams {
            pump: Drive::Amplitude(pump),
            probe: Drive::Amplitude(0.0),
        },
    }
}

#[test]
fn presets_agree_across_the_window() {
    for params in [
        dimensionless_slowfast(4.0),
        dimensionless_slowfast_delay(1.0),
    ] {
        let op = solve_steady_state(&params).unwrap();
        for i in 0..=400 {
            let delta = 0.98 + 0.0001 * i as f64;
            let x = sideband_amplitude(delta, &params, &op).unwrap();
            let s = solve_sidebands(delta, &params, &op).unwrap();
            assert!(
                rel(s.c_minus, x) < 1e-9,
                "delta {delta}: {} vs {x}",
                s.c_minus
            );
        }
    }
}

#[test]
fn si_preset_agrees() {
    let params = paper_2012();
    let op = solve_steady_state(&params).unwrap();
    let w = params.mech1.omega;
    for f in [0.5, 0.99, 0.9999, 1.0, 1.0001, 1.01, 1.7] {
        let x = sideband_amplitude(f * w, &params, &op).unwrap();
        let s = solve_sidebands(f * w, &params, &op).unwrap();
        assert!(rel(s.c_minus, x) < 1e-9, "{f}: {} vs {x}", s.c_minus);
    }
}

#[test]
fn decoupled_mirror_limit_converges_monotonically() {
    let base = dimensionless(0.3, CavityDetuning::Locked, 0.02, 0.0, 2.0);
    let op0 = solve_steady_state(&base).unwrap();
    let delta = 1.0003;
    let reference = solve_sidebands(delta, &base, &op0).unwrap().c_minus;
    let mut previous = f64::INFINITY;
    for k in 0..6 {
        let gc = 1e-2 * 10f64.powi(-k);
        let mut p = base;
        p.coupling.g_coulomb = gc;
        let op = solve_steady_state(&p).unwrap();
        let d = rel(solve_sidebands(delta, &p, &op).unwrap().c_minus, reference);
        assert!(d < previous, "g_c {gc}: {d} >= {previous}");
        previous = d;
    }
    assert!(previous < 1e-10, "{previous}");
}

#[test]
fn transmission_and_delay_do_not_depend_on_the_pump_phase() {
    // A detuned cavity gives c_s a nontrivial phase; the lab-frame results
    // must not depend on the gauge used internally.
    let params = dimensionless(0.2, CavityDetuning::Explicit(0.95), 0.03, 0.01, 4.0);
    let op = solve_steady_state(&params).unwrap();
    assert!(op.cs.arg().abs() > 0.1);
    let kappa = params.cavity.kappa;
    for delta in [0.9, 0.97, 1.02] {
        let s = solve_sidebands(delta, &params, &op).unwrap();
        let t_lin = Convention::PaperCorrected.apply(kappa, s.c_minus);
        let t_cf = transmission(delta, &params, &op, Convention::PaperCorrected)
            .unwrap()
            .t_p;
        assert!((t_lin.norm() - t_cf.norm()).abs() < 1e-10);
        let h = 1e-6;
        let phase = |d: f64| {
            let s = solve_sidebands(d, &params, &op).unwrap();
            Convention::PaperCorrected.apply(kappa, s.c_minus)
        };
        let tau_lin = (phase(delta + h) / phase(delta - h)).arg() / (2.0 * h);
        let tau_cf = group_delay(
            delta,
            &params,
            &op,
            Convention::PaperCorrected,
            DelayMethod::Analytic,
        )
        .unwrap();
        assert!(
            (tau_lin - tau_cf).abs() < 1e-5 * tau_cf.abs().max(1.0),
            "{tau_lin} vs {tau_cf}"
        );
    }
}

#[test]
fn slow_light_preset_is_dominated_by_the_probe_sideband() {
    // Largest Coulomb coupling of the delay preset is the slow-light setting.
    let params = dimensionless_slowfast_delay(4.0);
    let op = solve_steady_state(&params).unwrap();
    let s = solve_sidebands(params.mech1.omega, &params, &op).unwrap();
    assert!(s.c_plus.norm() / s.c_minus.norm() < 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_matches_linear_solve(
        kappa in 0.05f64..1.0,
        detuning in 0.5f64..1.5,
        g_cav in 0.0f64..0.05,
        g_coulomb in 0.0f64..0.05,
        pump in 0.0f64..3.0,
        delta in 0.5f64..1.5,
    ) {
        let params = dimensionless(kappa, CavityDetuning::Explicit(detuning), g_cav, g_coulomb, pump);
        let op = solve_steady_state(&params).unwrap();
        let x = sideband_amplitude(delta, &params, &op).unwrap();
        let s = solve_sidebands(delta, &params, &op);
        prop_assume!(s.is_ok());
        let s = s.unwrap();
        prop_assert!(rel(s.c_minus, x) < 1e-9, "{} vs {}", s.c_minus, x);
    }
}
