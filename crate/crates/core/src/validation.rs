//! Oracle cross-checks with a machine-readable report.
//!
//! All random draws come from fixed seeds, so two runs produce identical
//! reports regardless of the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::linsys::solve_sidebands;
use crate::model::{
    solve_steady_state, CavityDetuning, CavityParams, CouplingParams, Drive, DriveParams,
    MechanicalMode, SystemParams, UnitMode,
};
use crate::presets::{paper_2012, Preset, SLOWFAST_GAMMA, SLOWFAST_G_CAV};
use crate::response::{group_delay, sideband_amplitude, transmission, Convention, DelayMethod};
use crate::timedomain::{
    demodulate, end_to_end_cases, integrate, with_probe_ratio, TrajectoryConfig,
};

pub const ORACLE_SEED: u64 = 0x5eed_0001;
pub const DELAY_SEED: u64 = 0x5eed_0002;

pub const ORACLE_CASES: usize = 200;
pub const ORACLE_TOLERANCE: f64 = 1e-9;
pub const ORACLE_MAX_CONDITION: f64 = 1e8;
pub const DELAY_POINTS: usize = 1000;
pub const DELAY_TOLERANCE: f64 = 1e-6;
pub const DELAY_MIN_MAGNITUDE: f64 = 1e-6;
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
pub const TIME_DOMAIN_TOLERANCE: f64 = 1e-2;
pub const TIME_DOMAIN_PROBE_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub metric: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A random locked dimensionless system: `kappa in [0.05, 0.5]`,
/// radiation-pressure coefficient `beta in [0, 1e-2]`, Coulomb strength
/// `g_coulomb^2 in [0, 1e-2]`, and a probe detuning in `[0.5, 1.5]`.
pub fn random_case(rng: &mut impl Rng) -> (SystemParams, f64) {
    let kappa = rng.random_range(0.05..=0.5);
    let beta = rng.random_range(0.0..=1e-2);
    let strength: f64 = rng.random_range(0.0..=1e-2);
    let delta = rng.random_range(0.5..=1.5);
    let mech = MechanicalMode {
        mass: 1.0,
        omega: 1.0,
        gamma: SLOWFAST_GAMMA,
    };
    let n = 2.0 * beta / (SLOWFAST_G_CAV * SLOWFAST_G_CAV);
    let params = SystemParams {
        units: UnitMode::Dimensionless,
        cavity: CavityParams {
            length: 1.0,
            pump_wavelength: 1.0,
            kappa,
            detuning: CavityDetuning::Locked,
        },
        mech1: mech,
        mech2: mech,
        coupling: CouplingParams {
            g_cav: SLOWFAST_G_CAV,
            g_coulomb: strength.sqrt(),
        },
        drive: DriveParams {
            pump: Drive::Amplitude((n * (kappa * kappa + 1.0)).sqrt()),
            probe: Drive::Amplitude(0.0),
        },
    };
    (params, delta)
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Closed form against the linear solve on random systems.
pub fn check_oracle_agreement() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    let mut skipped = 0;
    let mut worst_residual: f64 = 0.0;
    while accepted < ORACLE_CASES && skipped < 100 * ORACLE_CASES {
        let (params, delta) = random_case(&mut rng);
        let op = solve_steady_state(&params)?;
        let s = match solve_sidebands(delta, &params, &op) {
            Ok(s) if s.condition_estimate < ORACLE_MAX_CONDITION => s,
            _ => {
                skipped += 1;
                continue;
            }
        };
        let x = sideband_amplitude(delta, &params, &op)?;
        worst = worst.max((s.c_minus - x).norm() / x.norm());
        worst_residual = worst_residual.max(s.relative_residual);
        accepted += 1;
    }
    Ok(Check {
        name: "closed-form-vs-linear-system".into(),
        passed: accepted == ORACLE_CASES && worst <= ORACLE_TOLERANCE && worst_residual <= RESIDUAL_TOLERANCE,
        metric: worst,
        tolerance: ORACLE_TOLERANCE,
        samples: accepted,
        detail: format!(
            "max relative error of X over {accepted} systems ({skipped} skipped above condition {ORACLE_MAX_CONDITION:e}); max solve residual {worst_residual:e}"
        ),
    })
}

/// Pump off: `|t_p| = 1` everywhere and `tau_g(Delta) = 2 / kappa`.
pub fn check_pump_off() -> Result<[Check; 2]> {
    let mut worst_mag: f64 = 0.0;
    let mut worst_tau: f64 = 0.0;
    let mut samples = 0;
    let mut delays = 0;
    for preset in Preset::ALL {
        let mut params = preset.params();
        params.drive.pump = Drive::Amplitude(0.0);
        let op = solve_steady_state(&params)?;
        let w = params.mech1.omega;
        for i in 0..=400 {
            let delta = w * (0.5 + i as f64 / 400.0);
            let t = transmission(delta, &params, &op, Convention::PaperCorrected)?.t_p;
            worst_mag = worst_mag.max((t.norm() - 1.0).abs());
            samples += 1;
        }
        for method in [DelayMethod::Analytic, DelayMethod::FiniteDifference] {
            let tau = group_delay(
                op.delta_eff,
                &params,
                &op,
                Convention::PaperCorrected,
                method,
            )?;
            worst_tau = worst_tau.max(rel(tau, 2.0 / params.cavity.kappa));
            delays += 1;
        }
    }
    Ok([
        Check {
            name: "pump-off-unit-transmission".into(),
            passed: worst_mag <= 1e-12,
            metric: worst_mag,
            tolerance: 1e-12,
            samples,
            detail: "max ||t_p| - 1| with the pump off".into(),
        },
        Check {
            name: "pump-off-delay".into(),
            passed: worst_tau <= 1e-9,
            metric: worst_tau,
            tolerance: 1e-9,
            samples: delays,
            detail: "max relative error of tau_g(Delta) against 2 / kappa, both methods".into(),
        },
    ])
}

/// Finite-difference against analytic group delay on random points.
pub fn check_delay_methods() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(DELAY_SEED);
    let mut points = Vec::with_capacity(DELAY_POINTS);
    let mut draws = 0;
    while points.len() < DELAY_POINTS && draws < 100 * DELAY_POINTS {
        draws += 1;
        let (params, delta) = random_case(&mut rng);
        let convention = if draws % 2 == 0 {
            Convention::PaperCorrected
        } else {
            Convention::Intracavity
        };
        let op = solve_steady_state(&params)?;
        match transmission(delta, &params, &op, convention) {
            Ok(s) if s.t_p.norm() > DELAY_MIN_MAGNITUDE => {
                points.push((params, op, delta, convention))
            }
            _ => {}
        }
    }
    let errors: Vec<f64> = points
        .par_iter()
        .map(|(params, op, delta, convention)| -> Result<f64> {
            let fd = group_delay(
                *delta,
                params,
                op,
                *convention,
                DelayMethod::FiniteDifference,
            )?;
            let an = group_delay(*delta, params, op, *convention, DelayMethod::Analytic)?;
            Ok(rel(fd, an))
        })
        .collect::<Result<_>>()?;
    let worst = errors.iter().copied().fold(0.0, f64::max);
    Ok(Check {
        name: "group-delay-methods".into(),
        passed: points.len() == DELAY_POINTS && worst <= DELAY_TOLERANCE,
        metric: worst,
        tolerance: DELAY_TOLERANCE,
        samples: points.len(),
        detail: format!(
            "max relative difference between finite-difference and analytic tau_g over {} points",
            points.len()
        ),
    })
}

/// Result of the bistability scan used by [`check_steady_state`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BistabilityScan {
    pub pumps: Vec<f64>,
    pub photon_numbers: Vec<f64>,
    pub branch_counts: Vec<usize>,
    pub max_residual: f64,
    /// First index at which the lowest branch no longer exists.
    pub knee: Option<usize>,
    pub monotone_below_knee: bool,
    /// The jump at the knee exceeds every increment below it.
    pub jump_only_at_knee: bool,
}

/// Scans the pump of a dimensionless cavity with `kappa = 0.1`, `Delta_c = 1`
/// and photon-number pull `0.01` across its bistable region.
pub fn bistability_scan(points: usize) -> Result<BistabilityScan> {
    let mech = MechanicalMode {
        mass: 1.0,
        omega: 1.0,
        gamma: 1e-3,
    };
    let base = SystemParams {
        units: UnitMode::Dimensionless,
        cavity: CavityParams {
            length: 1.0,
            pump_wavelength: 1.0,
            kappa: 0.1,
            detuning: CavityDetuning::Explicit(1.0),
        },
        mech1: mech,
        mech2: mech,
        coupling: CouplingParams {
            g_cav: 0.1,
            g_coulomb: 0.0,
        },
        drive: DriveParams {
            pump: Drive::Amplitude(0.0),
            probe: Drive::Amplitude(0.0),
        },
    };
    let pumps: Vec<f64> = (0..points)
        .map(|i| 6.0 * i as f64 / (points - 1) as f64)
        .collect();
    let ops = pumps
        .iter()
        .map(|&pump| {
            let mut p = base;
            p.drive.pump = Drive::Amplitude(pump);
            solve_steady_state(&p)
        })
        .collect::<Result<Vec<_>>>()?;
    let photon_numbers: Vec<f64> = ops.iter().map(|o| o.photon_number).collect();
    let branch_counts: Vec<usize> = ops.iter().map(|o| o.branch_count).collect();
    let max_residual = ops
        .iter()
        .map(|o| o.relative_residual(base.cavity.kappa))
        .fold(0.0, f64::max);
    let first_three = branch_counts.iter().position(|&c| c == 3);
    let knee = first_three.and_then(|s| {
        branch_counts[s..]
            .iter()
            .position(|&c| c == 1)
            .map(|k| s + k)
    });
    let end = knee.unwrap_or(points);
    let increments: Vec<f64> = photon_numbers[..end]
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();
    let monotone_below_knee = increments.iter().all(|&d| d >= 0.0);
    let jump_only_at_knee = knee.is_some_and(|k| {
        let jump = photon_numbers[k] - photon_numbers[k - 1];
        increments.iter().all(|&d| d < jump)
    });
    Ok(BistabilityScan {
        pumps,
        photon_numbers,
        branch_counts,
        max_residual,
        knee,
        monotone_below_knee,
        jump_only_at_knee,
    })
}

/// Fixed-point residuals on presets and random systems, plus the bistable scan.
pub fn check_steady_state() -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let mut systems: Vec<SystemParams> = Preset::ALL.iter().map(|p| p.params()).collect();
    systems.push(paper_2012());
    systems.extend((0..200).map(|_| random_case(&mut rng).0));
    for params in &systems {
        let op = solve_steady_state(params)?;
        worst = worst.max(op.relative_residual(params.cavity.kappa));
        samples += 1;
    }
    let scan = bistability_scan(601)?;
    worst = worst.max(scan.max_residual);
    samples += scan.pumps.len();
    let bistable = scan.branch_counts.contains(&3);
    Ok(Check {
        name: "steady-state-integrity".into(),
        passed: worst <= RESIDUAL_TOLERANCE && bistable && scan.monotone_below_knee && scan.jump_only_at_knee,
        metric: worst,
        tolerance: RESIDUAL_TOLERANCE,
        samples,
        detail: format!(
            "max fixed-point residual; bistable region found: {bistable}; knee at pump {}; lowest branch monotone below knee: {}; jump only at knee: {}",
            scan.knee.map_or(f64::NAN, |k| scan.pumps[k]),
            scan.monotone_below_knee,
            scan.jump_only_at_knee
        ),
    })
}

/// Relative error of the demodulated sideband for one case and probe ratio.
pub fn time_domain_error(params: &SystemParams, delta: f64, probe_ratio: f64) -> Result<f64> {
    let params = with_probe_ratio(params, probe_ratio)?;
    let config = TrajectoryConfig::settling(&params, delta, 64)?;
    let traj = integrate(&params, delta, &config)?;
    let demod = demodulate(&traj, &config)?;
    let op = solve_steady_state(&params)?;
    let reference = solve_sidebands(delta, &params, &op)?.c_minus;
    if !demod.is_accepted() {
        return Ok(f64::INFINITY);
    }
    Ok((demod.c_minus_est - reference).norm() / reference.norm())
}

/// Demodulated nonlinear trajectories against the linear solve.
pub fn check_time_domain() -> Result<Check> {
    let cases = end_to_end_cases();
    let errors = cases
        .par_iter()
        .map(|c| -> Result<(f64, f64)> {
            Ok((
                time_domain_error(&c.params, c.delta, TIME_DOMAIN_PROBE_RATIO)?,
                time_domain_error(&c.params, c.delta, 0.5 * TIME_DOMAIN_PROBE_RATIO)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = errors.iter().map(|e| e.0).fold(0.0, f64::max);
    let non_increasing = errors.iter().all(|(full, half)| half <= full);
    Ok(Check {
        name: "time-domain-end-to-end".into(),
        passed: worst <= TIME_DOMAIN_TOLERANCE && non_increasing,
        metric: worst,
        tolerance: TIME_DOMAIN_TOLERANCE,
        samples: cases.len(),
        detail: format!(
            "max relative error of demodulated c_- at eps_p/Omega_l = {TIME_DOMAIN_PROBE_RATIO:e}; error does not grow when eps_p is halved: {non_increasing}"
        ),
    })
}

pub fn run_validation(tool: &str) -> Result<Report> {
    let [unit, delay] = check_pump_off()?;
    let checks = vec![
        check_oracle_agreement()?,
        unit,
        delay,
        check_delay_methods()?,
        check_steady_state()?,
        check_time_domain()?,
    ];
    Ok(Report {
        tool: tool.to_string(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_cases_are_reproducible() {
        let a = random_case(&mut ChaCha8Rng::seed_from_u64(1));
        let b = random_case(&mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        assert!(a.0.validate().is_ok());
    }

    #[test]
    fn bistable_scan_has_single_jump() {
        let scan = bistability_scan(301).unwrap();
        assert!(scan.branch_counts.contains(&3));
        assert!(scan.knee.is_some());
        assert!(scan.monotone_below_knee);
        assert!(scan.jump_only_at_knee);
        assert!(scan.max_residual <= RESIDUAL_TOLERANCE);
    }

    #[test]
    fn cheap_checks_pass() {
        let [unit, delay] = check_pump_off().unwrap();
        for c in [
            check_oracle_agreement().unwrap(),
            unit,
            delay,
            check_steady_state().unwrap(),
        ] {
            assert!(c.passed, "{c:?}");
        }
    }
}
