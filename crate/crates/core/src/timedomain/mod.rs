//! Time-domain oracle: integrate the nonlinear mean-value equations with
//! pump and probe on, then demodulate the cavity field.
//!
//! State layout is `[q1, p1, q2, p2, Re c, Im c]` in the frame rotating at
//! the pump frequency, where the equations are
//!
//! ```text
//!   q_i' = p_i / m_i
//!   p1'  = -m1 omega1^2 q1 - hbar g_c q2 + hbar g |c|^2 - gamma1 p1
//!   p2'  = -m2 omega2^2 q2 - hbar g_c q1 - gamma2 p2
//!   c'   = -(kappa + i Delta_c) c + i g q1 c + Omega_l + eps_p e^{-i delta t}
//! ```

mod demod;
mod integrator;

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

pub use demod::{demodulate, DemodResult, MAX_LEAKAGE, MIN_BEAT_PERIODS};
pub use integrator::{integrate_samples, Tolerance};

use crate::error::{invalid, Error, Result};
use crate::model::{solve_steady_state, Drive, OperatingPoint, SystemParams};

pub type State = [f64; 6];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub duration: f64,
    /// Output sampling step.
    pub dt: f64,
    /// Leading fraction of the run discarded before demodulation.
    pub transient_fraction: f64,
    /// Relative tolerance of the adaptive integrator.
    pub integrator_tolerance: f64,
}

impl TrajectoryConfig {
    pub const DEFAULT_TOLERANCE: f64 = 1e-10;

    /// A run long enough for the slowest decay rate of `params` to settle to
    /// about `e^-20` before a window of `beats` probe beat periods, sampled
    /// 32 times per beat.
    pub fn settling(params: &SystemParams, delta: f64, beats: usize) -> Result<Self> {
        let rate = params
            .mech1
            .gamma
            .min(params.mech2.gamma)
            .min(params.cavity.kappa);
        if !(rate > 0.0) || !(delta > 0.0) {
            return Err(invalid(
                "settling time needs positive damping and probe detuning",
            ));
        }
        // Amplitudes decay at half the energy damping rate.
        let transient = 40.0 / rate;
        let period = 2.0 * std::f64::consts::PI / delta;
        let window = beats as f64 * period;
        let duration = transient + window;
        Ok(Self {
            duration,
            dt: period / 32.0,
            transient_fraction: transient / duration,
            integrator_tolerance: Self::DEFAULT_TOLERANCE,
        })
    }

    /// Hard errors for unusable settings, warnings for merely poor ones.
    pub fn validate(&self, delta: f64) -> Result<Vec<String>> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.dt > 0.0 && self.dt < self.duration) {
            return Err(invalid(format!(
                "dt must lie in (0, duration), got {}",
                self.dt
            )));
        }
        if !(self.transient_fraction > 0.0 && self.transient_fraction < 1.0) {
            return Err(invalid(format!(
                "transient_fraction must lie in (0, 1), got {}",
                self.transient_fraction
            )));
        }
        if !(self.integrator_tolerance > 0.0 && self.integrator_tolerance <= 1e-3) {
            return Err(invalid(format!(
                "integrator_tolerance must lie in (0, 1e-3], got {}",
                self.integrator_tolerance
            )));
        }
        let mut warnings = Vec::new();
        if delta > 0.0 {
            let period = 2.0 * std::f64::consts::PI / delta;
            let window = (1.0 - self.transient_fraction) * self.duration;
            if window < MIN_BEAT_PERIODS as f64 * period {
                warnings.push(format!(
                    "analysis window covers {:.1} beat periods, fewer than {MIN_BEAT_PERIODS}",
                    window / period
                ));
            }
            if self.dt > period / 8.0 {
                warnings.push(format!(
                    "dt = {} samples the beat fewer than 8 times per period",
                    self.dt
                ));
            }
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub delta: f64,
    pub probe_amplitude: f64,
    pub t: Vec<f64>,
    pub states: Vec<State>,
}

impl Trajectory {
    /// Wraps externally generated samples, e.g. for testing the demodulator.
    pub fn from_samples(
        delta: f64,
        probe_amplitude: f64,
        t: Vec<f64>,
        states: Vec<State>,
    ) -> Result<Self> {
        if t.len() != states.len() {
            return Err(invalid("time and state sample counts differ"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("sample times must be strictly increasing"));
        }
        Ok(Self {
            delta,
            probe_amplitude,
            t,
            states,
        })
    }

    pub fn cavity_field(&self, i: usize) -> Complex64 {
        Complex64::new(self.states[i][4], self.states[i][5])
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,q1,p1,q2,p2,re_c,im_c")?;
        for (t, s) in self.t.iter().zip(&self.states) {
            write!(out, "{t:.16e}")?;
            for v in s {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let file = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }
}

pub fn operating_state(op: &OperatingPoint) -> State {
    [op.q1s, 0.0, op.q2s, 0.0, op.cs.re, op.cs.im]
}

/// Integrates from the analytic operating point.
pub fn integrate(
    params: &SystemParams,
    delta: f64,
    config: &TrajectoryConfig,
) -> Result<Trajectory> {
    let op = solve_steady_state(params)?;
    integrate_from(params, &op, delta, config, operating_state(&op))
}

pub fn integrate_from(
    params: &SystemParams,
    op: &OperatingPoint,
    delta: f64,
    config: &TrajectoryConfig,
    initial: State,
) -> Result<Trajectory> {
    // Lossless systems are valid here even though they have no steady state.
    let rates = [params.cavity.kappa, params.mech1.gamma, params.mech2.gamma];
    if rates.iter().any(|r| !(*r >= 0.0 && r.is_finite()))
        || !(params.mech1.mass > 0.0 && params.mech2.mass > 0.0)
        || initial.iter().any(|v| !v.is_finite())
    {
        return Err(invalid("time-domain run needs finite nonnegative rates, positive masses and a finite initial state"));
    }
    for w in config.validate(delta)? {
        log::warn!("{w}");
    }
    if let Some(w) = params.perturbative_warning() {
        log::warn!("{w}");
    }
    let eps = params.probe_amplitude()?;
    let rhs = equations(params, op, delta, eps);

    let n = (config.duration / config.dt).round() as usize;
    let t: Vec<f64> = (0..=n).map(|i| i as f64 * config.dt).collect();
    let rtol = config.integrator_tolerance;
    let tol = Tolerance {
        rtol,
        atol: absolute_scales(params, &initial).map(|s| rtol * s),
    };
    let states = integrate_samples(rhs, 0.0, initial, &t, &tol)?;
    Ok(Trajectory {
        delta,
        probe_amplitude: eps,
        t,
        states,
    })
}

fn equations(
    params: &SystemParams,
    op: &OperatingPoint,
    delta: f64,
    eps: f64,
) -> impl Fn(f64, &State) -> State {
    let hbar = params.hbar();
    let (m1, w1, g1) = (params.mech1.mass, params.mech1.omega, params.mech1.gamma);
    let (m2, w2, g2) = (params.mech2.mass, params.mech2.omega, params.mech2.gamma);
    let g = params.coupling.g_cav;
    let hgc = hbar * params.coupling.g_coulomb;
    let kappa = params.cavity.kappa;
    let delta_c = op.delta_c;
    let pump = op.pump;
    move |t, y| {
        let [q1, p1, q2, p2, re, im] = *y;
        let n = re * re + im * im;
        let (s, c) = (delta * t).sin_cos();
        // -(kappa + i (Delta_c - g q1)) c + Omega + eps (cos - i sin)
        let det = delta_c - g * q1;
        [
            p1 / m1,
            -m1 * w1 * w1 * q1 - hgc * q2 + hbar * g * n - g1 * p1,
            p2 / m2,
            -m2 * w2 * w2 * q2 - hgc * q1 - g2 * p2,
            -kappa * re + det * im + pump + eps * c,
            -kappa * im - det * re - eps * s,
        ]
    }
}

/// Per-component magnitudes used for the absolute tolerance.
fn absolute_scales(params: &SystemParams, y: &State) -> State {
    let hbar = params.hbar();
    let (m, w) = (params.mech1.mass, params.mech1.omega);
    let zpf = (hbar / (m * w)).sqrt();
    let q = y[0].abs().max(y[2].abs());
    let p = y[1].abs().max(y[3].abs()).max(m * w * q);
    let c = y[4].abs().max(y[5].abs());
    let q = if q > 0.0 { q } else { zpf };
    let p = if p > 0.0 { p } else { m * w * q };
    let c = if c > 0.0 { c } else { 1.0 };
    [q, p, q, p, c, c]
}

/// Energy of the undriven system, drive terms excluded, with `Delta_c` the
/// bare cavity detuning.
pub fn hamiltonian(params: &SystemParams, delta_c: f64, y: &State) -> f64 {
    let hbar = params.hbar();
    let (m1, w1) = (params.mech1.mass, params.mech1.omega);
    let (m2, w2) = (params.mech2.mass, params.mech2.omega);
    let [q1, p1, q2, p2, re, im] = *y;
    let n = re * re + im * im;
    p1 * p1 / (2.0 * m1)
        + 0.5 * m1 * w1 * w1 * q1 * q1
        + p2 * p2 / (2.0 * m2)
        + 0.5 * m2 * w2 * w2 * q2 * q2
        + hbar * (delta_c - params.coupling.g_cav * q1) * n
        + hbar * params.coupling.g_coulomb * q1 * q2
}

/// A named end-to-end comparison point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndToEndCase {
    pub name: &'static str,
    pub params: SystemParams,
    pub delta: f64,
}

/// Sets the probe to `ratio` times the pump rate.
pub fn with_probe_ratio(params: &SystemParams, ratio: f64) -> Result<SystemParams> {
    let mut p = *params;
    p.drive.probe = Drive::Amplitude(ratio * params.pump_amplitude()?);
    Ok(p)
}

/// Ten dimensionless systems with mechanical damping strong enough that the
/// transient settles in a few thousand time units.
pub fn end_to_end_cases() -> Vec<EndToEndCase> {
    use crate::model::{
        CavityDetuning, CavityParams, CouplingParams, DriveParams, MechanicalMode, UnitMode,
    };
    // (name, kappa, gamma, g_cav, beta, g_coulomb, omega2, delta)
    type Row = (&'static str, f64, f64, f64, f64, f64, f64, f64);
    let table: [Row; 10] = [
        ("single-resonator", 0.2, 0.05, 0.01, 1e-3, 0.0, 1.0, 1.0),
        ("coupled-center", 0.2, 0.05, 0.01, 1e-3, 0.05, 1.0, 1.0),
        ("coupled-red-side", 0.2, 0.05, 0.01, 1e-3, 0.05, 1.0, 0.97),
        ("coupled-blue-side", 0.3, 0.04, 0.02, 3e-3, 0.1, 1.0, 1.03),
        ("narrow-cavity", 0.1, 0.05, 0.01, 5e-4, 0.03, 1.05, 1.0),
        ("wide-cavity", 0.5, 0.03, 0.01, 2e-3, 0.08, 0.95, 0.9),
        ("weak-pump", 0.227, 0.05, 0.01, 1e-5, 0.1, 1.0, 1.0),
        ("strong-pump", 0.227, 0.05, 0.01, 1e-2, 0.1, 1.0, 1.0),
        ("detuned-partner", 0.2, 0.04, 0.015, 2e-3, 0.15, 1.2, 1.1),
        ("far-probe", 0.25, 0.05, 0.01, 1e-3, 0.05, 1.0, 0.7),
    ];
    table
        .into_iter()
        .map(
            |(name, kappa, gamma, g_cav, beta, g_coulomb, omega2, delta)| {
                let n = 2.0 * beta / (g_cav * g_cav);
                let pump = (n * (kappa * kappa + 1.0)).sqrt();
                let params = SystemParams {
                    units: UnitMode::Dimensionless,
                    cavity: CavityParams {
                        length: 1.0,
                        pump_wavelength: 1.0,
                        kappa,
                        detuning: CavityDetuning::Locked,
                    },
                    mech1: MechanicalMode {
                        mass: 1.0,
                        omega: 1.0,
                        gamma,
                    },
                    mech2: MechanicalMode {
                        mass: 1.0,
                        omega: omega2,
                        gamma,
                    },
                    coupling: CouplingParams { g_cav, g_coulomb },
                    drive: DriveParams {
                        pump: Drive::Amplitude(pump),
                        probe: Drive::Amplitude(1e-3 * pump),
                    },
                };
                EndToEndCase {
                    name,
                    params,
                    delta,
                }
            },
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::solve_sidebands;

    fn first_case() -> EndToEndCase {
        end_to_end_cases()[1]
    }

    #[test]
    fn operating_point_is_stationary() {
        let case = first_case();
        let params = with_probe_ratio(&case.params, 0.0).unwrap();
        let cfg = TrajectoryConfig {
            duration: 200.0,
            dt: 0.5,
            transient_fraction: 0.5,
            integrator_tolerance: 1e-10,
        };
        let traj = integrate(&params, case.delta, &cfg).unwrap();
        let y0 = traj.states[0];
        for y in &traj.states {
            for i in 0..6 {
                let scale = y0[i].abs().max(1e-300);
                assert!(
                    (y[i] - y0[i]).abs() <= 1e-8 * scale.max(y0[4].abs() * 1e-2),
                    "{i}: {} vs {}",
                    y[i],
                    y0[i]
                );
            }
        }
    }

    #[test]
    fn mechanical_ring_down() {
        let mut params = first_case().params;
        params.coupling.g_cav = 0.0;
        params.coupling.g_coulomb = 0.0;
        params.drive.probe = Drive::Amplitude(0.0);
        let gamma = params.mech1.gamma;
        let op = solve_steady_state(&params).unwrap();
        let mut y0 = operating_state(&op);
        y0[0] += 1e-3;
        let ring = 2.0 / gamma;
        let cfg = TrajectoryConfig {
            duration: 10.0 * ring,
            dt: 0.01,
            transient_fraction: 0.5,
            integrator_tolerance: 1e-10,
        };
        let traj = integrate_from(&params, &op, 1.0, &cfg, y0).unwrap();
        let w = params.mech1.omega;
        for (t, y) in traj.t.iter().zip(&traj.states).step_by(997) {
            // Amplitude from energy, so the phase of the envelope does not matter.
            let amp = ((y[0] - op.q1s).powi(2) + (y[1] / w).powi(2)).sqrt();
            let expected = 1e-3 * (-gamma * t / 2.0).exp();
            assert!(
                (amp / expected - 1.0).abs() < 0.05,
                "t {t}: {amp} vs {expected}"
            );
        }
    }

    #[test]
    fn undriven_lossless_energy_is_conserved() {
        let mut params = first_case().params;
        params.mech1.gamma = 0.0;
        params.mech2.gamma = 0.0;
        params.coupling.g_cav = 0.05;
        let op = solve_steady_state(&params).unwrap();
        params.cavity.kappa = 0.0;
        let mut silent = params;
        silent.drive.pump = Drive::Amplitude(0.0);
        silent.drive.probe = Drive::Amplitude(0.0);
        let mut op_silent = op;
        op_silent.pump = 0.0;
        let y0 = [0.01, 0.0, -0.02, 0.005, 1.5, 0.5];
        let tol = 1e-10;
        let cfg = TrajectoryConfig {
            duration: 100.0 * 2.0 * std::f64::consts::PI,
            dt: 0.1,
            transient_fraction: 0.5,
            integrator_tolerance: tol,
        };
        let traj =
            integrate_from(&silent, &op_silent, 1.0, &cfg, y0).unwrap_or_else(|e| panic!("{e}"));
        let e0 = hamiltonian(&silent, op.delta_c, &y0);
        let worst = traj
            .states
            .iter()
            .map(|y| ((hamiltonian(&silent, op.delta_c, y) - e0) / e0).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 10.0 * tol, "{worst}");
    }

    #[test]
    fn integration_is_deterministic() {
        let case = first_case();
        let cfg = TrajectoryConfig::settling(&case.params, case.delta, 8).unwrap();
        let cfg = TrajectoryConfig {
            duration: cfg.duration / 10.0,
            ..cfg
        };
        let a = integrate(&case.params, case.delta, &cfg).unwrap();
        let b = integrate(&case.params, case.delta, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pump_only_has_no_sidebands() {
        let case = first_case();
        let params = with_probe_ratio(&case.params, 0.0).unwrap();
        let cfg = TrajectoryConfig::settling(&params, case.delta, 32).unwrap();
        let cfg = TrajectoryConfig {
            duration: 400.0,
            transient_fraction: 0.25,
            ..cfg
        };
        let traj = integrate(&params, case.delta, &cfg).unwrap();
        let d = demodulate(&traj, &cfg).unwrap();
        let cs = traj.cavity_field(0).norm();
        assert!(d.c_minus_est.norm() <= 1e-10 * cs, "{}", d.c_minus_est);
        assert!(d.c_plus_est.norm() <= 1e-10 * cs, "{}", d.c_plus_est);
    }

    #[test]
    fn demodulated_sideband_matches_linear_solve() {
        let case = first_case();
        let cfg = TrajectoryConfig::settling(&case.params, case.delta, 64).unwrap();
        let traj = integrate(&case.params, case.delta, &cfg).unwrap();
        let d = demodulate(&traj, &cfg).unwrap();
        assert!(d.is_accepted(), "{}", d.leakage);
        let op = solve_steady_state(&case.params).unwrap();
        let s = solve_sidebands(case.delta, &case.params, &op).unwrap();
        let rel = (d.c_minus_est - s.c_minus).norm() / s.c_minus.norm();
        assert!(rel <= 1e-2, "{rel}");
    }

    #[test]
    fn csv_header_and_precision() {
        let traj =
            Trajectory::from_samples(1.0, 0.0, vec![0.0, 0.1], vec![[1.0 / 3.0; 6]; 2]).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,q1,p1,q2,p2,re_c,im_c"));
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row[1], 1.0 / 3.0);
    }
}
