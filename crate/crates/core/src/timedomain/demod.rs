//! Three-tone least-squares demodulation of the cavity field.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use super::{Trajectory, TrajectoryConfig};
use crate::error::{Error, Result};

/// Demodulated results above this leakage are not trusted.
pub const MAX_LEAKAGE: f64 = 1e-4;
/// Recommended minimum analysis window, in beat periods.
pub const MIN_BEAT_PERIODS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemodResult {
    pub cs_est: Complex64,
    /// Coefficient of `e^{-i delta t}` over `eps_p`.
    pub c_minus_est: Complex64,
    /// Coefficient of `e^{+i delta t}` over `eps_p`.
    pub c_plus_est: Complex64,
    /// Residual power over total power in the window.
    pub leakage: f64,
    /// Number of whole beat periods used.
    pub beat_periods: usize,
}

impl DemodResult {
    pub fn is_accepted(&self) -> bool {
        self.leakage < MAX_LEAKAGE
    }
}

/// Projects `c(t)` onto `{1, e^{-i delta t}, e^{+i delta t}}` over the largest
/// whole number of beat periods that fits after the transient.
///
/// With no probe (`eps_p = 0`) the sideband coefficients are returned
/// unnormalized.
pub fn demodulate(traj: &Trajectory, config: &TrajectoryConfig) -> Result<DemodResult> {
    let delta = traj.delta;
    if !(delta > 0.0) {
        return Err(Error::InsufficientData(format!(
            "demodulation needs a positive probe detuning, got {delta}"
        )));
    }
    let (Some(&t_first), Some(&t_end)) = (traj.t.first(), traj.t.last()) else {
        return Err(Error::InsufficientData("empty trajectory".into()));
    };
    let start = t_first + config.transient_fraction * (t_end - t_first);
    let period = 2.0 * std::f64::consts::PI / delta;
    let available = t_end - start;
    let beats = (available / period + 1e-9).floor();
    if beats < 1.0 {
        return Err(Error::InsufficientData(format!(
            "analysis window {available:e} is shorter than one beat period {period:e}"
        )));
    }
    if (beats as usize) < MIN_BEAT_PERIODS {
        log::warn!("demodulating over {beats} beat periods, fewer than {MIN_BEAT_PERIODS}");
    }
    // Half-open window [t_end - k T, t_end) so no phase is counted twice.
    let window_start = t_end - beats * period;
    let slack = 1e-9 * period;

    let mut gram = Matrix3::<Complex64>::zeros();
    let mut rhs = Vector3::<Complex64>::zeros();
    let mut used = Vec::new();
    for (i, &t) in traj.t.iter().enumerate() {
        if t < window_start - slack || t >= t_end - slack {
            continue;
        }
        let c = Complex64::new(traj.states[i][4], traj.states[i][5]);
        let b = basis(delta, t);
        for r in 0..3 {
            for col in 0..3 {
                gram[(r, col)] += b[r].conj() * b[col];
            }
            rhs[r] += b[r].conj() * c;
        }
        used.push((t, c));
    }
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} samples in the analysis window",
            used.len()
        )));
    }
    let coef = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InsufficientData("sampling cannot resolve the three tones".into()))?;

    let mut residual = 0.0;
    let mut total = 0.0;
    for &(t, c) in &used {
        let b = basis(delta, t);
        let fit = coef[0] * b[0] + coef[1] * b[1] + coef[2] * b[2];
        residual += (c - fit).norm_sqr();
        total += c.norm_sqr();
    }
    let leakage = if total > 0.0 { residual / total } else { 0.0 };

    let eps = traj.probe_amplitude;
    let scale = if eps == 0.0 { 1.0 } else { eps };
    Ok(DemodResult {
        cs_est: coef[0],
        c_minus_est: coef[1] / scale,
        c_plus_est: coef[2] / scale,
        leakage,
        beat_periods: beats as usize,
    })
}

fn basis(delta: f64, t: f64) -> [Complex64; 3] {
    let minus = Complex64::from_polar(1.0, -delta * t);
    [Complex64::new(1.0, 0.0), minus, minus.conj()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(duration: f64, dt: f64) -> TrajectoryConfig {
        TrajectoryConfig {
            duration,
            dt,
            transient_fraction: 0.25,
            integrator_tolerance: 1e-10,
        }
    }

    fn synthetic(
        delta: f64,
        eps: f64,
        cfg: &TrajectoryConfig,
        c: impl Fn(f64, usize) -> Complex64,
    ) -> Trajectory {
        let n = (cfg.duration / cfg.dt).round() as usize;
        let t: Vec<f64> = (0..=n).map(|i| i as f64 * cfg.dt).collect();
        let states = t
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let z = c(t, i);
                [0.0, 0.0, 0.0, 0.0, z.re, z.im]
            })
            .collect();
        Trajectory::from_samples(delta, eps, t, states).unwrap()
    }

    #[test]
    fn exact_three_tone_signal() {
        let cfg = config(300.0, 0.05);
        let delta = 1.0;
        let traj = synthetic(delta, 0.1, &cfg, |t, _| {
            Complex64::new(2.0, 0.0) + 0.1 * Complex64::from_polar(1.0, -delta * t)
        });
        let d = demodulate(&traj, &cfg).unwrap();
        assert!((d.cs_est - 2.0).norm() < 1e-12);
        assert!((d.c_minus_est * 0.1 - 0.1).norm() < 1e-12);
        assert!(d.c_plus_est.norm() < 1e-12);
        assert!(d.leakage < 1e-24);
        assert!(d.beat_periods >= MIN_BEAT_PERIODS);
    }

    #[test]
    fn white_residual_is_reported_as_leakage() {
        let cfg = config(400.0, 0.05);
        let delta = 1.3;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise: Vec<Complex64> = (0..=8000)
            .map(|_| {
                1e-3 * Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
            .collect();
        let cm = Complex64::new(0.03, -0.02);
        let cp = Complex64::new(-0.01, 0.005);
        let traj = synthetic(delta, 1.0, &cfg, |t, i| {
            Complex64::new(1.0, 0.5)
                + cm * Complex64::from_polar(1.0, -delta * t)
                + cp * Complex64::from_polar(1.0, delta * t)
                + noise[i]
        });
        let d = demodulate(&traj, &cfg).unwrap();
        assert!((d.cs_est - Complex64::new(1.0, 0.5)).norm() <= 1e-3);
        assert!((d.c_minus_est - cm).norm() <= 1e-3);
        assert!((d.c_plus_est - cp).norm() <= 1e-3);
        // Uniform noise on [-a, a] per quadrature has power 2 a^2 / 3.
        let expected = 2.0 * 1e-6 / 3.0 / (1.25 + cm.norm_sqr() + cp.norm_sqr());
        assert!(
            (d.leakage / expected - 1.0).abs() < 0.2,
            "{} vs {expected}",
            d.leakage
        );
    }

    #[test]
    fn short_window_is_rejected() {
        let cfg = config(5.0, 0.01);
        let traj = synthetic(1.0, 1.0, &cfg, |_, _| Complex64::new(1.0, 0.0));
        assert!(matches!(
            demodulate(&traj, &cfg),
            Err(Error::InsufficientData(_))
        ));
    }
}
