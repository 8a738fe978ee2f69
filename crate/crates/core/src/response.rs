//! Closed-form probe response: sideband amplitude, transmission, phase and
//! group delay.
//!
//! With `chi1 = delta^2 - omega1^2 + i delta gamma1`,
//! `alpha = hbar^2 g_coulomb^2 / (m1 m2 (delta^2 - omega2^2 + i delta gamma2))`
//! and `beta = hbar g_cav^2 n / (2 m1 omega1)`, the probe sideband per unit
//! probe rate is
//!
//! ```text
//!   X = ([kappa - i(Delta + delta)] (chi1 - alpha) - 2 i omega1 beta)
//!     / ([Delta^2 - (delta + i kappa)^2] (chi1 - alpha) + 4 Delta omega1 beta)
//! ```
//!
//! and the transmitted probe is `t_p = 1 - 2 kappa X`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{OperatingPoint, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which output field `t_p` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Convention {
    /// `t_p = 1 - 2 kappa X`: the returned probe of the single-port cavity.
    #[default]
    PaperCorrected,
    /// `t_p = 2 kappa X`: the intracavity sideband, for comparison.
    Intracavity,
}

impl Convention {
    pub fn key(self) -> &'static str {
        match self {
            Convention::PaperCorrected => "paper-corrected",
            Convention::Intracavity => "intracavity",
        }
    }

    pub fn from_key(key: &str) -> Result<Self> {
        match key {
            "paper-corrected" => Ok(Convention::PaperCorrected),
            "intracavity" => Ok(Convention::Intracavity),
            _ => Err(invalid(format!("unknown convention `{key}`"))),
        }
    }

    pub fn apply(self, kappa: f64, x: Complex64) -> Complex64 {
        match self {
            Convention::PaperCorrected => 1.0 - 2.0 * kappa * x,
            Convention::Intracavity => 2.0 * kappa * x,
        }
    }

    /// `dt_p / dX`.
    fn slope(self, kappa: f64) -> f64 {
        match self {
            Convention::PaperCorrected => -2.0 * kappa,
            Convention::Intracavity => 2.0 * kappa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SusceptibilityParts {
    pub alpha: Complex64,
    pub beta: f64,
    pub chi_m1: Complex64,
    pub chi_m2: Complex64,
}

pub fn susceptibility_parts(
    delta: f64,
    params: &SystemParams,
    op: &OperatingPoint,
) -> Result<SusceptibilityParts> {
    let (m1, m2) = (&params.mech1, &params.mech2);
    let hbar = params.hbar();
    let chi_m1 = Complex64::new(delta * delta - m1.omega * m1.omega, delta * m1.gamma);
    let chi_m2 = Complex64::new(delta * delta - m2.omega * m2.omega, delta * m2.gamma);
    let hg = hbar * params.coupling.g_coulomb;
    let alpha = if hg == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        if chi_m2 == Complex64::new(0.0, 0.0) {
            return Err(Error::SusceptibilityPole { delta });
        }
        hg * hg / (m1.mass * m2.mass * chi_m2)
    };
    let g = params.coupling.g_cav;
    let beta = hbar * g * g * op.photon_number / (2.0 * m1.mass * m1.omega);
    Ok(SusceptibilityParts {
        alpha,
        beta,
        chi_m1,
        chi_m2,
    })
}

/// Numerator and denominator of `X` and their `delta` derivatives.
struct Rational {
    num: Complex64,
    den: Complex64,
    dnum: Complex64,
    dden: Complex64,
    den_scale: f64,
}

fn rational(delta: f64, params: &SystemParams, op: &OperatingPoint) -> Result<Rational> {
    let parts = susceptibility_parts(delta, params, op)?;
    let kappa = params.cavity.kappa;
    let w1 = params.mech1.omega;
    let big_delta = op.delta_eff;
    let beta = parts.beta;

    let e = parts.chi_m1 - parts.alpha;
    let dchi1 = Complex64::new(2.0 * delta, params.mech1.gamma);
    let dchi2 = Complex64::new(2.0 * delta, params.mech2.gamma);
    let dalpha = if parts.alpha == Complex64::new(0.0, 0.0) {
        Complex64::new(0.0, 0.0)
    } else {
        -parts.alpha * dchi2 / parts.chi_m2
    };
    let de = dchi1 - dalpha;

    let b = Complex64::new(kappa, -(big_delta + delta));
    let db = -I;
    let shifted = Complex64::new(delta, kappa);
    let p = big_delta * big_delta - shifted * shifted;
    let dp = -2.0 * shifted;

    let coupling = Complex64::new(0.0, -2.0 * w1 * beta);
    let num = b * e + coupling;
    let dnum = db * e + b * de;
    let den = p * e + 4.0 * big_delta * w1 * beta;
    let dden = dp * e + p * de;
    let den_scale = p.norm() * e.norm() + (4.0 * big_delta * w1 * beta).abs();
    Ok(Rational {
        num,
        den,
        dnum,
        dden,
        den_scale,
    })
}

fn checked(delta: f64, r: &Rational) -> Result<()> {
    if !(r.den.norm() > 1e-30 * r.den_scale) || !r.den.is_finite() {
        return Err(Error::SingularResponse { delta });
    }
    Ok(())
}

/// The closed-form sideband amplitude `X(delta) = c_- / eps_p`, in seconds.
pub fn sideband_amplitude(
    delta: f64,
    params: &SystemParams,
    op: &OperatingPoint,
) -> Result<Complex64> {
    let r = rational(delta, params, op)?;
    checked(delta, &r)?;
    Ok(r.num / r.den)
}

/// `dX/d delta` by exact differentiation of the rational closed form.
pub fn sideband_amplitude_derivative(
    delta: f64,
    params: &SystemParams,
    op: &OperatingPoint,
) -> Result<Complex64> {
    let r = rational(delta, params, op)?;
    checked(delta, &r)?;
    Ok((r.dnum * r.den - r.num * r.dden) / (r.den * r.den))
}

/// One probe detuning and the response under both conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseSample {
    pub delta: f64,
    /// `delta - omega1`.
    pub delta_bar: f64,
    pub x: Complex64,
    /// `t_p` under the requested convention.
    pub t_p: Complex64,
    pub transmission: f64,
    /// `arg t_p`; continuous along a grid when produced by [`phase`].
    pub phase: f64,
    pub t_paper_corrected: Complex64,
    pub t_intracavity: Complex64,
}

pub fn transmission(
    delta: f64,
    params: &SystemParams,
    op: &OperatingPoint,
    convention: Convention,
) -> Result<ResponseSample> {
    let x = sideband_amplitude(delta, params, op)?;
    let kappa = params.cavity.kappa;
    let t_pc = Convention::PaperCorrected.apply(kappa, x);
    let t_ic = Convention::Intracavity.apply(kappa, x);
    let t_p = match convention {
        Convention::PaperCorrected => t_pc,
        Convention::Intracavity => t_ic,
    };
    Ok(ResponseSample {
        delta,
        delta_bar: delta - params.mech1.omega,
        x,
        t_p,
        transmission: t_p.norm_sqr(),
        phase: t_p.arg(),
        t_paper_corrected: t_pc,
        t_intracavity: t_ic,
    })
}

/// Transmission along a strictly increasing grid with the phase unwrapped
/// from the first sample.
///
/// Each interval is also checked at its midpoint: if the two half-interval
/// phase increments do not add up to the full-interval increment, a wrap is
/// hidden inside the interval and the grid is rejected.
pub fn phase(
    grid: &[f64],
    params: &SystemParams,
    op: &OperatingPoint,
    convention: Convention,
) -> Result<Vec<ResponseSample>> {
    if grid.len() < 3 {
        return Err(invalid("phase grid needs at least 3 points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("phase grid must be strictly increasing"));
    }
    let mut samples = grid
        .iter()
        .map(|&d| transmission(d, params, op, convention))
        .collect::<Result<Vec<_>>>()?;
    unwrap_samples(&mut samples, |d| {
        transmission(d, params, op, convention).map(|s| s.t_p)
    })?;
    Ok(samples)
}

/// Cumulative unwrap seeded from the first sample's principal value.
pub(crate) fn unwrap_samples(
    samples: &mut [ResponseSample],
    eval: impl Fn(f64) -> Result<Complex64>,
) -> Result<()> {
    for i in 1..samples.len() {
        let (lo, hi) = (samples[i - 1], samples[i]);
        let step = (hi.t_p / lo.t_p).arg();
        let mid = eval(0.5 * (lo.delta + hi.delta))?;
        let halves = (mid / lo.t_p).arg() + (hi.t_p / mid).arg();
        if step.abs() >= std::f64::consts::PI || (halves - step).abs() > std::f64::consts::PI {
            return Err(Error::GridTooCoarse {
                lo: lo.delta,
                hi: hi.delta,
            });
        }
        samples[i].phase = lo.phase + step;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DelayMethod {
    FiniteDifference,
    Analytic,
}

/// Below this `|t_p|` the transmission phase is treated as undefined.
pub const PHASE_MAGNITUDE_FLOOR: f64 = 1e-12;

/// Group delay `d arg t_p / d omega_p` at probe detuning `delta0`.
///
/// The finite-difference route takes central differences with step
/// `1e-6 omega1` and one Richardson level; the analytic route is
/// `Im(t_p' / t_p)` using [`sideband_amplitude_derivative`].
pub fn group_delay(
    delta0: f64,
    params: &SystemParams,
    op: &OperatingPoint,
    convention: Convention,
    method: DelayMethod,
) -> Result<f64> {
    let kappa = params.cavity.kappa;
    let t0 = convention.apply(kappa, sideband_amplitude(delta0, params, op)?);
    if t0.norm() < PHASE_MAGNITUDE_FLOOR {
        return Err(Error::UndefinedPhase {
            delta: delta0,
            magnitude: t0.norm(),
        });
    }
    match method {
        DelayMethod::Analytic => {
            let dt = convention.slope(kappa) * sideband_amplitude_derivative(delta0, params, op)?;
            Ok((dt / t0).im)
        }
        DelayMethod::FiniteDifference => {
            let t = |d: f64| -> Result<Complex64> {
                Ok(convention.apply(kappa, sideband_amplitude(d, params, op)?))
            };
            let central =
                |h: f64| -> Result<f64> { Ok((t(delta0 + h)? / t(delta0 - h)?).arg() / (2.0 * h)) };
            let h = 1e-6 * params.mech1.omega;
            let coarse = central(h)?;
            let fine = central(0.5 * h)?;
            Ok((4.0 * fine - coarse) / 3.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        solve_steady_state, CavityDetuning, CavityParams, CouplingParams, Drive, DriveParams,
        MechanicalMode, UnitMode,
    };

    fn unit_params(kappa: f64, g_cav: f64, g_coulomb: f64, pump: f64, gamma2: f64) -> SystemParams {
        SystemParams {
            units: UnitMode::Dimensionless,
            cavity: CavityParams {
                length: 1.0,
                pump_wavelength: 1.0,
                kappa,
                detuning: CavityDetuning::Locked,
            },
            mech1: MechanicalMode::new(1.0, 1.0, 1e-3).unwrap(),
            mech2: MechanicalMode::new(1.0, 1.0, gamma2).unwrap(),
            coupling: CouplingParams { g_cav, g_coulomb },
            drive: DriveParams {
                pump: Drive::Amplitude(pump),
                probe: Drive::Amplitude(0.0),
            },
        }
    }

    #[test]
    fn decoupled_alpha_vanishes() {
        let p = unit_params(0.1, 0.01, 0.0, 1.0, 1e-3);
        let op = solve_steady_state(&p).unwrap();
        for d in [0.3, 1.0, 1.7] {
            let parts = susceptibility_parts(d, &p, &op).unwrap();
            assert_eq!(parts.alpha, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn pump_off_beta_vanishes() {
        let p = unit_params(0.1, 0.01, 0.05, 0.0, 1e-3);
        let op = solve_steady_state(&p).unwrap();
        assert_eq!(susceptibility_parts(1.0, &p, &op).unwrap().beta, 0.0);
    }

    #[test]
    fn alpha_next_to_mr2_pole() {
        let p = unit_params(0.1, 0.0, 0.05, 0.0, 1e-3);
        let op = solve_steady_state(&p).unwrap();
        let a = susceptibility_parts(1.0, &p, &op).unwrap().alpha;
        // 0.0025 / (i 1e-3) computed separately
        let expected = Complex64::new(0.0025, 0.0) / Complex64::new(0.0, 1e-3);
        assert!((a - expected).norm() < 1e-15);
        assert!((a - Complex64::new(0.0, -2.5)).norm() < 1e-12);
    }

    #[test]
    fn undamped_mr2_pole_is_an_error() {
        let p = unit_params(0.1, 0.0, 0.05, 0.0, 0.0);
        let op = solve_steady_state(&p).unwrap();
        assert!(matches!(
            susceptibility_parts(1.0, &p, &op),
            Err(Error::SusceptibilityPole { .. })
        ));
        assert!(sideband_amplitude(1.0, &p, &op).is_err());
    }

    #[test]
    fn pump_off_all_pass_and_lorentzian() {
        let p = unit_params(0.2, 0.0, 0.0, 0.0, 1e-3);
        let mut op = solve_steady_state(&p).unwrap();
        op.delta_eff = 1.0;
        for i in 0..50 {
            let d = -2.0 + 0.09 * i as f64;
            let s = transmission(d, &p, &op, Convention::PaperCorrected).unwrap();
            assert!((s.t_p.norm() - 1.0).abs() < 1e-12);
            let ic = transmission(d, &p, &op, Convention::Intracavity).unwrap();
            let lorentz = 4.0 * 0.04 / ((1.0 - d) * (1.0 - d) + 0.04);
            assert!((ic.transmission - lorentz).abs() < 1e-12 * lorentz.max(1.0));
        }
        let center = transmission(1.0, &p, &op, Convention::Intracavity).unwrap();
        assert!((center.transmission - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pump_off_delay_at_line_center() {
        let p = unit_params(0.2, 0.0, 0.0, 0.0, 1e-3);
        let mut op = solve_steady_state(&p).unwrap();
        op.delta_eff = 1.0;
        for method in [DelayMethod::Analytic, DelayMethod::FiniteDifference] {
            let tau = group_delay(1.0, &p, &op, Convention::PaperCorrected, method).unwrap();
            assert!((tau - 10.0).abs() < 1e-9 * 10.0, "{method:?}: {tau}");
        }
    }

    #[test]
    fn phase_grid_validation() {
        let p = unit_params(0.2, 0.0, 0.0, 0.0, 1e-3);
        let op = solve_steady_state(&p).unwrap();
        assert!(phase(&[0.0, 1.0], &p, &op, Convention::PaperCorrected).is_err());
        assert!(phase(&[0.0, 1.0, 0.5], &p, &op, Convention::PaperCorrected).is_err());
        // A narrow all-pass resonance jumped over in a single interval.
        let mut narrow = p;
        narrow.cavity.kappa = 1e-4;
        let op = solve_steady_state(&narrow).unwrap();
        let err = phase(
            &[0.0, 0.5, 0.99, 1.01, 1.5],
            &narrow,
            &op,
            Convention::PaperCorrected,
        )
        .unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }), "{err:?}");
    }

    #[test]
    fn undefined_phase() {
        // The intracavity field is ~2 kappa / delta far from resonance.
        let p = unit_params(0.2, 0.0, 0.0, 0.0, 1e-3);
        let op = solve_steady_state(&p).unwrap();
        let tau = group_delay(
            1e13,
            &p,
            &op,
            Convention::Intracavity,
            DelayMethod::Analytic,
        );
        assert!(matches!(tau, Err(Error::UndefinedPhase { .. })), "{tau:?}");
    }

    #[test]
    fn convention_keys() {
        for c in [Convention::PaperCorrected, Convention::Intracavity] {
            assert_eq!(Convention::from_key(c.key()).unwrap(), c);
        }
        assert!(Convention::from_key("reflection").is_err());
    }
}
