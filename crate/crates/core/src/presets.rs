//! Bundled parameter sets.
//!
//! `paper-2012` carries the SI values of the published experiment-based
//! parameter set. Those values cannot regenerate the published spectra (the
//! Coulomb term is negligible at SI magnitudes), so the dimensionless
//! slow/fast presets are what the qualitative scenarios run on: `omega1 =
//! omega2 = 1`, `gamma = 1/6700`, `kappa = 0.227` (the experimental
//! `kappa/omega1`), locked `Delta = 1`, and `g_coulomb` chosen from
//! [`SLOWFAST_ALPHA_RATIOS`] as `|alpha(omega1)| / gamma1`.
//!
//! The two dimensionless presets differ only in pump strength:
//! `dimensionless-slowfast` (radiation-pressure coefficient `beta = 2e-3`)
//! shows the split transparency windows, `dimensionless-slowfast-delay`
//! (`beta = 1e-6`, cooperativity below one) is the regime where the group
//! delay at line center switches sign with the Coulomb coupling.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::model::{
    CavityDetuning, CavityParams, CouplingParams, Drive, DriveParams, MechanicalMode, SystemParams,
    UnitMode,
};

/// `|alpha(omega1)| / gamma1` values of the slow/fast coupling grid.
pub const SLOWFAST_ALPHA_RATIOS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

pub const SLOWFAST_KAPPA: f64 = 0.227;
pub const SLOWFAST_GAMMA: f64 = 1.0 / 6700.0;
pub const SLOWFAST_G_CAV: f64 = 0.01;
pub const SLOWFAST_WINDOW_BETA: f64 = 2e-3;
pub const SLOWFAST_DELAY_BETA: f64 = 1e-6;
/// `eps_p / Omega_l` used by the bundled presets.
pub const PRESET_PROBE_RATIO: f64 = 1e-3;

/// The `kappa/omega1` grid of the decay-rate trend scenario (`pi`, `2 pi`,
/// `3 pi` times 215 kHz over `2 pi` times 947 kHz, rounded).
pub const SLOWFAST_KAPPA_GRID: [f64; 3] = [0.113, 0.227, 0.340];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper2012,
    DimensionlessSlowFast,
    DimensionlessSlowFastDelay,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::Paper2012,
        Preset::DimensionlessSlowFast,
        Preset::DimensionlessSlowFastDelay,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Preset::Paper2012 => "paper-2012",
            Preset::DimensionlessSlowFast => "dimensionless-slowfast",
            Preset::DimensionlessSlowFastDelay => "dimensionless-slowfast-delay",
        }
    }

    pub fn from_key(key: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.key() == key)
            .ok_or_else(|| invalid(format!("unknown preset `{key}`")))
    }

    /// The preset's parameters. Dimensionless presets use the largest
    /// coupling of the grid.
    pub fn params(self) -> SystemParams {
        let largest = SLOWFAST_ALPHA_RATIOS[SLOWFAST_ALPHA_RATIOS.len() - 1];
        match self {
            Preset::Paper2012 => paper_2012(),
            Preset::DimensionlessSlowFast => dimensionless_slowfast(largest),
            Preset::DimensionlessSlowFastDelay => dimensionless_slowfast_delay(largest),
        }
    }
}

/// SI parameter set: `L = 25 mm`, `lambda = 1064 nm`, `omega_i / 2 pi = 947
/// kHz`, `Q_i = 6700`, `m_i = 145 ng`, `kappa / 2 pi = 215 kHz`, `P_l = 6 uW`,
/// `g_c / 2 pi = 8e6 Hz/m^2`, detuning locked to `omega1`.
pub fn paper_2012() -> SystemParams {
    let omega = 2.0 * PI * 947e3;
    let mech = MechanicalMode {
        mass: 145e-12,
        omega,
        gamma: omega / 6700.0,
    };
    let cavity = CavityParams {
        length: 25e-3,
        pump_wavelength: 1064e-9,
        kappa: 2.0 * PI * 215e3,
        detuning: CavityDetuning::Locked,
    };
    SystemParams {
        units: UnitMode::Si,
        cavity,
        mech1: mech,
        mech2: mech,
        coupling: CouplingParams {
            g_cav: cavity.default_g_cav(),
            g_coulomb: 2.0 * PI * 8e6,
        },
        drive: DriveParams {
            pump: Drive::Power(6e-6),
            // eps_p / Omega_l = PRESET_PROBE_RATIO
            probe: Drive::Power(6e-6 * PRESET_PROBE_RATIO * PRESET_PROBE_RATIO),
        },
    }
}

/// Dimensionless `g_coulomb` giving `|alpha(omega1)| = ratio * gamma1` for
/// unit masses and `omega2 = omega1`.
pub fn slowfast_g_coulomb(alpha_ratio: f64) -> f64 {
    (alpha_ratio * SLOWFAST_GAMMA * SLOWFAST_GAMMA).sqrt()
}

/// Dimensionless slow/fast system with radiation-pressure coefficient `beta`
/// at the reference `kappa`; the pump is a fixed power so that `kappa` sweeps
/// behave like a fixed laser.
pub fn dimensionless_with_beta(alpha_ratio: f64, beta: f64) -> SystemParams {
    let mech = MechanicalMode {
        mass: 1.0,
        omega: 1.0,
        gamma: SLOWFAST_GAMMA,
    };
    let kappa = SLOWFAST_KAPPA;
    // beta = hbar g^2 n / (2 m1 omega1) with everything unit.
    let n = 2.0 * beta / (SLOWFAST_G_CAV * SLOWFAST_G_CAV);
    let omega_sq = n * (kappa * kappa + 1.0);
    SystemParams {
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
            g_coulomb: slowfast_g_coulomb(alpha_ratio),
        },
        drive: DriveParams {
            pump: Drive::Power(omega_sq / (2.0 * kappa)),
            probe: Drive::Amplitude(PRESET_PROBE_RATIO * omega_sq.sqrt()),
        },
    }
}

pub fn dimensionless_slowfast(alpha_ratio: f64) -> SystemParams {
    dimensionless_with_beta(alpha_ratio, SLOWFAST_WINDOW_BETA)
}

pub fn dimensionless_slowfast_delay(alpha_ratio: f64) -> SystemParams {
    dimensionless_with_beta(alpha_ratio, SLOWFAST_DELAY_BETA)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::solve_steady_state;

    #[test]
    fn si_preset_values() {
        let p = paper_2012();
        assert!((p.mech1.omega / (2.0 * PI) - 947e3).abs() < 1e-6);
        assert!((p.mech1.quality_factor().unwrap() - 6700.0).abs() < 1e-9);
        assert_eq!(p.mech1.mass, 145e-12);
        assert!((p.cavity.kappa / (2.0 * PI) - 215e3).abs() < 1e-6);
        assert_eq!(p.cavity.length, 0.025);
        assert_eq!(p.cavity.pump_wavelength, 1064e-9);
        p.validate().unwrap();
        assert!((p.probe_to_pump_ratio().unwrap() - PRESET_PROBE_RATIO).abs() < 1e-15);
    }

    #[test]
    fn si_stiffness_is_unaffected_by_coulomb() {
        let p = paper_2012();
        let k = p.effective_stiffness().unwrap();
        let bare = p.mech1.stiffness();
        assert!(((bare - k) / bare).abs() < 1e-30);
    }

    #[test]
    fn slowfast_beta_and_lock() {
        for (params, beta) in [
            (dimensionless_slowfast(4.0), SLOWFAST_WINDOW_BETA),
            (dimensionless_slowfast_delay(0.0), SLOWFAST_DELAY_BETA),
        ] {
            let op = solve_steady_state(&params).unwrap();
            assert_eq!(op.delta_eff, 1.0);
            let got = params.coupling.g_cav.powi(2) * op.photon_number / 2.0;
            assert!((got / beta - 1.0).abs() < 1e-12);
            assert_eq!(op.branch_count, 1);
        }
    }

    #[test]
    fn preset_keys_round_trip() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_key(p.key()).unwrap(), p);
            p.params().validate().unwrap();
        }
        assert!(Preset::from_key("nope").is_err());
    }
}
