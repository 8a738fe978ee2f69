//! Physical parameters of the hybrid cavity / two-resonator system and its
//! self-consistent steady state.
//!
//! The cavity mode couples to the displacement `q1` of MR1 through the
//! radiation-pressure term `hbar * g_cav * c†c * q1` (with `g_cav` in
//! rad s⁻¹ m⁻¹), and MR1 couples to MR2 through `hbar * g_coulomb * q1 * q2`.
//!
//! Two unit systems are supported. [`UnitMode::Si`] uses SI values throughout.
//! [`UnitMode::Dimensionless`] measures every rate in units of `omega1`, sets
//! `hbar = 1`, and takes the photon energy `hbar * omega_l` entering the
//! power-to-rate conversion as 1.

use num_complex::Complex64;
use serde::Serialize;

use crate::cubic::photon_number_roots;
use crate::error::{invalid, Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Perturbative-regime limit on `eps_p / |Omega_l|`.
pub const PERTURBATIVE_RATIO_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnitMode {
    Si,
    Dimensionless,
}

impl UnitMode {
    pub fn hbar(self) -> f64 {
        match self {
            UnitMode::Si => HBAR,
            UnitMode::Dimensionless => 1.0,
        }
    }
}

/// One mechanical resonator: effective mass, angular frequency and viscous
/// damping rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanicalMode {
    pub mass: f64,
    pub omega: f64,
    pub gamma: f64,
}

impl MechanicalMode {
    pub fn new(mass: f64, omega: f64, gamma: f64) -> Result<Self> {
        let mode = Self { mass, omega, gamma };
        mode.validate()?;
        Ok(mode)
    }

    /// Builds a mode from its quality factor `Q = omega / gamma`.
    pub fn with_quality(mass: f64, omega: f64, quality: f64) -> Result<Self> {
        if !(quality > 0.0) || !quality.is_finite() {
            return Err(invalid(format!(
                "quality factor must be positive, got {quality}"
            )));
        }
        Self::new(mass, omega, omega / quality)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(invalid(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(invalid(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(invalid(format!(
                "gamma must be nonnegative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// `omega / gamma`, or `None` for an undamped mode.
    pub fn quality_factor(&self) -> Option<f64> {
        (self.gamma > 0.0).then(|| self.omega / self.gamma)
    }

    /// `m * omega^2`.
    pub fn stiffness(&self) -> f64 {
        self.mass * self.omega * self.omega
    }
}

/// How the bare cavity detuning `Delta_c = omega_c - omega_l` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CavityDetuning {
    /// `Delta_c` given directly, rad/s.
    Explicit(f64),
    /// `Delta_c` chosen so that the effective detuning equals `omega1` once the
    /// radiation-pressure displacement is included.
    Locked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityParams {
    pub length: f64,
    pub pump_wavelength: f64,
    /// Amplitude decay rate, rad/s.
    pub kappa: f64,
    pub detuning: CavityDetuning,
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(invalid(format!(
                "cavity length must be positive, got {}",
                self.length
            )));
        }
        if !(self.pump_wavelength > 0.0) || !self.pump_wavelength.is_finite() {
            return Err(invalid(format!(
                "pump wavelength must be positive, got {}",
                self.pump_wavelength
            )));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(invalid(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if let CavityDetuning::Explicit(d) = self.detuning {
            if !d.is_finite() {
                return Err(invalid("cavity detuning must be finite"));
            }
        }
        Ok(())
    }

    /// Pump angular frequency `2 pi c / lambda`, rad/s.
    pub fn pump_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.pump_wavelength
    }

    /// Default frequency pull per unit displacement, `omega_c / L`, taking
    /// `omega_c ≈ omega_l`.
    pub fn default_g_cav(&self) -> f64 {
        self.pump_frequency() / self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    /// Radiation-pressure frequency pull, rad s⁻¹ m⁻¹.
    pub g_cav: f64,
    /// Coulomb coupling strength, rad s⁻¹ m⁻².
    pub g_coulomb: f64,
}

impl CouplingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g_cav >= 0.0) || !self.g_cav.is_finite() {
            return Err(invalid(format!(
                "g_cav must be nonnegative, got {}",
                self.g_cav
            )));
        }
        if !(self.g_coulomb >= 0.0) || !self.g_coulomb.is_finite() {
            return Err(invalid(format!(
                "g_coulomb must be nonnegative, got {}",
                self.g_coulomb
            )));
        }
        Ok(())
    }

    /// Displacement coupling expressed per zero-point length of MR1,
    /// `g_cav * sqrt(hbar / (m1 omega1))`. Display only.
    pub fn g_zpf(&self, mech1: &MechanicalMode, hbar: f64) -> f64 {
        self.g_cav * (hbar / (mech1.mass * mech1.omega)).sqrt()
    }
}

/// Coulomb coupling from electrode charges `C1 V1`, `C2 V2` at equilibrium
/// separation `x0` (SI): `C1 V1 C2 V2 / (2 pi hbar eps0 x0^3)`.
pub fn coulomb_from_charges(c1: f64, v1: f64, c2: f64, v2: f64, x0: f64) -> Result<f64> {
    if !(x0 > 0.0) {
        return Err(invalid("electrode separation must be positive"));
    }
    let g =
        c1 * v1 * c2 * v2 / (2.0 * std::f64::consts::PI * HBAR * VACUUM_PERMITTIVITY * x0.powi(3));
    if !(g >= 0.0) || !g.is_finite() {
        return Err(invalid(format!(
            "Coulomb coupling must be nonnegative, got {g}"
        )));
    }
    Ok(g)
}

/// A drive given either as optical power or directly as a rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Drive {
    /// Power in W (SI) or in units of `hbar omega_l omega1` (dimensionless).
    Power(f64),
    /// Rate `Omega_l` or `eps_p`, s⁻¹.
    Amplitude(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveParams {
    pub pump: Drive,
    pub probe: Drive,
}

/// `|Omega| = sqrt(2 kappa P / (hbar omega_l))` for a power drive; a rate drive
/// is passed through.
pub fn derive_drive_amplitude(
    drive: &Drive,
    cavity: &CavityParams,
    units: UnitMode,
) -> Result<f64> {
    match *drive {
        Drive::Power(p) => {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(invalid(format!("drive power must be nonnegative, got {p}")));
            }
            let photon_energy = match units {
                UnitMode::Si => HBAR * cavity.pump_frequency(),
                UnitMode::Dimensionless => 1.0,
            };
            Ok((2.0 * cavity.kappa * p / photon_energy).sqrt())
        }
        Drive::Amplitude(a) => {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(invalid(format!("drive rate must be nonnegative, got {a}")));
            }
            Ok(a)
        }
    }
}

pub fn derive_pump_amplitude(
    drive: &DriveParams,
    cavity: &CavityParams,
    units: UnitMode,
) -> Result<f64> {
    derive_drive_amplitude(&drive.pump, cavity, units)
}

pub fn derive_probe_amplitude(
    drive: &DriveParams,
    cavity: &CavityParams,
    units: UnitMode,
) -> Result<f64> {
    derive_drive_amplitude(&drive.probe, cavity, units)
}

/// Complete description of one configuration of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    pub units: UnitMode,
    pub cavity: CavityParams,
    pub mech1: MechanicalMode,
    pub mech2: MechanicalMode,
    pub coupling: CouplingParams,
    pub drive: DriveParams,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        self.mech1.validate()?;
        self.mech2.validate()?;
        self.coupling.validate()?;
        self.pump_amplitude()?;
        self.probe_amplitude()?;
        if self.units == UnitMode::Dimensionless && self.mech1.omega != 1.0 {
            return Err(invalid(format!(
                "dimensionless mode requires mech1 omega = 1, got {}",
                self.mech1.omega
            )));
        }
        Ok(())
    }

    pub fn hbar(&self) -> f64 {
        self.units.hbar()
    }

    pub fn pump_amplitude(&self) -> Result<f64> {
        derive_pump_amplitude(&self.drive, &self.cavity, self.units)
    }

    pub fn probe_amplitude(&self) -> Result<f64> {
        derive_probe_amplitude(&self.drive, &self.cavity, self.units)
    }

    /// `eps_p / |Omega_l|` (infinite when the pump is off and the probe is not).
    pub fn probe_to_pump_ratio(&self) -> Result<f64> {
        let pump = self.pump_amplitude()?;
        let probe = self.probe_amplitude()?;
        Ok(if probe == 0.0 { 0.0 } else { probe / pump })
    }

    /// Warning text when the probe is too strong for the linear-response
    /// treatment.
    pub fn perturbative_warning(&self) -> Option<String> {
        match self.probe_to_pump_ratio() {
            Ok(r) if r > PERTURBATIVE_RATIO_LIMIT => Some(format!(
                "perturbative regime violated: eps_p/Omega_l = {r:.3e} > {PERTURBATIVE_RATIO_LIMIT}"
            )),
            _ => None,
        }
    }

    pub fn effective_stiffness(&self) -> Result<f64> {
        effective_stiffness(&self.mech1, &self.mech2, &self.coupling, self.hbar())
    }
}

/// `K = m1 omega1^2 - hbar^2 g_coulomb^2 / (m2 omega2^2)`; errors when `K <= 0`.
pub fn effective_stiffness(
    mech1: &MechanicalMode,
    mech2: &MechanicalMode,
    coupling: &CouplingParams,
    hbar: f64,
) -> Result<f64> {
    let hg = hbar * coupling.g_coulomb;
    let k = mech1.stiffness() - hg * hg / mech2.stiffness();
    if !(k > 0.0) {
        return Err(Error::StaticInstability { stiffness: k });
    }
    Ok(k)
}

/// Self-consistent steady state of the pumped system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub q1s: f64,
    pub q2s: f64,
    pub cs: Complex64,
    pub photon_number: f64,
    /// Effective detuning `Delta = Delta_c - g_cav q1s`, rad/s.
    pub delta_eff: f64,
    /// Bare cavity detuning actually used (resolved for locked mode), rad/s.
    pub delta_c: f64,
    /// Pump rate `Omega_l`, s⁻¹.
    pub pump: f64,
    /// Effective stiffness `K`.
    pub stiffness: f64,
    /// Number of distinct real nonnegative photon-number roots.
    pub branch_count: usize,
}

impl OperatingPoint {
    /// `|n (kappa^2 + Delta^2) - Omega_l^2| / max(Omega_l^2, 1)`.
    pub fn relative_residual(&self, kappa: f64) -> f64 {
        let n = self.photon_number;
        let lhs = n * (kappa * kappa + self.delta_eff * self.delta_eff);
        let rhs = self.pump * self.pump;
        (lhs - rhs).abs() / rhs.max(1.0)
    }
}

/// Photon-number shift per photon, `hbar g_cav^2 / K`, rad/s.
fn detuning_pull(params: &SystemParams, stiffness: f64) -> f64 {
    params.hbar() * params.coupling.g_cav * params.coupling.g_cav / stiffness
}

/// All real nonnegative photon numbers solving the fixed point
/// `n (kappa^2 + (Delta_c - hbar g_cav^2 n / K)^2) = Omega_l^2`, ascending.
///
/// For [`CavityDetuning::Locked`] the detuning is first resolved so that the
/// locked solution has `Delta = omega1`.
pub fn steady_state_branches(params: &SystemParams) -> Result<Vec<f64>> {
    params.validate()?;
    let k = params.effective_stiffness()?;
    let pump = params.pump_amplitude()?;
    let eta = detuning_pull(params, k);
    let delta_c = resolved_cavity_detuning(params, pump, eta);
    Ok(photon_number_roots(
        params.cavity.kappa,
        delta_c,
        eta,
        pump * pump,
    ))
}

fn locked_photon_number(params: &SystemParams, pump: f64) -> f64 {
    let kappa = params.cavity.kappa;
    let w1 = params.mech1.omega;
    pump * pump / (kappa * kappa + w1 * w1)
}

fn resolved_cavity_detuning(params: &SystemParams, pump: f64, eta: f64) -> f64 {
    match params.cavity.detuning {
        CavityDetuning::Explicit(d) => d,
        CavityDetuning::Locked => params.mech1.omega + eta * locked_photon_number(params, pump),
    }
}

/// Solves the steady state, selecting the lowest photon-number branch (the one
/// reached adiabatically from zero pump). In locked mode the selected branch is
/// the one with `Delta = omega1`.
pub fn solve_steady_state(params: &SystemParams) -> Result<OperatingPoint> {
    params.validate()?;
    let stiffness = params.effective_stiffness()?;
    let pump = params.pump_amplitude()?;
    let kappa = params.cavity.kappa;
    let eta = detuning_pull(params, stiffness);
    let delta_c = resolved_cavity_detuning(params, pump, eta);
    let roots = photon_number_roots(kappa, delta_c, eta, pump * pump);
    assert!(
        !roots.is_empty(),
        "steady-state cubic has no nonnegative root for valid inputs"
    );

    let n = match params.cavity.detuning {
        CavityDetuning::Explicit(_) => roots[0],
        CavityDetuning::Locked => locked_photon_number(params, pump),
    };

    let hbar = params.hbar();
    let q1s = hbar * params.coupling.g_cav * n / stiffness;
    let q2s = -hbar * params.coupling.g_coulomb * q1s / params.mech2.stiffness();
    let delta_eff = match params.cavity.detuning {
        CavityDetuning::Explicit(_) => delta_c - params.coupling.g_cav * q1s,
        CavityDetuning::Locked => params.mech1.omega,
    };
    let cs = Complex64::new(pump, 0.0) / Complex64::new(kappa, delta_eff);

    Ok(OperatingPoint {
        q1s,
        q2s,
        cs,
        photon_number: n,
        delta_eff,
        delta_c,
        pump,
        stiffness,
        branch_count: roots.len(),
    })
}
