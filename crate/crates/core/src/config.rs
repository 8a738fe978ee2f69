//! Line-oriented configuration files.
//!
//! ```text
//! preset = paper-2012          # optional, applied in file order
//! units = si                   # or dimensionless
//!
//! [cavity]
//! kappa = 215 kHz
//! detuning = locked            # or a frequency
//!
//! [sweep]
//! scenario = spectrum
//! axis = delta_bar, -200 kHz, 200 kHz, 4001, linear
//! ```
//!
//! Every physical value carries a unit. `Hz`, `kHz` and `MHz` are ordinary
//! frequencies and are multiplied by `2 pi`; `rad_s` is taken as is. The
//! couplings use the frequency part of their unit, so `g_coulomb = 8 MHz`
//! means `2 pi 8e6` rad s⁻¹ m⁻². In dimensionless mode every value is written
//! with the `dimensionless` suffix.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::model::{
    CavityDetuning, CavityParams, CouplingParams, Drive, DriveParams, MechanicalMode, SystemParams,
    UnitMode,
};
use crate::presets::Preset;
use crate::response::Convention;
use crate::sweep::{Axis, AxisName, Scenario, Spacing, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Rate,
    Length,
    Mass,
    Power,
    Ratio,
}

impl Kind {
    fn describe(self) -> &'static str {
        match self {
            Kind::Rate => "a frequency (Hz, kHz, MHz or rad_s)",
            Kind::Length => "a length (m, mm or nm)",
            Kind::Mass => "a mass (ng or kg)",
            Kind::Power => "a power (uW or W)",
            Kind::Ratio => "a ratio (dimensionless)",
        }
    }

    fn factor(self, unit: &str) -> Option<f64> {
        match (self, unit) {
            (Kind::Rate, "Hz") => Some(2.0 * PI),
            (Kind::Rate, "kHz") => Some(2.0 * PI * 1e3),
            (Kind::Rate, "MHz") => Some(2.0 * PI * 1e6),
            (Kind::Rate, "rad_s") => Some(1.0),
            (Kind::Length, "m") => Some(1.0),
            (Kind::Length, "mm") => Some(1e-3),
            (Kind::Length, "nm") => Some(1e-9),
            (Kind::Mass, "kg") => Some(1.0),
            (Kind::Mass, "ng") => Some(1e-12),
            (Kind::Power, "W") => Some(1.0),
            (Kind::Power, "uW") => Some(1e-6),
            (Kind::Ratio, "dimensionless") => Some(1.0),
            _ => None,
        }
    }
}

const UNITS: [&str; 12] = [
    "Hz",
    "kHz",
    "MHz",
    "rad_s",
    "m",
    "mm",
    "nm",
    "ng",
    "kg",
    "uW",
    "W",
    "dimensionless",
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum ProbeEntry {
    Drive(Drive),
    Ratio(f64),
}

#[derive(Debug, Default, Clone, Copy)]
struct MechEntry {
    mass: Option<f64>,
    omega: Option<f64>,
    gamma: Option<f64>,
    quality: Option<f64>,
}

#[derive(Debug, Default)]
struct Builder {
    units: Option<UnitMode>,
    kappa: Option<f64>,
    detuning: Option<CavityDetuning>,
    length: Option<f64>,
    wavelength: Option<f64>,
    mech: [MechEntry; 2],
    g_cav: Option<f64>,
    g_coulomb: Option<f64>,
    pump: Option<Drive>,
    probe: Option<ProbeEntry>,
    spec: Option<SweepSpec>,
    lines: HashMap<&'static str, usize>,
}

impl Builder {
    fn load_preset(&mut self, preset: Preset) {
        let p = preset.params();
        self.units = Some(p.units);
        self.kappa = Some(p.cavity.kappa);
        self.detuning = Some(p.cavity.detuning);
        self.length = Some(p.cavity.length);
        self.wavelength = Some(p.cavity.pump_wavelength);
        for (entry, m) in self.mech.iter_mut().zip([p.mech1, p.mech2]) {
            *entry = MechEntry {
                mass: Some(m.mass),
                omega: Some(m.omega),
                gamma: Some(m.gamma),
                quality: None,
            };
        }
        // SI presets use the default cavity pull, which follows later edits
        // of the cavity length or wavelength.
        self.g_cav = match p.units {
            UnitMode::Si => None,
            UnitMode::Dimensionless => Some(p.coupling.g_cav),
        };
        self.g_coulomb = Some(p.coupling.g_coulomb);
        self.pump = Some(p.drive.pump);
        self.probe = Some(ProbeEntry::Drive(p.drive.probe));
    }

    fn units(&self) -> UnitMode {
        self.units.unwrap_or(UnitMode::Si)
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn quantity(text: &str, kind: Kind, units: UnitMode, line: usize) -> Result<f64> {
    let mut parts = text.split_whitespace();
    let number = parts
        .next()
        .ok_or_else(|| parse_error(line, "missing value"))?;
    let Some(unit) = parts.next() else {
        return Err(parse_error(
            line,
            format!("`{text}` has no unit; expected {}", kind.describe()),
        ));
    };
    if parts.next().is_some() {
        return Err(parse_error(
            line,
            format!("unexpected text after `{number} {unit}`"),
        ));
    }
    let value: f64 = number
        .parse()
        .map_err(|_| parse_error(line, format!("`{number}` is not a number")))?;
    if !value.is_finite() {
        return Err(parse_error(line, format!("`{number}` is not finite")));
    }
    if !UNITS.contains(&unit) {
        return Err(parse_error(line, format!("unknown unit `{unit}`")));
    }
    if units == UnitMode::Dimensionless && kind != Kind::Ratio {
        return if unit == "dimensionless" {
            Ok(value)
        } else {
            Err(parse_error(
                line,
                format!("unit `{unit}` is not allowed in dimensionless mode; use `dimensionless`"),
            ))
        };
    }
    let factor = kind
        .factor(unit)
        .ok_or_else(|| parse_error(line, format!("unit `{unit}` is not {}", kind.describe())))?;
    Ok(value * factor)
}

fn positive(v: f64, what: &str, line: usize) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(parse_error(
            line,
            format!("{what} must be positive, got {v}"),
        ))
    }
}

fn nonnegative(v: f64, what: &str, line: usize) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(parse_error(
            line,
            format!("{what} must be nonnegative, got {v}"),
        ))
    }
}

fn axis_kind(name: AxisName) -> Kind {
    match name {
        AxisName::PumpPower => Kind::Power,
        _ => Kind::Rate,
    }
}

fn parse_axis(text: &str, units: UnitMode, line: usize) -> Result<Axis> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    let [name, min, max, points, spacing] = fields.as_slice() else {
        return Err(parse_error(
            line,
            "axis needs `name, min unit, max unit, points, spacing`",
        ));
    };
    let name = AxisName::from_key(name).map_err(|e| parse_error(line, e.to_string()))?;
    let kind = axis_kind(name);
    let axis = Axis {
        name,
        min: quantity(min, kind, units, line)?,
        max: quantity(max, kind, units, line)?,
        points: points
            .parse()
            .map_err(|_| parse_error(line, format!("`{points}` is not a point count")))?,
        spacing: Spacing::from_key(spacing).map_err(|e| parse_error(line, e.to_string()))?,
    };
    axis.validate()
        .map_err(|e| parse_error(line, e.to_string()))?;
    Ok(axis)
}

/// Parses a configuration into a validated parameter set and sweep.
pub fn parse_config(text: &str) -> Result<(SystemParams, SweepSpec)> {
    let mut b = Builder::default();
    let mut section: Option<&'static str> = None;
    let mut last_line = 0;

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_error(line, format!("malformed section header `{content}`")))?
                .trim();
            section = Some(match name {
                "cavity" => "cavity",
                "mech1" => "mech1",
                "mech2" => "mech2",
                "coupling" => "coupling",
                "drive" => "drive",
                "sweep" => "sweep",
                _ => return Err(parse_error(line, format!("unknown section `[{name}]`"))),
            });
            if section == Some("sweep") && b.spec.is_none() {
                b.spec = Some(SweepSpec::new(Scenario::Spectrum));
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_error(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let units = b.units();
        let q = |kind: Kind| quantity(value, kind, units, line);

        let slot: &'static str = match (section, key) {
            (None, "preset") => {
                let preset =
                    Preset::from_key(value).map_err(|e| parse_error(line, e.to_string()))?;
                b.load_preset(preset);
                "preset"
            }
            (None, "units") => {
                b.units = Some(match value {
                    "si" => UnitMode::Si,
                    "dimensionless" => UnitMode::Dimensionless,
                    _ => {
                        return Err(parse_error(
                            line,
                            format!("units must be `si` or `dimensionless`, got `{value}`"),
                        ))
                    }
                });
                "units"
            }
            (Some("cavity"), "kappa") => {
                b.kappa = Some(positive(q(Kind::Rate)?, "kappa", line)?);
                "cavity.kappa"
            }
            (Some("cavity"), "detuning") => {
                b.detuning = Some(if value == "locked" {
                    CavityDetuning::Locked
                } else {
                    CavityDetuning::Explicit(q(Kind::Rate)?)
                });
                "cavity.detuning"
            }
            (Some("cavity"), "length") => {
                b.length = Some(positive(
                    quantity(value, Kind::Length, units, line)?,
                    "length",
                    line,
                )?);
                "cavity.length"
            }
            (Some("cavity"), "pump_wavelength") => {
                b.wavelength = Some(positive(q(Kind::Length)?, "pump_wavelength", line)?);
                "cavity.pump_wavelength"
            }
            (Some(m @ ("mech1" | "mech2")), _) => {
                let entry = &mut b.mech[usize::from(m == "mech2")];
                match key {
                    "mass" => entry.mass = Some(positive(q(Kind::Mass)?, "mass", line)?),
                    "omega" => entry.omega = Some(positive(q(Kind::Rate)?, "omega", line)?),
                    "gamma" => {
                        entry.gamma = Some(nonnegative(q(Kind::Rate)?, "gamma", line)?);
                        entry.quality = None;
                    }
                    "quality" => {
                        entry.quality = Some(positive(q(Kind::Ratio)?, "quality", line)?);
                        entry.gamma = None;
                    }
                    _ => return Err(parse_error(line, format!("unknown key `{key}` in [{m}]"))),
                }
                match (m, key) {
                    ("mech1", "omega") => "mech1.omega",
                    ("mech1", _) => "mech1",
                    _ => "mech2",
                }
            }
            (Some("coupling"), "g_cav") => {
                b.g_cav = Some(nonnegative(q(Kind::Rate)?, "g_cav", line)?);
                "coupling"
            }
            (Some("coupling"), "g_coulomb") => {
                b.g_coulomb = Some(nonnegative(q(Kind::Rate)?, "g_coulomb", line)?);
                "coupling"
            }
            (Some("drive"), "pump_power") => {
                b.pump = Some(Drive::Power(nonnegative(
                    q(Kind::Power)?,
                    "pump_power",
                    line,
                )?));
                "drive"
            }
            (Some("drive"), "pump_rate") => {
                b.pump = Some(Drive::Amplitude(nonnegative(
                    q(Kind::Rate)?,
                    "pump_rate",
                    line,
                )?));
                "drive"
            }
            (Some("drive"), "probe_power") => {
                b.probe = Some(ProbeEntry::Drive(Drive::Power(nonnegative(
                    q(Kind::Power)?,
                    "probe_power",
                    line,
                )?)));
                "drive"
            }
            (Some("drive"), "probe_rate") => {
                b.probe = Some(ProbeEntry::Drive(Drive::Amplitude(nonnegative(
                    q(Kind::Rate)?,
                    "probe_rate",
                    line,
                )?)));
                "drive"
            }
            (Some("drive"), "probe_ratio") => {
                b.probe = Some(ProbeEntry::Ratio(nonnegative(
                    q(Kind::Ratio)?,
                    "probe_ratio",
                    line,
                )?));
                "drive"
            }
            (Some("sweep"), _) => {
                let spec = b.spec.as_mut().expect("sweep spec exists inside [sweep]");
                match key {
                    "scenario" => {
                        spec.scenario = Scenario::from_key(value)
                            .map_err(|e| parse_error(line, e.to_string()))?
                    }
                    "axis" => spec.axes.push(parse_axis(value, units, line)?),
                    "convention" => {
                        spec.convention = Convention::from_key(value)
                            .map_err(|e| parse_error(line, e.to_string()))?
                    }
                    "eval_delta_bar" => spec.eval_delta_bar = q(Kind::Rate)?,
                    "output" => spec.output = Some(PathBuf::from(value)),
                    _ => return Err(parse_error(line, format!("unknown key `{key}` in [sweep]"))),
                }
                "sweep"
            }
            (None, _) => return Err(parse_error(line, format!("unknown top-level key `{key}`"))),
            (Some(s), _) => return Err(parse_error(line, format!("unknown key `{key}` in [{s}]"))),
        };
        b.lines.insert(slot, line);
    }

    finish(b, last_line)
}

fn finish(b: Builder, last_line: usize) -> Result<(SystemParams, SweepSpec)> {
    let end = last_line.max(1);
    let missing = |what: &str| parse_error(end, format!("missing required value `{what}`"));
    let at = |slot: &str| b.lines.get(slot).copied().unwrap_or(end);
    let units = b.units();

    let (length, wavelength) = match units {
        UnitMode::Si => (
            b.length.ok_or_else(|| missing("cavity.length"))?,
            b.wavelength
                .ok_or_else(|| missing("cavity.pump_wavelength"))?,
        ),
        UnitMode::Dimensionless => (b.length.unwrap_or(1.0), b.wavelength.unwrap_or(1.0)),
    };
    let cavity = CavityParams {
        length,
        pump_wavelength: wavelength,
        kappa: b.kappa.ok_or_else(|| missing("cavity.kappa"))?,
        detuning: b.detuning.ok_or_else(|| missing("cavity.detuning"))?,
    };

    let mut mechs = [MechanicalMode {
        mass: 0.0,
        omega: 0.0,
        gamma: 0.0,
    }; 2];
    for (i, e) in b.mech.iter().enumerate() {
        let name = ["mech1", "mech2"][i];
        let omega = e.omega.ok_or_else(|| missing(&format!("{name}.omega")))?;
        let gamma = match (e.gamma, e.quality) {
            (Some(g), _) => g,
            (None, Some(q)) => omega / q,
            (None, None) => return Err(missing(&format!("{name}.gamma or {name}.quality"))),
        };
        mechs[i] = MechanicalMode {
            mass: e.mass.ok_or_else(|| missing(&format!("{name}.mass")))?,
            omega,
            gamma,
        };
    }

    let g_cav = match (b.g_cav, units) {
        (Some(g), _) => g,
        (None, UnitMode::Si) => cavity.default_g_cav(),
        (None, UnitMode::Dimensionless) => return Err(missing("coupling.g_cav")),
    };
    let coupling = CouplingParams {
        g_cav,
        g_coulomb: b.g_coulomb.unwrap_or(0.0),
    };
    let pump = b
        .pump
        .ok_or_else(|| missing("drive.pump_power or drive.pump_rate"))?;
    let mut params = SystemParams {
        units,
        cavity,
        mech1: mechs[0],
        mech2: mechs[1],
        coupling,
        drive: DriveParams {
            pump,
            probe: Drive::Amplitude(0.0),
        },
    };
    params.drive.probe = match b.probe {
        None => Drive::Amplitude(0.0),
        Some(ProbeEntry::Drive(d)) => d,
        Some(ProbeEntry::Ratio(r)) => Drive::Amplitude(
            r * params
                .pump_amplitude()
                .map_err(|e| parse_error(at("drive"), e.to_string()))?,
        ),
    };

    if units == UnitMode::Dimensionless && params.mech1.omega != 1.0 {
        return Err(parse_error(
            at("mech1.omega"),
            format!(
                "dimensionless mode requires mech1 omega = 1, got {}",
                params.mech1.omega
            ),
        ));
    }
    params
        .validate()
        .map_err(|e| parse_error(end, e.to_string()))?;
    // Instability is a property of the system, not of the file, so it keeps its own error.
    params.effective_stiffness()?;

    let spec = b.spec.unwrap_or_else(|| SweepSpec::new(Scenario::Spectrum));
    spec.validate()
        .map_err(|e| parse_error(at("sweep"), e.to_string()))?;
    Ok((params, spec))
}

/// Canonical text that parses back to exactly `params` and `spec`. The output
/// path is omitted so that the text does not depend on where results go.
pub fn render_config(params: &SystemParams, spec: &SweepSpec) -> String {
    let dimensionless = params.units == UnitMode::Dimensionless;
    let v = |x: f64, si_unit: &str| -> String {
        let unit = if dimensionless {
            "dimensionless"
        } else {
            si_unit
        };
        format!("{x:e} {unit}")
    };
    let rate = |x: f64| v(x, "rad_s");
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!(
        "units = {}",
        if dimensionless { "dimensionless" } else { "si" }
    ));
    line(String::new());
    line("[cavity]".into());
    line(format!("kappa = {}", rate(params.cavity.kappa)));
    line(match params.cavity.detuning {
        CavityDetuning::Locked => "detuning = locked".into(),
        CavityDetuning::Explicit(d) => format!("detuning = {}", rate(d)),
    });
    line(format!("length = {}", v(params.cavity.length, "m")));
    line(format!(
        "pump_wavelength = {}",
        v(params.cavity.pump_wavelength, "m")
    ));
    for (name, m) in [("mech1", &params.mech1), ("mech2", &params.mech2)] {
        line(String::new());
        line(format!("[{name}]"));
        line(format!("mass = {}", v(m.mass, "kg")));
        line(format!("omega = {}", rate(m.omega)));
        line(format!("gamma = {}", rate(m.gamma)));
    }
    line(String::new());
    line("[coupling]".into());
    line(format!("g_cav = {}", rate(params.coupling.g_cav)));
    line(format!("g_coulomb = {}", rate(params.coupling.g_coulomb)));
    line(String::new());
    line("[drive]".into());
    for (name, d) in [("pump", params.drive.pump), ("probe", params.drive.probe)] {
        line(match d {
            Drive::Power(p) => format!("{name}_power = {}", v(p, "W")),
            Drive::Amplitude(a) => format!("{name}_rate = {}", rate(a)),
        });
    }
    line(String::new());
    line("[sweep]".into());
    line(format!("scenario = {}", spec.scenario.key()));
    line(format!("convention = {}", spec.convention.key()));
    line(format!("eval_delta_bar = {}", rate(spec.eval_delta_bar)));
    for a in &spec.axes {
        let unit = if a.name == AxisName::PumpPower {
            "W"
        } else {
            "rad_s"
        };
        line(format!(
            "axis = {}, {}, {}, {}, {}",
            a.name.key(),
            v(a.min, unit),
            v(a.max, unit),
            a.points,
            a.spacing.key()
        ));
    }
    out
}
