//! Parameter sweeps over one or two axes.
//!
//! Every grid point gets its own steady state. Points are evaluated in
//! parallel on the current rayon pool and collected in row-major order over
//! the axes as declared, so the output never depends on the thread count.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::model::{solve_steady_state, Drive, OperatingPoint, SystemParams};
use crate::response::{
    group_delay, phase, transmission, unwrap_samples, Convention, DelayMethod, ResponseSample,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Spectrum,
    Phase,
    DelayVsPower,
    DelayVsKappa,
    SplittingVsGc,
    Validate,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Spectrum,
        Scenario::Phase,
        Scenario::DelayVsPower,
        Scenario::DelayVsKappa,
        Scenario::SplittingVsGc,
        Scenario::Validate,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Phase => "phase",
            Scenario::DelayVsPower => "delay-vs-power",
            Scenario::DelayVsKappa => "delay-vs-kappa",
            Scenario::SplittingVsGc => "splitting-vs-gc",
            Scenario::Validate => "validate",
        }
    }

    pub fn from_key(key: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.key() == key)
            .ok_or_else(|| invalid(format!("unknown scenario `{key}`")))
    }

    pub fn is_delay(self) -> bool {
        matches!(self, Scenario::DelayVsPower | Scenario::DelayVsKappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisName {
    /// Probe detuning from line center, `delta - omega1`.
    DeltaBar,
    /// Pump power.
    PumpPower,
    /// Pump rate `Omega_l`.
    PumpRate,
    GCoulomb,
    Kappa,
    GCav,
}

impl AxisName {
    pub const ALL: [AxisName; 6] = [
        AxisName::DeltaBar,
        AxisName::PumpPower,
        AxisName::PumpRate,
        AxisName::GCoulomb,
        AxisName::Kappa,
        AxisName::GCav,
    ];

    pub fn key(self) -> &'static str {
        match self {
            AxisName::DeltaBar => "delta_bar",
            AxisName::PumpPower => "P_l",
            AxisName::PumpRate => "Omega_l",
            AxisName::GCoulomb => "g_coulomb",
            AxisName::Kappa => "kappa",
            AxisName::GCav => "g_cav",
        }
    }

    pub fn from_key(key: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.key() == key)
            .ok_or_else(|| invalid(format!("unknown axis `{key}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl Spacing {
    pub fn key(self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    }

    pub fn from_key(key: &str) -> Result<Self> {
        match key {
            "linear" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            _ => Err(invalid(format!("unknown spacing `{key}`"))),
        }
    }
}

/// One swept parameter; `min`/`max` are in internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(invalid(format!(
                "axis {} range must be finite",
                self.name.key()
            )));
        }
        if self.points < 2 {
            return Err(invalid(format!(
                "axis {} needs at least 2 points",
                self.name.key()
            )));
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0 && self.max > 0.0) {
            return Err(invalid(format!(
                "log axis {} needs a positive range",
                self.name.key()
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i + 1 == self.points {
                    return self.max;
                }
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + f * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub axes: Vec<Axis>,
    pub convention: Convention,
    /// Probe detuning used when no `delta_bar` axis is swept, rad/s.
    pub eval_delta_bar: f64,
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            axes: Vec::new(),
            convention: Convention::default(),
            eval_delta_bar: 0.0,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.len() > 2 {
            return Err(invalid("at most two sweep axes are supported"));
        }
        for a in &self.axes {
            a.validate()?;
        }
        if self.axes.len() == 2 && self.axes[0].name == self.axes[1].name {
            return Err(invalid("sweep axes must be distinct"));
        }
        if !self.eval_delta_bar.is_finite() {
            return Err(invalid("eval_delta_bar must be finite"));
        }
        let has = |n: AxisName| self.axes.iter().any(|a| a.name == n);
        match self.scenario {
            Scenario::Phase => {
                if self.axes.last().map(|a| a.name) != Some(AxisName::DeltaBar) {
                    return Err(invalid("phase scenario needs delta_bar as its last axis"));
                }
                if self.axes[self.axes.len() - 1].points < 3 {
                    return Err(invalid("phase scenario needs at least 3 detuning points"));
                }
            }
            Scenario::DelayVsPower | Scenario::DelayVsKappa | Scenario::SplittingVsGc
                if has(AxisName::DeltaBar) =>
            {
                return Err(invalid(format!(
                    "{} evaluates its own detunings; remove the delta_bar axis",
                    self.scenario.key()
                )));
            }
            Scenario::DelayVsPower if has(AxisName::Kappa) => {
                return Err(invalid(
                    "delay-vs-power cannot sweep kappa; use delay-vs-kappa",
                ));
            }
            Scenario::Validate if !self.axes.is_empty() => {
                return Err(invalid("validate scenario takes no axes"));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    /// Printed without a fractional part.
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// One value per column; `NaN` where the point failed.
    pub values: Vec<f64>,
    /// Error code of a failed point.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub params: SystemParams,
    pub spec: SweepSpec,
    pub columns: Vec<Column>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Values of one column, in row order.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }
}

/// Half-width of the inner detuning grid of the splitting scenario, in units
/// of `omega1`.
pub const SPLITTING_HALF_WIDTH: f64 = 0.2;
pub const SPLITTING_POINTS: usize = 4001;

/// Number of strict interior local maxima of `values`, with their indices.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect()
}

/// Positions of the two tallest maxima (ascending) of the transmission over
/// the inner grid, and the number of maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splitting {
    pub peak_count: usize,
    pub peak_lo: f64,
    pub peak_hi: f64,
    pub separation: f64,
}

pub fn splitting(
    params: &SystemParams,
    op: &OperatingPoint,
    convention: Convention,
) -> Result<Splitting> {
    let w1 = params.mech1.omega;
    let grid = centered_grid(w1, SPLITTING_HALF_WIDTH * w1, SPLITTING_POINTS);
    let t: Vec<f64> = grid
        .iter()
        .map(|&d| transmission(d, params, op, convention).map(|s| s.transmission))
        .collect::<Result<_>>()?;
    let maxima = local_maxima(&t);
    let mut tallest = maxima.clone();
    tallest.sort_by(|&a, &b| t[b].total_cmp(&t[a]).then(a.cmp(&b)));
    tallest.truncate(2);
    tallest.sort_unstable();
    let (lo, hi) = match tallest.as_slice() {
        [] => (f64::NAN, f64::NAN),
        [only] => (grid[*only] - w1, grid[*only] - w1),
        [a, b, ..] => (grid[*a] - w1, grid[*b] - w1),
    };
    Ok(Splitting {
        peak_count: maxima.len(),
        peak_lo: lo,
        peak_hi: hi,
        separation: hi - lo,
    })
}

/// `points` values spanning `center ± half_width`.
pub fn centered_grid(center: f64, half_width: f64, points: usize) -> Vec<f64> {
    Axis {
        name: AxisName::DeltaBar,
        min: -half_width,
        max: half_width,
        points,
        spacing: Spacing::Linear,
    }
    .values()
    .into_iter()
    .map(|d| center + d)
    .collect()
}

/// Applies one axis value to a copy of `params`. `delta_bar` is not a system
/// parameter and is handled by the caller.
pub fn apply_axis(params: &SystemParams, axis: AxisName, value: f64) -> SystemParams {
    let mut p = *params;
    match axis {
        AxisName::DeltaBar => {}
        AxisName::PumpPower => p.drive.pump = Drive::Power(value),
        AxisName::PumpRate => p.drive.pump = Drive::Amplitude(value),
        AxisName::GCoulomb => p.coupling.g_coulomb = value,
        AxisName::Kappa => p.cavity.kappa = value,
        AxisName::GCav => p.coupling.g_cav = value,
    }
    p
}

const SAMPLE_COLUMNS: [&str; 12] = [
    "delta",
    "delta_bar",
    "re_x",
    "im_x",
    "re_t",
    "im_t",
    "transmission",
    "phase",
    "transmission_paper_corrected",
    "phase_paper_corrected",
    "transmission_intracavity",
    "phase_intracavity",
];
const OPERATING_COLUMNS: [&str; 3] = ["photon_number", "delta_eff", "branch_count"];

fn columns_for(spec: &SweepSpec) -> Vec<Column> {
    let real = |n: &str| Column {
        name: n.to_string(),
        integer: false,
    };
    let mut cols: Vec<Column> = spec.axes.iter().map(|a| real(a.name.key())).collect();
    match spec.scenario {
        Scenario::SplittingVsGc => {
            cols.push(Column {
                name: "peak_count".into(),
                integer: true,
            });
            cols.extend(["peak_lo", "peak_hi", "separation"].map(real));
        }
        _ => {
            cols.extend(SAMPLE_COLUMNS.map(real));
            if spec.scenario.is_delay() {
                cols.extend(["tau_g_fd", "tau_g_analytic"].map(real));
            }
        }
    }
    cols.extend(OPERATING_COLUMNS.map(|n| Column {
        name: n.to_string(),
        integer: n == "branch_count",
    }));
    cols
}

fn sample_values(s: &ResponseSample) -> [f64; 12] {
    [
        s.delta,
        s.delta_bar,
        s.x.re,
        s.x.im,
        s.t_p.re,
        s.t_p.im,
        s.transmission,
        s.phase,
        s.t_paper_corrected.norm_sqr(),
        s.t_paper_corrected.arg(),
        s.t_intracavity.norm_sqr(),
        s.t_intracavity.arg(),
    ]
}

/// All grid points as (axis values) in row-major order.
fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        let values = axis.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

struct Point {
    params: SystemParams,
    delta: f64,
}

fn resolve_point(params: &SystemParams, spec: &SweepSpec, values: &[f64]) -> Point {
    let mut p = *params;
    let mut delta_bar = spec.eval_delta_bar;
    for (axis, &v) in spec.axes.iter().zip(values) {
        if axis.name == AxisName::DeltaBar {
            delta_bar = v;
        } else {
            p = apply_axis(&p, axis.name, v);
        }
    }
    Point {
        delta: p.mech1.omega + delta_bar,
        params: p,
    }
}

fn evaluate_point(point: &Point, spec: &SweepSpec) -> Result<(Vec<f64>, OperatingPoint)> {
    let op = solve_steady_state(&point.params)?;
    let conv = spec.convention;
    let values = match spec.scenario {
        Scenario::SplittingVsGc => {
            let s = splitting(&point.params, &op, conv)?;
            vec![s.peak_count as f64, s.peak_lo, s.peak_hi, s.separation]
        }
        _ => {
            let sample = transmission(point.delta, &point.params, &op, conv)?;
            let mut v = sample_values(&sample).to_vec();
            if spec.scenario.is_delay() {
                v.push(group_delay(
                    point.delta,
                    &point.params,
                    &op,
                    conv,
                    DelayMethod::FiniteDifference,
                )?);
                v.push(group_delay(
                    point.delta,
                    &point.params,
                    &op,
                    conv,
                    DelayMethod::Analytic,
                )?);
            }
            v
        }
    };
    Ok((values, op))
}

fn operating_values(op: &OperatingPoint) -> [f64; 3] {
    [op.photon_number, op.delta_eff, op.branch_count as f64]
}

/// Runs the sweep on the current rayon pool.
pub fn run_sweep(params: &SystemParams, spec: &SweepSpec) -> Result<SweepResult> {
    params.validate()?;
    spec.validate()?;
    if spec.scenario == Scenario::Validate {
        return Err(invalid(
            "the validate scenario is run by the validation module",
        ));
    }
    let columns = columns_for(spec);
    let points = grid_points(&spec.axes);
    let n_axes = spec.axes.len();
    let n_cols = columns.len();

    let mut rows: Vec<SweepRow> = points
        .par_iter()
        .map(|values| {
            let point = resolve_point(params, spec, values);
            let mut row = values.clone();
            match evaluate_point(&point, spec) {
                Ok((v, op)) => {
                    row.extend(v);
                    row.extend(operating_values(&op));
                    SweepRow {
                        values: row,
                        error: None,
                    }
                }
                Err(e) => {
                    row.resize(n_cols, f64::NAN);
                    SweepRow {
                        values: row,
                        error: Some(e.code().to_string()),
                    }
                }
            }
        })
        .collect();

    if spec.scenario == Scenario::Phase {
        unwrap_rows(params, spec, &mut rows, n_axes);
    }
    let columns = drop_repeated_axis_columns(columns, n_axes, &mut rows);

    Ok(SweepResult {
        params: *params,
        spec: spec.clone(),
        columns,
        rows,
    })
}

/// A `delta_bar` axis is already the first column, so the derived copy goes.
fn drop_repeated_axis_columns(
    columns: Vec<Column>,
    n_axes: usize,
    rows: &mut [SweepRow],
) -> Vec<Column> {
    let keep: Vec<bool> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| i < n_axes || !columns[..n_axes].iter().any(|a| a.name == c.name))
        .collect();
    if keep.iter().all(|&k| k) {
        return columns;
    }
    for row in rows.iter_mut() {
        let mut k = keep.iter();
        row.values.retain(|_| *k.next().unwrap());
    }
    columns
        .into_iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(c, _)| c)
        .collect()
}

/// Unwraps the phase column along each contiguous block of the inner
/// `delta_bar` axis. A block that fails unwrapping keeps its principal values
/// and every row is marked.
fn unwrap_rows(params: &SystemParams, spec: &SweepSpec, rows: &mut [SweepRow], n_axes: usize) {
    let inner = spec.axes[n_axes - 1].points;
    let phase_col = n_axes + 7;
    rows.par_chunks_mut(inner).for_each(|block| {
        if block.iter().any(|r| r.error.is_some()) {
            return;
        }
        let outer = &block[0].values[..n_axes - 1];
        let point = resolve_point(params, spec, &[outer, &[0.0]].concat());
        let Ok(op) = solve_steady_state(&point.params) else {
            return;
        };
        let grid: Vec<f64> = block.iter().map(|r| r.values[n_axes]).collect();
        let result = (|| -> Result<Vec<ResponseSample>> {
            let mut samples = grid
                .iter()
                .map(|&d| transmission(d, &point.params, &op, spec.convention))
                .collect::<Result<Vec<_>>>()?;
            unwrap_samples(&mut samples, |d| {
                transmission(d, &point.params, &op, spec.convention).map(|s| s.t_p)
            })?;
            Ok(samples)
        })();
        match result {
            Ok(samples) => {
                for (row, s) in block.iter_mut().zip(samples) {
                    row.values[phase_col] = s.phase;
                }
            }
            Err(e) => {
                let code = e.code().to_string();
                for row in block.iter_mut() {
                    row.error = Some(code.clone());
                }
            }
        }
    });
}

/// Convenience wrapper: the unwrapped phase along a probe-detuning grid.
pub fn phase_along(
    params: &SystemParams,
    delta_grid: &[f64],
    convention: Convention,
) -> Result<Vec<ResponseSample>> {
    let op = solve_steady_state(params)?;
    phase(delta_grid, params, &op, convention)
}
