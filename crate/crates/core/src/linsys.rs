//! Linear-system oracle for the probe sidebands.
//!
//! The mean-value equations are linearized about the operating point with the
//! ansatz `h = h_s + h_- e^{-i delta t} + h_+ e^{+i delta t}`. Matching the
//! `e^{-i delta t}` coefficients and the conjugated `e^{+i delta t}` ones gives
//! six complex equations in `(c_-, c_+*, q1_-, q1_+*, q2_-, q2_+*)`. Nothing
//! here uses the closed form of [`crate::response`].
//!
//! The system is built in the gauge where `c_s` is real and nonnegative; the
//! reported amplitudes are rotated back to the frame where `Omega_l` is real.

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{OperatingPoint, SystemParams};

/// Solves are rejected above this 1-norm condition estimate.
pub const MAX_CONDITION: f64 = 1e12;

pub const C_MINUS: usize = 0;
pub const C_PLUS_CONJ: usize = 1;
pub const Q1_MINUS: usize = 2;
pub const Q1_PLUS_CONJ: usize = 3;
pub const Q2_MINUS: usize = 4;
pub const Q2_PLUS_CONJ: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: Matrix6<Complex64>,
    pub rhs: Vector6<Complex64>,
    /// `arg c_s` in the lab frame; the matrix is built with this phase removed.
    pub cs_phase: f64,
}

pub fn build_linear_system(delta: f64, params: &SystemParams, op: &OperatingPoint) -> LinearSystem {
    let zero = Complex64::new(0.0, 0.0);
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let hbar = params.hbar();
    let kappa = params.cavity.kappa;
    let g = params.coupling.g_cav;
    let hgc = hbar * params.coupling.g_coulomb;
    let cs = op.cs.norm();
    let big_delta = op.delta_eff;
    let (m1, m2) = (&params.mech1, &params.mech2);

    // m (omega^2 - delta^2 - i gamma delta)
    let mech1 = m1.mass * c(m1.omega * m1.omega - delta * delta, -m1.gamma * delta);
    let mech2 = m2.mass * c(m2.omega * m2.omega - delta * delta, -m2.gamma * delta);
    let force = c(-hbar * g * cs, 0.0);

    let mut a = Matrix6::from_element(zero);
    a[(C_MINUS, C_MINUS)] = c(kappa, big_delta - delta);
    a[(C_MINUS, Q1_MINUS)] = c(0.0, -g * cs);

    a[(C_PLUS_CONJ, C_PLUS_CONJ)] = c(kappa, -big_delta - delta);
    a[(C_PLUS_CONJ, Q1_PLUS_CONJ)] = c(0.0, g * cs);

    a[(Q1_MINUS, Q1_MINUS)] = mech1;
    a[(Q1_MINUS, Q2_MINUS)] = c(hgc, 0.0);
    a[(Q1_MINUS, C_MINUS)] = force;
    a[(Q1_MINUS, C_PLUS_CONJ)] = force;

    a[(Q1_PLUS_CONJ, Q1_PLUS_CONJ)] = mech1;
    a[(Q1_PLUS_CONJ, Q2_PLUS_CONJ)] = c(hgc, 0.0);
    a[(Q1_PLUS_CONJ, C_MINUS)] = force;
    a[(Q1_PLUS_CONJ, C_PLUS_CONJ)] = force;

    a[(Q2_MINUS, Q2_MINUS)] = mech2;
    a[(Q2_MINUS, Q1_MINUS)] = c(hgc, 0.0);

    a[(Q2_PLUS_CONJ, Q2_PLUS_CONJ)] = mech2;
    a[(Q2_PLUS_CONJ, Q1_PLUS_CONJ)] = c(hgc, 0.0);

    let mut rhs = Vector6::from_element(zero);
    rhs[C_MINUS] = c(1.0, 0.0);

    LinearSystem {
        matrix: a,
        rhs,
        cs_phase: op.cs.arg(),
    }
}

/// Sideband amplitudes per unit probe rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SidebandSolution {
    /// `c_- / eps_p`, comparable to the closed-form `X`.
    pub c_minus: Complex64,
    /// `c_+ / eps_p*`.
    pub c_plus: Complex64,
    pub q1_minus: Complex64,
    pub q2_minus: Complex64,
    /// `q1_+* / eps_p`; equals `q1_minus` for a real displacement.
    pub q1_plus_conj: Complex64,
    pub q2_plus_conj: Complex64,
    /// 1-norm condition number of the equilibrated matrix.
    pub condition_estimate: f64,
    /// `|A x - b| / |b|` of the equilibrated system.
    pub relative_residual: f64,
}

fn norm1(m: &Matrix6<Complex64>) -> f64 {
    (0..6)
        .map(|j| (0..6).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves an arbitrary right-hand side of the sideband system.
pub fn solve_system(delta: f64, system: &LinearSystem) -> Result<(Vector6<Complex64>, f64, f64)> {
    let a = &system.matrix;
    // Row then column equilibration; SI rows differ by tens of decades.
    let mut row = [1.0; 6];
    for (i, r) in row.iter_mut().enumerate() {
        let max = (0..6).map(|j| a[(i, j)].norm()).fold(0.0, f64::max);
        if max > 0.0 {
            *r = 1.0 / max;
        }
    }
    let mut col = [1.0; 6];
    for (j, cscale) in col.iter_mut().enumerate() {
        let max = (0..6)
            .map(|i| (a[(i, j)] * row[i]).norm())
            .fold(0.0, f64::max);
        if max > 0.0 {
            *cscale = 1.0 / max;
        }
    }
    let scaled = Matrix6::from_fn(|i, j| a[(i, j)] * row[i] * col[j]);
    let b = Vector6::from_fn(|i, _| system.rhs[i] * row[i]);

    let lu = scaled.lu();
    let inverse = lu.try_inverse().ok_or(Error::NearPole {
        delta,
        condition: f64::INFINITY,
    })?;
    let condition = norm1(&scaled) * norm1(&inverse);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::NearPole { delta, condition });
    }
    let y = lu.solve(&b).ok_or(Error::NearPole { delta, condition })?;
    let residual = (scaled * y - b).norm() / b.norm().max(f64::MIN_POSITIVE);
    let x = Vector6::from_fn(|j, _| y[j] * col[j]);
    Ok((x, condition, residual))
}

pub fn solve_sidebands(
    delta: f64,
    params: &SystemParams,
    op: &OperatingPoint,
) -> Result<SidebandSolution> {
    let system = build_linear_system(delta, params, op);
    let (x, condition_estimate, relative_residual) = solve_system(delta, &system)?;
    // Gauge frame with unit probe is the lab frame with eps_p = e^{i theta}.
    let theta = system.cs_phase;
    let back = Complex64::from_polar(1.0, -theta);
    Ok(SidebandSolution {
        c_minus: x[C_MINUS],
        c_plus: x[C_PLUS_CONJ].conj() * Complex64::from_polar(1.0, 2.0 * theta),
        q1_minus: x[Q1_MINUS] * back,
        q2_minus: x[Q2_MINUS] * back,
        q1_plus_conj: x[Q1_PLUS_CONJ] * back,
        q2_plus_conj: x[Q2_PLUS_CONJ] * back,
        condition_estimate,
        relative_residual,
    })
}
