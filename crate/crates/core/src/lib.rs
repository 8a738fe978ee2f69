//! Probe transmission and group delay of a Coulomb-coupled two-mirror
//! optomechanical cavity.
//!
//! Three independent evaluation routes share one parameter model:
//! [`response`] (closed form), [`linsys`] (linearized 6x6 solve) and
//! [`timedomain`] (nonlinear integration plus demodulation). [`sweep`] runs
//! the closed form over parameter grids and [`validation`] compares the
//! three routes.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cubic;
pub mod error;
pub mod linsys;
pub mod model;
pub mod output;
pub mod presets;
pub mod response;
pub mod sweep;
pub mod timedomain;
pub mod validation;

pub use error::{Error, Result};
pub use model::{
    solve_steady_state, CavityDetuning, CavityParams, CouplingParams, Drive, DriveParams,
    MechanicalMode, OperatingPoint, SystemParams, UnitMode,
};
pub use num_complex::Complex64;
pub use presets::Preset;
pub use response::{Convention, DelayMethod, ResponseSample};
pub use sweep::{Axis, AxisName, Scenario, Spacing, SweepResult, SweepSpec};
