//! Design, certification, and simulation of saturated boundary controllers
//! for a cascade of a delayed linear ODE and a delayed 1-D heat equation.
//!
//! The pipeline has three legs:
//!
//! 1. [`kernels`]: closed-form backstepping kernels (matrix exponentials and
//!    Bessel-ratio series) sampled on a uniform grid, with residual
//!    verification of their defining PDE/ODE systems.
//! 2. [`certify`]: Halanay decay rates, LMI feasibility, saturation bound
//!    constants, and minimization of the admissible-set scale beta.
//! 3. [`simulator`]: explicit finite-difference integration of the delayed
//!    closed loop (original or target coordinates) under the saturated
//!    boundary law from [`controller`].
//!
//! Everything numeric is generic over the scalar type via [`num::Real`]
//! (f32 or f64); the `*64` aliases below cover the common case.

// Negated comparisons reject NaN inputs; `x <= 0` would accept them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the stencil/matrix notation.
#![allow(clippy::needless_range_loop)]

pub mod bessel;
pub mod certify;
pub mod controller;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod num;
pub mod plant;
pub mod quad;
pub mod search;
pub mod simulator;
pub mod transform;

pub use error::{Error, Result};
pub use num::Real;
pub use plant::Actuation;

/// f64 aliases for the main types.
pub type Matrix64 = linalg::Matrix<f64>;
pub type PlantParams64 = plant::PlantParams<f64>;
pub type DesignGains64 = plant::DesignGains<f64>;
pub type DelayProfile64 = plant::DelayProfile<f64>;
pub type KernelSet64 = kernels::KernelSet<f64>;
pub type Field64 = transform::Field<f64>;
pub type CoupledState64 = transform::CoupledState<f64>;
pub type TuningParams64 = certify::TuningParams<f64>;
pub type Certificate64 = certify::Certificate<f64>;
pub type ControlLaw64 = controller::ControlLaw<f64>;
pub type InitialData64 = simulator::InitialData<f64>;
pub type Trajectory64 = simulator::Trajectory<f64>;
pub type SimConfig64 = simulator::SimConfig<f64>;
