//! Scenario file schema and conversion into core types.
//!
//! One JSON document describes a run: the plant, the design gains, the
//! actuation type, tuning knobs for the certificate search, the simulation
//! block, and output options. All physical quantities are plain numbers in
//! nondimensional units.

use serde::{Deserialize, Serialize};

use heatstep_core::linalg::Matrix;
use heatstep_core::plant::{Actuation, DelayProfile, DesignGains, PlantParams};
use heatstep_core::transform::Field;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub plant: PlantDoc,
    pub gains: GainsDoc,
    pub actuation: ActuationDoc,
    #[serde(default)]
    pub tuning: TuningDoc,
    #[serde(default)]
    pub search: SearchDoc,
    #[serde(default)]
    pub simulation: SimulationDoc,
    #[serde(default)]
    pub output: OutputDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantDoc {
    pub a: Vec<Vec<f64>>,
    pub a1: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub a_heat: f64,
    pub a2_heat: f64,
    pub h0: f64,
    pub h: f64,
    pub u_bar: f64,
    pub delay: DelayDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DelayDoc {
    Constant { value: f64 },
    Sinusoid { h0: f64, h: f64, omega: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsDoc {
    pub k: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ActuationDoc {
    Dirichlet,
    Neumann,
}

impl From<ActuationDoc> for Actuation {
    fn from(a: ActuationDoc) -> Self {
        match a {
            ActuationDoc::Dirichlet => Actuation::Dirichlet,
            ActuationDoc::Neumann => Actuation::Neumann,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningDoc {
    pub delta0: f64,
    pub delta1: f64,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "one")]
    pub r1: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for TuningDoc {
    fn default() -> Self {
        Self { delta0: 0.3, delta1: 0.3, r: 1.0, r1: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchDoc {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_beta_cap")]
    pub beta_cap: f64,
}

fn default_seed() -> u64 {
    0x5eed
}
fn default_restarts() -> usize {
    8
}
fn default_beta_cap() -> f64 {
    1e6
}

impl Default for SearchDoc {
    fn default() -> Self {
        Self { seed: default_seed(), restarts: default_restarts(), beta_cap: default_beta_cap() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDoc {
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub initial: InitialDoc,
    #[serde(default)]
    pub monitor: bool,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_t_end() -> f64 {
    10.0
}
fn default_dx() -> f64 {
    0.04
}
fn default_dt() -> f64 {
    2e-4
}
fn default_stride() -> usize {
    250
}

impl Default for SimulationDoc {
    fn default() -> Self {
        Self {
            t_end: default_t_end(),
            dx: default_dx(),
            dt: default_dt(),
            initial: InitialDoc::default(),
            monitor: false,
            stride: default_stride(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDoc {
    pub x0: Vec<f64>,
    pub u0: ProfileDoc,
}

impl Default for InitialDoc {
    fn default() -> Self {
        Self { x0: vec![0.0], u0: ProfileDoc::Zero }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileDoc {
    Zero,
    Cosine { amplitude: f64 },
    Samples { values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputDoc {
    /// Decimation over recorded samples for the full-field dump;
    /// 0 disables the dump.
    #[serde(default)]
    pub field_dump_stride: usize,
}

impl Scenario {
    pub fn plant(&self) -> Result<PlantParams<f64>, heatstep_core::Error> {
        let n = self.plant.a.len();
        let a = Matrix::from_rows(&self.plant.a)?;
        let a1 = Matrix::from_rows(&self.plant.a1)?;
        let b = Matrix::from_fn(n, 1, |i, _| self.plant.b.get(i).copied().unwrap_or(f64::NAN));
        let delay = match self.plant.delay {
            DelayDoc::Constant { value } => DelayProfile::Constant(value),
            DelayDoc::Sinusoid { h0, h, omega } => DelayProfile::Sinusoid { h0, h, omega },
        };
        PlantParams::new(
            a,
            a1,
            b,
            self.plant.a_heat,
            self.plant.a2_heat,
            self.plant.h0,
            self.plant.h,
            self.plant.u_bar,
            delay,
        )
    }

    pub fn gains(&self) -> DesignGains<f64> {
        DesignGains::new(self.gains.k.clone(), self.gains.c)
    }

    pub fn actuation(&self) -> Actuation {
        self.actuation.into()
    }

    /// Sample the initial profile on the grid with `n_nodes` nodes.
    pub fn initial_field(&self, dx: f64, n_nodes: usize) -> Field<f64> {
        match &self.simulation.initial.u0 {
            ProfileDoc::Zero => Field::zeros(dx, n_nodes),
            ProfileDoc::Cosine { amplitude } => {
                Field::from_fn(dx, n_nodes, |x| amplitude * (std::f64::consts::PI * x).cos())
            }
            ProfileDoc::Samples { values } => {
                Field { dx, values: values.clone() }
            }
        }
    }
}
