//! Monolithic semi-implicit time stepping for the coupled displacement /
//! velocity / pressure system.
//!
//! Each step freezes the constitutive coefficients at the previous
//! displacement, assembles one sparse block system over `(u^n, v^n, p^n)`,
//! eliminates Dirichlet unknowns by lifting, and solves it with a sparse
//! direct factorization whose symbolic analysis is reused across steps.

mod assembly;
mod linear;
mod stepper;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{DofMap, ElementKind};
use crate::mesh::{BoundaryTag, Mesh};

pub use assembly::{Assembler, BlockLayout, CoefficientBounds, LinearSystem};
pub use linear::DirectSolver;
pub use stepper::{
    energy_quantities, interpolate_initial, residual_check, time_loop, EnergyQuantities,
    RunOptions, RunOutput, StepDiagnostics, TimeStepper,
};

/// A time-dependent vector field `(t, x) -> value`.
pub type TimeField = Arc<dyn Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync>;

pub fn zero_field() -> TimeField {
    Arc::new(|_, _| [0.0, 0.0])
}

/// Bilinear form used for the fluid viscous term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscousForm {
    /// `nu (grad v, grad w)`; natural condition `(nu grad v - p I) n = 0`.
    GradGrad,
    /// `2 nu (eps(v), eps(w))`; natural condition `(2 nu eps(v) - p I) n = 0`.
    SymGrad,
}

/// How the pressure constant is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureGauge {
    /// Lagrange multiplier enforcing zero mean pressure.
    ZeroMean,
    /// No constraint; a traction boundary determines the constant.
    None,
}

/// Prescribed values for one field on one boundary side.
#[derive(Clone)]
pub struct DirichletBc {
    pub tag: BoundaryTag,
    pub value: TimeField,
}

impl DirichletBc {
    pub fn new(tag: BoundaryTag, value: TimeField) -> Self {
        Self { tag, value }
    }

    pub fn homogeneous(tag: BoundaryTag) -> Self {
        Self::new(tag, zero_field())
    }
}

impl std::fmt::Debug for DirichletBc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletBc").field("tag", &self.tag).finish()
    }
}

/// Everything needed to run the scheme except the material parameters.
#[derive(Clone)]
pub struct ProblemSetup {
    pub mesh: Mesh,
    /// Displacement space, vector Q2.
    pub u_map: DofMap,
    /// Velocity space, vector Q2.
    pub v_map: DofMap,
    /// Pressure space, scalar Q1.
    pub p_map: DofMap,
    pub u_dirichlet: Vec<DirichletBc>,
    pub v_dirichlet: Vec<DirichletBc>,
    pub f_solid: TimeField,
    pub f_fluid: TimeField,
    pub viscous_form: ViscousForm,
    pub pressure_gauge: PressureGauge,
    pub dt: f64,
    pub n_steps: usize,
}

impl std::fmt::Debug for ProblemSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSetup")
            .field("nx", &self.mesh.nx)
            .field("ny", &self.mesh.ny)
            .field("u_dirichlet", &self.u_dirichlet)
            .field("v_dirichlet", &self.v_dirichlet)
            .field("viscous_form", &self.viscous_form)
            .field("pressure_gauge", &self.pressure_gauge)
            .field("dt", &self.dt)
            .field("n_steps", &self.n_steps)
            .finish()
    }
}

impl ProblemSetup {
    /// Homogeneous Dirichlet data on every side for both fields, zero
    /// forcing, zero-mean pressure and the gradient viscous form.
    pub fn new(mesh: Mesh, dt: f64, n_steps: usize) -> Self {
        let u_map = DofMap::new(&mesh, ElementKind::Q2, 2);
        let v_map = DofMap::new(&mesh, ElementKind::Q2, 2);
        let p_map = DofMap::new(&mesh, ElementKind::Q1, 1);
        let all = || BoundaryTag::ALL.iter().map(|&t| DirichletBc::homogeneous(t)).collect();
        Self {
            mesh,
            u_map,
            v_map,
            p_map,
            u_dirichlet: all(),
            v_dirichlet: all(),
            f_solid: zero_field(),
            f_fluid: zero_field(),
            viscous_form: ViscousForm::GradGrad,
            pressure_gauge: PressureGauge::ZeroMean,
            dt,
            n_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Parameter(format!("time step must be positive, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::Parameter("number of steps must be at least 1".into()));
        }
        let all_dirichlet = BoundaryTag::ALL
            .iter()
            .all(|t| self.v_dirichlet.iter().any(|bc| bc.tag == *t));
        match (all_dirichlet, self.pressure_gauge) {
            (true, PressureGauge::None) => Err(Error::Parameter(
                "velocity is Dirichlet on the whole boundary: pressure needs the zero-mean gauge".into(),
            )),
            (false, PressureGauge::ZeroMean) => Err(Error::Parameter(
                "a traction boundary fixes the pressure constant: use no gauge".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Prescribed displacement values at time `t`.
    pub fn u_constraints(&self, t: f64) -> Vec<Option<f64>> {
        constraints(&self.u_map, &self.u_dirichlet, t)
    }

    /// Prescribed velocity values at time `t`.
    pub fn v_constraints(&self, t: f64) -> Vec<Option<f64>> {
        constraints(&self.v_map, &self.v_dirichlet, t)
    }
}

fn constraints(map: &DofMap, bcs: &[DirichletBc], t: f64) -> Vec<Option<f64>> {
    let tags: Vec<BoundaryTag> = bcs.iter().map(|bc| bc.tag).collect();
    map.dirichlet_mask(&tags, |tag, x| {
        let bc = bcs.iter().find(|bc| bc.tag == tag).expect("tag listed");
        (bc.value)(t, x)
    })
}

/// Coefficient vectors of the discrete solution at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub step: usize,
    pub time: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    /// Zero-mean Lagrange multiplier (0 when no gauge is used).
    pub multiplier: f64,
}

impl SystemState {
    pub fn zeros(setup: &ProblemSetup) -> Self {
        Self {
            step: 0,
            time: 0.0,
            u: vec![0.0; setup.u_map.n_dofs()],
            v: vec![0.0; setup.v_map.n_dofs()],
            p: vec![0.0; setup.p_map.n_dofs()],
            multiplier: 0.0,
        }
    }
}
