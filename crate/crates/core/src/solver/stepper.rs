//! Time loop, per-step diagnostics and residual verification.

use log::{debug, warn};

use crate::constitutive::MaterialParams;
use crate::error::Result;
use crate::fem::sparse::norm2;
use crate::fem::{eval_at, gauss_rule, nodal_interpolate, CellGeometry, ElementKind, ReferenceElement, Tabulation};

use super::assembly::{Assembler, BlockLayout};
use super::linear::{relative_residual, DirectSolver};
use super::{ProblemSetup, SystemState};

/// Squared norms appearing in the discrete energy estimates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyQuantities {
    pub u_l2_sq: f64,
    pub v_l2_sq: f64,
    pub strain_u_sq: f64,
    pub grad_v_sq: f64,
    pub div_u_sq: f64,
}

/// What was observed while taking one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    /// `min (1 + lambda1 T(div u^{n-1}))` over quadrature points.
    pub min_one_plus_l1: f64,
    /// `min F(T(div u^{n-1}))` over quadrature points.
    pub min_f: f64,
    /// `max |div u^{n-1}|` over quadrature points.
    pub max_abs_div_prev: f64,
    /// Relative algebraic residual of the solved system.
    pub residual: f64,
    pub energy: EnergyQuantities,
    /// `P^n = sum_{i<=n} dt p^i`
    pub averaged_pressure: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep every state (including the initial one) in the output.
    pub keep_history: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: SystemState,
    pub history: Vec<SystemState>,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// State at `n = 0`: nodal interpolants of the initial fields, zero pressure.
pub fn interpolate_initial(
    setup: &ProblemSetup,
    u0: impl Fn([f64; 2]) -> [f64; 2],
    v0: impl Fn([f64; 2]) -> [f64; 2],
) -> SystemState {
    SystemState {
        step: 0,
        time: 0.0,
        u: nodal_interpolate(u0, &setup.u_map),
        v: nodal_interpolate(v0, &setup.v_map),
        p: vec![0.0; setup.p_map.n_dofs()],
        multiplier: 0.0,
    }
}

/// Assembles, factorizes and solves successive steps for one setup.
pub struct TimeStepper<'a> {
    pub setup: &'a ProblemSetup,
    pub params: MaterialParams,
    assembler: Assembler,
    solver: DirectSolver,
}

impl<'a> TimeStepper<'a> {
    pub fn new(setup: &'a ProblemSetup, params: &MaterialParams) -> Result<Self> {
        setup.validate()?;
        params.validate()?;
        let h = setup.mesh.h();
        if h * h > setup.dt {
            warn!("step restriction h^2 <= dt not met: h^2 = {:.3e}, dt = {:.3e}", h * h, setup.dt);
        }
        debug!("dt = {:.3e}, h = {:.3e}, dt/h^2 = {:.3}", setup.dt, h, setup.dt / (h * h));
        let assembler = Assembler::new(setup)?;
        let lay = assembler.layout;
        let solver = DirectSolver::symmetric(assembler.pattern(), lay.symmetrizing_scale(setup.dt), lay.pivot_signs())?;
        Ok(Self {
            setup,
            params: *params,
            assembler,
            solver,
        })
    }

    pub fn layout(&self) -> BlockLayout {
        self.assembler.layout
    }

    pub fn assembler(&self) -> &Assembler {
        &self.assembler
    }

    /// Advances `prev` by one step. The averaged pressure in the returned
    /// diagnostics covers this step only; [`time_loop`] accumulates it.
    pub fn step(&self, prev: &SystemState) -> Result<(SystemState, StepDiagnostics)> {
        let sys = self.assembler.assemble_step(prev, self.setup, &self.params)?;
        let x = self.solver.solve(&sys.matrix, &sys.rhs)?;
        let b_norm = norm2(&sys.rhs);
        let residual = relative_residual(&sys.matrix, &x, &sys.rhs, if b_norm > 0.0 { b_norm } else { 1.0 });
        let (u, v, p, multiplier) = self.assembler.layout.unpack(&x);
        let state = SystemState {
            step: prev.step + 1,
            time: prev.time + self.setup.dt,
            u,
            v,
            p,
            multiplier,
        };
        let diag = StepDiagnostics {
            step: state.step,
            time: state.time,
            min_one_plus_l1: sys.bounds.min_one_plus_l1,
            min_f: sys.bounds.min_f,
            max_abs_div_prev: sys.bounds.max_abs_div,
            residual,
            energy: energy_quantities(&state, self.setup),
            averaged_pressure: state.p.iter().map(|p| self.setup.dt * p).collect(),
        };
        Ok((state, diag))
    }
}

/// Runs `n_steps` steps from `initial`, calling `callback` after each.
pub fn time_loop(
    setup: &ProblemSetup,
    params: &MaterialParams,
    initial: SystemState,
    options: RunOptions,
    mut callback: impl FnMut(&SystemState, &StepDiagnostics) -> Result<()>,
) -> Result<RunOutput> {
    let stepper = TimeStepper::new(setup, params)?;
    let mut history = Vec::new();
    if options.keep_history {
        history.push(initial.clone());
    }
    let mut diagnostics: Vec<StepDiagnostics> = Vec::with_capacity(setup.n_steps);
    let mut averaged = vec![0.0; setup.p_map.n_dofs()];
    let mut current = initial;
    for _ in 0..setup.n_steps {
        let (next, mut diag) = stepper.step(&current)?;
        for (acc, inc) in averaged.iter_mut().zip(&diag.averaged_pressure) {
            *acc += inc;
        }
        diag.averaged_pressure.clone_from(&averaged);
        debug!(
            "step {} t = {:.4}: residual {:.2e}, min(1+l1 s) {:.4}, min F {:.4}",
            diag.step, diag.time, diag.residual, diag.min_one_plus_l1, diag.min_f
        );
        callback(&next, &diag)?;
        if options.keep_history {
            history.push(next.clone());
        }
        diagnostics.push(diag);
        current = next;
    }
    Ok(RunOutput {
        final_state: current,
        history,
        diagnostics,
    })
}

/// Relative algebraic residual of the step `prev -> state`, reassembled
/// from scratch. Absolute when the right-hand side vanishes.
pub fn residual_check(
    state: &SystemState,
    prev: &SystemState,
    setup: &ProblemSetup,
    params: &MaterialParams,
) -> Result<f64> {
    let assembler = Assembler::new(setup)?;
    let sys = assembler.assemble_step(prev, setup, params)?;
    let x = assembler.layout.pack(state);
    let b_norm = norm2(&sys.rhs);
    Ok(relative_residual(&sys.matrix, &x, &sys.rhs, if b_norm > 0.0 { b_norm } else { 1.0 }))
}

/// Squared L2 norms of `u`, `v`, `eps(u)`, `grad v` and `div u`.
pub fn energy_quantities(state: &SystemState, setup: &ProblemSetup) -> EnergyQuantities {
    let quad = gauss_rule(3).expect("supported order");
    let tab = Tabulation::new(&ReferenceElement::new(ElementKind::Q2), &quad.points);
    let geom = CellGeometry::of(&setup.mesh);
    let mut e = EnergyQuantities::default();
    for cell in 0..setup.mesh.n_cells() {
        for (q, &w) in quad.weights.iter().enumerate() {
            let jw = w * geom.det_jac;
            let u = eval_at(&state.u, &setup.u_map, cell, &tab, q, &geom);
            let v = eval_at(&state.v, &setup.v_map, cell, &tab, q, &geom);
            let g = u.grad;
            let off = 0.5 * (g[0][1] + g[1][0]);
            let div = g[0][0] + g[1][1];
            e.u_l2_sq += jw * (u.value[0].powi(2) + u.value[1].powi(2));
            e.v_l2_sq += jw * (v.value[0].powi(2) + v.value[1].powi(2));
            e.strain_u_sq += jw * (g[0][0].powi(2) + g[1][1].powi(2) + 2.0 * off * off);
            e.grad_v_sq += jw * v.grad.iter().flatten().map(|x| x * x).sum::<f64>();
            e.div_u_sq += jw * div * div;
        }
    }
    e
}
