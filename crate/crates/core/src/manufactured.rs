//! Closed-form manufactured solution on the unit square, the forcing terms
//! that make it exact, and the space-time error metrics.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constitutive::{stress, MaterialParams};
use crate::error::Result;
use crate::fem::{error_norms, gauss_rule, FieldSample, QuadratureRule};
use crate::mesh::{unit_square, BoundaryTag};
use crate::solver::{interpolate_initial, DirichletBc, PressureGauge, ProblemSetup, SystemState, ViscousForm};

const K: f64 = 2.0 * PI;

/// Temporal factor multiplying every field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theta {
    /// `exp(-t)`
    Exp,
    /// `sin(3 pi t)`
    Sin,
}

impl Theta {
    pub fn value(self, t: f64) -> f64 {
        match self {
            Theta::Exp => (-t).exp(),
            Theta::Sin => (3.0 * PI * t).sin(),
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        match self {
            Theta::Exp => -(-t).exp(),
            Theta::Sin => 3.0 * PI * (3.0 * PI * t).cos(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Theta::Exp => "exp",
            Theta::Sin => "sin",
        }
    }
}

/// Exact fields and derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFields {
    pub u: [f64; 2],
    pub grad_u: [[f64; 2]; 2],
    pub v: [f64; 2],
    pub grad_v: [[f64; 2]; 2],
    pub p: f64,
    pub grad_p: [f64; 2],
    pub du_dt: [f64; 2],
    pub dv_dt: [f64; 2],
}

/// Finite-difference step of the stress-divergence oracle.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub theta: Theta,
    pub params: MaterialParams,
    pub fd_step: f64,
}

impl ManufacturedCase {
    pub fn new(theta: Theta, params: MaterialParams) -> Self {
        Self {
            theta,
            params,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    /// Spatial shapes scaled by `s`: displacement uses `s / 100`.
    fn shapes(s: f64, x: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2], [f64; 2], [[f64; 2]; 2]) {
        let (sx, cx) = (K * x[0]).sin_cos();
        let (sy, cy) = (K * x[1]).sin_cos();
        let su = s / 100.0;
        let u = [su * cx * sy, su * sx * cy];
        let grad_u = [
            [-su * K * sx * sy, su * K * cx * cy],
            [su * K * cx * cy, -su * K * sx * sy],
        ];
        let v = [s * sx * cy, -s * cx * sy];
        let grad_v = [
            [s * K * cx * cy, -s * K * sx * sy],
            [s * K * sx * sy, -s * K * cx * cy],
        ];
        (u, grad_u, v, grad_v)
    }

    pub fn exact_fields(&self, t: f64, x: [f64; 2]) -> ExactFields {
        let th = self.theta.value(t);
        let dth = self.theta.derivative(t);
        let (u, grad_u, v, grad_v) = Self::shapes(th, x);
        let (du_dt, _, dv_dt, _) = Self::shapes(dth, x);
        let (x1, x2) = (x[0], x[1]);
        ExactFields {
            u,
            grad_u,
            v,
            grad_v,
            p: th * (60.0 * x1 * x1 * x2 - 20.0 * x2.powi(3) - 5.0),
            grad_p: [th * 120.0 * x1 * x2, th * (60.0 * x1 * x1 - 60.0 * x2 * x2)],
            du_dt,
            dv_dt,
        }
    }

    pub fn u(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        self.exact_fields(t, x).u
    }

    pub fn v(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        self.exact_fields(t, x).v
    }

    /// `rho dv/dt + alpha (v - du/dt) - nu lap v + grad p`
    pub fn forcing_fluid(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        let e = self.exact_fields(t, x);
        let p = &self.params;
        // Each velocity component is a product of sines/cosines in 2 pi x,
        // so lap v = -2 (2 pi)^2 v.
        let lap = [-2.0 * K * K * e.v[0], -2.0 * K * K * e.v[1]];
        std::array::from_fn(|c| {
            p.rho * e.dv_dt[c] + p.alpha * (e.v[c] - e.du_dt[c]) - p.nu * lap[c] + e.grad_p[c]
        })
    }

    /// Stress of the exact displacement at `(t, x)`.
    pub fn stress(&self, t: f64, x: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        let g = self.exact_fields(t, x).grad_u;
        let off = 0.5 * (g[0][1] + g[1][0]);
        stress([[g[0][0], off], [off, g[1][1]]], &self.params)
    }

    /// `div T(u)` by central differences with step `h`.
    pub fn stress_divergence(&self, t: f64, x: [f64; 2], h: f64) -> Result<[f64; 2]> {
        let txp = self.stress(t, [x[0] + h, x[1]])?;
        let txm = self.stress(t, [x[0] - h, x[1]])?;
        let typ = self.stress(t, [x[0], x[1] + h])?;
        let tym = self.stress(t, [x[0], x[1] - h])?;
        let inv = 0.5 / h;
        Ok(std::array::from_fn(|i| {
            (txp[i][0] - txm[i][0]) * inv + (typ[i][1] - tym[i][1]) * inv
        }))
    }

    /// `-div T(u) - alpha (v - du/dt)` with the configured step.
    pub fn forcing_solid(&self, t: f64, x: [f64; 2]) -> Result<[f64; 2]> {
        self.forcing_solid_with_step(t, x, self.fd_step)
    }

    pub fn forcing_solid_with_step(&self, t: f64, x: [f64; 2], h: f64) -> Result<[f64; 2]> {
        let e = self.exact_fields(t, x);
        let div_t = self.stress_divergence(t, x, h)?;
        let a = self.params.alpha;
        Ok(std::array::from_fn(|c| -div_t[c] - a * (e.v[c] - e.du_dt[c])))
    }

    /// Problem on the `2^m x 2^m` unit-square mesh over `[0, 1]` with
    /// `n_steps` steps: exact Dirichlet traces for `u` and `v` on the whole
    /// boundary, zero-mean pressure, forcing evaluated at the new time level.
    pub fn setup(&self, m: u32, n_steps: usize) -> Result<ProblemSetup> {
        let mesh = unit_square(m)?;
        let mut setup = ProblemSetup::new(mesh, 1.0 / n_steps as f64, n_steps);
        let case = *self;
        let u_trace: crate::solver::TimeField = Arc::new(move |t, x| case.u(t, x));
        let v_trace: crate::solver::TimeField = Arc::new(move |t, x| case.v(t, x));
        setup.u_dirichlet = BoundaryTag::ALL.iter().map(|&t| DirichletBc::new(t, u_trace.clone())).collect();
        setup.v_dirichlet = BoundaryTag::ALL.iter().map(|&t| DirichletBc::new(t, v_trace.clone())).collect();
        setup.f_fluid = Arc::new(move |t, x| case.forcing_fluid(t, x));
        setup.f_solid = Arc::new(move |t, x| {
            case.forcing_solid(t, x)
                .expect("manufactured divergence stays below the truncation threshold")
        });
        setup.viscous_form = ViscousForm::GradGrad;
        setup.pressure_gauge = PressureGauge::ZeroMean;
        Ok(setup)
    }

    pub fn initial_state(&self, setup: &ProblemSetup) -> SystemState {
        interpolate_initial(setup, |x| self.u(0.0, x), |x| self.v(0.0, x))
    }
}

/// The five space-time error norms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorNorms {
    /// `sqrt(sum_n dt |u(t_n) - u_h^n|_{H1}^2)`
    pub err_u_h01: f64,
    /// `max_n ||u(t_n) - u_h^n||_{L2}`
    pub err_u_l2: f64,
    pub err_v_h01: f64,
    pub err_v_l2: f64,
    /// `sqrt(sum_n dt ||p(t_n) - p_h^n||_{L2}^2)`
    pub err_p_l2: f64,
}

/// Accumulates the error norms one time level at a time.
#[derive(Debug, Clone)]
pub struct ErrorAccumulator {
    case: ManufacturedCase,
    quad: QuadratureRule,
    sum_u_h1: f64,
    sum_v_h1: f64,
    sum_p_l2: f64,
    max_u_l2: f64,
    max_v_l2: f64,
}

impl ErrorAccumulator {
    /// Uses a 4x4 Gauss rule, one order above assembly.
    pub fn new(case: ManufacturedCase) -> Self {
        Self {
            case,
            quad: gauss_rule(4).expect("supported order"),
            sum_u_h1: 0.0,
            sum_v_h1: 0.0,
            sum_p_l2: 0.0,
            max_u_l2: 0.0,
            max_v_l2: 0.0,
        }
    }

    pub fn add(&mut self, state: &SystemState, setup: &ProblemSetup) {
        let t = state.time;
        let dt = setup.dt;
        let c = &self.case;
        let (u_l2, u_h1) = error_norms(
            &state.u,
            &setup.u_map,
            &setup.mesh,
            |x| {
                let e = c.exact_fields(t, x);
                FieldSample { value: e.u, grad: e.grad_u }
            },
            &self.quad,
        );
        let (v_l2, v_h1) = error_norms(
            &state.v,
            &setup.v_map,
            &setup.mesh,
            |x| {
                let e = c.exact_fields(t, x);
                FieldSample { value: e.v, grad: e.grad_v }
            },
            &self.quad,
        );
        let (p_l2, _) = error_norms(
            &state.p,
            &setup.p_map,
            &setup.mesh,
            |x| {
                let e = c.exact_fields(t, x);
                FieldSample {
                    value: [e.p, 0.0],
                    grad: [e.grad_p, [0.0; 2]],
                }
            },
            &self.quad,
        );
        self.sum_u_h1 += dt * u_h1 * u_h1;
        self.sum_v_h1 += dt * v_h1 * v_h1;
        self.sum_p_l2 += dt * p_l2 * p_l2;
        self.max_u_l2 = self.max_u_l2.max(u_l2);
        self.max_v_l2 = self.max_v_l2.max(v_l2);
    }

    pub fn finish(&self) -> ErrorNorms {
        ErrorNorms {
            err_u_h01: self.sum_u_h1.sqrt(),
            err_u_l2: self.max_u_l2,
            err_v_h01: self.sum_v_h1.sqrt(),
            err_v_l2: self.max_v_l2,
            err_p_l2: self.sum_p_l2.sqrt(),
        }
    }
}

/// Error norms over a history whose entries `n >= 1` are compared with the
/// exact solution at their time levels.
pub fn error_metrics(history: &[SystemState], case: &ManufacturedCase, setup: &ProblemSetup) -> ErrorNorms {
    let mut acc = ErrorAccumulator::new(*case);
    for state in history.iter().filter(|s| s.step >= 1) {
        acc.add(state, setup);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::e_to_lame;

    fn case(theta: Theta) -> ManufacturedCase {
        ManufacturedCase::new(theta, MaterialParams::manufactured())
    }

    #[test]
    fn point_values() {
        let e = case(Theta::Exp).exact_fields(0.0, [0.25, 0.0]);
        assert!((e.v[0] - 1.0).abs() < 1e-15 && e.v[1].abs() < 1e-15);
        assert_eq!(e.p, -5.0);
        let z = case(Theta::Sin).exact_fields(1.0 / 3.0, [0.3, 0.7]);
        for val in [z.u[0], z.u[1], z.v[0], z.v[1], z.p] {
            assert!(val.abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = case(Theta::Sin);
        let (t, x, h) = (0.37, [0.21, 0.64], 1e-6);
        let e = c.exact_fields(t, x);
        for d in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += h;
            xm[d] -= h;
            let (ep, em) = (c.exact_fields(t, xp), c.exact_fields(t, xm));
            for i in 0..2 {
                assert!(((ep.u[i] - em.u[i]) / (2.0 * h) - e.grad_u[i][d]).abs() < 1e-7);
                assert!(((ep.v[i] - em.v[i]) / (2.0 * h) - e.grad_v[i][d]).abs() < 1e-6);
            }
            assert!(((ep.p - em.p) / (2.0 * h) - e.grad_p[d]).abs() < 1e-6);
        }
        let (ep, em) = (c.exact_fields(t + h, x), c.exact_fields(t - h, x));
        for i in 0..2 {
            assert!(((ep.u[i] - em.u[i]) / (2.0 * h) - e.du_dt[i]).abs() < 1e-7);
            assert!(((ep.v[i] - em.v[i]) / (2.0 * h) - e.dv_dt[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn velocity_is_divergence_free() {
        let c = case(Theta::Exp);
        for &(t, x) in &[(0.0, [0.1, 0.2]), (0.5, [0.77, 0.31]), (1.0, [0.5, 0.99])] {
            let g = c.exact_fields(t, x).grad_v;
            assert!((g[0][0] + g[1][1]).abs() < 1e-13);
        }
    }

    #[test]
    fn fluid_forcing_at_rest_start() {
        // theta2(0) = 0, so only rho dv/dt - alpha du/dt survives.
        let c = case(Theta::Sin);
        let x = [0.3, 0.8];
        let f = c.forcing_fluid(0.0, x);
        let (sx, cx) = (K * x[0]).sin_cos();
        let (sy, cy) = (K * x[1]).sin_cos();
        let w = 3.0 * PI;
        let want = [w * sx * cy - w / 100.0 * cx * sy, -w * cx * sy - w / 100.0 * sx * cy];
        assert!((f[0] - want[0]).abs() < 1e-12 && (f[1] - want[1]).abs() < 1e-12);
    }

    #[test]
    fn fluid_forcing_is_affine_in_viscosity() {
        let c1 = case(Theta::Exp);
        let c0 = ManufacturedCase::new(Theta::Exp, MaterialParams { nu: 0.0, ..c1.params });
        let (t, x) = (0.4, [0.12, 0.58]);
        let v = c1.v(t, x);
        let (f1, f0) = (c1.forcing_fluid(t, x), c0.forcing_fluid(t, x));
        for i in 0..2 {
            assert!((f1[i] - f0[i] - 2.0 * K * K * v[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn solid_forcing_linear_closed_form() {
        // Linear law: div T = mu lap u + (mu + lambda) grad div u = -2 k^2 (2 mu + lambda) u
        let p = MaterialParams {
            lambda1: 0.0,
            lambda2: 0.0,
            ..MaterialParams::manufactured()
        };
        let c = ManufacturedCase::new(Theta::Exp, p);
        let (mu, lambda) = e_to_lame(p.e1, p.e2, 2);
        for &(t, x) in &[(0.2, [0.13, 0.71]), (0.9, [0.5, 0.25])] {
            let e = c.exact_fields(t, x);
            let f = c.forcing_solid(t, x).unwrap();
            for i in 0..2 {
                let div_t = -2.0 * K * K * (2.0 * mu + lambda) * e.u[i];
                let want = -div_t - p.alpha * (e.v[i] - e.du_dt[i]);
                assert!((f[i] - want).abs() < 1e-8, "{} vs {}", f[i], want);
            }
        }
    }

    #[test]
    fn solid_forcing_at_zero_fields() {
        let c = case(Theta::Sin);
        let (t, x) = (1.0 / 3.0, [0.4, 0.15]);
        let e = c.exact_fields(t, x);
        let f = c.forcing_solid(t, x).unwrap();
        for i in 0..2 {
            assert!((f[i] - c.params.alpha * e.du_dt[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn divergence_oracle_is_second_order() {
        let c = case(Theta::Exp);
        let (t, x) = (0.3, [0.37, 0.61]);
        let h = 1e-2;
        let reference = c.stress_divergence(t, x, 1e-4).unwrap();
        let err = |h: f64| {
            let d = c.stress_divergence(t, x, h).unwrap();
            ((d[0] - reference[0]).powi(2) + (d[1] - reference[1]).powi(2)).sqrt()
        };
        let ratio = err(h) / err(h / 2.0);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");

        let f1 = c.forcing_solid_with_step(t, x, DEFAULT_FD_STEP).unwrap();
        let f2 = c.forcing_solid_with_step(t, x, DEFAULT_FD_STEP / 2.0).unwrap();
        let scale = f1[0].hypot(f1[1]);
        assert!(((f1[0] - f2[0]).hypot(f1[1] - f2[1])) / scale <= 1e-6);
    }

    #[test]
    fn divergence_of_u_stays_below_threshold() {
        let c = case(Theta::Exp);
        let mut worst = 0.0f64;
        for i in 0..=40 {
            for j in 0..=40 {
                let g = c.exact_fields(0.0, [i as f64 / 40.0, j as f64 / 40.0]).grad_u;
                worst = worst.max((g[0][0] + g[1][1]).abs());
            }
        }
        assert!((worst - 4.0 * PI / 100.0).abs() < 1e-12);
        assert!(worst < c.params.delta);
    }
}
