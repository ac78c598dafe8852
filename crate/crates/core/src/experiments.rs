//! Drivers for the manufactured convergence studies and the practical
//! compression problem.

use std::f64::consts::PI;
use std::sync::Arc;

use log::info;

use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::fem::{eval_at, gauss_rule, CellGeometry, DofMap, ElementKind, ReferenceElement, Tabulation};
use crate::manufactured::{ErrorAccumulator, ErrorNorms, ManufacturedCase, Theta};
use crate::mesh::{build_rect_mesh, BoundaryTag, Mesh, Rect};
use crate::solver::{
    time_loop, DirichletBc, PressureGauge, ProblemSetup, RunOptions, StepDiagnostics, SystemState, ViscousForm,
};

/// Ratio `dt / h^2` used by the coupled refinement study.
pub const COUPLING_CONSTANT: f64 = 12.8;

/// Number of steps on `[0, 1]` for level `m` when `dt = c h^2` with
/// `h = sqrt(2) 2^-m` the cell diameter.
pub fn coupled_steps(m: u32, c: f64) -> usize {
    let h2 = 2.0 * 4f64.powi(-(m as i32));
    (1.0 / (c * h2)).round().max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub theta: Theta,
    /// `(m, N)` pairs, run in order.
    pub rows: Vec<(u32, usize)>,
    pub params: MaterialParams,
}

impl ConvergenceConfig {
    pub fn new(theta: Theta, rows: Vec<(u32, usize)>) -> Self {
        Self {
            theta,
            rows,
            params: MaterialParams::manufactured(),
        }
    }

    /// Levels `m` with `N` from [`coupled_steps`].
    pub fn coupled(theta: Theta, levels: &[u32], c: f64) -> Self {
        Self::new(theta, levels.iter().map(|&m| (m, coupled_steps(m, c))).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.iter().any(|&(m, n)| m == 0 || n == 0) {
            return Err(Error::Parameter("refinement level and step count must be positive".into()));
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub m: u32,
    pub n_steps: usize,
    /// Error norms, or the message of the error that aborted the row.
    pub outcome: std::result::Result<ErrorNorms, String>,
    /// Largest `|div u_h|` seen at quadrature points over the run.
    pub max_abs_div_u: f64,
    /// Largest relative algebraic residual over the run.
    pub max_residual: f64,
}

/// Rates between two rows whose mesh size halves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub m_coarse: u32,
    pub m_fine: u32,
    /// In the column order of [`ErrorNorms::as_array`]; absent when an
    /// error is non-positive or a row failed.
    pub rates: [Option<f64>; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub theta: Theta,
    pub rows: Vec<ConvergenceRow>,
    pub rates: Vec<RateRow>,
}

impl ErrorNorms {
    /// `[err_u_h01, err_u_l2, err_v_h01, err_v_l2, err_p_l2]`
    pub fn as_array(&self) -> [f64; 5] {
        [self.err_u_h01, self.err_u_l2, self.err_v_h01, self.err_v_l2, self.err_p_l2]
    }
}

/// `log2(coarse / fine)`, absent unless both are positive.
pub fn rate(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).log2())
}

/// Rates between successive rows with `m_fine = m_coarse + 1`.
pub fn compute_rates(rows: &[ConvergenceRow]) -> Vec<RateRow> {
    rows.windows(2)
        .filter(|w| w[1].m == w[0].m + 1)
        .map(|w| {
            let rates = match (&w[0].outcome, &w[1].outcome) {
                (Ok(c), Ok(f)) => {
                    let (c, f) = (c.as_array(), f.as_array());
                    std::array::from_fn(|i| rate(c[i], f[i]))
                }
                _ => [None; 5],
            };
            RateRow {
                m_coarse: w[0].m,
                m_fine: w[1].m,
                rates,
            }
        })
        .collect()
}

/// Runs one manufactured case and returns its error norms.
pub fn run_manufactured(case: &ManufacturedCase, m: u32, n_steps: usize) -> Result<ConvergenceRow> {
    let setup = case.setup(m, n_steps)?;
    let initial = case.initial_state(&setup);
    let mut acc = ErrorAccumulator::new(*case);
    let out = time_loop(&setup, &case.params, initial, RunOptions::default(), |state, _| {
        acc.add(state, &setup);
        Ok(())
    })?;
    Ok(ConvergenceRow {
        m,
        n_steps,
        outcome: Ok(acc.finish()),
        max_abs_div_u: max_div_u(&out.diagnostics, &out.final_state, &setup),
        max_residual: out.diagnostics.iter().map(|d| d.residual).fold(0.0, f64::max),
    })
}

fn max_div_u(diagnostics: &[StepDiagnostics], last: &SystemState, setup: &ProblemSetup) -> f64 {
    // Diagnostics record div u at the start of each step; add the final one.
    let quad = gauss_rule(3).expect("supported order");
    let tab = Tabulation::new(&ReferenceElement::new(ElementKind::Q2), &quad.points);
    let geom = CellGeometry::of(&setup.mesh);
    let mut worst = diagnostics.iter().map(|d| d.max_abs_div_prev).fold(0.0, f64::max);
    for cell in 0..setup.mesh.n_cells() {
        for q in 0..quad.len() {
            let g = eval_at(&last.u, &setup.u_map, cell, &tab, q, &geom).grad;
            worst = worst.max((g[0][0] + g[1][1]).abs());
        }
    }
    worst
}

/// Runs every row of `config`; a failing row is recorded, not propagated.
pub fn convergence_study(config: &ConvergenceConfig) -> Result<ErrorReport> {
    config.validate()?;
    let case = ManufacturedCase::new(config.theta, config.params);
    let mut rows = Vec::with_capacity(config.rows.len());
    for &(m, n) in &config.rows {
        info!("manufactured {}: m = {m}, N = {n}", config.theta.name());
        let row = run_manufactured(&case, m, n).unwrap_or_else(|e| ConvergenceRow {
            m,
            n_steps: n,
            outcome: Err(e.to_string()),
            max_abs_div_u: f64::NAN,
            max_residual: f64::NAN,
        });
        rows.push(row);
    }
    let rates = compute_rates(&rows);
    Ok(ErrorReport {
        theta: config.theta,
        rows,
        rates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PracticalConfig {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub params: MaterialParams,
    pub viscous_form: ViscousForm,
}

impl PracticalConfig {
    /// Default setup with `lambda1 = lambda2 = lambda`.
    pub fn new(lambda: f64) -> Self {
        Self {
            domain: Rect::new(0.0, 2.0, 0.0, 1.0),
            nx: 128,
            ny: 64,
            dt: 0.1,
            n_steps: 10,
            params: MaterialParams::practical(lambda),
            viscous_form: ViscousForm::SymGrad,
        }
    }

    pub fn setup(&self) -> Result<ProblemSetup> {
        if !(self.dt > 0.0) || self.n_steps == 0 {
            return Err(Error::Parameter("dt and the step count must be positive".into()));
        }
        let mesh = build_rect_mesh(self.domain, self.nx, self.ny)?;
        let mut setup = ProblemSetup::new(mesh, self.dt, self.n_steps);
        setup.u_dirichlet = vec![
            DirichletBc::new(BoundaryTag::Gamma1, Arc::new(|_, x| [0.0, -(0.5 * PI * x[0]).sin()])),
            DirichletBc::homogeneous(BoundaryTag::Gamma2),
            DirichletBc::homogeneous(BoundaryTag::Gamma3),
            DirichletBc::homogeneous(BoundaryTag::Gamma4),
        ];
        setup.v_dirichlet = vec![
            DirichletBc::homogeneous(BoundaryTag::Gamma1),
            DirichletBc::homogeneous(BoundaryTag::Gamma3),
        ];
        let (rho, rho_s) = (self.params.rho, self.params.rho_s);
        setup.f_solid = Arc::new(move |_, _| [0.0, -rho_s]);
        setup.f_fluid = Arc::new(move |_, _| [0.0, -rho]);
        setup.viscous_form = self.viscous_form;
        setup.pressure_gauge = PressureGauge::None;
        Ok(setup)
    }
}

#[derive(Debug, Clone)]
pub struct PracticalResult {
    pub lambda: f64,
    pub times: Vec<f64>,
    /// `||eps(u_h^n)||_inf` for `n = 1..=N`.
    pub strain_series: Vec<f64>,
    pub final_state: SystemState,
    /// Nodal minimum and maximum of the final pressure.
    pub pressure_range: (f64, f64),
    pub diagnostics: Vec<StepDiagnostics>,
    /// States at every step when requested.
    pub history: Vec<SystemState>,
}

/// Runs the compression problem from rest.
pub fn practical_problem(config: &PracticalConfig, keep_history: bool) -> Result<(ProblemSetup, PracticalResult)> {
    let setup = config.setup()?;
    let initial = SystemState::zeros(&setup);
    let sampler = StrainSampler::new(&setup.mesh);
    let mut series = Vec::with_capacity(config.n_steps);
    let mut times = Vec::with_capacity(config.n_steps);
    let lambda = config.params.lambda1;
    info!("practical problem: lambda1 = {lambda}, lambda2 = {}", config.params.lambda2);
    let out = time_loop(&setup, &config.params, initial, RunOptions { keep_history }, |state, _| {
        times.push(state.time);
        series.push(sampler.linf(&state.u, &setup.u_map));
        Ok(())
    })
    .map_err(|e| match e {
        Error::ConstitutivePositivity { cell, quantity, value } => Error::Parameter(format!(
            "lambda = {lambda}: {quantity} = {value:e}{}",
            cell.map(|c| format!(" in cell {c}")).unwrap_or_default()
        )),
        other => other,
    })?;
    let p = &out.final_state.p;
    let pressure_range = p
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let result = PracticalResult {
        lambda,
        times,
        strain_series: series,
        pressure_range,
        final_state: out.final_state,
        diagnostics: out.diagnostics,
        history: out.history,
    };
    Ok((setup, result))
}

/// Evaluates `|eps(u_h)|` at a fixed per-cell point set: the 3x3 Gauss
/// points and the nine Q2 nodes.
pub struct StrainSampler {
    tab: Tabulation,
    geom: CellGeometry,
}

impl StrainSampler {
    pub fn new(mesh: &Mesh) -> Self {
        let quad = gauss_rule(3).expect("supported order");
        let q2 = ReferenceElement::new(ElementKind::Q2);
        let mut points = quad.points.clone();
        points.extend_from_slice(&q2.node_coords);
        Self {
            tab: Tabulation::new(&q2, &points),
            geom: CellGeometry::of(mesh),
        }
    }

    /// Frobenius norm of the strain at sample `k` of `cell`.
    pub fn strain_norm(&self, u: &[f64], dofmap: &DofMap, cell: usize, k: usize) -> f64 {
        let g = eval_at(u, dofmap, cell, &self.tab, k, &self.geom).grad;
        let off = 0.5 * (g[0][1] + g[1][0]);
        (g[0][0] * g[0][0] + g[1][1] * g[1][1] + 2.0 * off * off).sqrt()
    }

    pub fn n_samples(&self) -> usize {
        self.tab.n_points
    }

    pub fn linf(&self, u: &[f64], dofmap: &DofMap) -> f64 {
        let mut worst = 0.0f64;
        for cell in 0..dofmap.n_cells {
            for k in 0..self.n_samples() {
                worst = worst.max(self.strain_norm(u, dofmap, cell, k));
            }
        }
        worst
    }
}

/// `max |eps(u_h)|` over the deterministic sample set of [`StrainSampler`].
pub fn strain_linf(u: &[f64], dofmap: &DofMap, mesh: &Mesh) -> f64 {
    StrainSampler::new(mesh).linf(u, dofmap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::nodal_interpolate;
    use crate::mesh::unit_square;

    #[test]
    fn coupled_rule_matches_level_table() {
        assert_eq!(coupled_steps(4, COUPLING_CONSTANT), 10);
        assert_eq!(coupled_steps(5, COUPLING_CONSTANT), 40);
        assert_eq!(coupled_steps(6, COUPLING_CONSTANT), 160);
        let cfg = ConvergenceConfig::coupled(Theta::Exp, &[4, 5, 6], COUPLING_CONSTANT);
        assert_eq!(cfg.rows, vec![(4, 10), (5, 40), (6, 160)]);
    }

    fn row(m: u32, e: [f64; 5]) -> ConvergenceRow {
        ConvergenceRow {
            m,
            n_steps: 1,
            outcome: Ok(ErrorNorms {
                err_u_h01: e[0],
                err_u_l2: e[1],
                err_v_h01: e[2],
                err_v_l2: e[3],
                err_p_l2: e[4],
            }),
            max_abs_div_u: 0.0,
            max_residual: 0.0,
        }
    }

    #[test]
    fn rates_from_published_errors() {
        let rows = [
            row(4, [3.8349e-4, 1.0, 2.2632e-2, 1.0, 9.0339e-3]),
            row(5, [9.9120e-5, 1.0, 5.8790e-3, 0.0, 2.3428e-3]),
        ];
        let r = compute_rates(&rows);
        assert_eq!(r.len(), 1);
        let rates = r[0].rates;
        assert!((rates[0].unwrap() - 1.952).abs() < 5e-4);
        assert!((rates[2].unwrap() - 1.945).abs() < 5e-4);
        assert!((rates[4].unwrap() - 1.947).abs() < 5e-4);
        assert_eq!(rates[1], Some(0.0));
        assert_eq!(rates[3], None);
        assert!((rate(3.3710e-2, 8.4743e-3).unwrap() - 1.992).abs() < 5e-4);
    }

    #[test]
    fn rates_skip_non_halving_pairs_and_failures() {
        let mut failed = row(5, [1.0; 5]);
        failed.outcome = Err("boom".into());
        let rows = [row(4, [1.0; 5]), row(4, [1.0; 5]), failed, row(6, [1.0; 5])];
        let r = compute_rates(&rows);
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|x| x.rates == [None; 5]));
    }

    #[test]
    fn strain_samples() {
        let mesh = unit_square(2).unwrap();
        let map = DofMap::new(&mesh, ElementKind::Q2, 2);
        assert_eq!(strain_linf(&vec![0.0; map.n_dofs()], &map, &mesh), 0.0);
        let lin = nodal_interpolate(|x| [x[0], 0.0], &map);
        assert!((strain_linf(&lin, &map, &mesh) - 1.0).abs() < 1e-12);
        let quad = nodal_interpolate(|x| [x[0] * x[0], 0.0], &map);
        assert!((strain_linf(&quad, &map, &mesh) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn practical_setup_is_consistent() {
        let cfg = PracticalConfig::new(3.0);
        assert_eq!(cfg.nx * cfg.ny, 8192);
        let setup = PracticalConfig { nx: 8, ny: 4, ..cfg.clone() }.setup().unwrap();
        setup.validate().unwrap();
        let u = setup.u_constraints(0.1);
        // Bottom midpoint is pushed down by sin(pi/2) = 1.
        let node = setup
            .u_map
            .node_coords()
            .iter()
            .position(|x| (x[0] - 1.0).abs() < 1e-12 && x[1] == 0.0)
            .unwrap();
        assert_eq!(u[setup.u_map.dof(node, 0)], Some(0.0));
        assert!((u[setup.u_map.dof(node, 1)].unwrap() + 1.0).abs() < 1e-15);
        // Lateral velocity nodes are free away from the corners.
        let v = setup.v_constraints(0.1);
        let side = setup
            .v_map
            .node_coords()
            .iter()
            .position(|x| x[0] == 0.0 && (x[1] - 0.5).abs() < 1e-12)
            .unwrap();
        assert_eq!(v[setup.v_map.dof(side, 0)], None);
    }

    #[test]
    fn invalid_rows_rejected() {
        let cfg = ConvergenceConfig::new(Theta::Exp, vec![(0, 10)]);
        assert!(convergence_study(&cfg).is_err());
    }
}
