//! Block-system assembly for one time step.

use crate::constitutive::{coeff_f, truncate_unchecked, MaterialParams};
use crate::error::{Error, Result};
use crate::fem::{gauss_rule, CellGeometry, CsrMatrix, ElementKind, QuadratureRule, ReferenceElement, Tabulation};

use super::{PressureGauge, ProblemSetup, SystemState, ViscousForm};

const NQ2: usize = 9;
const NQ1: usize = 4;
const NU: usize = 2 * NQ2;

/// Offsets of the unknown blocks `[u | v | p | gauge]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub nu: usize,
    pub nv: usize,
    pub np: usize,
    pub gauge: bool,
}

impl BlockLayout {
    pub fn of(setup: &ProblemSetup) -> Self {
        Self {
            nu: setup.u_map.n_dofs(),
            nv: setup.v_map.n_dofs(),
            np: setup.p_map.n_dofs(),
            gauge: setup.pressure_gauge == PressureGauge::ZeroMean,
        }
    }

    pub fn v_offset(&self) -> usize {
        self.nu
    }

    pub fn p_offset(&self) -> usize {
        self.nu + self.nv
    }

    pub fn gauge_index(&self) -> Option<usize> {
        self.gauge.then_some(self.nu + self.nv + self.np)
    }

    pub fn n_total(&self) -> usize {
        self.nu + self.nv + self.np + usize::from(self.gauge)
    }

    /// Row scaling that turns the coupled matrix symmetric: displacement
    /// rows are divided by `dt`, continuity and gauge rows change sign.
    pub fn symmetrizing_scale(&self, dt: f64) -> Vec<f64> {
        let mut s = vec![1.0 / dt; self.nu];
        s.resize(self.nu + self.nv, 1.0);
        s.resize(self.n_total(), -1.0);
        s
    }

    /// Expected pivot signs of the symmetrized saddle-point matrix.
    pub fn pivot_signs(&self) -> Vec<i8> {
        let mut s = vec![1i8; self.nu + self.nv];
        s.resize(self.nu + self.nv + self.np, -1);
        if self.gauge {
            s.push(1);
        }
        s
    }

    /// Concatenates a state into one unknown vector.
    pub fn pack(&self, state: &SystemState) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_total());
        x.extend_from_slice(&state.u);
        x.extend_from_slice(&state.v);
        x.extend_from_slice(&state.p);
        if self.gauge {
            x.push(state.multiplier);
        }
        x
    }

    /// Splits an unknown vector into `(u, v, p, multiplier)`.
    pub fn unpack(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        let (u, rest) = x.split_at(self.nu);
        let (v, rest) = rest.split_at(self.nv);
        let (p, rest) = rest.split_at(self.np);
        (u.to_vec(), v.to_vec(), p.to_vec(), rest.first().copied().unwrap_or(0.0))
    }
}

/// Extremes of the frozen coefficients over all quadrature points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBounds {
    /// `min (1 + lambda1 T(div u^{n-1}))`
    pub min_one_plus_l1: f64,
    /// `min F(T(div u^{n-1}))`
    pub min_f: f64,
    /// `max |div u^{n-1}|` before truncation.
    pub max_abs_div: f64,
}

/// Assembled system after Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub bounds: CoefficientBounds,
}

/// Reference-cell integrals that are identical on every cell of a uniform
/// mesh. Indices: Q2 nodes `a, b`, components `c, d`, Q1 nodes `j`.
struct CellConstants {
    /// `∫ N_a N_b`
    mass: [[f64; NQ2]; NQ2],
    /// `∫ ∇N_a · ∇N_b`
    lap: [[f64; NQ2]; NQ2],
    /// `∫ ∂_d N_a ∂_c N_b`, stored at `[a*2+c][b*2+d]`
    cross: [[f64; NU]; NU],
    /// `∫ q_j ∂_d N_b` at `[j][b*2+d]`
    div: [[f64; NU]; NQ1],
    /// `∫ q_j`
    q_mean: [f64; NQ1],
}

/// Assembles the monolithic block system; holds the fixed sparsity pattern
/// and reference data.
pub struct Assembler {
    pub layout: BlockLayout,
    pattern: CsrMatrix,
    quad: QuadratureRule,
    tab_q2: Tabulation,
    geom: CellGeometry,
    /// Physical Q2 gradients at quadrature points, `[q * 9 + a]`.
    grads: Vec<[f64; 2]>,
    consts: CellConstants,
}

impl Assembler {
    pub fn new(setup: &ProblemSetup) -> Result<Self> {
        let layout = BlockLayout::of(setup);
        let quad = gauss_rule(3)?;
        let q2 = ReferenceElement::new(ElementKind::Q2);
        let q1 = ReferenceElement::new(ElementKind::Q1);
        let tab_q2 = Tabulation::new(&q2, &quad.points);
        let tab_q1 = Tabulation::new(&q1, &quad.points);
        let geom = CellGeometry::of(&setup.mesh);
        let grads: Vec<[f64; 2]> = tab_q2.gradients.iter().map(|&g| geom.physical_gradient(g)).collect();

        let mut consts = CellConstants {
            mass: [[0.0; NQ2]; NQ2],
            lap: [[0.0; NQ2]; NQ2],
            cross: [[0.0; NU]; NU],
            div: [[0.0; NU]; NQ1],
            q_mean: [0.0; NQ1],
        };
        for q in 0..quad.len() {
            let jw = quad.weights[q] * geom.det_jac;
            let n = tab_q2.values_at(q);
            let g = &grads[q * NQ2..(q + 1) * NQ2];
            let pq = tab_q1.values_at(q);
            for a in 0..NQ2 {
                for b in 0..NQ2 {
                    consts.mass[a][b] += jw * n[a] * n[b];
                    consts.lap[a][b] += jw * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    for c in 0..2 {
                        for d in 0..2 {
                            consts.cross[a * 2 + c][b * 2 + d] += jw * g[a][d] * g[b][c];
                        }
                    }
                }
            }
            for j in 0..NQ1 {
                consts.q_mean[j] += jw * pq[j];
                for b in 0..NQ2 {
                    for d in 0..2 {
                        consts.div[j][b * 2 + d] += jw * pq[j] * g[b][d];
                    }
                }
            }
        }

        let pattern = build_pattern(setup, &layout);
        Ok(Self {
            layout,
            pattern,
            quad,
            tab_q2,
            geom,
            grads,
            consts,
        })
    }

    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    /// Assembles the step `prev -> prev.step + 1` with coefficients frozen
    /// at `prev.u`, forcing and boundary data at the new time level, then
    /// eliminates Dirichlet unknowns.
    pub fn assemble_step(
        &self,
        prev: &SystemState,
        setup: &ProblemSetup,
        params: &MaterialParams,
    ) -> Result<LinearSystem> {
        let (mut matrix, mut rhs, bounds) = self.assemble_raw(prev, setup, params)?;
        let t = prev.time + setup.dt;
        let constrained = self.constraint_values(setup, t);
        eliminate(&mut matrix, &mut rhs, &constrained);
        Ok(LinearSystem { matrix, rhs, bounds })
    }

    /// Prescribed values over the full unknown vector at time `t`.
    pub fn constraint_values(&self, setup: &ProblemSetup, t: f64) -> Vec<Option<f64>> {
        let mut c = setup.u_constraints(t);
        c.extend(setup.v_constraints(t));
        c.resize(self.layout.n_total(), None);
        c
    }

    /// Block system before Dirichlet elimination.
    pub fn assemble_raw(
        &self,
        prev: &SystemState,
        setup: &ProblemSetup,
        params: &MaterialParams,
    ) -> Result<(CsrMatrix, Vec<f64>, CoefficientBounds)> {
        let dt = setup.dt;
        let t = prev.time + dt;
        let lay = &self.layout;
        let k = &self.consts;
        let mut matrix = self.pattern.clone();
        let mut rhs = vec![0.0; lay.n_total()];
        let mut bounds = CoefficientBounds {
            min_one_plus_l1: f64::INFINITY,
            min_f: f64::INFINITY,
            max_abs_div: 0.0,
        };

        let alpha = params.alpha;
        let e_ratio = params.e2.abs() / params.e1;
        let sym = setup.viscous_form == ViscousForm::SymGrad;

        let mut u_dofs = Vec::with_capacity(NU);
        let mut v_dofs = Vec::with_capacity(NU);
        let mut p_dofs = Vec::with_capacity(NQ1);
        let nq = self.quad.len();
        let mut b1 = vec![0.0; nq];
        let mut b2 = vec![0.0; nq];
        let mut a_uu = [[0.0; NU]; NU];
        let mut a_vv = [[0.0; NU]; NU];
        let mut m_vec = [[0.0; NU]; NU];
        let mut f_u = [0.0; NU];
        let mut f_v = [0.0; NU];

        for cell in 0..setup.mesh.n_cells() {
            setup.u_map.cell_dofs(cell, &mut u_dofs);
            setup.v_map.cell_dofs(cell, &mut v_dofs);
            setup.p_map.cell_dofs(cell, &mut p_dofs);

            // Frozen coefficients at the quadrature points.
            for q in 0..nq {
                let g = &self.grads[q * NQ2..(q + 1) * NQ2];
                let mut div = 0.0;
                for a in 0..NQ2 {
                    div += g[a][0] * prev.u[u_dofs[2 * a]] + g[a][1] * prev.u[u_dofs[2 * a + 1]];
                }
                let s = truncate_unchecked(div, params.delta);
                let one_l1 = 1.0 + params.lambda1 * s;
                let f = coeff_f(s, params);
                bounds.min_one_plus_l1 = bounds.min_one_plus_l1.min(one_l1);
                bounds.min_f = bounds.min_f.min(f);
                bounds.max_abs_div = bounds.max_abs_div.max(div.abs());
                if !(one_l1 > 0.0) {
                    return Err(Error::ConstitutivePositivity {
                        cell: Some(cell),
                        quantity: "1 + lambda1 T(div u)",
                        value: one_l1,
                    });
                }
                if !(f > 0.0) {
                    return Err(Error::ConstitutivePositivity {
                        cell: Some(cell),
                        quantity: "F(T(div u))",
                        value: f,
                    });
                }
                b1[q] = 1.0 / one_l1;
                b2[q] = (1.0 + params.lambda2 * s) / (one_l1 * f);
            }

            // Vector mass and the constant parts of both diagonal blocks.
            for a in 0..NQ2 {
                for b in 0..NQ2 {
                    for c in 0..2 {
                        for d in 0..2 {
                            let (i, j) = (a * 2 + c, b * 2 + d);
                            let m = if c == d { k.mass[a][b] } else { 0.0 };
                            let lap = if c == d { k.lap[a][b] } else { 0.0 };
                            m_vec[i][j] = m;
                            a_uu[i][j] = alpha / dt * m;
                            let visc = if sym { lap + k.cross[i][j] } else { lap };
                            a_vv[i][j] = (params.rho / dt + alpha) * m + params.nu * visc;
                        }
                    }
                }
            }

            // Coefficient-weighted elasticity terms.
            f_u.fill(0.0);
            f_v.fill(0.0);
            for q in 0..nq {
                let jw = self.quad.weights[q] * self.geom.det_jac;
                let g = &self.grads[q * NQ2..(q + 1) * NQ2];
                let w1 = jw * b1[q] / params.e1;
                let w2 = jw * b2[q] * e_ratio;
                for a in 0..NQ2 {
                    for b in 0..NQ2 {
                        let gg = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                        for c in 0..2 {
                            for d in 0..2 {
                                let eps = 0.5 * (if c == d { gg } else { 0.0 } + g[a][d] * g[b][c]);
                                a_uu[a * 2 + c][b * 2 + d] += w1 * eps + w2 * g[a][c] * g[b][d];
                            }
                        }
                    }
                }

                let x = setup.mesh.map_to_physical(cell, self.quad.points[q]);
                let fs = (setup.f_solid)(t, x);
                let ff = (setup.f_fluid)(t, x);
                let n = self.tab_q2.values_at(q);
                for a in 0..NQ2 {
                    for c in 0..2 {
                        f_u[a * 2 + c] += jw * n[a] * fs[c];
                        f_v[a * 2 + c] += jw * n[a] * ff[c];
                    }
                }
            }

            // Previous-step contributions to the right-hand side.
            for i in 0..NU {
                let mut mu = 0.0;
                let mut mv = 0.0;
                for j in 0..NU {
                    mu += m_vec[i][j] * prev.u[u_dofs[j]];
                    mv += m_vec[i][j] * prev.v[v_dofs[j]];
                }
                rhs[u_dofs[i]] += alpha / dt * mu + f_u[i];
                rhs[lay.nu + v_dofs[i]] += params.rho / dt * mv - alpha / dt * mu + f_v[i];
            }

            // Scatter.
            let vo = lay.v_offset();
            let po = lay.p_offset();
            for i in 0..NU {
                let (ru, rv) = (u_dofs[i], vo + v_dofs[i]);
                for j in 0..NU {
                    let (cu, cv) = (u_dofs[j], vo + v_dofs[j]);
                    matrix.add(ru, cu, a_uu[i][j]);
                    matrix.add(ru, cv, -alpha * m_vec[i][j]);
                    matrix.add(rv, cu, -alpha / dt * m_vec[i][j]);
                    matrix.add(rv, cv, a_vv[i][j]);
                }
                for (jp, &pd) in p_dofs.iter().enumerate() {
                    let bij = k.div[jp][i];
                    matrix.add(rv, po + pd, -bij);
                    matrix.add(po + pd, rv, bij);
                }
            }
            if let Some(gi) = lay.gauge_index() {
                for (jp, &pd) in p_dofs.iter().enumerate() {
                    matrix.add(gi, po + pd, k.q_mean[jp]);
                    matrix.add(po + pd, gi, k.q_mean[jp]);
                }
            }
        }

        Ok((matrix, rhs, bounds))
    }
}

/// Sparsity of the coupled system: `uu, uv, vu, vv, vp, pv` cell blocks
/// plus the gauge row and column.
fn build_pattern(setup: &ProblemSetup, lay: &BlockLayout) -> CsrMatrix {
    let n = lay.n_total();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    let (vo, po) = (lay.v_offset(), lay.p_offset());
    let mut u_dofs = Vec::new();
    let mut v_dofs = Vec::new();
    let mut p_dofs = Vec::new();
    for cell in 0..setup.mesh.n_cells() {
        setup.u_map.cell_dofs(cell, &mut u_dofs);
        setup.v_map.cell_dofs(cell, &mut v_dofs);
        setup.p_map.cell_dofs(cell, &mut p_dofs);
        for &i in &u_dofs {
            rows[i].extend(u_dofs.iter().copied());
            rows[i].extend(v_dofs.iter().map(|&j| vo + j));
        }
        for &i in &v_dofs {
            let r = &mut rows[vo + i];
            r.extend(u_dofs.iter().copied());
            r.extend(v_dofs.iter().map(|&j| vo + j));
            r.extend(p_dofs.iter().map(|&j| po + j));
        }
        for &i in &p_dofs {
            rows[po + i].extend(v_dofs.iter().map(|&j| vo + j));
        }
    }
    if let Some(gi) = lay.gauge_index() {
        for j in 0..lay.np {
            rows[po + j].push(gi);
            rows[gi].push(po + j);
        }
    }
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
    }
    CsrMatrix::from_sorted_rows(n, rows)
}

/// Symmetric elimination of prescribed unknowns: their columns are moved to
/// the right-hand side and their rows replaced by identity rows.
pub(crate) fn eliminate(matrix: &mut CsrMatrix, rhs: &mut [f64], constrained: &[Option<f64>]) {
    for i in 0..matrix.nrows {
        let (lo, hi) = (matrix.row_ptr[i], matrix.row_ptr[i + 1]);
        if let Some(g) = constrained[i] {
            for k in lo..hi {
                matrix.values[k] = if matrix.col_idx[k] == i { 1.0 } else { 0.0 };
            }
            rhs[i] = g;
        } else {
            for k in lo..hi {
                if let Some(g) = constrained[matrix.col_idx[k]] {
                    rhs[i] -= matrix.values[k] * g;
                    matrix.values[k] = 0.0;
                }
            }
        }
    }
}
