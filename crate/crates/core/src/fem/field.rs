//! Nodal interpolation, pointwise evaluation of FE fields, and error norms.

use crate::fem::dofmap::DofMap;
use crate::fem::element::{ReferenceElement, Tabulation};
use crate::fem::quadrature::QuadratureRule;
use crate::mesh::Mesh;

/// Constant diagonal Jacobian data shared by every cell of a uniform mesh.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    /// `d xi / d x` per axis.
    pub inv_jac: [f64; 2],
    pub det_jac: f64,
}

impl CellGeometry {
    pub fn of(mesh: &Mesh) -> Self {
        let (dx, dy) = mesh.cell_size();
        Self {
            inv_jac: [2.0 / dx, 2.0 / dy],
            det_jac: 0.25 * dx * dy,
        }
    }

    pub fn physical_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [g[0] * self.inv_jac[0], g[1] * self.inv_jac[1]]
    }
}

/// A sampled exact field: value and gradient (`grad[c][d] = d u_c / d x_d`).
/// Only the first `n_components` entries are read.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldSample {
    pub value: [f64; 2],
    pub grad: [[f64; 2]; 2],
}

/// Lagrange-node interpolation of `field` into the space of `dofmap`.
pub fn nodal_interpolate(field: impl Fn([f64; 2]) -> [f64; 2], dofmap: &DofMap) -> Vec<f64> {
    let mut out = vec![0.0; dofmap.n_dofs()];
    for (node, &x) in dofmap.node_coords().iter().enumerate() {
        let v = field(x);
        for c in 0..dofmap.n_components {
            out[dofmap.dof(node, c)] = v[c];
        }
    }
    out
}

/// Value and physical gradient of an FE field at tabulated point `q` of `cell`.
pub fn eval_at(
    coeffs: &[f64],
    dofmap: &DofMap,
    cell: usize,
    tab: &Tabulation,
    q: usize,
    geom: &CellGeometry,
) -> FieldSample {
    let nc = dofmap.n_components;
    let mut s = FieldSample::default();
    let vals = tab.values_at(q);
    let grads = tab.gradients_at(q);
    for (a, &node) in dofmap.cell_nodes(cell).iter().enumerate() {
        let g = geom.physical_gradient(grads[a]);
        for c in 0..nc {
            let u = coeffs[node * nc + c];
            s.value[c] += vals[a] * u;
            s.grad[c][0] += g[0] * u;
            s.grad[c][1] += g[1] * u;
        }
    }
    s
}

/// Locates the cell containing `x` and evaluates the FE field there.
pub fn eval_point(coeffs: &[f64], dofmap: &DofMap, mesh: &Mesh, x: [f64; 2]) -> FieldSample {
    let (dx, dy) = mesh.cell_size();
    let d = mesh.domain;
    let fx = ((x[0] - d.x_min) / dx).clamp(0.0, mesh.nx as f64);
    let fy = ((x[1] - d.y_min) / dy).clamp(0.0, mesh.ny as f64);
    let cx = (fx.floor() as usize).min(mesh.nx - 1);
    let cy = (fy.floor() as usize).min(mesh.ny - 1);
    let cell = cy * mesh.nx + cx;
    let xi = [2.0 * (fx - cx as f64) - 1.0, 2.0 * (fy - cy as f64) - 1.0];
    let elem = ReferenceElement::new(dofmap.kind);
    let tab = Tabulation::new(&elem, &[xi]);
    eval_at(coeffs, dofmap, cell, &tab, 0, &CellGeometry::of(mesh))
}

/// `(||exact - u_h||_L2, |exact - u_h|_H1)` by cell-wise quadrature.
pub fn error_norms(
    coeffs: &[f64],
    dofmap: &DofMap,
    mesh: &Mesh,
    exact: impl Fn([f64; 2]) -> FieldSample,
    quad: &QuadratureRule,
) -> (f64, f64) {
    let elem = ReferenceElement::new(dofmap.kind);
    let tab = Tabulation::new(&elem, &quad.points);
    let geom = CellGeometry::of(mesh);
    let nc = dofmap.n_components;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for cell in 0..mesh.n_cells() {
        for (q, (&xi, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
            let x = mesh.map_to_physical(cell, xi);
            let uh = eval_at(coeffs, dofmap, cell, &tab, q, &geom);
            let ue = exact(x);
            let jw = w * geom.det_jac;
            for c in 0..nc {
                let e = ue.value[c] - uh.value[c];
                l2 += jw * e * e;
                for d in 0..2 {
                    let g = ue.grad[c][d] - uh.grad[c][d];
                    h1 += jw * g * g;
                }
            }
        }
    }
    (l2.sqrt(), h1.sqrt())
}
