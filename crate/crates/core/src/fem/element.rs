//! Lagrange reference elements on the quadrilateral `[-1,1]^2`.
//!
//! Nodes are ordered lexicographically over the tensor grid of 1D nodes
//! (`x` fastest), so node `j * (k + 1) + i` sits at `(s_i, s_j)` where
//! `s = {-1, 1}` for Q1 and `s = {-1, 0, 1}` for Q2.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Q1,
    Q2,
}

impl ElementKind {
    pub fn degree(self) -> usize {
        match self {
            ElementKind::Q1 => 1,
            ElementKind::Q2 => 2,
        }
    }

    pub fn nodes_per_axis(self) -> usize {
        self.degree() + 1
    }

    pub fn n_nodes(self) -> usize {
        self.nodes_per_axis() * self.nodes_per_axis()
    }
}

/// Values and reference gradients of all shape functions at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEval {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub kind: ElementKind,
    pub node_coords: Vec<[f64; 2]>,
}

impl ReferenceElement {
    pub fn new(kind: ElementKind) -> Self {
        let s = nodes_1d(kind);
        let mut node_coords = Vec::with_capacity(kind.n_nodes());
        for &y in s {
            for &x in s {
                node_coords.push([x, y]);
            }
        }
        Self { kind, node_coords }
    }

    pub fn n_nodes(&self) -> usize {
        self.kind.n_nodes()
    }

    /// Evaluates every shape function and its reference gradient at `xi`.
    pub fn shape_eval(&self, xi: [f64; 2]) -> Result<ShapeEval> {
        const TOL: f64 = 1e-12;
        if xi.iter().any(|c| !c.is_finite() || c.abs() > 1.0 + TOL) {
            return Err(Error::OutsideReferenceCell(xi[0], xi[1]));
        }
        Ok(self.shape_eval_unchecked(xi))
    }

    pub(crate) fn shape_eval_unchecked(&self, xi: [f64; 2]) -> ShapeEval {
        let k = self.kind.nodes_per_axis();
        let (lx, dlx) = basis_1d(self.kind, xi[0]);
        let (ly, dly) = basis_1d(self.kind, xi[1]);
        let mut values = Vec::with_capacity(k * k);
        let mut gradients = Vec::with_capacity(k * k);
        for j in 0..k {
            for i in 0..k {
                values.push(lx[i] * ly[j]);
                gradients.push([dlx[i] * ly[j], lx[i] * dly[j]]);
            }
        }
        ShapeEval { values, gradients }
    }
}

fn nodes_1d(kind: ElementKind) -> &'static [f64] {
    match kind {
        ElementKind::Q1 => &[-1.0, 1.0],
        ElementKind::Q2 => &[-1.0, 0.0, 1.0],
    }
}

/// 1D Lagrange basis values and derivatives (unused slots are zero).
fn basis_1d(kind: ElementKind, s: f64) -> ([f64; 3], [f64; 3]) {
    match kind {
        ElementKind::Q1 => ([0.5 * (1.0 - s), 0.5 * (1.0 + s), 0.0], [-0.5, 0.5, 0.0]),
        ElementKind::Q2 => (
            [0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)],
            [s - 0.5, -2.0 * s, s + 0.5],
        ),
    }
}

/// Shape values and gradients of one element tabulated at a quadrature
/// rule's points. Gradients are in reference coordinates.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_nodes: usize,
    pub n_points: usize,
    /// `values[q * n_nodes + a]`
    pub values: Vec<f64>,
    /// `gradients[q * n_nodes + a]`
    pub gradients: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn new(elem: &ReferenceElement, points: &[[f64; 2]]) -> Self {
        let n_nodes = elem.n_nodes();
        let mut values = Vec::with_capacity(n_nodes * points.len());
        let mut gradients = Vec::with_capacity(n_nodes * points.len());
        for &p in points {
            let e = elem.shape_eval_unchecked(p);
            values.extend_from_slice(&e.values);
            gradients.extend_from_slice(&e.gradients);
        }
        Self {
            n_nodes,
            n_points: points.len(),
            values,
            gradients,
        }
    }

    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_nodes..(q + 1) * self.n_nodes]
    }

    pub fn gradients_at(&self, q: usize) -> &[[f64; 2]] {
        &self.gradients[q * self.n_nodes..(q + 1) * self.n_nodes]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::quadrature::gauss_rule;

    #[test]
    fn q1_kronecker_at_node_zero() {
        let e = ReferenceElement::new(ElementKind::Q1);
        let s = e.shape_eval(e.node_coords[0]).unwrap();
        assert_eq!(s.values, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn kronecker_property() {
        for kind in [ElementKind::Q1, ElementKind::Q2] {
            let e = ReferenceElement::new(kind);
            for (j, &node) in e.node_coords.iter().enumerate() {
                let s = e.shape_eval(node).unwrap();
                for (i, v) in s.values.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn q2_center_partition_of_unity() {
        let e = ReferenceElement::new(ElementKind::Q2);
        let s = e.shape_eval([0.0, 0.0]).unwrap();
        assert!((s.values.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let gx: f64 = s.gradients.iter().map(|g| g[0]).sum();
        let gy: f64 = s.gradients.iter().map(|g| g[1]).sum();
        assert!(gx.abs() < 1e-15 && gy.abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_at_quadrature_points() {
        let q = gauss_rule(4).unwrap();
        for kind in [ElementKind::Q1, ElementKind::Q2] {
            let e = ReferenceElement::new(kind);
            for &p in &q.points {
                let s = e.shape_eval(p).unwrap();
                assert!((s.values.iter().sum::<f64>() - 1.0).abs() < 1e-13);
                let gx: f64 = s.gradients.iter().map(|g| g[0]).sum();
                let gy: f64 = s.gradients.iter().map(|g| g[1]).sum();
                assert!(gx.abs() < 1e-13 && gy.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn q2_reproduces_linear_and_biquadratic() {
        let e = ReferenceElement::new(ElementKind::Q2);
        let f = |p: [f64; 2]| 0.3 + 1.7 * p[0] - 0.4 * p[1] + 2.0 * p[0] * p[0] * p[1] * p[1] - p[0] * p[1];
        let fx = |p: [f64; 2]| 1.7 + 4.0 * p[0] * p[1] * p[1] - p[1];
        let nodal: Vec<f64> = e.node_coords.iter().map(|&n| f(n)).collect();
        let pts = [[0.13, -0.71], [-0.95, 0.2], [0.5, 0.5], [0.999, -0.3], [-0.42, 0.88]];
        for p in pts {
            let s = e.shape_eval(p).unwrap();
            let v: f64 = s.values.iter().zip(&nodal).map(|(a, b)| a * b).sum();
            let gx: f64 = s.gradients.iter().zip(&nodal).map(|(g, b)| g[0] * b).sum();
            assert!((v - f(p)).abs() < 1e-13);
            assert!((gx - fx(p)).abs() < 1e-12);
            // x-linear field
            let lin: f64 = s.values.iter().zip(&e.node_coords).map(|(a, n)| a * n[0]).sum();
            assert!((lin - p[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let e = ReferenceElement::new(ElementKind::Q2);
        let p = [0.21, -0.37];
        let h = 1e-6;
        let s = e.shape_eval(p).unwrap();
        let sx = e.shape_eval([p[0] + h, p[1]]).unwrap();
        let sy = e.shape_eval([p[0], p[1] + h]).unwrap();
        let sxm = e.shape_eval([p[0] - h, p[1]]).unwrap();
        let sym = e.shape_eval([p[0], p[1] - h]).unwrap();
        for a in 0..9 {
            let dx = (sx.values[a] - sxm.values[a]) / (2.0 * h);
            let dy = (sy.values[a] - sym.values[a]) / (2.0 * h);
            assert!((dx - s.gradients[a][0]).abs() < 1e-8);
            assert!((dy - s.gradients[a][1]).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_points_outside() {
        let e = ReferenceElement::new(ElementKind::Q1);
        assert!(e.shape_eval([1.5, 0.0]).is_err());
        assert!(e.shape_eval([0.0, f64::NAN]).is_err());
    }
}
