//! Global numbering of continuous Q1/Q2 Lagrange unknowns.

use crate::fem::element::ElementKind;
use crate::mesh::{BoundaryTag, Mesh};

/// Conforming DOF numbering on the global node lattice of a structured mesh.
///
/// Lattice nodes are numbered lexicographically (`J * points_x + I`); DOFs
/// interleave components (`node * n_components + c`). Local cell nodes
/// follow the reference element ordering.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub kind: ElementKind,
    pub n_components: usize,
    pub n_cells: usize,
    /// Lattice points along x and y.
    pub points_x: usize,
    pub points_y: usize,
    /// `cell_nodes[cell * nodes_per_cell + a]`
    cell_nodes: Vec<usize>,
    node_coords: Vec<[f64; 2]>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, kind: ElementKind, n_components: usize) -> Self {
        assert!(n_components == 1 || n_components == 2, "1 or 2 components supported");
        let k = kind.degree();
        let points_x = k * mesh.nx + 1;
        let points_y = k * mesh.ny + 1;
        let npc = kind.n_nodes();

        let mut cell_nodes = Vec::with_capacity(mesh.n_cells() * npc);
        for cell in 0..mesh.n_cells() {
            let (cx, cy) = mesh.cell_position(cell);
            for j in 0..=k {
                for i in 0..=k {
                    cell_nodes.push((k * cy + j) * points_x + k * cx + i);
                }
            }
        }

        let d = mesh.domain;
        let coord = |idx: usize, n: usize, lo: f64, hi: f64| {
            if idx == n - 1 {
                hi
            } else {
                lo + (hi - lo) * idx as f64 / (n - 1) as f64
            }
        };
        let mut node_coords = Vec::with_capacity(points_x * points_y);
        for j in 0..points_y {
            let y = coord(j, points_y, d.y_min, d.y_max);
            for i in 0..points_x {
                node_coords.push([coord(i, points_x, d.x_min, d.x_max), y]);
            }
        }

        Self {
            kind,
            n_components,
            n_cells: mesh.n_cells(),
            points_x,
            points_y,
            cell_nodes,
            node_coords,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.points_x * self.points_y
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes() * self.n_components
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.kind.n_nodes()
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.nodes_per_cell() * self.n_components
    }

    pub fn cell_nodes(&self, cell: usize) -> &[usize] {
        let n = self.nodes_per_cell();
        &self.cell_nodes[cell * n..(cell + 1) * n]
    }

    /// Global DOFs of a cell in local order (`a * n_components + c`).
    pub fn cell_dofs(&self, cell: usize, out: &mut Vec<usize>) {
        out.clear();
        for &node in self.cell_nodes(cell) {
            for c in 0..self.n_components {
                out.push(node * self.n_components + c);
            }
        }
    }

    pub fn dof(&self, node: usize, component: usize) -> usize {
        node * self.n_components + component
    }

    pub fn node_coord(&self, node: usize) -> [f64; 2] {
        self.node_coords[node]
    }

    pub fn node_coords(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    /// Lattice nodes lying on the side tagged `tag`, corners included.
    pub fn boundary_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let (px, py) = (self.points_x, self.points_y);
        match tag {
            BoundaryTag::Gamma1 => (0..px).collect(),
            BoundaryTag::Gamma2 => (0..py).map(|j| j * px + px - 1).collect(),
            BoundaryTag::Gamma3 => (0..px).map(|i| (py - 1) * px + i).collect(),
            BoundaryTag::Gamma4 => (0..py).map(|j| j * px).collect(),
        }
    }

    /// Per-DOF prescribed values for the listed sides.
    ///
    /// `value(tag, x)` returns the prescribed vector (only the first
    /// `n_components` entries are used). At corners shared by two listed
    /// sides the lower tag index wins.
    pub fn dirichlet_mask(
        &self,
        tags: &[BoundaryTag],
        value: impl Fn(BoundaryTag, [f64; 2]) -> [f64; 2],
    ) -> Vec<Option<f64>> {
        let mut mask = vec![None; self.n_dofs()];
        let mut sorted = tags.to_vec();
        sorted.sort();
        sorted.dedup();
        // Apply in reverse precedence so the lowest index is written last.
        for &tag in sorted.iter().rev() {
            for node in self.boundary_nodes(tag) {
                let v = value(tag, self.node_coords[node]);
                for c in 0..self.n_components {
                    mask[self.dof(node, c)] = Some(v[c]);
                }
            }
        }
        mask
    }
}
