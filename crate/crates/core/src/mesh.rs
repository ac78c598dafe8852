//! Uniform structured quadrilateral meshes of axis-aligned rectangles.

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub const UNIT_SQUARE: Rect = Rect {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };

    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Boundary sides, numbered counter-clockwise from the bottom edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// `y = y_min`
    Gamma1,
    /// `x = x_max`
    Gamma2,
    /// `y = y_max`
    Gamma3,
    /// `x = x_min`
    Gamma4,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [
        BoundaryTag::Gamma1,
        BoundaryTag::Gamma2,
        BoundaryTag::Gamma3,
        BoundaryTag::Gamma4,
    ];

    /// Zero-based index; a lower index takes precedence at corners.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            BoundaryTag::Gamma1 => [0.0, -1.0],
            BoundaryTag::Gamma2 => [1.0, 0.0],
            BoundaryTag::Gamma3 => [0.0, 1.0],
            BoundaryTag::Gamma4 => [-1.0, 0.0],
        }
    }
}

/// A boundary edge between two mesh vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Facet {
    pub vertices: [usize; 2],
    pub cell: usize,
    pub tag: BoundaryTag,
}

/// Uniform `nx x ny` partition of a rectangle into congruent cells.
///
/// Vertices are numbered lexicographically (`j * (nx + 1) + i`), cells as
/// `cy * nx + cx`, and cell vertices are stored counter-clockwise starting
/// at the lower-left corner.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 4]>,
    pub facets: Vec<Facet>,
}

impl Mesh {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Cell widths `(dx, dy)`.
    pub fn cell_size(&self) -> (f64, f64) {
        (
            self.domain.width() / self.nx as f64,
            self.domain.height() / self.ny as f64,
        )
    }

    /// Cell diameter `sqrt(dx^2 + dy^2)`.
    pub fn h(&self) -> f64 {
        let (dx, dy) = self.cell_size();
        dx.hypot(dy)
    }

    pub fn cell_area(&self) -> f64 {
        let (dx, dy) = self.cell_size();
        dx * dy
    }

    /// `(cx, cy)` lattice position of a cell.
    pub fn cell_position(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    /// Lower-left corner of a cell.
    pub fn cell_origin(&self, cell: usize) -> [f64; 2] {
        self.vertices[self.cells[cell][0]]
    }

    /// Maps reference coordinates in `[-1,1]^2` to physical coordinates.
    pub fn map_to_physical(&self, cell: usize, xi: [f64; 2]) -> [f64; 2] {
        let (dx, dy) = self.cell_size();
        let o = self.cell_origin(cell);
        [o[0] + 0.5 * dx * (xi[0] + 1.0), o[1] + 0.5 * dy * (xi[1] + 1.0)]
    }

    pub fn facets_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &Facet> {
        self.facets.iter().filter(move |f| f.tag == tag)
    }

    /// Coordinate value of the straight side carrying `tag`.
    pub fn side_value(&self, tag: BoundaryTag) -> f64 {
        match tag {
            BoundaryTag::Gamma1 => self.domain.y_min,
            BoundaryTag::Gamma2 => self.domain.x_max,
            BoundaryTag::Gamma3 => self.domain.y_max,
            BoundaryTag::Gamma4 => self.domain.x_min,
        }
    }
}

/// Builds the uniform mesh of `domain` with `nx x ny` cells.
pub fn build_rect_mesh(domain: Rect, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Mesh(format!("cell counts must be positive, got {nx} x {ny}")));
    }
    let finite = [domain.x_min, domain.x_max, domain.y_min, domain.y_max]
        .iter()
        .all(|v| v.is_finite());
    if !finite || domain.x_max <= domain.x_min || domain.y_max <= domain.y_min {
        return Err(Error::Mesh(format!("degenerate rectangle {domain:?}")));
    }

    let dx = domain.width() / nx as f64;
    let dy = domain.height() / ny as f64;
    // Snap the last lattice line onto the side value so tagged facets sit
    // exactly on their side.
    let coord = |k: usize, n: usize, lo: f64, hi: f64, step: f64| {
        if k == n {
            hi
        } else {
            lo + k as f64 * step
        }
    };

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = coord(j, ny, domain.y_min, domain.y_max, dy);
        for i in 0..=nx {
            vertices.push([coord(i, nx, domain.x_min, domain.x_max, dx), y]);
        }
    }

    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(nx * ny);
    for cy in 0..ny {
        for cx in 0..nx {
            cells.push([vid(cx, cy), vid(cx + 1, cy), vid(cx + 1, cy + 1), vid(cx, cy + 1)]);
        }
    }

    let mut facets = Vec::with_capacity(2 * (nx + ny));
    for cx in 0..nx {
        facets.push(Facet {
            vertices: [vid(cx, 0), vid(cx + 1, 0)],
            cell: cx,
            tag: BoundaryTag::Gamma1,
        });
    }
    for cy in 0..ny {
        facets.push(Facet {
            vertices: [vid(nx, cy), vid(nx, cy + 1)],
            cell: cy * nx + nx - 1,
            tag: BoundaryTag::Gamma2,
        });
    }
    for cx in (0..nx).rev() {
        facets.push(Facet {
            vertices: [vid(cx + 1, ny), vid(cx, ny)],
            cell: (ny - 1) * nx + cx,
            tag: BoundaryTag::Gamma3,
        });
    }
    for cy in (0..ny).rev() {
        facets.push(Facet {
            vertices: [vid(0, cy + 1), vid(0, cy)],
            cell: cy * nx,
            tag: BoundaryTag::Gamma4,
        });
    }

    Ok(Mesh {
        domain,
        nx,
        ny,
        vertices,
        cells,
        facets,
    })
}

/// Unit square refined `m` times: `2^m x 2^m` cells.
pub fn unit_square(m: u32) -> Result<Mesh> {
    let n = 1usize << m;
    build_rect_mesh(Rect::UNIT_SQUARE, n, n)
}
