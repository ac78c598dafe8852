//! VTK XML `UnstructuredGrid` export.
//!
//! Layout: `header_type="UInt64"`, `byte_order="LittleEndian"`, every
//! array in one `<AppendedData encoding="raw">` section. Each block is a
//! little-endian `u64` byte count followed by the payload; `offset`
//! attributes point at the count. Coordinates and fields are `Float64`,
//! connectivity and offsets `Int64`, cell types `UInt8` (9 = quad).
//!
//! Points are the Q2 node lattice, i.e. the vertices of the mesh refined
//! once in each direction, and the cells are the quads of that lattice.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::experiments::StrainSampler;
use crate::solver::{ProblemSetup, SystemState};

/// Fields sampled at the Q2 node lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFields {
    pub points_x: usize,
    pub points_y: usize,
    pub points: Vec<[f64; 2]>,
    pub displacement: Vec<[f64; 2]>,
    pub velocity: Vec<[f64; 2]>,
    /// Bilinear pressure interpolated to the lattice.
    pub pressure: Vec<f64>,
    /// `|eps(u_h)|`, averaged over the cells sharing a node.
    pub strain_norm: Vec<f64>,
}

pub fn lattice_fields(state: &SystemState, setup: &ProblemSetup) -> LatticeFields {
    let map = &setup.u_map;
    let (px, py) = (map.points_x, map.points_y);
    let n = map.n_nodes();
    let pair = |c: &[f64], k: usize| [c[2 * k], c[2 * k + 1]];
    let displacement = (0..n).map(|k| pair(&state.u, k)).collect();
    let velocity = (0..n).map(|k| pair(&state.v, k)).collect();

    let qx = setup.p_map.points_x;
    let pressure = (0..n)
        .map(|k| {
            let (i, j) = (k % px, k / px);
            let is = [i / 2, i.div_ceil(2)];
            let js = [j / 2, j.div_ceil(2)];
            let mut s = 0.0;
            for &jj in &js {
                for &ii in &is {
                    s += state.p[jj * qx + ii];
                }
            }
            s / 4.0
        })
        .collect();

    let sampler = StrainSampler::new(&setup.mesh);
    let offset = sampler.n_samples() - map.nodes_per_cell();
    let mut sum = vec![0.0; n];
    let mut count = vec![0u32; n];
    for cell in 0..setup.mesh.n_cells() {
        for (a, &node) in map.cell_nodes(cell).iter().enumerate() {
            sum[node] += sampler.strain_norm(&state.u, map, cell, offset + a);
            count[node] += 1;
        }
    }
    let strain_norm = sum.iter().zip(&count).map(|(s, &c)| s / f64::from(c)).collect();

    LatticeFields {
        points_x: px,
        points_y: py,
        points: map.node_coords().to_vec(),
        displacement,
        velocity,
        pressure,
        strain_norm,
    }
}

struct Appended {
    xml: String,
    data: Vec<u8>,
}

impl Appended {
    fn array(&mut self, vtk_type: &str, name: &str, components: usize, bytes: Vec<u8>) {
        self.xml.push_str(&format!(
            "        <DataArray type=\"{vtk_type}\" Name=\"{name}\" NumberOfComponents=\"{components}\" format=\"appended\" offset=\"{}\"/>\n",
            self.data.len()
        ));
        self.data.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
        self.data.extend_from_slice(&bytes);
    }
}

fn f64_bytes(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values.into_iter().flat_map(f64::to_le_bytes).collect()
}

fn padded(v: &[[f64; 2]]) -> Vec<u8> {
    f64_bytes(v.iter().flat_map(|p| [p[0], p[1], 0.0]))
}

/// Serializes `fields` as a VTU document.
pub fn write_vtu(fields: &LatticeFields, mut out: impl Write) -> Result<()> {
    let (px, py) = (fields.points_x, fields.points_y);
    let (cx, cy) = (px - 1, py - 1);
    let n_cells = cx * cy;
    let mut conn = Vec::with_capacity(4 * n_cells);
    for j in 0..cy {
        for i in 0..cx {
            let k = (j * px + i) as i64;
            let p = px as i64;
            conn.extend([k, k + 1, k + 1 + p, k + p]);
        }
    }
    let mut a = Appended {
        xml: String::new(),
        data: Vec::new(),
    };

    a.xml.push_str("      <PointData Scalars=\"pressure\" Vectors=\"velocity\">\n");
    a.array("Float64", "displacement", 3, padded(&fields.displacement));
    a.array("Float64", "velocity", 3, padded(&fields.velocity));
    a.array("Float64", "pressure", 1, f64_bytes(fields.pressure.iter().copied()));
    a.array("Float64", "strain_norm", 1, f64_bytes(fields.strain_norm.iter().copied()));
    a.xml.push_str("      </PointData>\n      <Points>\n");
    a.array("Float64", "Points", 3, padded(&fields.points));
    a.xml.push_str("      </Points>\n      <Cells>\n");
    a.array("Int64", "connectivity", 1, conn.iter().flat_map(|c| c.to_le_bytes()).collect());
    a.array(
        "Int64",
        "offsets",
        1,
        (1..=n_cells as i64).flat_map(|c| (4 * c).to_le_bytes()).collect(),
    );
    a.array("UInt8", "types", 1, vec![9u8; n_cells]);
    a.xml.push_str("      </Cells>\n");

    write!(
        out,
        "<?xml version=\"1.0\"?>\n\
         <VTKFile type=\"UnstructuredGrid\" version=\"1.0\" byte_order=\"LittleEndian\" header_type=\"UInt64\">\n  \
         <UnstructuredGrid>\n    \
         <Piece NumberOfPoints=\"{}\" NumberOfCells=\"{n_cells}\">\n{}    </Piece>\n  \
         </UnstructuredGrid>\n  \
         <AppendedData encoding=\"raw\">\n_",
        px * py,
        a.xml
    )?;
    out.write_all(&a.data)?;
    write!(out, "\n  </AppendedData>\n</VTKFile>\n")?;
    Ok(())
}

pub fn export_vtu(state: &SystemState, setup: &ProblemSetup, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_vtu(&lattice_fields(state, setup), file)
}
