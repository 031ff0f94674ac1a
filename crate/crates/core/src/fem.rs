//! Piecewise-linear finite element matrices on a [`Mesh`].
//!
//! Element matrices are computed in parallel and accumulated in element
//! order, so the assembled matrices do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::Mesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "neumann" => Ok(BoundaryCondition::Neumann),
            _ => Err(format!("unknown boundary condition '{s}'")),
        }
    }
}

/// Symmetric sparse matrix in compressed row form with sorted columns.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries. The summation order follows the input order.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(entries.len());
        let mut val: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |e| (self.col[e], self.val[e]))
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// `A + s B` for matrices with arbitrary patterns.
    pub fn add_scaled(&self, s: f64, b: &CsrMatrix) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz() + b.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, v)));
            t.extend(b.row(i).map(|(j, v)| (i, j, s * v)));
        }
        CsrMatrix::from_triplets(self.n, t)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }
}

/// Stiffness and mass matrices restricted to the free degrees of freedom.
#[derive(Clone, Debug)]
pub struct FemSystem {
    pub bc: BoundaryCondition,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// Mesh node of each degree of freedom.
    pub dof_node: Vec<usize>,
    /// Degree of freedom of each mesh node (`None` for eliminated nodes).
    pub node_dof: Vec<Option<usize>>,
}

impl FemSystem {
    pub fn n(&self) -> usize {
        self.dof_node.len()
    }

    /// Extends a dof vector to all mesh nodes, with zeros at eliminated nodes.
    pub fn to_nodes(&self, x: &[f64]) -> Vec<f64> {
        self.node_dof.iter().map(|d| d.map_or(0.0, |i| x[i])).collect()
    }

    pub fn to_dofs(&self, u: &[f64]) -> Vec<f64> {
        self.dof_node.iter().map(|&v| u[v]).collect()
    }
}

/// Local stiffness and mass matrices of a linear triangle.
pub fn element_matrices(p: [[f64; 2]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let area = 0.5 * (b[0] * c[1] - b[1] * c[0]).abs();
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (k, m)
}

/// Assembles the Galerkin matrices. Dirichlet conditions eliminate every
/// boundary node (outer, holes, both sides of slits).
pub fn assemble(mesh: &Mesh, bc: BoundaryCondition) -> FemSystem {
    let mut node_dof = vec![None; mesh.vertices.len()];
    let mut dof_node = Vec::new();
    for (v, marker) in mesh.markers.iter().enumerate() {
        if bc == BoundaryCondition::Neumann || !marker.is_boundary() {
            node_dof[v] = Some(dof_node.len());
            dof_node.push(v);
        }
    }
    let locals: Vec<_> = mesh
        .triangles
        .par_iter()
        .map(|tri| element_matrices(tri.map(|i| mesh.vertices[i])))
        .collect();
    let mut kt = Vec::with_capacity(9 * locals.len());
    let mut mt = Vec::with_capacity(9 * locals.len());
    for (tri, (ke, me)) in mesh.triangles.iter().zip(&locals) {
        for a in 0..3 {
            let Some(i) = node_dof[tri[a]] else { continue };
            for b in 0..3 {
                let Some(j) = node_dof[tri[b]] else { continue };
                kt.push((i, j, ke[a][b]));
                mt.push((i, j, me[a][b]));
            }
        }
    }
    let n = dof_node.len();
    FemSystem { bc, stiffness: CsrMatrix::from_triplets(n, kt), mass: CsrMatrix::from_triplets(n, mt), dof_node, node_dof }
}
