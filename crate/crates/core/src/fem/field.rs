//! Pointwise evaluation of finite-element coefficient vectors.

use super::space::{shape, CellGeometry, FeSpace};

/// A point inside a triangle, given both in barycentric and physical form
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadPoint {
    pub cell: usize,
    pub bary: [f64; 3],
    pub x: [f64; 2],
}

impl QuadPoint {
    pub fn new(geometry: &CellGeometry, cell: usize, bary: [f64; 3]) -> Self {
        QuadPoint { cell, bary, x: geometry.point(bary) }
    }
}

/// Scalar field value at a point of a triangle in the space's support
pub fn value(space: &FeSpace, coeffs: &[f64], cell: usize, bary: [f64; 3]) -> f64 {
    let nodes = space.cell_nodes(cell);
    let (v, _) = shape(space.family(), bary);
    nodes.iter().enumerate().map(|(a, &n)| v[a] * coeffs[n]).sum()
}

pub fn gradient(space: &FeSpace, coeffs: &[f64], cell: usize, bary: [f64; 3]) -> [f64; 2] {
    gradient_with(space, coeffs, &CellGeometry::new(space.mesh(), cell), cell, bary)
}

pub fn gradient_with(space: &FeSpace, coeffs: &[f64], geo: &CellGeometry, cell: usize, bary: [f64; 3]) -> [f64; 2] {
    let nodes = space.cell_nodes(cell);
    let (_, d) = shape(space.family(), bary);
    let mut g = [0.0; 2];
    for (a, &n) in nodes.iter().enumerate() {
        let ga = geo.gradient(&d[a]);
        g[0] += ga[0] * coeffs[n];
        g[1] += ga[1] * coeffs[n];
    }
    g
}

/// Value of a 2-vector field
pub fn vector_value(space: &FeSpace, coeffs: &[f64], cell: usize, bary: [f64; 3]) -> [f64; 2] {
    let n = space.node_count();
    let nodes = space.cell_nodes(cell);
    let (v, _) = shape(space.family(), bary);
    let mut out = [0.0; 2];
    for (a, &node) in nodes.iter().enumerate() {
        out[0] += v[a] * coeffs[node];
        out[1] += v[a] * coeffs[n + node];
    }
    out
}

/// Jacobian `J[i][j] = ∂u_i/∂x_j` of a 2-vector field
pub fn vector_jacobian(space: &FeSpace, coeffs: &[f64], cell: usize, bary: [f64; 3]) -> [[f64; 2]; 2] {
    let geo = CellGeometry::new(space.mesh(), cell);
    let n = space.node_count();
    let nodes = space.cell_nodes(cell);
    let (_, d) = shape(space.family(), bary);
    let mut j = [[0.0; 2]; 2];
    for (a, &node) in nodes.iter().enumerate() {
        let ga = geo.gradient(&d[a]);
        for c in 0..2 {
            let u = coeffs[c * n + node];
            j[c][0] += u * ga[0];
            j[c][1] += u * ga[1];
        }
    }
    j
}
