//! Lagrange finite-element spaces (P1, P2; scalar or 2-vector) over a mesh
//! region.

use std::sync::Arc;

use crate::mesh::{KarstMesh, Region};

use super::quadrature::QuadratureRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    P1,
    P2,
}

impl Family {
    pub fn degree(self) -> usize {
        match self {
            Family::P1 => 1,
            Family::P2 => 2,
        }
    }

    /// Local basis functions per triangle
    pub fn local_len(self) -> usize {
        match self {
            Family::P1 => 3,
            Family::P2 => 6,
        }
    }
}

/// Part of the mesh a space lives on
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Support {
    Conduit,
    Matrix,
    Whole,
}

impl Support {
    pub fn contains(self, region: Region) -> bool {
        match self {
            Support::Whole => true,
            Support::Conduit => region == Region::Conduit,
            Support::Matrix => region == Region::Matrix,
        }
    }
}

impl From<Region> for Support {
    fn from(r: Region) -> Self {
        match r {
            Region::Conduit => Support::Conduit,
            Region::Matrix => Support::Matrix,
        }
    }
}

/// Continuous Lagrange space. Scalar nodes are numbered vertices first (in
/// increasing global vertex order) and then edge midpoints (increasing
/// edge order); a vector space stores component `c` of node `n` at
/// `c * node_count + n`.
#[derive(Clone, Debug)]
pub struct FeSpace {
    mesh: Arc<KarstMesh>,
    support: Support,
    family: Family,
    components: usize,
    cells: Vec<usize>,
    cell_nodes: Vec<Option<[usize; 6]>>,
    node_coords: Vec<[f64; 2]>,
    vertex_node: Vec<Option<usize>>,
    edge_node: Vec<Option<usize>>,
}

impl FeSpace {
    pub fn scalar(mesh: Arc<KarstMesh>, support: Support, family: Family) -> Self {
        Self::new(mesh, support, family, 1)
    }

    pub fn vector(mesh: Arc<KarstMesh>, support: Support, family: Family) -> Self {
        Self::new(mesh, support, family, 2)
    }

    fn new(mesh: Arc<KarstMesh>, support: Support, family: Family, components: usize) -> Self {
        let cells: Vec<usize> =
            (0..mesh.triangles().len()).filter(|&t| support.contains(mesh.region(t))).collect();
        let mut vertex_node = vec![None; mesh.vertices().len()];
        let mut edge_node = vec![None; mesh.edges().len()];
        for &t in &cells {
            for &v in &mesh.triangles()[t] {
                vertex_node[v] = Some(0);
            }
            if family == Family::P2 {
                for e in mesh.triangle_edges(t) {
                    edge_node[e] = Some(0);
                }
            }
        }
        let mut node_coords = Vec::new();
        for (v, slot) in vertex_node.iter_mut().enumerate() {
            if slot.is_some() {
                *slot = Some(node_coords.len());
                node_coords.push(mesh.vertices()[v]);
            }
        }
        for (e, slot) in edge_node.iter_mut().enumerate() {
            if slot.is_some() {
                *slot = Some(node_coords.len());
                let [a, b] = mesh.edges()[e];
                let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
                node_coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            }
        }
        let mut cell_nodes = vec![None; mesh.triangles().len()];
        for &t in &cells {
            let tri = mesh.triangles()[t];
            let mut nodes = [usize::MAX; 6];
            for k in 0..3 {
                nodes[k] = vertex_node[tri[k]].unwrap();
            }
            if family == Family::P2 {
                let te = mesh.triangle_edges(t);
                for k in 0..3 {
                    nodes[3 + k] = edge_node[te[k]].unwrap();
                }
            }
            cell_nodes[t] = Some(nodes);
        }
        FeSpace { mesh, support, family, components, cells, cell_nodes, node_coords, vertex_node, edge_node }
    }

    pub fn mesh(&self) -> &Arc<KarstMesh> {
        &self.mesh
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_vector(&self) -> bool {
        self.components == 2
    }

    /// Scalar node count
    pub fn node_count(&self) -> usize {
        self.node_coords.len()
    }

    pub fn dof_count(&self) -> usize {
        self.components * self.node_coords.len()
    }

    /// Coordinates of every DOF (vector spaces repeat the node list per component)
    pub fn dof_coordinates(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.dof_count());
        for _ in 0..self.components {
            out.extend_from_slice(&self.node_coords);
        }
        out
    }

    pub fn node_coordinates(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    /// Global triangle ids in the support, increasing
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn contains_cell(&self, triangle: usize) -> bool {
        self.cell_nodes[triangle].is_some()
    }

    /// Scalar node ids of the local basis functions on a triangle
    pub fn cell_nodes(&self, triangle: usize) -> &[usize] {
        let nodes = self.cell_nodes[triangle].as_ref().expect("triangle outside space support");
        &nodes[..self.family.local_len()]
    }

    /// DOF id of component `c` at scalar node `n`
    pub fn dof(&self, node: usize, component: usize) -> usize {
        component * self.node_coords.len() + node
    }

    pub fn vertex_node(&self, vertex: usize) -> Option<usize> {
        self.vertex_node[vertex]
    }

    pub fn edge_node(&self, edge: usize) -> Option<usize> {
        self.edge_node[edge]
    }

    /// Nodes lying on a mesh edge (its endpoints, plus the midpoint for P2)
    pub fn edge_nodes(&self, edge: usize) -> Vec<usize> {
        let [a, b] = self.mesh.edges()[edge];
        let mut nodes: Vec<usize> = [self.vertex_node[a], self.vertex_node[b]].into_iter().flatten().collect();
        if let Some(m) = self.edge_node.get(edge).copied().flatten() {
            nodes.push(m);
        }
        nodes
    }

    /// Nodal interpolant of a scalar function (component 0 only)
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        assert_eq!(self.components, 1);
        self.node_coords.iter().map(|&x| f(x)).collect()
    }

    /// Nodal interpolant of a vector function
    pub fn interpolate_vector(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        assert_eq!(self.components, 2);
        let n = self.node_count();
        let mut out = vec![0.0; 2 * n];
        for (i, &x) in self.node_coords.iter().enumerate() {
            let v = f(x);
            out[i] = v[0];
            out[n + i] = v[1];
        }
        out
    }

    pub fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }
}

/// Shape functions of one family tabulated at barycentric points, with
/// derivatives taken with respect to the barycentric coordinates.
#[derive(Clone, Debug)]
pub struct ShapeTable {
    pub family: Family,
    pub values: Vec<[f64; 6]>,
    pub dbary: Vec<[[f64; 3]; 6]>,
}

impl ShapeTable {
    pub fn new(family: Family, points: &[[f64; 3]]) -> Self {
        let mut values = Vec::with_capacity(points.len());
        let mut dbary = Vec::with_capacity(points.len());
        for l in points {
            let (v, d) = shape(family, *l);
            values.push(v);
            dbary.push(d);
        }
        ShapeTable { family, values, dbary }
    }

    pub fn for_rule(family: Family, rule: &QuadratureRule) -> Self {
        Self::new(family, &rule.points)
    }
}

/// Values and barycentric derivatives of the local basis at point `l`.
/// P2 ordering: vertex functions `λ_i(2λ_i - 1)`, then edge functions
/// `4 λ_k λ_{k+1}` for local edges `(0,1), (1,2), (2,0)`.
pub fn shape(family: Family, l: [f64; 3]) -> ([f64; 6], [[f64; 3]; 6]) {
    let mut v = [0.0; 6];
    let mut d = [[0.0; 3]; 6];
    match family {
        Family::P1 => {
            for i in 0..3 {
                v[i] = l[i];
                d[i][i] = 1.0;
            }
        }
        Family::P2 => {
            for i in 0..3 {
                v[i] = l[i] * (2.0 * l[i] - 1.0);
                d[i][i] = 4.0 * l[i] - 1.0;
            }
            for k in 0..3 {
                let j = (k + 1) % 3;
                v[3 + k] = 4.0 * l[k] * l[j];
                d[3 + k][k] = 4.0 * l[j];
                d[3 + k][j] = 4.0 * l[k];
            }
        }
    }
    (v, d)
}

/// Affine geometry of a triangle: area, barycentric gradients and the map
/// from barycentric to physical coordinates.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub area: f64,
    pub grad_bary: [[f64; 2]; 3],
    pub corners: [[f64; 2]; 3],
}

impl CellGeometry {
    pub fn new(mesh: &KarstMesh, triangle: usize) -> Self {
        let tri = mesh.triangles()[triangle];
        let corners = tri.map(|v| mesh.vertices()[v]);
        let [a, b, c] = corners;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        // ∇λ_i = rot(opposite edge) / det
        let g = |p: [f64; 2], q: [f64; 2]| [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
        CellGeometry { area: 0.5 * det, grad_bary: [g(b, c), g(c, a), g(a, b)], corners }
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        let [a, b, c] = self.corners;
        [l[0] * a[0] + l[1] * b[0] + l[2] * c[0], l[0] * a[1] + l[1] * b[1] + l[2] * c[1]]
    }

    /// Physical gradient from barycentric derivatives
    pub fn gradient(&self, d: &[f64; 3]) -> [f64; 2] {
        let g = &self.grad_bary;
        [
            d[0] * g[0][0] + d[1] * g[1][0] + d[2] * g[2][0],
            d[0] * g[0][1] + d[1] * g[1][1] + d[2] * g[2][1],
        ]
    }
}
