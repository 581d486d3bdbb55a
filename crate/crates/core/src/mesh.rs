//! Conforming triangulations of the two-subdomain rectangle.
//!
//! The conduit `Ω_c` is the strip above the interface line `y = split`, the
//! porous matrix `Ω_m` the strip below it. Every triangle belongs to exactly
//! one region and the two sub-triangulations share their vertices and edges
//! on the interface `Γ_cm`.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Errors raised while building or parsing meshes
#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("interface height {split_y} does not lie on a grid line of a {ny}-row grid")]
    MisalignedSplit { split_y: f64, ny: usize },
    #[error("bounding box has nonpositive extent")]
    DegenerateBox,
    #[error("grid needs nx >= 1 and ny >= 2 (got nx = {nx}, ny = {ny})")]
    TooFewCells { nx: usize, ny: usize },
    #[error("triangle {0} has nonpositive signed area")]
    InvertedTriangle(usize),
    #[error("mesh has no interface edges")]
    NoInterface,
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("mesh dump line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Subdomain a triangle belongs to
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Conduit,
    Matrix,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Conduit => "conduit",
            Region::Matrix => "matrix",
        }
    }
}

/// Boundary or interface tag of an edge
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    /// Outer boundary of the conduit
    GammaC,
    /// Outer boundary of the porous matrix
    GammaM,
    /// Conduit/matrix interface
    GammaCM,
}

impl EdgeTag {
    pub fn name(self) -> &'static str {
        match self {
            EdgeTag::GammaC => "GammaC",
            EdgeTag::GammaM => "GammaM",
            EdgeTag::GammaCM => "GammaCM",
        }
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub const UNIT: BBox = BBox { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// One side of an interface edge: the adjacent triangle and the local
/// vertex indices (0..3) of the edge endpoints inside it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeSide {
    pub triangle: usize,
    pub local: [usize; 2],
}

/// Interface edge with its frame. `normal` is `n_cm` (unit, from conduit
/// into matrix), `tangent` is `τ₁ = n_cm` rotated by +90°.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceEdge {
    pub edge: usize,
    pub vertices: [usize; 2],
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    pub conduit: EdgeSide,
    pub matrix: EdgeSide,
}

impl InterfaceEdge {
    pub fn side(&self, region: Region) -> EdgeSide {
        match region {
            Region::Conduit => self.conduit,
            Region::Matrix => self.matrix,
        }
    }
}

/// Edge on the outer boundary or the interface
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaggedEdge {
    pub edge: usize,
    pub tag: EdgeTag,
    /// Adjacent triangle; for interface edges the conduit-side one
    pub triangle: usize,
}

/// Conforming triangulation of `Ω = Ω_c ∪ Γ_cm ∪ Ω_m`
#[derive(Clone, Debug)]
pub struct KarstMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<Region>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    tagged: Vec<TaggedEdge>,
    interface: Vec<InterfaceEdge>,
    bbox: BBox,
    split_y: f64,
    h: f64,
}

/// Builds the structured karst mesh: `nx × ny` cells, each split into two
/// counterclockwise triangles along the same diagonal. `split_y` is the
/// interface height as a fraction of the box height.
pub fn build_karst_mesh(nx: usize, ny: usize, split_y: f64, bbox: BBox) -> Result<KarstMesh, MeshError> {
    if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
        return Err(MeshError::DegenerateBox);
    }
    if nx < 1 || ny < 2 {
        return Err(MeshError::TooFewCells { nx, ny });
    }
    let rows = split_y * ny as f64;
    let split_row = rows.round();
    if (rows - split_row).abs() > 1e-12 || split_row < 1.0 || split_row > (ny - 1) as f64 {
        return Err(MeshError::MisalignedSplit { split_y, ny });
    }
    let split_row = split_row as usize;

    let (dx, dy) = (bbox.width() / nx as f64, bbox.height() / ny as f64);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // exact endpoints on the box boundary
            let x = if i == nx { bbox.x1 } else { bbox.x0 + i as f64 * dx };
            let y = if j == ny { bbox.y1 } else { bbox.y0 + j as f64 * dy };
            vertices.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut regions = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        let region = if j >= split_row { Region::Conduit } else { Region::Matrix };
        for i in 0..nx {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
            regions.push(region);
            regions.push(region);
        }
    }
    let interface_y = bbox.y0 + split_row as f64 * dy;
    KarstMesh::from_parts(vertices, triangles, regions, bbox, (interface_y - bbox.y0) / bbox.height())
}

impl KarstMesh {
    /// Assembles a mesh from raw arrays, deriving edges, tags and frames.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
        bbox: BBox,
        split_y: f64,
    ) -> Result<Self, MeshError> {
        assert_eq!(triangles.len(), regions.len());
        for (t, tri) in triangles.iter().enumerate() {
            if signed_area(&vertices, tri) <= 0.0 {
                return Err(MeshError::InvertedTriangle(t));
            }
        }

        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_tris: Vec<Vec<usize>> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                let e = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_tris.push(Vec::new());
                    edges.len() - 1
                });
                edge_tris[e].push(t);
                te[k] = e;
            }
            triangle_edges.push(te);
        }

        let mut tagged = Vec::new();
        let mut interface = Vec::new();
        for (e, tris) in edge_tris.iter().enumerate() {
            match tris.as_slice() {
                [t] => {
                    let tag = match regions[*t] {
                        Region::Conduit => EdgeTag::GammaC,
                        Region::Matrix => EdgeTag::GammaM,
                    };
                    tagged.push(TaggedEdge { edge: e, tag, triangle: *t });
                }
                [t0, t1] => {
                    if regions[*t0] == regions[*t1] {
                        continue;
                    }
                    let (tc, tm) = if regions[*t0] == Region::Conduit { (*t0, *t1) } else { (*t1, *t0) };
                    let [a, b] = edges[e];
                    let frame = edge_frame(&vertices, [a, b], centroid(&vertices, &triangles[tc]));
                    let local = |t: usize| {
                        let pos = |v: usize| triangles[t].iter().position(|&w| w == v).unwrap();
                        EdgeSide { triangle: t, local: [pos(a), pos(b)] }
                    };
                    interface.push(InterfaceEdge {
                        edge: e,
                        vertices: [a, b],
                        normal: frame.0,
                        tangent: frame.1,
                        conduit: local(tc),
                        matrix: local(tm),
                    });
                    tagged.push(TaggedEdge { edge: e, tag: EdgeTag::GammaCM, triangle: tc });
                }
                _ => {
                    let [a, b] = edges[e];
                    return Err(MeshError::NonManifoldEdge(a, b));
                }
            }
        }
        if interface.is_empty() {
            return Err(MeshError::NoInterface);
        }

        let h = triangles
            .iter()
            .map(|tri| {
                (0..3)
                    .map(|k| dist(vertices[tri[k]], vertices[tri[(k + 1) % 3]]))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);

        Ok(KarstMesh { vertices, triangles, regions, edges, triangle_edges, tagged, interface, bbox, split_y, h })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn region(&self, triangle: usize) -> Region {
        self.regions[triangle]
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// Unique edges as sorted vertex pairs
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge ids of a triangle; local edge `k` joins local vertices
    /// `k` and `k + 1 (mod 3)`.
    pub fn triangle_edges(&self, triangle: usize) -> [usize; 3] {
        self.triangle_edges[triangle]
    }

    /// All tagged edges (outer boundary and interface), by edge id
    pub fn boundary_edges(&self) -> &[TaggedEdge] {
        &self.tagged
    }

    pub fn interface_edges(&self) -> &[InterfaceEdge] {
        &self.interface
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// Interface height as a fraction of the box height
    pub fn split_y(&self) -> f64 {
        self.split_y
    }

    pub fn interface_y(&self) -> f64 {
        self.bbox.y0 + self.split_y * self.bbox.height()
    }

    /// Largest triangle diameter
    pub fn mesh_size(&self) -> f64 {
        self.h
    }

    pub fn area(&self, triangle: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[triangle])
    }

    pub fn centroid(&self, triangle: usize) -> [f64; 2] {
        centroid(&self.vertices, &self.triangles[triangle])
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge];
        dist(self.vertices[a], self.vertices[b])
    }

    /// Splits every triangle into four through its edge midpoints.
    /// Midpoint vertices are appended in edge-id order.
    pub fn refine_uniform(&self) -> KarstMesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.edges.iter().map(|&[a, b]| {
            let (p, q) = (self.vertices[a], self.vertices[b]);
            [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
        }));
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut regions = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let [e_ab, e_bc, e_ca] = self.triangle_edges[t].map(|e| nv + e);
            triangles.extend([[a, e_ab, e_ca], [e_ab, b, e_bc], [e_ca, e_bc, c], [e_ab, e_bc, e_ca]]);
            regions.extend([self.regions[t]; 4]);
        }
        KarstMesh::from_parts(vertices, triangles, regions, self.bbox, self.split_y)
            .expect("refinement of a valid mesh is valid")
    }

    /// Plain-text dump: `v x y`, `t i j k region`, `e i j tag` lines
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.16e} {:.16e}", v[0], v[1]);
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            let _ = writeln!(out, "t {} {} {} {}", tri[0], tri[1], tri[2], self.regions[t].name());
        }
        let mut tagged = self.tagged.clone();
        tagged.sort_by_key(|te| te.edge);
        for te in &tagged {
            let [a, b] = self.edges[te.edge];
            let _ = writeln!(out, "e {} {} {}", a, b, te.tag.name());
        }
        out
    }
}

/// Reads a mesh dump back. Tags are re-derived from the triangles and
/// checked against the `e` lines.
pub fn parse_mesh_dump(text: &str, bbox: BBox, split_y: f64) -> Result<KarstMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    let mut edges = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |reason: &str| MeshError::Parse { line: line_no, reason: reason.to_string() };
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            ["v", x, y] => {
                let x = x.parse().map_err(|_| err("bad x coordinate"))?;
                let y = y.parse().map_err(|_| err("bad y coordinate"))?;
                vertices.push([x, y]);
            }
            ["t", i, j, k, r] => {
                let idx = |s: &str| s.parse::<usize>().map_err(|_| err("bad vertex index"));
                triangles.push([idx(i)?, idx(j)?, idx(k)?]);
                regions.push(match *r {
                    "conduit" => Region::Conduit,
                    "matrix" => Region::Matrix,
                    _ => return Err(err("unknown region")),
                });
            }
            ["e", i, j, tag] => {
                let idx = |s: &str| s.parse::<usize>().map_err(|_| err("bad vertex index"));
                let tag = match *tag {
                    "GammaC" => EdgeTag::GammaC,
                    "GammaM" => EdgeTag::GammaM,
                    "GammaCM" => EdgeTag::GammaCM,
                    _ => return Err(err("unknown edge tag")),
                };
                edges.push((idx(i)?, idx(j)?, tag, line_no));
            }
            _ => return Err(err("unrecognized record")),
        }
    }
    let mesh = KarstMesh::from_parts(vertices, triangles, regions, bbox, split_y)?;
    let derived: HashMap<[usize; 2], EdgeTag> =
        mesh.tagged.iter().map(|te| (mesh.edges[te.edge], te.tag)).collect();
    for (i, j, tag, line) in edges {
        if derived.get(&[i.min(j), i.max(j)]) != Some(&tag) {
            return Err(MeshError::Parse { line, reason: "edge tag disagrees with triangulation".into() });
        }
    }
    Ok(mesh)
}

/// `(n_cm, τ₁)` for every interface edge, in interface order
pub fn interface_frames(mesh: &KarstMesh) -> Vec<([f64; 2], [f64; 2])> {
    mesh.interface.iter().map(|ie| (ie.normal, ie.tangent)).collect()
}

fn edge_frame(vertices: &[[f64; 2]], [a, b]: [usize; 2], conduit_centroid: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let (p, q) = (vertices[a], vertices[b]);
    let len = dist(p, q);
    let t = [(q[0] - p[0]) / len, (q[1] - p[1]) / len];
    let mut n = [t[1], -t[0]];
    // n must point away from the conduit triangle
    let to_conduit = [conduit_centroid[0] - p[0], conduit_centroid[1] - p[1]];
    if n[0] * to_conduit[0] + n[1] * to_conduit[1] > 0.0 {
        n = [-n[0], -n[1]];
    }
    (n, [-n[1], n[0]])
}

fn signed_area(vertices: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let (a, b, c) = (vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn centroid(vertices: &[[f64; 2]], tri: &[usize; 3]) -> [f64; 2] {
    let s = tri.iter().fold([0.0, 0.0], |acc, &v| [acc[0] + vertices[v][0], acc[1] + vertices[v][1]]);
    [s[0] / 3.0, s[1] / 3.0]
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (q[0] - p[0]).hypot(q[1] - p[1])
}
