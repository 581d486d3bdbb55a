//! Element and interface-edge assembly of bilinear and linear forms.
//!
//! Local contributions are computed per element in parallel and scattered
//! in element order, so the assembled matrix is bitwise identical for any
//! worker count.

use rayon::prelude::*;
use thiserror::Error;

use super::field::QuadPoint;
use super::quadrature::{edge_gauss3, quadrature, UnsupportedDegree};
use super::space::{shape, CellGeometry, FeSpace, Support};
use super::sparse::SparseMatrix;
use crate::mesh::{InterfaceEdge, Region};

/// Default polynomial exactness for volume terms
pub const DEFAULT_DEGREE: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("test and trial spaces live on different meshes")]
    MeshMismatch,
    #[error("kernel {kernel} cannot pair a {test}-component test space with a {trial}-component trial space")]
    ArityMismatch { kernel: &'static str, test: usize, trial: usize },
    #[error(transparent)]
    Quadrature(#[from] UnsupportedDegree),
}

pub type ScalarFn<'a> = &'a (dyn Fn(&QuadPoint) -> f64 + Sync);
pub type VectorFn<'a> = &'a (dyn Fn(&QuadPoint) -> [f64; 2] + Sync);
pub type TensorFn<'a> = &'a (dyn Fn(&QuadPoint) -> [[f64; 2]; 2] + Sync);
/// Interface callback; receives the point and the edge frame `(n_cm, τ₁)`
pub type InterfaceFn<'a> = &'a (dyn Fn(&QuadPoint, [f64; 2], [f64; 2]) -> [f64; 2] + Sync);

/// Coefficient multiplying a kernel
#[derive(Clone, Copy)]
pub enum Coefficient<'a> {
    Constant(f64),
    Field(ScalarFn<'a>),
}

impl Coefficient<'_> {
    fn at(&self, qp: &QuadPoint) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Field(f) => f(qp),
        }
    }
}

/// Pointwise integrands of the bilinear forms used by the scheme
#[derive(Clone, Copy)]
pub enum Kernel<'a> {
    /// `c u v` (componentwise for vector spaces)
    Mass(Coefficient<'a>),
    /// `v · (C u)` for vector spaces
    TensorMass(TensorFn<'a>),
    /// `c ∇u · ∇v` (componentwise for vector spaces); weighted when `c` is a field
    Stiffness(Coefficient<'a>),
    /// `2 c D(u) : D(v)` for vector spaces
    SymmetricGradient(Coefficient<'a>),
    /// `(∇ · w) s` with `w` the vector argument, `s` the scalar one
    Divergence,
    /// `w · ∇s` with `w` the vector argument, `s` the scalar one
    Gradient,
    /// `c (u · τ₁)(v · τ₁)` on `Γ_cm` for conduit vector spaces
    InterfaceTangential(Coefficient<'a>),
    /// `s (w · n_cm)` on `Γ_cm`, `w` vector and `s` scalar
    InterfaceNormalPressure,
}

impl Kernel<'_> {
    fn name(&self) -> &'static str {
        match self {
            Kernel::Mass(_) => "mass",
            Kernel::TensorMass(_) => "tensor-mass",
            Kernel::Stiffness(_) => "stiffness",
            Kernel::SymmetricGradient(_) => "symmetric-gradient",
            Kernel::Divergence => "divergence",
            Kernel::Gradient => "gradient",
            Kernel::InterfaceTangential(_) => "interface-tangential",
            Kernel::InterfaceNormalPressure => "interface-normal-pressure",
        }
    }

    fn check_arity(&self, test: usize, trial: usize) -> Result<(), AssemblyError> {
        let ok = match self {
            Kernel::Mass(_) | Kernel::Stiffness(_) => test == trial,
            Kernel::TensorMass(_) | Kernel::SymmetricGradient(_) | Kernel::InterfaceTangential(_) => {
                test == 2 && trial == 2
            }
            Kernel::Divergence | Kernel::Gradient | Kernel::InterfaceNormalPressure => test + trial == 3,
        };
        if ok {
            Ok(())
        } else {
            Err(AssemblyError::ArityMismatch { kernel: self.name(), test, trial })
        }
    }

    fn on_interface(&self) -> bool {
        matches!(self, Kernel::InterfaceTangential(_) | Kernel::InterfaceNormalPressure)
    }
}

/// Shape data of one space at one point
struct Tab {
    n: usize,
    v: [f64; 6],
    g: [[f64; 2]; 6],
}

fn tabulate(space: &FeSpace, geo: &CellGeometry, bary: [f64; 3]) -> Tab {
    let (v, d) = shape(space.family(), bary);
    let n = space.family().local_len();
    let mut g = [[0.0; 2]; 6];
    for a in 0..n {
        g[a] = geo.gradient(&d[a]);
    }
    Tab { n, v, g }
}

/// Local contribution: global rows, global columns, dense values
type Local = (Vec<usize>, Vec<usize>, Vec<f64>);

fn local_dofs(space: &FeSpace, cell: usize) -> Vec<usize> {
    let nodes = space.cell_nodes(cell);
    (0..space.components()).flat_map(|c| nodes.iter().map(move |&n| space.dof(n, c))).collect()
}

/// Adds `w * integrand` for every local (test, trial) pair at one point.
fn accumulate(kernel: &Kernel, qp: &QuadPoint, w: f64, frame: ([f64; 2], [f64; 2]), te: &Tab, tr: &Tab, ct: usize, cu: usize, out: &mut [f64]) {
    let ncol = cu * tr.n;
    let (normal, tangent) = frame;
    let mut put = |i: usize, j: usize, val: f64| out[i * ncol + j] += w * val;
    match kernel {
        Kernel::Mass(c) => {
            let c = c.at(qp);
            for comp in 0..ct {
                for a in 0..te.n {
                    for b in 0..tr.n {
                        put(comp * te.n + a, comp * tr.n + b, c * te.v[a] * tr.v[b]);
                    }
                }
            }
        }
        Kernel::TensorMass(f) => {
            let m = f(qp);
            for (c, row) in m.iter().enumerate() {
                for (d, &mcd) in row.iter().enumerate() {
                    for a in 0..te.n {
                        for b in 0..tr.n {
                            put(c * te.n + a, d * tr.n + b, mcd * te.v[a] * tr.v[b]);
                        }
                    }
                }
            }
        }
        Kernel::Stiffness(c) => {
            let c = c.at(qp);
            for comp in 0..ct {
                for a in 0..te.n {
                    for b in 0..tr.n {
                        let gg = te.g[a][0] * tr.g[b][0] + te.g[a][1] * tr.g[b][1];
                        put(comp * te.n + a, comp * tr.n + b, c * gg);
                    }
                }
            }
        }
        Kernel::SymmetricGradient(c) => {
            let c = c.at(qp);
            for cc in 0..2 {
                for d in 0..2 {
                    for a in 0..te.n {
                        for b in 0..tr.n {
                            let mut val = te.g[a][d] * tr.g[b][cc];
                            if cc == d {
                                val += te.g[a][0] * tr.g[b][0] + te.g[a][1] * tr.g[b][1];
                            }
                            put(cc * te.n + a, d * tr.n + b, c * val);
                        }
                    }
                }
            }
        }
        Kernel::Divergence => {
            for comp in 0..2 {
                for a in 0..te.n {
                    for b in 0..tr.n {
                        if ct == 2 {
                            put(comp * te.n + a, b, te.g[a][comp] * tr.v[b]);
                        } else {
                            put(a, comp * tr.n + b, te.v[a] * tr.g[b][comp]);
                        }
                    }
                }
            }
        }
        Kernel::Gradient => {
            for comp in 0..2 {
                for a in 0..te.n {
                    for b in 0..tr.n {
                        if ct == 2 {
                            put(comp * te.n + a, b, te.v[a] * tr.g[b][comp]);
                        } else {
                            put(a, comp * tr.n + b, tr.v[b] * te.g[a][comp]);
                        }
                    }
                }
            }
        }
        Kernel::InterfaceTangential(c) => {
            let c = c.at(qp);
            for cc in 0..2 {
                for d in 0..2 {
                    for a in 0..te.n {
                        for b in 0..tr.n {
                            put(cc * te.n + a, d * tr.n + b, c * tangent[cc] * tangent[d] * te.v[a] * tr.v[b]);
                        }
                    }
                }
            }
        }
        Kernel::InterfaceNormalPressure => {
            for comp in 0..2 {
                for a in 0..te.n {
                    for b in 0..tr.n {
                        if ct == 2 {
                            put(comp * te.n + a, b, normal[comp] * te.v[a] * tr.v[b]);
                        } else {
                            put(a, comp * tr.n + b, normal[comp] * te.v[a] * tr.v[b]);
                        }
                    }
                }
            }
        }
    }
}

fn side_region(support: Support) -> Region {
    match support {
        Support::Matrix => Region::Matrix,
        _ => Region::Conduit,
    }
}

/// Barycentric coordinates of the point at parameter `s` along an
/// interface edge, seen from the triangle on `region`'s side.
pub fn edge_point(edge: &InterfaceEdge, region: Region, s: f64) -> (usize, [f64; 3]) {
    let side = edge.side(region);
    let mut l = [0.0; 3];
    l[side.local[0]] = 1.0 - s;
    l[side.local[1]] = s;
    (side.triangle, l)
}

pub fn assemble_bilinear(test: &FeSpace, trial: &FeSpace, kernel: &Kernel) -> Result<SparseMatrix, AssemblyError> {
    assemble_bilinear_with_degree(test, trial, kernel, DEFAULT_DEGREE)
}

/// Assembles `a(u, v)` with rows indexed by `test` DOFs, columns by `trial`
/// DOFs. Volume terms use the triangle rule of the given exactness, edge
/// terms the 3-point Gauss rule.
pub fn assemble_bilinear_with_degree(
    test: &FeSpace,
    trial: &FeSpace,
    kernel: &Kernel,
    degree: usize,
) -> Result<SparseMatrix, AssemblyError> {
    if !test.same_mesh(trial) {
        return Err(AssemblyError::MeshMismatch);
    }
    let (ct, cu) = (test.components(), trial.components());
    kernel.check_arity(ct, cu)?;
    let mesh = test.mesh();

    let locals: Vec<Local> = if kernel.on_interface() {
        let (rt, ru) = (side_region(test.support()), side_region(trial.support()));
        mesh.interface_edges()
            .par_iter()
            .map(|edge| {
                let len = mesh.edge_length(edge.edge);
                let (cell_t, _) = edge_point(edge, rt, 0.0);
                let (cell_u, _) = edge_point(edge, ru, 0.0);
                let (geo_t, geo_u) = (CellGeometry::new(mesh, cell_t), CellGeometry::new(mesh, cell_u));
                let (nt, nu) = (ct * test.family().local_len(), cu * trial.family().local_len());
                let mut vals = vec![0.0; nt * nu];
                for (s, w) in edge_gauss3() {
                    let (_, lt) = edge_point(edge, rt, s);
                    let (_, lu) = edge_point(edge, ru, s);
                    let qp = QuadPoint::new(&geo_t, cell_t, lt);
                    let te = tabulate(test, &geo_t, lt);
                    let tr = tabulate(trial, &geo_u, lu);
                    accumulate(kernel, &qp, w * len, (edge.normal, edge.tangent), &te, &tr, ct, cu, &mut vals);
                }
                (local_dofs(test, cell_t), local_dofs(trial, cell_u), vals)
            })
            .collect()
    } else {
        let rule = quadrature(degree)?;
        let cells: Vec<usize> = test.cells().iter().copied().filter(|&t| trial.contains_cell(t)).collect();
        cells
            .par_iter()
            .map(|&cell| {
                let geo = CellGeometry::new(mesh, cell);
                let (nt, nu) = (ct * test.family().local_len(), cu * trial.family().local_len());
                let mut vals = vec![0.0; nt * nu];
                for (q, &bary) in rule.points.iter().enumerate() {
                    let qp = QuadPoint::new(&geo, cell, bary);
                    let te = tabulate(test, &geo, bary);
                    let tr = tabulate(trial, &geo, bary);
                    let w = rule.weights[q] * 2.0 * geo.area;
                    accumulate(kernel, &qp, w, ([0.0; 2], [0.0; 2]), &te, &tr, ct, cu, &mut vals);
                }
                (local_dofs(test, cell), local_dofs(trial, cell), vals)
            })
            .collect()
    };

    let mut triplets = Vec::with_capacity(locals.iter().map(|l| l.2.len()).sum());
    for (rows, cols, vals) in locals {
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                triplets.push((r, c, vals[i * cols.len() + j]));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(test.dof_count(), trial.dof_count(), triplets))
}

/// Right-hand-side integrands
#[derive(Clone, Copy)]
pub enum Source<'a> {
    /// `∫ f v` on a scalar space
    Scalar(ScalarFn<'a>),
    /// `∫ f · v` on a vector space
    Vector(VectorFn<'a>),
    /// `∫ g · ∇v` on a scalar space
    Flux(VectorFn<'a>),
    /// `∫_{Γ_cm} g · v` on a vector space
    Interface(InterfaceFn<'a>),
}

pub fn assemble_linear(space: &FeSpace, source: &Source) -> Result<Vec<f64>, AssemblyError> {
    assemble_linear_with_degree(space, source, DEFAULT_DEGREE)
}

pub fn assemble_linear_with_degree(space: &FeSpace, source: &Source, degree: usize) -> Result<Vec<f64>, AssemblyError> {
    let comps = space.components();
    let arity_ok = match source {
        Source::Scalar(_) | Source::Flux(_) => comps == 1,
        Source::Vector(_) | Source::Interface(_) => comps == 2,
    };
    if !arity_ok {
        return Err(AssemblyError::ArityMismatch { kernel: "source", test: comps, trial: 0 });
    }
    let mesh = space.mesh();
    let n = space.family().local_len();

    let locals: Vec<(Vec<usize>, Vec<f64>)> = if let Source::Interface(g) = source {
        let region = side_region(space.support());
        mesh.interface_edges()
            .par_iter()
            .map(|edge| {
                let len = mesh.edge_length(edge.edge);
                let (cell, _) = edge_point(edge, region, 0.0);
                let geo = CellGeometry::new(mesh, cell);
                let mut vals = vec![0.0; 2 * n];
                for (s, w) in edge_gauss3() {
                    let (_, l) = edge_point(edge, region, s);
                    let qp = QuadPoint::new(&geo, cell, l);
                    let val = g(&qp, edge.normal, edge.tangent);
                    let (phi, _) = shape(space.family(), l);
                    for c in 0..2 {
                        for a in 0..n {
                            vals[c * n + a] += w * len * val[c] * phi[a];
                        }
                    }
                }
                (local_dofs(space, cell), vals)
            })
            .collect()
    } else {
        let rule = quadrature(degree)?;
        space
            .cells()
            .par_iter()
            .map(|&cell| {
                let geo = CellGeometry::new(mesh, cell);
                let mut vals = vec![0.0; comps * n];
                for (q, &bary) in rule.points.iter().enumerate() {
                    let qp = QuadPoint::new(&geo, cell, bary);
                    let w = rule.weights[q] * 2.0 * geo.area;
                    let tab = tabulate(space, &geo, bary);
                    match source {
                        Source::Scalar(f) => {
                            let f = f(&qp);
                            for a in 0..n {
                                vals[a] += w * f * tab.v[a];
                            }
                        }
                        Source::Vector(f) => {
                            let f = f(&qp);
                            for c in 0..2 {
                                for a in 0..n {
                                    vals[c * n + a] += w * f[c] * tab.v[a];
                                }
                            }
                        }
                        Source::Flux(g) => {
                            let g = g(&qp);
                            for a in 0..n {
                                vals[a] += w * (g[0] * tab.g[a][0] + g[1] * tab.g[a][1]);
                            }
                        }
                        Source::Interface(_) => unreachable!(),
                    }
                }
                (local_dofs(space, cell), vals)
            })
            .collect()
    };

    let mut out = vec![0.0; space.dof_count()];
    for (dofs, vals) in locals {
        for (d, v) in dofs.into_iter().zip(vals) {
            out[d] += v;
        }
    }
    Ok(out)
}

/// `∫ f` over the cells of a space's support, by quadrature
pub fn integrate(space: &FeSpace, f: ScalarFn, degree: usize) -> Result<f64, AssemblyError> {
    let rule = quadrature(degree)?;
    let mesh = space.mesh();
    let parts: Vec<f64> = space
        .cells()
        .par_iter()
        .map(|&cell| {
            let geo = CellGeometry::new(mesh, cell);
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(&bary, &w)| w * 2.0 * geo.area * f(&QuadPoint::new(&geo, cell, bary)))
                .sum::<f64>()
        })
        .collect();
    Ok(parts.iter().sum())
}

/// `∫_{Γ_cm} f` with the 3-point edge rule, evaluated from `region`'s side
pub fn integrate_interface(space: &FeSpace, f: &(dyn Fn(&QuadPoint, [f64; 2], [f64; 2]) -> f64 + Sync)) -> f64 {
    let mesh = space.mesh();
    let region = side_region(space.support());
    mesh.interface_edges()
        .iter()
        .map(|edge| {
            let len = mesh.edge_length(edge.edge);
            let (cell, _) = edge_point(edge, region, 0.0);
            let geo = CellGeometry::new(mesh, cell);
            edge_gauss3()
                .iter()
                .map(|&(s, w)| {
                    let (_, l) = edge_point(edge, region, s);
                    w * len * f(&QuadPoint::new(&geo, cell, l), edge.normal, edge.tangent)
                })
                .sum::<f64>()
        })
        .sum()
}
